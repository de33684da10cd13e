#pragma once

#include <Eigen/Dense>

#include <functional>
#include <string>

namespace nhawkes {

/// Objective to minimise. Returns +inf (or any non-finite value) for points
/// outside the admissible region; the gradient is only read for finite values.
using BoxObjective = std::function<double(const Eigen::VectorXd& x, Eigen::VectorXd& gradient)>;

/// Optional positive semi-definite curvature model (e.g. an expected Hessian)
/// used to seed and refresh the quasi-Newton matrix.
using CurvatureFn = std::function<Eigen::MatrixXd(const Eigen::VectorXd& x)>;

struct OptimizerOptions {
    int max_iterations{500};
    double projected_gradient_tol{1e-6};
    double relative_change_tol{1e-10};
    double armijo{1e-4};
    int max_backtracks{50};
    int curvature_interval{1};   ///< refresh the curvature model every k iterations (0: only on resets)
};

enum class OptimizerStatus {
    ProjectedGradient,   ///< projected gradient below tolerance
    RelativeChange,      ///< objective stalled below the relative tolerance
    Stalled,             ///< no descent possible, projected gradient already small
    MaxIterations,
    LineSearchFailure,
    NonFiniteStart,
};

[[nodiscard]] const char* to_string(OptimizerStatus status);

struct OptimizerResult {
    Eigen::VectorXd x;
    double value{0.0};
    double projected_gradient{0.0};
    int iterations{0};
    int evaluations{0};
    OptimizerStatus status{OptimizerStatus::MaxIterations};

    [[nodiscard]] bool converged() const {
        return status == OptimizerStatus::ProjectedGradient ||
               status == OptimizerStatus::RelativeChange || status == OptimizerStatus::Stalled;
    }
};

/// Projected quasi-Newton minimisation on the box [lower, upper]. A dense
/// BFGS Hessian model is solved on the variables not held at a bound (bounds
/// identified from the projected gradient), followed by an Armijo search
/// along the projected path.
[[nodiscard]] OptimizerResult minimize_box(const BoxObjective& objective, const Eigen::VectorXd& x0,
                                           const Eigen::VectorXd& lower, const Eigen::VectorXd& upper,
                                           const OptimizerOptions& options = {},
                                           const CurvatureFn& curvature = {});

/// Infinity norm of x - P(x - g), the first-order stationarity measure on a box.
[[nodiscard]] double projected_gradient_norm(const Eigen::VectorXd& x, const Eigen::VectorXd& g,
                                             const Eigen::VectorXd& lower, const Eigen::VectorXd& upper);

} // namespace nhawkes
