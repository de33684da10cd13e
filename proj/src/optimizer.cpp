#include "nhawkes/optimizer.hpp"

#include "nhawkes/error.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace nhawkes {

const char* to_string(OptimizerStatus status) {
    switch (status) {
    case OptimizerStatus::ProjectedGradient: return "projected_gradient";
    case OptimizerStatus::RelativeChange: return "relative_change";
    case OptimizerStatus::Stalled: return "stalled";
    case OptimizerStatus::MaxIterations: return "max_iterations";
    case OptimizerStatus::LineSearchFailure: return "line_search_failure";
    case OptimizerStatus::NonFiniteStart: return "non_finite_start";
    }
    return "?";
}

namespace {

Eigen::VectorXd project(const Eigen::VectorXd& x, const Eigen::VectorXd& lower,
                        const Eigen::VectorXd& upper) {
    return x.cwiseMax(lower).cwiseMin(upper);
}

/// Solve (B_FF + damping) d_F = -g_F on the free set, increasing the damping
/// until the reduced matrix is positive definite.
Eigen::VectorXd newton_direction(const Eigen::MatrixXd& b, const Eigen::VectorXd& g,
                                 const std::vector<Eigen::Index>& free) {
    const auto nf = static_cast<Eigen::Index>(free.size());
    Eigen::VectorXd dir = Eigen::VectorXd::Zero(g.size());
    if (nf == 0) {
        return dir;
    }
    Eigen::MatrixXd bf(nf, nf);
    Eigen::VectorXd gf(nf);
    for (Eigen::Index r = 0; r < nf; ++r) {
        gf(r) = g(free[static_cast<std::size_t>(r)]);
        for (Eigen::Index c = 0; c < nf; ++c) {
            bf(r, c) = b(free[static_cast<std::size_t>(r)], free[static_cast<std::size_t>(c)]);
        }
    }
    const double scale = std::max(bf.diagonal().cwiseAbs().maxCoeff(), 1e-300);
    double damping = 0.0;
    for (int attempt = 0; attempt < 30; ++attempt) {
        Eigen::MatrixXd m = bf;
        m.diagonal().array() += damping;
        Eigen::LLT<Eigen::MatrixXd> llt(m);
        if (llt.info() == Eigen::Success) {
            const Eigen::VectorXd df = llt.solve(-gf);
            if (df.allFinite() && df.dot(gf) < 0.0) {
                for (Eigen::Index r = 0; r < nf; ++r) dir(free[static_cast<std::size_t>(r)]) = df(r);
                return dir;
            }
        }
        damping = damping == 0.0 ? 1e-10 * scale : damping * 10.0;
    }
    for (Eigen::Index r = 0; r < nf; ++r) dir(free[static_cast<std::size_t>(r)]) = -gf(r) / scale;
    return dir;
}

} // namespace

double projected_gradient_norm(const Eigen::VectorXd& x, const Eigen::VectorXd& g,
                               const Eigen::VectorXd& lower, const Eigen::VectorXd& upper) {
    if (x.size() == 0) {
        return 0.0;
    }
    return (x - project(x - g, lower, upper)).lpNorm<Eigen::Infinity>();
}

OptimizerResult minimize_box(const BoxObjective& objective, const Eigen::VectorXd& x0,
                             const Eigen::VectorXd& lower, const Eigen::VectorXd& upper,
                             const OptimizerOptions& options, const CurvatureFn& curvature) {
    const Eigen::Index n = x0.size();
    if (lower.size() != n || upper.size() != n) {
        throw ConfigError("bounds do not match the starting point");
    }
    OptimizerResult res;
    res.x = project(x0, lower, upper);
    Eigen::VectorXd g(n);
    res.value = objective(res.x, g);
    res.evaluations = 1;
    if (!std::isfinite(res.value) || !g.allFinite()) {
        res.status = OptimizerStatus::NonFiniteStart;
        return res;
    }
    res.projected_gradient = projected_gradient_norm(res.x, g, lower, upper);
    if (res.projected_gradient <= options.projected_gradient_tol) {
        res.status = OptimizerStatus::ProjectedGradient;
        return res;
    }

    // Hessian model; `informed` is false while it is still a bare multiple of
    // the identity.
    Eigen::MatrixXd b = Eigen::MatrixXd::Identity(n, n);
    bool informed = false;
    auto refresh = [&] {
        if (curvature) {
            Eigen::MatrixXd c = curvature(res.x);
            if (c.rows() == n && c.cols() == n && c.allFinite()) {
                b = 0.5 * (c + c.transpose());
                informed = true;
                return;
            }
        }
        b.setIdentity();
        informed = false;
    };
    refresh();

    Eigen::VectorXd g_new(n);
    std::vector<Eigen::Index> free;
    int since_refresh = 0;
    double first_step = 1.0;

    for (int iter = 1; iter <= options.max_iterations; ++iter) {
        res.iterations = iter;
        if (curvature && options.curvature_interval > 0 && since_refresh >= options.curvature_interval) {
            refresh();
            since_refresh = 0;
        }
        const double eps = std::min(1e-8, res.projected_gradient);
        free.clear();
        for (Eigen::Index i = 0; i < n; ++i) {
            const bool at_lower = res.x(i) <= lower(i) + eps && g(i) > 0.0;
            const bool at_upper = res.x(i) >= upper(i) - eps && g(i) < 0.0;
            if (!(at_lower || at_upper)) free.push_back(i);
        }

        bool accepted = false;
        bool full_step = false;
        Eigen::VectorXd x_new;
        double f_new = 0.0;
        for (int attempt = 0; attempt < 2 && !accepted; ++attempt) {
            if (attempt == 1) {
                refresh();
                since_refresh = 0;
            }
            Eigen::VectorXd dir = newton_direction(b, g, free);
            if (!informed) {
                const double big = dir.lpNorm<Eigen::Infinity>();
                if (big > 0.1) dir *= 0.1 / big;
            }
            double reach = 0.0;
            for (Eigen::Index i = 0; i < n; ++i) {
                reach = std::max(reach, std::abs(dir(i)) / std::max(std::abs(res.x(i)), 0.05));
            }
            if (reach > 1.0) dir /= reach;
            double step = attempt == 0 ? first_step : 1.0;
            for (int bt = 0; bt < options.max_backtracks; ++bt) {
                x_new = project(res.x + step * dir, lower, upper);
                const Eigen::VectorXd delta = x_new - res.x;
                if (delta.lpNorm<Eigen::Infinity>() == 0.0) break;
                f_new = objective(x_new, g_new);
                ++res.evaluations;
                if (std::isfinite(f_new) && g_new.allFinite() &&
                    f_new <= res.value + options.armijo * g.dot(delta)) {
                    accepted = true;
                    break;
                }
                step *= 0.5;
            }
            full_step = accepted && step == 1.0;
            if (accepted) first_step = std::min(1.0, 2.0 * step);
        }
        if (!accepted) {
            res.status = res.projected_gradient <= 1e3 * options.projected_gradient_tol
                             ? OptimizerStatus::Stalled
                             : OptimizerStatus::LineSearchFailure;
            return res;
        }
        ++since_refresh;

        const Eigen::VectorXd s = x_new - res.x;
        const Eigen::VectorXd y = g_new - g;
        const double change = std::abs(res.value - f_new);
        const double f_old = res.value;
        res.x = x_new;
        res.value = f_new;
        g = g_new;
        res.projected_gradient = projected_gradient_norm(res.x, g, lower, upper);

        if (res.projected_gradient <= options.projected_gradient_tol) {
            res.status = OptimizerStatus::ProjectedGradient;
            return res;
        }
        if (full_step && change <= options.relative_change_tol * std::max(std::abs(f_old), 1.0)) {
            res.status = OptimizerStatus::RelativeChange;
            return res;
        }

        const double sy = s.dot(y);
        if (sy > 1e-12 * s.norm() * y.norm()) {
            if (!informed) {
                b = Eigen::MatrixXd::Identity(n, n) * (y.squaredNorm() / sy);
                informed = true;
            }
            const Eigen::VectorXd bs = b * s;
            const double sbs = s.dot(bs);
            if (sbs > 0.0) {
                b += (y * y.transpose()) / sy - (bs * bs.transpose()) / sbs;
            }
        }
    }
    res.status = OptimizerStatus::MaxIterations;
    return res;
}

} // namespace nhawkes
