#pragma once

#include "nhawkes/events.hpp"
#include "nhawkes/error.hpp"
#include "nhawkes/model.hpp"
#include "nhawkes/optimizer.hpp"
#include "nhawkes/params.hpp"
#include "nhawkes/periodogram.hpp"

#include <Eigen/Dense>
#include <json.hpp>

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

namespace nhawkes {

/// Number of periodogram frequencies: the total event count N, ceil(N ln N),
/// or an explicit value.
struct MPolicy {
    enum class Kind { N, NLogN, Explicit };
    Kind kind{Kind::N};
    std::size_t value{0};

    [[nodiscard]] static MPolicy n() { return {Kind::N, 0}; }
    [[nodiscard]] static MPolicy n_log_n() { return {Kind::NLogN, 0}; }
    [[nodiscard]] static MPolicy explicit_count(std::size_t m) { return {Kind::Explicit, m}; }
    /// Accepts "n", "nlogn" (or "n_log_n") and positive integers.
    [[nodiscard]] static MPolicy parse(const std::string& text);
    [[nodiscard]] std::string to_string() const;
};

[[nodiscard]] std::size_t frequency_count(const MPolicy& policy, std::size_t total_events);
[[nodiscard]] std::size_t frequency_count(const MPolicy& policy, const EventSeries& events);

struct FitOptions {
    int restarts{5};
    std::uint64_t seed{0};
    MPolicy m_policy{};
    PeriodogramMethod periodogram_method{PeriodogramMethod::Fast};
    OptimizerOptions optimizer{};
    bool analytic_gradient{true};
    bool fisher_curvature{true};   ///< seed the quasi-Newton model with the Fisher information
    double max_spectral_radius{1.0 - 1e-6};

    void validate() const;
};

struct RestartTrace {
    NoisyHawkesParams init;
    NoisyHawkesParams final;
    double loglik{0.0};
    bool converged{false};
    int iterations{0};
    int evaluations{0};
    std::string status;
};

struct FitResult {
    NoisyHawkesParams theta_hat;
    double loglik{0.0};
    std::vector<RestartTrace> restarts;
    int chosen_start{-1};
    std::size_t m_used{0};
};

class FitFailure : public NumericalError {
public:
    FitFailure(const std::string& what, std::vector<RestartTrace> traces)
        : NumericalError(what), traces_(std::move(traces)) {}
    [[nodiscard]] const std::vector<RestartTrace>& traces() const noexcept { return traces_; }

private:
    std::vector<RestartTrace> traces_;
};

/// Maximise the spectral log-likelihood over the model's free entries.
[[nodiscard]] FitResult fit(const ModelSpec& spec, const EventSeries& events, const FitOptions& options);

/// Same on a precomputed (possibly averaged) periodogram. `rates` are the
/// per-component empirical event rates used to place the random starts.
[[nodiscard]] FitResult fit_periodogram(const ModelSpec& spec, const Periodogram& pg,
                                        const Eigen::VectorXd& rates, const FitOptions& options);

/// A free alpha entry estimated at or below the threshold, or on its lower bound.
[[nodiscard]] bool is_null_estimate(const ModelSpec& spec, const NoisyHawkesParams& theta_hat, int i,
                                    int j, double threshold = 1e-4);

[[nodiscard]] nlohmann::json fit_to_json(const FitResult& result, bool verbose = false);

} // namespace nhawkes
