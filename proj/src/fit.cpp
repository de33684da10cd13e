#include "nhawkes/fit.hpp"

#include "nhawkes/json_io.hpp"
#include "nhawkes/likelihood.hpp"
#include "nhawkes/rng.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <sstream>

namespace nhawkes {

MPolicy MPolicy::parse(const std::string& text) {
    if (text == "n" || text == "N") return n();
    if (text == "nlogn" || text == "n_log_n" || text == "NlogN") return n_log_n();
    std::size_t m = 0;
    const auto* end = text.data() + text.size();
    const auto [ptr, ec] = std::from_chars(text.data(), end, m);
    if (ec != std::errc() || ptr != end || m == 0) {
        throw ConfigError("M policy must be 'n', 'nlogn' or a positive integer, got '" + text + "'");
    }
    return explicit_count(m);
}

std::string MPolicy::to_string() const {
    switch (kind) {
    case Kind::N: return "n";
    case Kind::NLogN: return "nlogn";
    case Kind::Explicit: return std::to_string(value);
    }
    return "?";
}

std::size_t frequency_count(const MPolicy& policy, std::size_t total_events) {
    switch (policy.kind) {
    case MPolicy::Kind::Explicit:
        if (policy.value == 0) throw ConfigError("explicit M must be positive");
        return policy.value;
    case MPolicy::Kind::N:
        if (total_events == 0) throw ConfigError("M = N needs at least one event");
        return total_events;
    case MPolicy::Kind::NLogN: {
        if (total_events == 0) throw ConfigError("M = N log N needs at least one event");
        const double n = static_cast<double>(total_events);
        return std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(n * std::log(n))));
    }
    }
    throw ConfigError("unknown M policy");
}

std::size_t frequency_count(const MPolicy& policy, const EventSeries& events) {
    return frequency_count(policy, events.total_count());
}

void FitOptions::validate() const {
    if (restarts < 1) {
        throw ConfigError("at least one restart is required");
    }
    if (!(max_spectral_radius > 0.0 && max_spectral_radius < 1.0)) {
        throw ConfigError("maximal spectral radius must lie in (0, 1)");
    }
}

namespace {

double log_uniform(Rng& rng, double lo, double hi) {
    return std::exp(rng.uniform(std::log(lo), std::log(hi)));
}

Eigen::VectorXd random_start(const ModelSpec& spec, const Eigen::VectorXd& rates, double max_radius,
                             Rng& rng) {
    const int d = spec.dim();
    const auto slots = spec.free_slots();
    const Eigen::VectorXd lo = spec.lower_bounds();
    const Eigen::VectorXd hi = spec.upper_bounds();
    const double min_rate = std::max(rates.minCoeff(), 1e-3);
    Eigen::VectorXd x(static_cast<Eigen::Index>(slots.size()));
    for (int attempt = 0; attempt < 200; ++attempt) {
        for (std::size_t k = 0; k < slots.size(); ++k) {
            const std::size_t s = slots[k];
            double v = 0.0;
            if (s < spec.alpha_slot(0, 0)) {
                const double r = std::max(rates(static_cast<Eigen::Index>(s)), 1e-3);
                v = log_uniform(rng, 0.05 * r, r);
            } else if (s < spec.beta_slot(0)) {
                v = log_uniform(rng, 0.02, 0.7);
            } else if (s < spec.lambda0_slot()) {
                v = log_uniform(rng, 0.2, 5.0);
            } else {
                v = log_uniform(rng, 0.05 * min_rate, min_rate);
            }
            const auto ki = static_cast<Eigen::Index>(k);
            x(ki) = std::clamp(v, lo(ki), hi(ki));
        }
        const NoisyHawkesParams p = spec.assemble(x);
        if (d == 1 || spectral_radius(p.alpha) < 0.95 * max_radius) {
            return x;
        }
    }
    throw NumericalError("could not draw a stationary starting point");
}

} // namespace

FitResult fit_periodogram(const ModelSpec& spec, const Periodogram& pg, const Eigen::VectorXd& rates,
                          const FitOptions& options) {
    spec.validate();
    options.validate();
    if (spec.dim() != pg.dim || rates.size() != pg.dim) {
        throw ConfigError("model, periodogram and rates disagree on dimension");
    }
    const auto slots = spec.free_slots();
    const Eigen::VectorXd lo = spec.lower_bounds();
    const Eigen::VectorXd hi = spec.upper_bounds();

    BoxObjective objective = [&](const Eigen::VectorXd& x, Eigen::VectorXd& grad) -> double {
        const NoisyHawkesParams theta = spec.assemble(x);
        if (!(spectral_radius(theta.alpha) < options.max_spectral_radius)) {
            return std::numeric_limits<double>::infinity();
        }
        try {
            Eigen::VectorXd full;
            double value = 0.0;
            if (options.analytic_gradient) {
                value = spectral_loglik(theta, pg, &full);
            } else {
                value = spectral_loglik(theta, pg);
                full = spectral_loglik_fd_gradient(theta, pg);
            }
            grad.resize(x.size());
            for (std::size_t k = 0; k < slots.size(); ++k) {
                grad(static_cast<Eigen::Index>(k)) = -full(static_cast<Eigen::Index>(slots[k]));
            }
            return -value;
        } catch (const NumericalError&) {
            return std::numeric_limits<double>::infinity();
        }
    };

    CurvatureFn curvature;
    if (options.fisher_curvature) {
        curvature = [&](const Eigen::VectorXd& x) -> Eigen::MatrixXd {
            try {
                const Eigen::MatrixXd full = spectral_fisher(spec.assemble(x), pg);
                Eigen::MatrixXd sub(x.size(), x.size());
                for (std::size_t a = 0; a < slots.size(); ++a) {
                    for (std::size_t b = 0; b < slots.size(); ++b) {
                        sub(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) =
                            full(static_cast<Eigen::Index>(slots[a]), static_cast<Eigen::Index>(slots[b]));
                    }
                }
                return sub;
            } catch (const NumericalError&) {
                return {};
            }
        };
    }

    FitResult result;
    result.m_used = pg.frequency_count;
    Rng master(derive_seed(options.seed, {0x4649545355ULL}));
    double best = -std::numeric_limits<double>::infinity();
    for (int r = 0; r < options.restarts; ++r) {
        Rng rng = master.split(static_cast<std::uint64_t>(r));
        RestartTrace trace;
        Eigen::VectorXd x0;
        try {
            x0 = random_start(spec, rates, options.max_spectral_radius, rng);
        } catch (const NumericalError& e) {
            trace.status = e.what();
            result.restarts.push_back(trace);
            continue;
        }
        trace.init = spec.assemble(x0);
        const OptimizerResult opt = minimize_box(objective, x0, lo, hi, options.optimizer, curvature);
        trace.final = spec.assemble(opt.x);
        trace.loglik = -opt.value;
        trace.converged = opt.converged() && std::isfinite(opt.value);
        trace.iterations = opt.iterations;
        trace.evaluations = opt.evaluations;
        trace.status = to_string(opt.status);
        if (trace.converged && trace.loglik > best) {
            best = trace.loglik;
            result.chosen_start = r;
        }
        result.restarts.push_back(std::move(trace));
    }
    if (result.chosen_start < 0) {
        std::ostringstream msg;
        msg << "no restart converged:";
        for (std::size_t r = 0; r < result.restarts.size(); ++r) {
            msg << " [" << r << ": " << result.restarts[r].status << "]";
        }
        throw FitFailure(msg.str(), result.restarts);
    }
    const auto& chosen = result.restarts[static_cast<std::size_t>(result.chosen_start)];
    result.theta_hat = chosen.final;
    result.loglik = chosen.loglik;
    for (int i = 0; i < spec.dim(); ++i) {
        const auto bs = spec.beta_slot(i);
        if (spec.slot(bs).kind == SlotKind::Free && result.theta_hat.alpha.row(i).isZero(0.0)) {
            result.theta_hat.beta(i) = 1.0;
        }
    }
    return result;
}

FitResult fit(const ModelSpec& spec, const EventSeries& events, const FitOptions& options) {
    if (events.empty()) {
        throw ConfigError("cannot fit an empty event series");
    }
    if (spec.dim() != events.dim()) {
        throw ConfigError("model dimension does not match the events");
    }
    const std::size_t m = frequency_count(options.m_policy, events);
    const Periodogram pg = periodogram(events, m, options.periodogram_method);
    Eigen::VectorXd rates(events.dim());
    for (int i = 0; i < events.dim(); ++i) {
        rates(i) = static_cast<double>(events.count(i)) / events.horizon();
    }
    return fit_periodogram(spec, pg, rates, options);
}

bool is_null_estimate(const ModelSpec& spec, const NoisyHawkesParams& theta_hat, int i, int j,
                      double threshold) {
    const auto& s = spec.slot(spec.alpha_slot(i, j));
    const double a = theta_hat.alpha(i, j);
    if (s.kind != SlotKind::Free) {
        return a == 0.0;
    }
    return a <= threshold || a <= s.lower;
}

nlohmann::json fit_to_json(const FitResult& result, bool verbose) {
    nlohmann::json j;
    j["theta_hat"] = params_to_json(result.theta_hat);
    j["loglik"] = result.loglik;
    j["chosen_start"] = result.chosen_start;
    j["M_used"] = result.m_used;
    nlohmann::json restarts = nlohmann::json::array();
    for (const auto& r : result.restarts) {
        nlohmann::json t;
        t["loglik"] = r.loglik;
        t["converged"] = r.converged;
        t["iterations"] = r.iterations;
        t["status"] = r.status;
        if (verbose) {
            t["evaluations"] = r.evaluations;
            if (r.init.dim() > 0) t["init"] = params_to_json(r.init);
            if (r.final.dim() > 0) t["final"] = params_to_json(r.final);
        }
        restarts.push_back(t);
    }
    j["restarts"] = restarts;
    return j;
}

} // namespace nhawkes
