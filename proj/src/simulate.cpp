#include "nhawkes/simulate.hpp"

#include "nhawkes/error.hpp"
#include "nhawkes/rng.hpp"

#include <cmath>
#include <vector>

namespace nhawkes {

namespace {

constexpr std::uint64_t kHawkesStream = 0x48415750ULL;   // "HAWP"
constexpr std::uint64_t kPoissonStream = 0x504f4953ULL;  // "POIS"

} // namespace

void SimulationConfig::validate() const {
    if (!(horizon > 0.0) || !std::isfinite(horizon)) {
        throw ConfigError("simulation horizon must be positive and finite");
    }
    if (!(burn_in >= 0.0) || !std::isfinite(burn_in)) {
        throw ConfigError("burn-in must be non-negative and finite");
    }
}

EventSeries simulate_hawkes(const NoisyHawkesParams& params, const SimulationConfig& cfg) {
    cfg.validate();
    params.validate_stationary();
    const int d = params.dim();
    if (!(params.mu.maxCoeff() > 0.0)) {
        throw ConfigError("at least one baseline intensity must be positive");
    }

    Rng rng = Rng(cfg.seed).split(kHawkesStream);
    std::vector<std::vector<double>> times(static_cast<std::size_t>(d));
    std::vector<double> excitation(static_cast<std::size_t>(d), 0.0);
    std::vector<double> lambda(static_cast<std::size_t>(d), 0.0);
    const double mu_total = params.mu.sum();

    double t = -cfg.burn_in;
    while (true) {
        double bound = mu_total;
        for (double e : excitation) {
            bound += e;
        }
        const double wait = rng.exponential(bound);
        t += wait;
        if (t > cfg.horizon) {
            break;
        }
        double total = 0.0;
        for (int i = 0; i < d; ++i) {
            auto& e = excitation[static_cast<std::size_t>(i)];
            e *= std::exp(-params.beta(i) * wait);
            lambda[static_cast<std::size_t>(i)] = params.mu(i) + e;
            total += lambda[static_cast<std::size_t>(i)];
        }
        const double u = rng.uniform() * bound;
        if (u >= total) {
            continue;  // rejected candidate; the decayed state is the new bound
        }
        int component = d - 1;
        double cumulative = 0.0;
        for (int i = 0; i < d; ++i) {
            cumulative += lambda[static_cast<std::size_t>(i)];
            if (u < cumulative) {
                component = i;
                break;
            }
        }
        if (t >= 0.0) {
            times[static_cast<std::size_t>(component)].push_back(t);
        }
        for (int i = 0; i < d; ++i) {
            excitation[static_cast<std::size_t>(i)] += params.alpha(i, component) * params.beta(i);
        }
    }
    return EventSeries(0.0, cfg.horizon, std::move(times));
}

EventSeries simulate_poisson(double lambda0, int d, const SimulationConfig& cfg) {
    cfg.validate();
    if (!(lambda0 >= 0.0) || !std::isfinite(lambda0)) {
        throw ConfigError("Poisson intensity must be non-negative and finite");
    }
    if (d < 1) {
        throw ConfigError("Poisson process needs at least one component");
    }
    std::vector<std::vector<double>> times(static_cast<std::size_t>(d));
    if (lambda0 > 0.0) {
        const Rng base = Rng(cfg.seed).split(kPoissonStream);
        for (int c = 0; c < d; ++c) {
            Rng rng = base.split(static_cast<std::uint64_t>(c));
            auto& out = times[static_cast<std::size_t>(c)];
            double t = rng.exponential(lambda0);
            while (t <= cfg.horizon) {
                out.push_back(t);
                t += rng.exponential(lambda0);
            }
        }
    }
    return EventSeries(0.0, cfg.horizon, std::move(times));
}

EventSeries simulate_noisy(const NoisyHawkesParams& params, const SimulationConfig& cfg) {
    return superpose(simulate_hawkes(params, cfg), simulate_poisson(params.lambda0, params.dim(), cfg));
}

} // namespace nhawkes
