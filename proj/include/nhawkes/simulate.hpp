#pragma once

#include "nhawkes/events.hpp"
#include "nhawkes/params.hpp"

#include <cstdint>

namespace nhawkes {

struct SimulationConfig {
    double horizon{1000.0};   ///< observation window is [0, horizon]
    double burn_in{100.0};    ///< history simulated on [-burn_in, 0) and discarded
    std::uint64_t seed{0};

    void validate() const;
};

/// Ogata thinning for the exponential-kernel Hawkes part of `params`
/// (lambda0 is ignored). The thinning bound is the current total intensity,
/// which is exact because intensities only decay between events.
[[nodiscard]] EventSeries simulate_hawkes(const NoisyHawkesParams& params,
                                          const SimulationConfig& cfg);

/// d independent homogeneous Poisson processes of intensity lambda0 on
/// [0, horizon]; one RNG stream per component.
[[nodiscard]] EventSeries simulate_poisson(double lambda0, int d, const SimulationConfig& cfg);

/// Hawkes part superposed with the Poisson contaminant. Both parts draw from
/// independent streams derived from cfg.seed.
[[nodiscard]] EventSeries simulate_noisy(const NoisyHawkesParams& params,
                                         const SimulationConfig& cfg);

} // namespace nhawkes
