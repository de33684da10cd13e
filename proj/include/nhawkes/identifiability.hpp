#pragma once

#include "nhawkes/model.hpp"
#include "nhawkes/params.hpp"

#include <Eigen/Dense>
#include <json.hpp>

#include <cstdint>
#include <string>
#include <vector>

namespace nhawkes {

/// Open interval (lo, hi) of admissible shifts, possibly with 0 removed.
struct TauRange {
    double lo{0.0};
    double hi{0.0};
    bool excludes_zero{true};

    [[nodiscard]] bool contains(double tau) const {
        return tau > lo && tau < hi && !(excludes_zero && tau == 0.0);
    }
};

[[nodiscard]] TauRange uni_tau_range(const NoisyHawkesParams& theta);

/// Univariate tuple with the same spectral density and lambda0 shifted by tau.
[[nodiscard]] NoisyHawkesParams uni_equivalent(const NoisyHawkesParams& theta, double tau);

[[nodiscard]] TauRange biv_diag_tau_range(const NoisyHawkesParams& theta);

/// Bivariate diagonal-interaction tuple with the same spectral matrix.
[[nodiscard]] NoisyHawkesParams biv_equivalent_diag(const NoisyHawkesParams& theta, double tau);

[[nodiscard]] TauRange biv_row_tau_range(const NoisyHawkesParams& theta);

/// Bivariate map for alpha = ((a11, a12), (0, 0)) with 0 < a11 < 1, a12 > 0.
[[nodiscard]] NoisyHawkesParams biv_equivalent_row(const NoisyHawkesParams& theta, double tau);

/// Mirror image of biv_equivalent_row for alpha = ((0, 0), (a21, a22)).
[[nodiscard]] NoisyHawkesParams biv_equivalent_row_second(const NoisyHawkesParams& theta, double tau);
[[nodiscard]] TauRange biv_row_second_tau_range(const NoisyHawkesParams& theta);

/// Swap the two components of a bivariate tuple.
[[nodiscard]] NoisyHawkesParams swap_components(const NoisyHawkesParams& theta);

struct RowConstants {
    double a{0.0};
    double b{0.0};
    double c{0.0};
    double d{0.0};
    double e{0.0};
};

/// The five quantities that determine the spectral matrix when the second
/// row of alpha vanishes.
[[nodiscard]] RowConstants row_constants(const NoisyHawkesParams& theta);

enum class SupportPattern {
    Diagonal,        ///< a12 = a21 = 0 (non-identifiable)
    FirstRowOnly,    ///< a11, a12 > 0, second row zero (non-identifiable)
    SecondRowOnly,   ///< a21, a22 > 0, first row zero (non-identifiable)
    Situation1,      ///< a12 = a22 = 0, a21 > 0
    Situation2,      ///< a11 = a21 = 0, a12 > 0
    Situation3,      ///< a12 = 0, a11 > 0, a21 > 0, a22 > 0
    Situation4,      ///< a21 = 0, a11 > 0, a12 > 0, a22 > 0
    Unclassified,
};

[[nodiscard]] SupportPattern classify_support(const Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic>& mask);
[[nodiscard]] bool is_non_identifiable(SupportPattern pattern);
[[nodiscard]] bool is_identifiable(SupportPattern pattern);
[[nodiscard]] std::string to_string(SupportPattern pattern);

/// Entrywise relative deviation max |f - g| / max(|f|, |g|) over the grid
/// (0 where both entries vanish).
[[nodiscard]] double spectral_discrepancy(const NoisyHawkesParams& a, const NoisyHawkesParams& b,
                                          const std::vector<double>& grid);

/// n log-spaced frequencies in [lo, hi].
[[nodiscard]] std::vector<double> log_grid(double lo, double hi, std::size_t n);

/// Euclidean distance after dividing each free coordinate by its bound width.
[[nodiscard]] double normalized_distance(const ModelSpec& spec, const NoisyHawkesParams& a,
                                         const NoisyHawkesParams& b);

struct ProbeOptions {
    std::size_t n_pairs{500};
    std::uint64_t seed{0};
    std::size_t grid_size{512};
    double grid_lo{1e-3};
    double grid_hi{64.0};
    double separation{1e-2};
    double discrepancy_floor{1e-6};
};

struct ProbePair {
    NoisyHawkesParams first;
    NoisyHawkesParams second;
    double distance{0.0};
    double discrepancy{0.0};
};

struct ProbeReport {
    std::string model;
    bool witness_mode{false};   ///< pairs built from the equivalence maps
    std::size_t n_pairs{0};
    std::size_t n_separated{0};        ///< pairs with distance >= separation
    std::size_t n_violations{0};       ///< separated pairs with discrepancy < floor
    double min_discrepancy{0.0};       ///< over separated pairs (all pairs in witness mode)
    double max_discrepancy{0.0};
    double min_distance{0.0};
    std::vector<ProbePair> pairs;
};

/// Identifiable family (univariate submodel with one fixed entry, or one of
/// the four identifiable bivariate supports): sample distinct pairs and
/// measure spectral discrepancies. Non-identifiable family (full univariate
/// model or a non-identifiable bivariate support): build witness pairs with
/// the equivalence maps. Other families are rejected.
[[nodiscard]] ProbeReport injectivity_probe(const ModelSpec& spec, const ProbeOptions& options);

/// Pairs drawn across the union of several identifiable families.
[[nodiscard]] ProbeReport injectivity_probe_union(const std::vector<ModelSpec>& family,
                                                  const ProbeOptions& options);

[[nodiscard]] nlohmann::json probe_to_json(const ProbeReport& report, bool include_pairs = false);

} // namespace nhawkes
