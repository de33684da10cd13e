#pragma once

#include "nhawkes/events.hpp"
#include "nhawkes/fit.hpp"
#include "nhawkes/identifiability.hpp"
#include "nhawkes/model.hpp"

#include <Eigen/Dense>
#include <json.hpp>

#include <cstddef>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace nhawkes {

using BoolMatrix = Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic>;

/// Split the window into n_parts equal half-open windows [a, b) (the last one
/// closed), each re-based to start at 0. Indices of empty parts are appended
/// to `empty_parts` when provided.
[[nodiscard]] std::vector<EventSeries> partition(const EventSeries& events, std::size_t n_parts,
                                                 std::vector<std::size_t>* empty_parts = nullptr);

enum class SupportRule {
    Quantile,         ///< keep an entry iff its lower empirical quantile exceeds the null threshold
    NullProportion,   ///< drop an entry iff at least `null_proportion` of its estimates are null
};

enum class Correction { None, Bonferroni, BenjaminiHochberg };

[[nodiscard]] SupportRule support_rule_from_string(const std::string& name);
[[nodiscard]] Correction correction_from_string(const std::string& name);
[[nodiscard]] std::string to_string(SupportRule rule);
[[nodiscard]] std::string to_string(Correction correction);

struct SupportOptions {
    SupportRule rule{SupportRule::Quantile};
    double quantile_level{0.05};
    double null_threshold{1e-4};
    double null_proportion{0.30};
    Correction correction{Correction::None};
    std::size_t min_fits{5};

    void validate() const;
};

struct SupportReport {
    Eigen::MatrixXd quantiles;
    Eigen::MatrixXd null_props;
    BoolMatrix support_mask;
    std::size_t n_subsamples{0};
    SupportRule rule{SupportRule::Quantile};
    double quantile_level{0.05};
    double null_threshold{1e-4};
};

/// Lower empirical quantile: the ceil(q n)-th order statistic (at least the first).
[[nodiscard]] double lower_quantile(std::vector<double> values, double level);

[[nodiscard]] SupportReport detect_support(const ModelSpec& full_spec, const std::vector<FitResult>& fits,
                                           const SupportOptions& options = {});

struct SupportWarning {
    std::string code;      ///< "non_identifiable_support", "identifiability_unknown", "empty_subsample",
                           ///< "failed_subsample"
    std::string pattern;
    std::string message;
};

struct ThreeStepOptions {
    FitOptions fit{};
    SupportOptions support{};
    std::size_t n_parts{10};        ///< used when a single series is given
    bool refit_empty_support{false};
    bool refit{true};               ///< false: stop after support detection
    int jobs{1};
    std::function<void(const SupportWarning&)> on_warning;
};

struct ThreeStepResult {
    SupportReport report;
    std::vector<SupportWarning> warnings;
    std::vector<FitResult> subsample_fits;
    std::vector<std::size_t> skipped_subsamples;
    SupportPattern pattern{SupportPattern::Unclassified};
    std::optional<ModelSpec> reduced_spec;
    std::optional<FitResult> reduced_fit;
};

/// Full-model fits on every replicate, support detection, then one
/// reduced-model fit on the pooled data (averaged periodogram).
[[nodiscard]] ThreeStepResult three_step_fit(const std::vector<EventSeries>& replicates,
                                             const ThreeStepOptions& options);

/// Same on a single series split into options.n_parts windows; the reduced
/// model is refit on the whole series.
[[nodiscard]] ThreeStepResult three_step_fit(const EventSeries& events, const ThreeStepOptions& options);

[[nodiscard]] nlohmann::json support_to_json(const SupportReport& report);
[[nodiscard]] nlohmann::json three_step_to_json(const ThreeStepResult& result);

/// CSV columns: entry, quantile, null_proportion, in_support.
void write_support_csv(std::ostream& out, const SupportReport& report);

} // namespace nhawkes
