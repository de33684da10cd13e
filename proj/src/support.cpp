#include "nhawkes/support.hpp"

#include "nhawkes/error.hpp"
#include "nhawkes/json_io.hpp"
#include "nhawkes/parallel.hpp"
#include "nhawkes/periodogram.hpp"
#include "nhawkes/rng.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>

namespace nhawkes {

std::vector<EventSeries> partition(const EventSeries& events, std::size_t n_parts,
                                   std::vector<std::size_t>* empty_parts) {
    if (n_parts < 2) {
        throw ConfigError("partition needs at least two parts");
    }
    const int d = events.dim();
    const double t0 = events.t_start();
    const double len = events.horizon() / static_cast<double>(n_parts);
    std::vector<std::vector<std::vector<double>>> buckets(
        n_parts, std::vector<std::vector<double>>(static_cast<std::size_t>(d)));
    for (int c = 0; c < d; ++c) {
        for (double t : events.times(c)) {
            auto k = static_cast<std::size_t>(std::floor((t - t0) / len));
            k = std::min(k, n_parts - 1);
            // Guard against round-off at the window edges.
            while (k > 0 && t < t0 + static_cast<double>(k) * len) --k;
            while (k + 1 < n_parts && t >= t0 + static_cast<double>(k + 1) * len) ++k;
            const double a = t0 + static_cast<double>(k) * len;
            buckets[k][static_cast<std::size_t>(c)].push_back(std::clamp(t - a, 0.0, len));
        }
    }
    std::vector<EventSeries> parts;
    parts.reserve(n_parts);
    for (std::size_t k = 0; k < n_parts; ++k) {
        parts.emplace_back(0.0, len, std::move(buckets[k]));
        if (empty_parts != nullptr && parts.back().empty()) {
            empty_parts->push_back(k);
        }
    }
    return parts;
}

SupportRule support_rule_from_string(const std::string& name) {
    if (name == "quantile") return SupportRule::Quantile;
    if (name == "null_proportion" || name == "null-proportion") return SupportRule::NullProportion;
    throw ConfigError("unknown support rule '" + name + "'");
}

Correction correction_from_string(const std::string& name) {
    if (name == "none") return Correction::None;
    if (name == "bonferroni") return Correction::Bonferroni;
    if (name == "bh" || name == "benjamini_hochberg") return Correction::BenjaminiHochberg;
    throw ConfigError("unknown multiple-testing correction '" + name + "'");
}

std::string to_string(SupportRule rule) {
    return rule == SupportRule::Quantile ? "quantile" : "null_proportion";
}

std::string to_string(Correction correction) {
    switch (correction) {
    case Correction::None: return "none";
    case Correction::Bonferroni: return "bonferroni";
    case Correction::BenjaminiHochberg: return "bh";
    }
    return "?";
}

void SupportOptions::validate() const {
    if (!(quantile_level > 0.0 && quantile_level < 1.0)) {
        throw ConfigError("quantile level must lie in (0, 1)");
    }
    if (!(null_threshold >= 0.0)) {
        throw ConfigError("null threshold must be non-negative");
    }
    if (!(null_proportion > 0.0 && null_proportion <= 1.0)) {
        throw ConfigError("null proportion must lie in (0, 1]");
    }
}

double lower_quantile(std::vector<double> values, double level) {
    if (values.empty()) {
        throw ConfigError("quantile of an empty sample");
    }
    std::sort(values.begin(), values.end());
    const double n = static_cast<double>(values.size());
    auto rank = static_cast<std::size_t>(std::ceil(level * n - 1e-12));
    rank = std::clamp<std::size_t>(rank, 1, values.size());
    return values[rank - 1];
}

SupportReport detect_support(const ModelSpec& full_spec, const std::vector<FitResult>& fits,
                             const SupportOptions& options) {
    options.validate();
    if (fits.size() < options.min_fits) {
        throw ConfigError("support detection needs at least " + std::to_string(options.min_fits) +
                          " fits, got " + std::to_string(fits.size()));
    }
    const int d = full_spec.dim();
    SupportReport report;
    report.quantiles = Eigen::MatrixXd::Zero(d, d);
    report.null_props = Eigen::MatrixXd::Zero(d, d);
    report.support_mask = BoolMatrix::Constant(d, d, false);
    report.n_subsamples = fits.size();
    report.rule = options.rule;
    report.null_threshold = options.null_threshold;

    const std::size_t n_tests = static_cast<std::size_t>(d * d);
    double level = options.quantile_level;
    double prop = options.null_proportion;
    if (options.correction == Correction::Bonferroni) {
        level /= static_cast<double>(n_tests);
        prop /= static_cast<double>(n_tests);
    }

    std::vector<double> p_values;
    for (int i = 0; i < d; ++i) {
        for (int j = 0; j < d; ++j) {
            std::vector<double> est;
            std::size_t nulls = 0;
            for (const auto& f : fits) {
                if (f.theta_hat.dim() != d) {
                    throw ConfigError("fit dimension does not match the model");
                }
                est.push_back(f.theta_hat.alpha(i, j));
                if (is_null_estimate(full_spec, f.theta_hat, i, j, options.null_threshold)) ++nulls;
            }
            report.null_props(i, j) = static_cast<double>(nulls) / static_cast<double>(fits.size());
            report.quantiles(i, j) = lower_quantile(est, level);
            p_values.push_back(report.null_props(i, j));
        }
    }
    report.quantile_level = level;
    for (int i = 0; i < d; ++i) {
        for (int j = 0; j < d; ++j) {
            if (options.rule == SupportRule::Quantile) {
                report.support_mask(i, j) = report.quantiles(i, j) > options.null_threshold;
            } else {
                report.support_mask(i, j) = report.null_props(i, j) < prop;
            }
        }
    }
    if (options.correction == Correction::BenjaminiHochberg) {
        const double q = options.rule == SupportRule::Quantile ? options.quantile_level : options.null_proportion;
        std::vector<double> sorted = p_values;
        std::sort(sorted.begin(), sorted.end());
        double cut = -1.0;
        for (std::size_t r = 1; r <= sorted.size(); ++r) {
            if (sorted[r - 1] < static_cast<double>(r) * q / static_cast<double>(n_tests)) cut = sorted[r - 1];
        }
        for (int i = 0; i < d; ++i) {
            for (int j = 0; j < d; ++j) {
                report.support_mask(i, j) = report.null_props(i, j) <= cut;
            }
        }
    }
    return report;
}

namespace {

void emit(ThreeStepResult& result, const ThreeStepOptions& options, SupportWarning w) {
    if (options.on_warning) {
        options.on_warning(w);
    }
    result.warnings.push_back(std::move(w));
}

std::vector<FitResult> fit_all(ThreeStepResult& result, const ModelSpec& spec,
                               const std::vector<const EventSeries*>& series,
                               const std::vector<std::size_t>& labels, const ThreeStepOptions& options) {
    std::vector<FitResult> fits(series.size());
    std::vector<std::string> errors(series.size());
    parallel_for(series.size(), options.jobs, [&](std::size_t k) {
        FitOptions fo = options.fit;
        fo.seed = derive_seed(options.fit.seed, {0x5355424bULL, labels[k]});
        try {
            fits[k] = fit(spec, *series[k], fo);
        } catch (const NumericalError& e) {
            errors[k] = e.what();
        }
    });
    std::vector<FitResult> kept;
    for (std::size_t k = 0; k < series.size(); ++k) {
        if (errors[k].empty()) {
            kept.push_back(std::move(fits[k]));
        } else {
            result.skipped_subsamples.push_back(labels[k]);
            emit(result, options, {"failed_subsample", "", "subsample " + std::to_string(labels[k]) + ": " + errors[k]});
        }
    }
    if (kept.size() < options.support.min_fits) {
        throw NumericalError("only " + std::to_string(kept.size()) + " of " + std::to_string(series.size()) +
                             " subsample fits converged");
    }
    return kept;
}

void select_support(ThreeStepResult& result, const ModelSpec& full_spec, const ThreeStepOptions& options) {
    result.report = detect_support(full_spec, result.subsample_fits, options.support);
    const BoolMatrix& mask = result.report.support_mask;
    result.pattern = classify_support(mask);
    const std::string pattern = to_string(result.pattern);
    if (full_spec.dim() == 2 && is_non_identifiable(result.pattern)) {
        emit(result, options,
             {"non_identifiable_support", pattern,
              "detected support belongs to a non-identifiable family; the reduced estimate is not unique"});
    } else if (full_spec.dim() == 2 && !is_identifiable(result.pattern)) {
        emit(result, options,
             {"identifiability_unknown", pattern, "identifiability of the detected support is not established"});
    }
    if (mask.count() == 0 && !options.refit_empty_support) {
        emit(result, options,
             {"refit_skipped", pattern, "empty interaction support: reduced model not refit"});
        return;
    }
    result.reduced_spec = ModelSpec::with_support(mask);
}

Eigen::VectorXd pooled_rates(const std::vector<EventSeries>& replicates) {
    const int d = replicates.front().dim();
    Eigen::VectorXd rates = Eigen::VectorXd::Zero(d);
    double horizon = 0.0;
    for (const auto& r : replicates) {
        for (int i = 0; i < d; ++i) rates(i) += static_cast<double>(r.count(i));
        horizon += r.horizon();
    }
    return rates / horizon;
}

} // namespace

ThreeStepResult three_step_fit(const std::vector<EventSeries>& replicates, const ThreeStepOptions& options) {
    if (replicates.size() < 2) {
        throw ConfigError("three-step fit needs at least two replicates or a partitioned series");
    }
    const int d = replicates.front().dim();
    const double horizon = replicates.front().horizon();
    for (const auto& r : replicates) {
        if (r.dim() != d || r.horizon() != horizon) {
            throw ConfigError("replicates must share dimension and horizon");
        }
    }
    ThreeStepResult result;
    std::vector<const EventSeries*> usable;
    std::vector<std::size_t> labels;
    for (std::size_t k = 0; k < replicates.size(); ++k) {
        if (replicates[k].empty()) {
            result.skipped_subsamples.push_back(k);
            emit(result, options, {"empty_subsample", "", "replicate " + std::to_string(k) + " has no events"});
        } else {
            usable.push_back(&replicates[k]);
            labels.push_back(k);
        }
    }
    const ModelSpec full_spec = ModelSpec::full(d);
    result.subsample_fits = fit_all(result, full_spec, usable, labels, options);
    select_support(result, full_spec, options);
    if (!result.reduced_spec || !options.refit) {
        return result;
    }
    std::size_t total = 0;
    for (const auto* r : usable) total += r->total_count();
    const std::size_t mean_count = std::max<std::size_t>(1, total / usable.size());
    const std::size_t m = frequency_count(options.fit.m_policy, mean_count);
    std::vector<Periodogram> pgs;
    pgs.reserve(usable.size());
    for (const auto* r : usable) pgs.push_back(periodogram(*r, m, options.fit.periodogram_method));
    const Periodogram pooled = average_periodograms(pgs);
    FitOptions fo = options.fit;
    fo.seed = derive_seed(options.fit.seed, {0x524544ULL});
    result.reduced_fit = fit_periodogram(*result.reduced_spec, pooled, pooled_rates(replicates), fo);
    return result;
}

ThreeStepResult three_step_fit(const EventSeries& events, const ThreeStepOptions& options) {
    std::vector<std::size_t> empty;
    const std::vector<EventSeries> parts = partition(events, options.n_parts, &empty);
    ThreeStepResult result;
    std::vector<const EventSeries*> usable;
    std::vector<std::size_t> labels;
    for (std::size_t k = 0; k < parts.size(); ++k) {
        if (parts[k].empty()) {
            result.skipped_subsamples.push_back(k);
            emit(result, options, {"empty_subsample", "", "window " + std::to_string(k) + " has no events"});
        } else {
            usable.push_back(&parts[k]);
            labels.push_back(k);
        }
    }
    const ModelSpec full_spec = ModelSpec::full(events.dim());
    result.subsample_fits = fit_all(result, full_spec, usable, labels, options);
    select_support(result, full_spec, options);
    if (!result.reduced_spec || !options.refit) {
        return result;
    }
    FitOptions fo = options.fit;
    fo.seed = derive_seed(options.fit.seed, {0x524544ULL});
    result.reduced_fit = fit(*result.reduced_spec, events, fo);
    return result;
}

nlohmann::json support_to_json(const SupportReport& report) {
    nlohmann::json j;
    j["quantiles"] = matrix_to_json(report.quantiles);
    j["null_props"] = matrix_to_json(report.null_props);
    nlohmann::json mask = nlohmann::json::array();
    for (Eigen::Index i = 0; i < report.support_mask.rows(); ++i) {
        nlohmann::json row = nlohmann::json::array();
        for (Eigen::Index c = 0; c < report.support_mask.cols(); ++c) row.push_back(report.support_mask(i, c));
        mask.push_back(row);
    }
    j["support_mask"] = mask;
    j["n_subsamples"] = report.n_subsamples;
    j["rule"] = to_string(report.rule);
    j["quantile_level"] = report.quantile_level;
    j["null_threshold"] = report.null_threshold;
    return j;
}

nlohmann::json three_step_to_json(const ThreeStepResult& result) {
    nlohmann::json j;
    j["report"] = support_to_json(result.report);
    j["pattern"] = to_string(result.pattern);
    nlohmann::json warnings = nlohmann::json::array();
    for (const auto& w : result.warnings) {
        warnings.push_back({{"code", w.code}, {"pattern", w.pattern}, {"message", w.message}});
    }
    j["warnings"] = warnings;
    j["skipped_subsamples"] = result.skipped_subsamples;
    if (result.reduced_spec) j["reduced_model"] = model_to_json(*result.reduced_spec);
    if (result.reduced_fit) j["reduced_fit"] = fit_to_json(*result.reduced_fit);
    return j;
}

void write_support_csv(std::ostream& out, const SupportReport& report) {
    out << "entry,quantile,null_proportion,in_support\n";
    for (Eigen::Index i = 0; i < report.quantiles.rows(); ++i) {
        for (Eigen::Index j = 0; j < report.quantiles.cols(); ++j) {
            out << "alpha_" << (i + 1) << (j + 1) << ',' << format_double(report.quantiles(i, j)) << ','
                << format_double(report.null_props(i, j)) << ',' << (report.support_mask(i, j) ? 1 : 0) << '\n';
        }
    }
}

} // namespace nhawkes
