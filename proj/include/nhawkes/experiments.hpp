#pragma once

#include "nhawkes/fit.hpp"
#include "nhawkes/model.hpp"
#include "nhawkes/params.hpp"
#include "nhawkes/rng.hpp"
#include "nhawkes/support.hpp"

#include <Eigen/Dense>
#include <json.hpp>

#include <array>
#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace nhawkes {

struct ExperimentConfig {
    std::string id;
    std::uint64_t seed{1};
    int trials{20};
    int jobs{1};
    int restarts{5};
    double burn_in{100.0};
    std::vector<MPolicy> m_policies{MPolicy::n()};

    // univariate studies
    double uni_mu{1.0};
    double uni_alpha{0.5};
    double uni_beta{1.0};
    double uni_lambda0{1.6};
    std::vector<UniModel> uni_models{UniModel::QMu, UniModel::QAlpha, UniModel::QBeta, UniModel::QLambda0};
    std::vector<double> horizons{250, 500, 1000, 2000, 4000, 8000};
    std::vector<double> noise_ratios{0.2, 0.4, 0.6, 0.8, 1.0, 1.2, 1.4, 1.6, 1.8, 2.0};
    double noise_horizon{8000.0};
    double compensation_lambda0{1.2};
    double compensation_horizon{8000.0};

    // bivariate studies
    Eigen::Vector2d biv_mu{1.0, 1.0};
    Eigen::Vector2d biv_beta{1.0, 1.3};
    double biv_lambda0{0.5};
    std::vector<double> alpha21_levels{0.2, 0.4, 0.6, 0.8};
    std::vector<double> sweep_horizons{1000, 3000};
    double scenario_horizon{3000.0};
    int replicates{20};
    int pipeline_repetitions{1};
    double partition_horizon{6000.0};
    double partition_window{300.0};
    SupportOptions support{};

    // spike-and-slab study
    int spike_replications{30};
    double spike_target_events{5000.0};
    std::size_t spike_parts{10};
    double spike_null_proportion{0.30};
    double spike_noise_cut{2.8};

    void validate() const;
    [[nodiscard]] FitOptions fit_options(std::uint64_t fit_seed, const MPolicy& policy) const;
};

/// Read an INI-style config file ([section] key = value, lists comma-separated).
[[nodiscard]] ExperimentConfig load_experiment_config(const std::string& path, ExperimentConfig base = {});
[[nodiscard]] nlohmann::json config_to_json(const ExperimentConfig& cfg);

/// Column-oriented CSV table with pre-formatted cells.
struct Table {
    std::string name;
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    void write_csv(std::ostream& out) const;
};

/// Wall-clock measurements, reported apart from the deterministic tables.
struct Timing {
    std::string label;
    double seconds{0.0};
};

// ---------------------------------------------------------------- univariate

enum class SweepAxis { Horizon, Noise };

struct UniTrial {
    UniModel model{UniModel::QMu};
    double horizon{0.0};
    double noise_ratio{0.0};
    std::string policy;
    int trial{0};
    std::uint64_t seed{0};
    bool ok{false};
    std::size_t n_events{0};
    std::size_t m_used{0};
    NoisyHawkesParams estimate;
    double rel_error{0.0};
    double seconds{0.0};
    std::string error;
};

struct UniCell {
    UniModel model{UniModel::QMu};
    double horizon{0.0};
    double noise_ratio{0.0};
    std::string policy;
    int succeeded{0};
    int failed{0};
    double mean_error{0.0};
    double sd_error{0.0};
    double seconds{0.0};
};

struct UniSweepResult {
    SweepAxis axis{SweepAxis::Horizon};
    std::vector<UniTrial> trials;
    std::vector<UniCell> cells;

    [[nodiscard]] const UniCell& cell(UniModel model, double coordinate, const std::string& policy) const;
    [[nodiscard]] std::vector<Table> tables(std::uint64_t seed) const;
    [[nodiscard]] std::vector<Timing> timings() const;
};

/// C*_Q: norm of the true parameters that are free in the model.
[[nodiscard]] double free_parameter_norm(const ModelSpec& spec, const NoisyHawkesParams& truth);
[[nodiscard]] double relative_error(const ModelSpec& spec, const NoisyHawkesParams& estimate,
                                    const NoisyHawkesParams& truth);

[[nodiscard]] UniSweepResult run_univariate_sweep(const ExperimentConfig& cfg, SweepAxis axis);

struct CompensationTrial {
    int trial{0};
    std::uint64_t seed{0};
    bool ok{false};
    double mu{0.0};
    double alpha{0.0};
    double lambda0{0.0};
    double mean_intensity{0.0};
    std::string error;
};

struct CompensationResult {
    double true_mean_intensity{0.0};
    std::vector<CompensationTrial> trials;   ///< sorted by estimated mu
    double mean_rel_error{0.0};              ///< of the estimated mean intensity
    double corr_mu_alpha{0.0};
    int failed{0};

    [[nodiscard]] std::vector<Table> tables(std::uint64_t seed) const;
};

[[nodiscard]] CompensationResult run_compensation_study(const ExperimentConfig& cfg);

// ----------------------------------------------------------------- bivariate

[[nodiscard]] NoisyHawkesParams scenario_params(const ExperimentConfig& cfg, int scenario);

struct BivSweepTrial {
    double alpha21{0.0};
    double horizon{0.0};
    int trial{0};
    std::uint64_t seed{0};
    bool ok{false};
    NoisyHawkesParams estimate;
    double rel_error{0.0};
    std::string error;
};

struct BivSweepCell {
    double alpha21{0.0};
    double horizon{0.0};
    int succeeded{0};
    int failed{0};
    double mean_error{0.0};
    Eigen::VectorXd mean_param_errors;   ///< mu1, mu2, alpha21, beta2, lambda0
};

struct BivSweepResult {
    std::vector<BivSweepTrial> trials;
    std::vector<BivSweepCell> cells;

    [[nodiscard]] std::vector<Table> tables(std::uint64_t seed) const;
};

[[nodiscard]] BivSweepResult run_bivariate_sweep(const ExperimentConfig& cfg);

struct PipelineRun {
    int scenario{1};
    int repetition{0};
    std::uint64_t seed{0};
    bool partitioned{false};
    NoisyHawkesParams truth;
    bool ok{false};
    std::string error;
    ThreeStepResult result;
    bool mask_correct{false};
};

struct ScenarioComparison {
    int scenario{1};
    int replicate{0};
    std::string model;   ///< "reduced" or "full"
    bool ok{false};
    NoisyHawkesParams estimate;
    double rel_error{0.0};
};

struct BivScenarioResult {
    std::vector<PipelineRun> runs;
    std::vector<ScenarioComparison> comparisons;

    [[nodiscard]] std::vector<Table> tables(std::uint64_t seed) const;
};

/// Support pipelines on replicated data (cfg.pipeline_repetitions per
/// scenario) and, when `compare_models` is set, per-replicate reduced versus
/// full fits of the first repetition.
[[nodiscard]] BivScenarioResult run_bivariate_scenarios(const ExperimentConfig& cfg, bool compare_models);

/// Support pipeline on one long series per scenario split into windows.
[[nodiscard]] BivScenarioResult run_bivariate_partition(const ExperimentConfig& cfg);

// ------------------------------------------------------------ spike and slab

/// Draw one parameter tuple from the spike-and-slab generator.
[[nodiscard]] NoisyHawkesParams draw_spike_slab(Rng& rng, int* alpha_redraws = nullptr);

struct SpikeSlabRun {
    int replication{0};
    std::uint64_t seed{0};
    NoisyHawkesParams truth;
    double horizon{0.0};
    std::size_t n_events{0};
    bool ok{false};
    std::string error;
    BoolMatrix detected;
    bool correct{false};
};

struct SpikeSlabResult {
    std::vector<SpikeSlabRun> runs;
    double accuracy{0.0};
    double accuracy_below_cut{0.0};
    double fraction_below_cut{0.0};
    double noise_cut{2.8};
    /// (lambda_max, accuracy among runs with lambda0 < lambda_max, fraction of runs kept)
    std::vector<std::array<double, 3>> curve;

    [[nodiscard]] std::vector<Table> tables(std::uint64_t seed) const;
};

[[nodiscard]] SpikeSlabResult run_spike_slab_study(const ExperimentConfig& cfg);

} // namespace nhawkes
