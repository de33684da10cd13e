#include "nhawkes/experiments.hpp"

#include "nhawkes/error.hpp"
#include "nhawkes/events.hpp"
#include "nhawkes/parallel.hpp"
#include "nhawkes/simulate.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <ostream>
#include <stdexcept>

namespace nhawkes {

namespace {

constexpr std::uint64_t kTagHorizon = 0x48;
constexpr std::uint64_t kTagNoise = 0x4e;
constexpr std::uint64_t kTagCompensation = 0x43;
constexpr std::uint64_t kTagSweep = 0x53;
constexpr std::uint64_t kTagScenario = 0x52;
constexpr std::uint64_t kTagPartition = 0x50;
constexpr std::uint64_t kTagSpike = 0x4b;

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
    return std::chrono::duration<double>(Clock::now() - start).count();
}

std::string fmt(double v) { return format_double(v); }
std::string fmt(std::uint64_t v) { return std::to_string(v); }
std::string fmt_int(long long v) { return std::to_string(v); }

std::string csv_safe(std::string text) {
    for (char& c : text) {
        if (c == ',' || c == '\n' || c == '\r' || c == '"') c = ';';
    }
    return text;
}

double mean_of(const std::vector<double>& v) {
    if (v.empty()) return std::nan("");
    double s = 0.0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
}

double sd_of(const std::vector<double>& v) {
    if (v.size() < 2) return 0.0;
    const double m = mean_of(v);
    double s = 0.0;
    for (double x : v) s += (x - m) * (x - m);
    return std::sqrt(s / static_cast<double>(v.size() - 1));
}

double correlation(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() < 2) return std::nan("");
    const double mx = mean_of(x);
    const double my = mean_of(y);
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxy += (x[i] - mx) * (y[i] - my);
        sxx += (x[i] - mx) * (x[i] - mx);
        syy += (y[i] - my) * (y[i] - my);
    }
    if (sxx <= 0.0 || syy <= 0.0) return std::nan("");
    return sxy / std::sqrt(sxx * syy);
}

double known_value(UniModel model, const NoisyHawkesParams& truth) {
    switch (model) {
    case UniModel::QMu: return truth.mu(0);
    case UniModel::QAlpha: return truth.alpha(0, 0);
    case UniModel::QBeta: return truth.beta(0);
    case UniModel::QLambda0: return truth.lambda0;
    case UniModel::Full: break;
    }
    throw ConfigError("univariate sweeps use the four identifiable submodels only");
}

std::vector<std::string> params_header(int d, const std::string& suffix) {
    std::vector<std::string> h;
    for (int i = 0; i < d; ++i) h.push_back("mu" + std::to_string(i + 1) + suffix);
    for (int i = 0; i < d; ++i) {
        for (int j = 0; j < d; ++j) h.push_back("alpha" + std::to_string(i + 1) + std::to_string(j + 1) + suffix);
    }
    for (int i = 0; i < d; ++i) h.push_back("beta" + std::to_string(i + 1) + suffix);
    h.push_back("lambda0" + suffix);
    return h;
}

void append_params(std::vector<std::string>& row, const NoisyHawkesParams& p, int d, bool ok) {
    const Eigen::VectorXd v = ok ? params_to_vector(p) : Eigen::VectorXd();
    const Eigen::Index n = static_cast<Eigen::Index>(d + d * d + d + 1);
    for (Eigen::Index k = 0; k < n; ++k) row.push_back(ok ? fmt(v(k)) : std::string());
}

BoolMatrix true_mask(const NoisyHawkesParams& p) { return (p.alpha.array() > 0.0).matrix(); }

std::string entry_name(int i, int j) { return "alpha" + std::to_string(i + 1) + std::to_string(j + 1); }

} // namespace

void ExperimentConfig::validate() const {
    if (trials < 1) throw ConfigError("trials must be at least 1");
    if (jobs < 1) throw ConfigError("jobs must be at least 1");
    if (restarts < 1) throw ConfigError("restarts must be at least 1");
    if (!(burn_in >= 0.0)) throw ConfigError("burn_in must be nonnegative");
    if (m_policies.empty()) throw ConfigError("at least one M policy is required");
    if (uni_models.empty()) throw ConfigError("uni_models must not be empty");
    NoisyHawkesParams::univariate(uni_mu, uni_alpha, uni_beta, uni_lambda0).validate_stationary();
    NoisyHawkesParams::univariate(uni_mu, uni_alpha, uni_beta, compensation_lambda0).validate_stationary();
    NoisyHawkesParams::bivariate(biv_mu, Eigen::Matrix2d::Zero(), biv_beta, biv_lambda0).validate();
    for (UniModel m : uni_models) {
        if (m == UniModel::Full) throw ConfigError("the full univariate model is not identifiable");
    }
    auto positive_grid = [](const std::vector<double>& g, const char* name) {
        if (g.empty()) throw ConfigError(std::string(name) + " must not be empty");
        for (double x : g) {
            if (!(x > 0.0) || !std::isfinite(x)) throw ConfigError(std::string(name) + " entries must be positive");
        }
    };
    positive_grid(horizons, "horizons");
    positive_grid(noise_ratios, "noise_ratios");
    positive_grid(alpha21_levels, "alpha21_levels");
    positive_grid(sweep_horizons, "sweep_horizons");
    for (double a : alpha21_levels) {
        if (a >= 1.0) throw ConfigError("alpha21 levels must lie in (0, 1)");
    }
    if (!(uni_alpha > 0.0 && uni_alpha < 1.0)) throw ConfigError("univariate alpha must lie in (0, 1)");
    if (!(uni_mu > 0.0 && uni_beta > 0.0 && uni_lambda0 >= 0.0)) {
        throw ConfigError("univariate parameters out of range");
    }
    if (!(noise_horizon > 0.0 && compensation_horizon > 0.0 && scenario_horizon > 0.0 &&
          partition_horizon > 0.0 && partition_window > 0.0 && partition_window <= partition_horizon)) {
        throw ConfigError("horizons and windows must be positive, window no longer than the horizon");
    }
    if (!(compensation_lambda0 >= 0.0 && biv_lambda0 >= 0.0)) throw ConfigError("lambda0 must be nonnegative");
    if (replicates < 2) throw ConfigError("replicates must be at least 2");
    if (pipeline_repetitions < 1) throw ConfigError("pipeline_repetitions must be at least 1");
    if (spike_replications < 1) throw ConfigError("spike_replications must be at least 1");
    if (!(spike_target_events > 0.0)) throw ConfigError("spike_target_events must be positive");
    if (spike_parts < 2) throw ConfigError("spike_parts must be at least 2");
    if (!(spike_null_proportion > 0.0 && spike_null_proportion <= 1.0)) {
        throw ConfigError("spike_null_proportion must lie in (0, 1]");
    }
    support.validate();
    for (const auto& p : m_policies) fit_options(0, p).validate();
}

FitOptions ExperimentConfig::fit_options(std::uint64_t fit_seed, const MPolicy& policy) const {
    FitOptions o;
    o.restarts = restarts;
    o.seed = fit_seed;
    o.m_policy = policy;
    return o;
}

void Table::write_csv(std::ostream& out) const {
    for (std::size_t c = 0; c < header.size(); ++c) out << (c ? "," : "") << header[c];
    out << '\n';
    for (const auto& row : rows) {
        for (std::size_t c = 0; c < row.size(); ++c) out << (c ? "," : "") << row[c];
        out << '\n';
    }
}

double free_parameter_norm(const ModelSpec& spec, const NoisyHawkesParams& truth) {
    return spec.free_values(truth).norm();
}

double relative_error(const ModelSpec& spec, const NoisyHawkesParams& estimate, const NoisyHawkesParams& truth) {
    const double c = free_parameter_norm(spec, truth);
    if (!(c > 0.0)) throw ConfigError("relative error undefined: free true parameters are all zero");
    return (spec.free_values(estimate) - spec.free_values(truth)).norm() / c;
}

// ---------------------------------------------------------------- univariate

UniSweepResult run_univariate_sweep(const ExperimentConfig& cfg, SweepAxis axis) {
    cfg.validate();
    const NoisyHawkesParams base =
        NoisyHawkesParams::univariate(cfg.uni_mu, cfg.uni_alpha, cfg.uni_beta, cfg.uni_lambda0);
    const double m_h = cfg.uni_mu / (1.0 - cfg.uni_alpha);
    const std::vector<double>& coords = axis == SweepAxis::Horizon ? cfg.horizons : cfg.noise_ratios;
    const std::size_t n_models = cfg.uni_models.size();
    const std::size_t n_pol = cfg.m_policies.size();
    const std::size_t per_trial = n_models * n_pol;
    const auto trials = static_cast<std::size_t>(cfg.trials);

    UniSweepResult result;
    result.axis = axis;
    result.trials.resize(coords.size() * trials * per_trial);

    parallel_for(coords.size() * trials, cfg.jobs, [&](std::size_t job) {
        const std::size_t c = job / trials;
        const std::size_t t = job % trials;
        NoisyHawkesParams truth = base;
        double horizon = coords[c];
        if (axis == SweepAxis::Noise) {
            truth.lambda0 = coords[c] * m_h;
            horizon = cfg.noise_horizon;
        }
        const std::uint64_t data_seed =
            derive_seed(cfg.seed, {axis == SweepAxis::Horizon ? kTagHorizon : kTagNoise, c, t});
        const EventSeries events = simulate_noisy(truth, {horizon, cfg.burn_in, data_seed});
        for (std::size_t m = 0; m < n_models; ++m) {
            const UniModel model = cfg.uni_models[m];
            const ModelSpec spec = ModelSpec::univariate(model, known_value(model, truth));
            for (std::size_t p = 0; p < n_pol; ++p) {
                UniTrial& tr = result.trials[job * per_trial + m * n_pol + p];
                tr.model = model;
                tr.horizon = horizon;
                tr.noise_ratio = truth.lambda0 / m_h;
                tr.policy = cfg.m_policies[p].to_string();
                tr.trial = static_cast<int>(t);
                tr.seed = data_seed;
                tr.n_events = events.total_count();
                const auto start = Clock::now();
                try {
                    const FitResult fr = fit(
                        spec, events,
                        cfg.fit_options(derive_seed(data_seed, {static_cast<std::uint64_t>(model), p}),
                                        cfg.m_policies[p]));
                    tr.estimate = fr.theta_hat;
                    tr.m_used = fr.m_used;
                    tr.rel_error = relative_error(spec, fr.theta_hat, truth);
                    tr.ok = true;
                } catch (const NumericalError& e) {
                    tr.error = e.what();
                }
                tr.seconds = seconds_since(start);
            }
        }
    });

    for (std::size_t c = 0; c < coords.size(); ++c) {
        for (std::size_t m = 0; m < n_models; ++m) {
            for (std::size_t p = 0; p < n_pol; ++p) {
                UniCell cell;
                std::vector<double> errors;
                double secs = 0.0;
                for (std::size_t t = 0; t < trials; ++t) {
                    const UniTrial& tr = result.trials[(c * trials + t) * per_trial + m * n_pol + p];
                    cell.model = tr.model;
                    cell.horizon = tr.horizon;
                    cell.noise_ratio = tr.noise_ratio;
                    cell.policy = tr.policy;
                    secs += tr.seconds;
                    if (tr.ok) {
                        ++cell.succeeded;
                        errors.push_back(tr.rel_error);
                    } else {
                        ++cell.failed;
                    }
                }
                cell.mean_error = mean_of(errors);
                cell.sd_error = sd_of(errors);
                cell.seconds = secs / static_cast<double>(trials);
                result.cells.push_back(cell);
            }
        }
    }
    return result;
}

const UniCell& UniSweepResult::cell(UniModel model, double coordinate, const std::string& policy) const {
    for (const auto& c : cells) {
        const double coord = axis == SweepAxis::Horizon ? c.horizon : c.noise_ratio;
        if (c.model == model && c.policy == policy && std::abs(coord - coordinate) <= 1e-12 * std::abs(coordinate)) {
            return c;
        }
    }
    throw std::out_of_range("no such cell");
}

std::vector<Table> UniSweepResult::tables(std::uint64_t seed) const {
    const std::string prefix = axis == SweepAxis::Horizon ? "univariate_horizon" : "univariate_noise";
    Table cells_table{prefix, {"seed", "model", "m_policy", "horizon", "noise_ratio", "trials", "succeeded",
                               "failed", "mean_rel_error", "sd_rel_error"}, {}};
    for (const auto& c : cells) {
        cells_table.rows.push_back({fmt(seed), to_string(c.model), c.policy, fmt(c.horizon), fmt(c.noise_ratio),
                                    fmt_int(c.succeeded + c.failed), fmt_int(c.succeeded), fmt_int(c.failed),
                                    fmt(c.mean_error), fmt(c.sd_error)});
    }
    Table trials_table{prefix + "_trials",
                       {"seed", "model", "m_policy", "horizon", "noise_ratio", "trial", "trial_seed", "status",
                        "n_events", "M", "mu_hat", "alpha_hat", "beta_hat", "lambda0_hat", "rel_error", "error"},
                       {}};
    for (const auto& t : trials) {
        std::vector<std::string> row{fmt(seed), to_string(t.model), t.policy, fmt(t.horizon), fmt(t.noise_ratio),
                                     fmt_int(t.trial), fmt(t.seed), t.ok ? "ok" : "failed",
                                     fmt_int(static_cast<long long>(t.n_events)),
                                     fmt_int(static_cast<long long>(t.m_used))};
        append_params(row, t.estimate, 1, t.ok);
        row.push_back(t.ok ? fmt(t.rel_error) : "");
        row.push_back(csv_safe(t.error));
        trials_table.rows.push_back(std::move(row));
    }
    return {cells_table, trials_table};
}

std::vector<Timing> UniSweepResult::timings() const {
    std::vector<Timing> out;
    for (const auto& c : cells) {
        const std::string coord = axis == SweepAxis::Horizon ? "T=" + fmt(c.horizon) : "ratio=" + fmt(c.noise_ratio);
        out.push_back({to_string(c.model) + " " + c.policy + " " + coord + " mean seconds per fit", c.seconds});
    }
    return out;
}

CompensationResult run_compensation_study(const ExperimentConfig& cfg) {
    cfg.validate();
    const NoisyHawkesParams truth =
        NoisyHawkesParams::univariate(cfg.uni_mu, cfg.uni_alpha, cfg.uni_beta, cfg.compensation_lambda0);
    const ModelSpec spec = ModelSpec::univariate(UniModel::QBeta, truth.beta(0));
    CompensationResult result;
    result.true_mean_intensity = mean_intensity(truth)(0);
    result.trials.resize(static_cast<std::size_t>(cfg.trials));
    parallel_for(result.trials.size(), cfg.jobs, [&](std::size_t t) {
        CompensationTrial& tr = result.trials[t];
        tr.trial = static_cast<int>(t);
        tr.seed = derive_seed(cfg.seed, {kTagCompensation, t});
        const EventSeries events = simulate_noisy(truth, {cfg.compensation_horizon, cfg.burn_in, tr.seed});
        try {
            const FitResult fr = fit(spec, events, cfg.fit_options(derive_seed(tr.seed, {1}), cfg.m_policies.front()));
            tr.mu = fr.theta_hat.mu(0);
            tr.alpha = fr.theta_hat.alpha(0, 0);
            tr.lambda0 = fr.theta_hat.lambda0;
            tr.mean_intensity = tr.lambda0 + tr.mu / (1.0 - tr.alpha);
            tr.ok = true;
        } catch (const NumericalError& e) {
            tr.error = e.what();
        }
    });
    std::vector<double> mus, alphas, rel;
    for (const auto& tr : result.trials) {
        if (!tr.ok) {
            ++result.failed;
            continue;
        }
        mus.push_back(tr.mu);
        alphas.push_back(tr.alpha);
        rel.push_back(std::abs(tr.mean_intensity - result.true_mean_intensity) / result.true_mean_intensity);
    }
    result.mean_rel_error = mean_of(rel);
    result.corr_mu_alpha = correlation(mus, alphas);
    std::stable_sort(result.trials.begin(), result.trials.end(), [](const auto& a, const auto& b) {
        if (a.ok != b.ok) return a.ok;
        return a.ok && a.mu < b.mu;
    });
    return result;
}

std::vector<Table> CompensationResult::tables(std::uint64_t seed) const {
    Table trials_table{"compensation_trials",
                       {"seed", "rank", "trial", "trial_seed", "status", "mu_hat", "alpha_hat", "lambda0_hat",
                        "mean_intensity_hat", "mean_intensity_rel_error", "error"},
                       {}};
    int rank = 0;
    for (const auto& t : trials) {
        trials_table.rows.push_back(
            {fmt(seed), fmt_int(rank++), fmt_int(t.trial), fmt(t.seed), t.ok ? "ok" : "failed",
             t.ok ? fmt(t.mu) : "", t.ok ? fmt(t.alpha) : "", t.ok ? fmt(t.lambda0) : "",
             t.ok ? fmt(t.mean_intensity) : "",
             t.ok ? fmt(std::abs(t.mean_intensity - true_mean_intensity) / true_mean_intensity) : "",
             csv_safe(t.error)});
    }
    Table summary{"compensation",
                  {"seed", "trials", "failed", "true_mean_intensity", "mean_rel_error_mean_intensity", "corr_mu_alpha"},
                  {{fmt(seed), fmt_int(static_cast<long long>(trials.size())), fmt_int(failed),
                    fmt(true_mean_intensity), fmt(mean_rel_error), fmt(corr_mu_alpha)}}};
    return {summary, trials_table};
}

// ----------------------------------------------------------------- bivariate

NoisyHawkesParams scenario_params(const ExperimentConfig& cfg, int scenario) {
    Eigen::Matrix2d alpha;
    if (scenario == 1) {
        alpha << 0.5, 0.0, 0.4, 0.0;
    } else if (scenario == 2) {
        alpha << 0.5, 0.0, 0.4, 0.4;
    } else {
        throw ConfigError("scenario must be 1 or 2");
    }
    return NoisyHawkesParams::bivariate(cfg.biv_mu, alpha, cfg.biv_beta, cfg.biv_lambda0);
}

BivSweepResult run_bivariate_sweep(const ExperimentConfig& cfg) {
    cfg.validate();
    BoolMatrix mask = BoolMatrix::Constant(2, 2, false);
    mask(1, 0) = true;
    const ModelSpec spec = ModelSpec::with_support(mask);
    const std::vector<std::size_t> free = spec.free_slots();
    const std::size_t n_a = cfg.alpha21_levels.size();
    const std::size_t n_t = cfg.sweep_horizons.size();
    const auto trials = static_cast<std::size_t>(cfg.trials);

    auto truth_for = [&](double a21) {
        Eigen::Matrix2d alpha = Eigen::Matrix2d::Zero();
        alpha(1, 0) = a21;
        Eigen::Vector2d beta = cfg.biv_beta;
        beta(0) = 1.0;
        return NoisyHawkesParams::bivariate(cfg.biv_mu, alpha, beta, cfg.biv_lambda0);
    };

    BivSweepResult result;
    result.trials.resize(n_a * n_t * trials);
    parallel_for(result.trials.size(), cfg.jobs, [&](std::size_t job) {
        const std::size_t a = job / (n_t * trials);
        const std::size_t h = (job / trials) % n_t;
        const std::size_t t = job % trials;
        BivSweepTrial& tr = result.trials[job];
        tr.alpha21 = cfg.alpha21_levels[a];
        tr.horizon = cfg.sweep_horizons[h];
        tr.trial = static_cast<int>(t);
        tr.seed = derive_seed(cfg.seed, {kTagSweep, a, h, t});
        const NoisyHawkesParams truth = truth_for(tr.alpha21);
        const EventSeries events = simulate_noisy(truth, {tr.horizon, cfg.burn_in, tr.seed});
        try {
            const FitResult fr = fit(spec, events, cfg.fit_options(derive_seed(tr.seed, {1}), cfg.m_policies.front()));
            tr.estimate = fr.theta_hat;
            tr.rel_error = relative_error(spec, fr.theta_hat, truth);
            tr.ok = true;
        } catch (const NumericalError& e) {
            tr.error = e.what();
        }
    });

    for (std::size_t a = 0; a < n_a; ++a) {
        for (std::size_t h = 0; h < n_t; ++h) {
            BivSweepCell cell;
            cell.alpha21 = cfg.alpha21_levels[a];
            cell.horizon = cfg.sweep_horizons[h];
            const Eigen::VectorXd true_free = spec.free_values(truth_for(cell.alpha21));
            cell.mean_param_errors = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(free.size()));
            std::vector<double> errors;
            for (std::size_t t = 0; t < trials; ++t) {
                const BivSweepTrial& tr = result.trials[(a * n_t + h) * trials + t];
                if (!tr.ok) {
                    ++cell.failed;
                    continue;
                }
                ++cell.succeeded;
                errors.push_back(tr.rel_error);
                cell.mean_param_errors +=
                    ((spec.free_values(tr.estimate) - true_free).array().abs() / true_free.array().abs()).matrix();
            }
            if (cell.succeeded > 0) cell.mean_param_errors /= static_cast<double>(cell.succeeded);
            cell.mean_error = mean_of(errors);
            result.cells.push_back(cell);
        }
    }
    return result;
}

std::vector<Table> BivSweepResult::tables(std::uint64_t seed) const {
    BoolMatrix mask = BoolMatrix::Constant(2, 2, false);
    mask(1, 0) = true;
    const ModelSpec spec = ModelSpec::with_support(mask);
    const std::vector<std::size_t> free = spec.free_slots();
    Table cells_table{"bivariate_sweep",
                      {"seed", "alpha21", "horizon", "trials", "succeeded", "failed", "mean_rel_error"},
                      {}};
    for (std::size_t s : free) cells_table.header.push_back("rel_error_" + spec.slot_name(s));
    for (const auto& c : cells) {
        std::vector<std::string> row{fmt(seed), fmt(c.alpha21), fmt(c.horizon), fmt_int(c.succeeded + c.failed),
                                     fmt_int(c.succeeded), fmt_int(c.failed), fmt(c.mean_error)};
        for (Eigen::Index k = 0; k < c.mean_param_errors.size(); ++k) {
            row.push_back(c.succeeded > 0 ? fmt(c.mean_param_errors(k)) : "");
        }
        cells_table.rows.push_back(std::move(row));
    }
    Table trials_table{"bivariate_sweep_trials", {"seed", "alpha21", "horizon", "trial", "trial_seed", "status"}, {}};
    for (const auto& h : params_header(2, "_hat")) trials_table.header.push_back(h);
    trials_table.header.push_back("rel_error");
    trials_table.header.push_back("error");
    for (const auto& t : trials) {
        std::vector<std::string> row{fmt(seed), fmt(t.alpha21), fmt(t.horizon), fmt_int(t.trial), fmt(t.seed),
                                     t.ok ? "ok" : "failed"};
        append_params(row, t.estimate, 2, t.ok);
        row.push_back(t.ok ? fmt(t.rel_error) : "");
        row.push_back(csv_safe(t.error));
        trials_table.rows.push_back(std::move(row));
    }
    return {cells_table, trials_table};
}

namespace {

ThreeStepOptions pipeline_options(const ExperimentConfig& cfg, std::uint64_t fit_seed) {
    ThreeStepOptions o;
    o.fit = cfg.fit_options(fit_seed, cfg.m_policies.front());
    o.support = cfg.support;
    o.jobs = cfg.jobs;
    return o;
}

double full_relative_error(const NoisyHawkesParams& est, const NoisyHawkesParams& truth) {
    const Eigen::VectorXd t = params_to_vector(truth);
    return (params_to_vector(est) - t).norm() / t.norm();
}

} // namespace

BivScenarioResult run_bivariate_scenarios(const ExperimentConfig& cfg, bool compare_models) {
    cfg.validate();
    BivScenarioResult out;
    for (int scenario = 1; scenario <= 2; ++scenario) {
        const NoisyHawkesParams truth = scenario_params(cfg, scenario);
        const BoolMatrix mask = true_mask(truth);
        for (int rep = 0; rep < cfg.pipeline_repetitions; ++rep) {
            PipelineRun run;
            run.scenario = scenario;
            run.repetition = rep;
            run.truth = truth;
            run.seed = derive_seed(cfg.seed, {kTagScenario, static_cast<std::uint64_t>(scenario),
                                              static_cast<std::uint64_t>(rep)});
            std::vector<EventSeries> replicates;
            replicates.reserve(static_cast<std::size_t>(cfg.replicates));
            for (int k = 0; k < cfg.replicates; ++k) {
                replicates.push_back(simulate_noisy(
                    truth, {cfg.scenario_horizon, cfg.burn_in, derive_seed(run.seed, {static_cast<std::uint64_t>(k)})}));
            }
            try {
                run.result = three_step_fit(replicates, pipeline_options(cfg, derive_seed(run.seed, {0x46})));
                run.ok = true;
                run.mask_correct = run.result.report.support_mask == mask;
            } catch (const NumericalError& e) {
                run.error = e.what();
            }

            if (compare_models && rep == 0) {
                const ModelSpec reduced = ModelSpec::with_support(mask);
                std::vector<ScenarioComparison> rows(static_cast<std::size_t>(2 * cfg.replicates));
                parallel_for(replicates.size(), cfg.jobs, [&](std::size_t k) {
                    ScenarioComparison& r = rows[2 * k];
                    r.scenario = scenario;
                    r.replicate = static_cast<int>(k);
                    r.model = "reduced";
                    try {
                        const FitResult fr = fit(reduced, replicates[k],
                                                 cfg.fit_options(derive_seed(run.seed, {0x43, k}),
                                                                 cfg.m_policies.front()));
                        r.estimate = fr.theta_hat;
                        r.rel_error = full_relative_error(fr.theta_hat, truth);
                        r.ok = true;
                    } catch (const NumericalError&) {
                    }
                });
                std::size_t used = 0;
                for (std::size_t k = 0; k < replicates.size(); ++k) {
                    ScenarioComparison& r = rows[2 * k + 1];
                    r.scenario = scenario;
                    r.replicate = static_cast<int>(k);
                    r.model = "full";
                    const auto& skipped = run.result.skipped_subsamples;
                    if (!run.ok || std::find(skipped.begin(), skipped.end(), k) != skipped.end()) continue;
                    r.estimate = run.result.subsample_fits[used++].theta_hat;
                    r.rel_error = full_relative_error(r.estimate, truth);
                    r.ok = true;
                }
                out.comparisons.insert(out.comparisons.end(), rows.begin(), rows.end());
            }
            out.runs.push_back(std::move(run));
        }
    }
    return out;
}

BivScenarioResult run_bivariate_partition(const ExperimentConfig& cfg) {
    cfg.validate();
    BivScenarioResult out;
    const auto n_parts = static_cast<std::size_t>(std::llround(cfg.partition_horizon / cfg.partition_window));
    if (n_parts < 2) throw ConfigError("the partition needs at least two windows");
    for (int scenario = 1; scenario <= 2; ++scenario) {
        const NoisyHawkesParams truth = scenario_params(cfg, scenario);
        PipelineRun run;
        run.scenario = scenario;
        run.partitioned = true;
        run.truth = truth;
        run.seed = derive_seed(cfg.seed, {kTagPartition, static_cast<std::uint64_t>(scenario)});
        const EventSeries events = simulate_noisy(truth, {cfg.partition_horizon, cfg.burn_in, run.seed});
        ThreeStepOptions opts = pipeline_options(cfg, derive_seed(run.seed, {0x46}));
        opts.n_parts = n_parts;
        try {
            run.result = three_step_fit(events, opts);
            run.ok = true;
            run.mask_correct = run.result.report.support_mask == true_mask(truth);
        } catch (const NumericalError& e) {
            run.error = e.what();
        }
        out.runs.push_back(std::move(run));
    }
    return out;
}

std::vector<Table> BivScenarioResult::tables(std::uint64_t seed) const {
    const bool partitioned = !runs.empty() && runs.front().partitioned;
    const std::string prefix = partitioned ? "bivariate_partition" : "bivariate_scenarios";
    Table support_table{prefix + "_support",
                        {"seed", "scenario", "repetition", "run_seed", "entry", "true_nonzero", "n_fits", "quantile",
                         "null_proportion", "in_support"},
                        {}};
    Table runs_table{prefix,
                     {"seed", "scenario", "repetition", "run_seed", "status", "n_fits", "skipped", "pattern",
                      "mask_correct", "warnings"},
                     {}};
    for (const auto& h : params_header(2, "_reduced")) runs_table.header.push_back(h);
    runs_table.header.push_back("error");
    for (const auto& r : runs) {
        const NoisyHawkesParams& truth = r.truth;
        const bool refit = r.ok && r.result.reduced_fit.has_value();
        std::string warnings;
        for (const auto& w : r.result.warnings) warnings += (warnings.empty() ? "" : ";") + w.code;
        std::vector<std::string> row{fmt(seed), fmt_int(r.scenario), fmt_int(r.repetition), fmt(r.seed),
                                     r.ok ? "ok" : "failed",
                                     fmt_int(static_cast<long long>(r.result.subsample_fits.size())),
                                     fmt_int(static_cast<long long>(r.result.skipped_subsamples.size())),
                                     r.ok ? to_string(r.result.pattern) : "", r.mask_correct ? "1" : "0", warnings};
        append_params(row, refit ? r.result.reduced_fit->theta_hat : NoisyHawkesParams{}, 2, refit);
        row.push_back(csv_safe(r.error));
        runs_table.rows.push_back(std::move(row));
        if (!r.ok) continue;
        const SupportReport& rep = r.result.report;
        for (int i = 0; i < 2; ++i) {
            for (int j = 0; j < 2; ++j) {
                support_table.rows.push_back({fmt(seed), fmt_int(r.scenario), fmt_int(r.repetition), fmt(r.seed),
                                              entry_name(i, j), truth.alpha(i, j) > 0.0 ? "1" : "0",
                                              fmt_int(static_cast<long long>(rep.n_subsamples)),
                                              fmt(rep.quantiles(i, j)), fmt(rep.null_props(i, j)),
                                              rep.support_mask(i, j) ? "1" : "0"});
            }
        }
    }
    std::vector<Table> out{runs_table, support_table};
    if (!comparisons.empty()) {
        Table cmp{"bivariate_comparison", {"seed", "scenario", "replicate", "model", "status"}, {}};
        for (const auto& h : params_header(2, "_hat")) cmp.header.push_back(h);
        cmp.header.push_back("rel_error");
        for (const auto& c : comparisons) {
            std::vector<std::string> row{fmt(seed), fmt_int(c.scenario), fmt_int(c.replicate), c.model,
                                         c.ok ? "ok" : "failed"};
            append_params(row, c.estimate, 2, c.ok);
            row.push_back(c.ok ? fmt(c.rel_error) : "");
            cmp.rows.push_back(std::move(row));
        }
        out.push_back(std::move(cmp));
    }
    return out;
}

// ------------------------------------------------------------ spike and slab

NoisyHawkesParams draw_spike_slab(Rng& rng, int* alpha_redraws) {
    constexpr double rate = 0.5;
    Eigen::Vector2d beta;
    for (int i = 0; i < 2; ++i) beta(i) = rng.exponential(rate) + 0.5;
    const double lambda0 = rng.exponential(rate) + 0.1;
    Eigen::Vector2d mu;
    do {
        mu(0) = rng.exponential(rate);
        mu(1) = rng.exponential(rate);
    } while (!(mu(0) > 0.5 * mu(1) && mu(0) < 2.0 * mu(1)));
    Eigen::Matrix2d alpha;
    int redraws = -1;
    do {
        ++redraws;
        for (int i = 0; i < 2; ++i) {
            for (int j = 0; j < 2; ++j) {
                double a = rng.exponential(rate);
                if (!rng.bernoulli(2.0 / 3.0)) a = 0.0;
                if (a < 0.1) a = 0.0;
                alpha(i, j) = a;
            }
        }
    } while (!(spectral_radius(alpha) < 1.0));
    if (alpha_redraws) *alpha_redraws = redraws;
    return NoisyHawkesParams::bivariate(mu, alpha, beta, lambda0);
}

SpikeSlabResult run_spike_slab_study(const ExperimentConfig& cfg) {
    cfg.validate();
    SpikeSlabResult result;
    result.noise_cut = cfg.spike_noise_cut;
    result.runs.resize(static_cast<std::size_t>(cfg.spike_replications));
    for (std::size_t r = 0; r < result.runs.size(); ++r) {
        SpikeSlabRun& run = result.runs[r];
        run.replication = static_cast<int>(r);
        run.seed = derive_seed(cfg.seed, {kTagSpike, r});
        Rng rng(derive_seed(run.seed, {1}));
        run.truth = draw_spike_slab(rng);
        run.horizon = cfg.spike_target_events / mean_intensity(run.truth).sum();
        const EventSeries events = simulate_noisy(run.truth, {run.horizon, cfg.burn_in, derive_seed(run.seed, {2})});
        run.n_events = events.total_count();
        ThreeStepOptions opts = pipeline_options(cfg, derive_seed(run.seed, {3}));
        opts.n_parts = cfg.spike_parts;
        opts.support.rule = SupportRule::NullProportion;
        opts.support.null_proportion = cfg.spike_null_proportion;
        opts.refit = false;
        try {
            const ThreeStepResult res = three_step_fit(events, opts);
            run.detected = res.report.support_mask;
            run.ok = true;
            run.correct = run.detected == true_mask(run.truth);
        } catch (const NumericalError& e) {
            run.error = e.what();
        }
    }

    auto accuracy_where = [&](auto keep) {
        int n = 0, hit = 0;
        for (const auto& run : result.runs) {
            if (!keep(run)) continue;
            ++n;
            hit += run.correct ? 1 : 0;
        }
        return std::make_pair(n, n > 0 ? static_cast<double>(hit) / n : std::nan(""));
    };
    const double total = static_cast<double>(result.runs.size());
    result.accuracy = accuracy_where([](const SpikeSlabRun&) { return true; }).second;
    const auto below = accuracy_where([&](const SpikeSlabRun& r) { return r.truth.lambda0 < result.noise_cut; });
    result.accuracy_below_cut = below.second;
    result.fraction_below_cut = below.first / total;
    double top = 0.0;
    for (const auto& run : result.runs) top = std::max(top, run.truth.lambda0);
    for (double cut = 0.5; cut < top + 0.5; cut += 0.5) {
        const auto kept = accuracy_where([&](const SpikeSlabRun& r) { return r.truth.lambda0 < cut; });
        if (kept.first == 0) continue;
        result.curve.push_back({cut, kept.second, kept.first / total});
    }
    return result;
}

std::vector<Table> SpikeSlabResult::tables(std::uint64_t seed) const {
    Table curve_table{"spike_slab", {"seed", "lambda_max", "accuracy", "fraction_kept"}, {}};
    for (const auto& c : curve) curve_table.rows.push_back({fmt(seed), fmt(c[0]), fmt(c[1]), fmt(c[2])});
    Table summary{"spike_slab_summary",
                  {"seed", "replications", "accuracy", "noise_cut", "accuracy_below_cut", "fraction_below_cut"},
                  {{fmt(seed), fmt_int(static_cast<long long>(runs.size())), fmt(accuracy), fmt(noise_cut),
                    fmt(accuracy_below_cut), fmt(fraction_below_cut)}}};
    Table runs_table{"spike_slab_runs", {"seed", "replication", "run_seed", "horizon", "n_events", "status"}, {}};
    for (const auto& h : params_header(2, "_true")) runs_table.header.push_back(h);
    for (int i = 0; i < 2; ++i) {
        for (int j = 0; j < 2; ++j) runs_table.header.push_back("detected_" + entry_name(i, j));
    }
    runs_table.header.push_back("correct");
    runs_table.header.push_back("error");
    for (const auto& r : runs) {
        std::vector<std::string> row{fmt(seed), fmt_int(r.replication), fmt(r.seed), fmt(r.horizon),
                                     fmt_int(static_cast<long long>(r.n_events)), r.ok ? "ok" : "failed"};
        append_params(row, r.truth, 2, true);
        for (int i = 0; i < 2; ++i) {
            for (int j = 0; j < 2; ++j) row.push_back(r.ok ? (r.detected(i, j) ? "1" : "0") : "");
        }
        row.push_back(r.correct ? "1" : "0");
        row.push_back(csv_safe(r.error));
        runs_table.rows.push_back(std::move(row));
    }
    return {curve_table, summary, runs_table};
}

} // namespace nhawkes
