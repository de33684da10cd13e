#include "nhawkes/error.hpp"
#include "nhawkes/events.hpp"
#include "nhawkes/experiments.hpp"
#include "nhawkes/fit.hpp"
#include "nhawkes/identifiability.hpp"
#include "nhawkes/json_io.hpp"
#include "nhawkes/model.hpp"
#include "nhawkes/periodogram.hpp"
#include "nhawkes/simulate.hpp"
#include "nhawkes/support.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

namespace fs = std::filesystem;
using nlohmann::json;
using namespace nhawkes;

namespace {

constexpr const char* kVersion = "0.1.0";

std::vector<double> parse_list(const std::string& text, const std::string& what) {
    std::vector<double> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        try {
            std::size_t used = 0;
            out.push_back(std::stod(item, &used));
            while (used < item.size() && std::isspace(static_cast<unsigned char>(item[used]))) ++used;
            if (used != item.size()) throw std::invalid_argument(item);
        } catch (const std::logic_error&) {
            throw ConfigError("--" + what + ": cannot parse '" + item + "' as a number");
        }
    }
    return out;
}

struct ParamsArgs {
    std::string file;
    std::string mu;
    std::string alpha;
    std::string beta;
    double lambda0{0.0};

    void add_to(CLI::App* cmd) {
        cmd->add_option("--params", file, "JSON file with mu, alpha, beta, lambda0");
        cmd->add_option("--mu", mu, "baselines, comma-separated");
        cmd->add_option("--alpha", alpha, "interaction matrix, row-major, comma-separated");
        cmd->add_option("--beta", beta, "decay rates, comma-separated");
        cmd->add_option("--lambda0", lambda0, "Poisson noise intensity");
    }

    NoisyHawkesParams resolve() const {
        if (!file.empty()) {
            std::ifstream in(file);
            if (!in) throw ConfigError("cannot open parameter file '" + file + "'");
            json j;
            try {
                in >> j;
            } catch (const json::exception& e) {
                throw ConfigError("invalid parameter file '" + file + "': " + e.what());
            }
            return params_from_json(j);
        }
        if (mu.empty() || alpha.empty() || beta.empty()) {
            throw ConfigError("give either --params or all of --mu, --alpha, --beta");
        }
        const auto m = parse_list(mu, "mu");
        const auto a = parse_list(alpha, "alpha");
        const auto b = parse_list(beta, "beta");
        const auto d = static_cast<Eigen::Index>(m.size());
        if (static_cast<Eigen::Index>(a.size()) != d * d || static_cast<Eigen::Index>(b.size()) != d) {
            throw ConfigError("parameter lengths disagree: expected d, d*d and d values");
        }
        NoisyHawkesParams p;
        p.mu = Eigen::Map<const Eigen::VectorXd>(m.data(), d);
        p.alpha = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(a.data(), d, d);
        p.beta = Eigen::Map<const Eigen::VectorXd>(b.data(), d);
        p.lambda0 = lambda0;
        p.validate();
        return p;
    }
};

std::ofstream open_out(const std::string& path) {
    const fs::path p(path);
    if (p.has_parent_path()) fs::create_directories(p.parent_path());
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot write '" + path + "'");
    return out;
}

void emit_json(const json& j, const std::string& path) {
    if (path.empty()) {
        std::cout << j.dump(2) << '\n';
    } else {
        open_out(path) << j.dump(2) << '\n';
    }
}

PeriodogramMethod method_from_string(const std::string& name) {
    if (name == "fast") return PeriodogramMethod::Fast;
    if (name == "direct") return PeriodogramMethod::Direct;
    throw ConfigError("unknown periodogram method '" + name + "' (fast or direct)");
}

ModelSpec model_for(const std::string& model_file, int d) {
    if (!model_file.empty()) {
        ModelSpec spec = load_model(model_file);
        if (spec.dim() != d) throw ConfigError("model dimension does not match the events");
        return spec;
    }
    if (d == 1) {
        std::cerr << "warning: the full univariate model is not identifiable; pass --model to fix a parameter\n";
    }
    return ModelSpec::full(d);
}

ModelSpec probe_spec(const std::string& name) {
    if (name.rfind("Q_", 0) == 0) {
        const UniModel m = uni_model_from_string(name);
        if (m == UniModel::Full) return ModelSpec::full(1);
        return ModelSpec::univariate(m, 1.0);
    }
    BoolMatrix mask = BoolMatrix::Constant(2, 2, false);
    std::stringstream ss(name);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (item.size() != 2 || item[0] < '1' || item[0] > '2' || item[1] < '1' || item[1] > '2') {
            throw ConfigError("support entries are written like 11,21 (got '" + item + "')");
        }
        mask(item[0] - '1', item[1] - '1') = true;
    }
    return ModelSpec::with_support(mask);
}

std::vector<double> interior_taus(const TauRange& range, int n) {
    std::vector<double> out;
    for (int k = 1; k <= n; ++k) {
        const double tau = range.lo + (range.hi - range.lo) * k / (n + 1.0);
        if (range.contains(tau)) out.push_back(tau);
    }
    return out;
}

void write_tables(const std::vector<Table>& tables, const fs::path& dir, json& files) {
    for (const auto& t : tables) {
        const fs::path path = dir / (t.name + ".csv");
        std::ofstream out = open_out(path.string());
        t.write_csv(out);
        files.push_back(path.filename().string());
    }
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Simulation and spectral estimation of noisy Hawkes processes"};
    app.require_subcommand(1);
    app.set_version_flag("--version", kVersion);

    std::uint64_t seed = 1;
    int jobs = 1;
    std::string out_path;
    std::string m_policy = "n";
    std::string model_file;
    std::string config_file;

    // simulate
    auto* sim = app.add_subcommand("simulate", "simulate a noisy Hawkes process");
    ParamsArgs sim_params;
    sim_params.add_to(sim);
    double horizon = 1000.0;
    double burn_in = 100.0;
    sim->add_option("--horizon", horizon, "observation window [0, T]")->required();
    sim->add_option("--burn-in", burn_in, "discarded history before 0");
    sim->add_option("--seed", seed, "random seed");
    sim->add_option("--out", out_path, "events CSV (a JSON sidecar is written next to it)")->required();

    // periodogram
    auto* per = app.add_subcommand("periodogram", "periodogram of one or more event files");
    std::vector<std::string> event_files;
    std::string method = "fast";
    per->add_option("--events", event_files, "events CSV; several files are averaged")->required();
    per->add_option("--M-policy", m_policy, "n, nlogn or an integer");
    per->add_option("--method", method, "fast (NUFFT) or direct");
    per->add_option("--out", out_path, "output CSV (stdout if omitted)");

    // fit
    auto* fitc = app.add_subcommand("fit", "maximise the spectral log-likelihood");
    std::string events_file;
    int restarts = 5;
    bool verbose = false;
    fitc->add_option("--events", events_file, "events CSV")->required();
    fitc->add_option("--model", model_file, "model spec JSON (default: full model)");
    fitc->add_option("--M-policy", m_policy, "n, nlogn or an integer");
    fitc->add_option("--method", method, "fast (NUFFT) or direct");
    fitc->add_option("--restarts", restarts, "random restarts");
    fitc->add_option("--seed", seed, "random seed");
    fitc->add_option("--out", out_path, "output JSON (stdout if omitted)");
    fitc->add_flag("--verbose", verbose, "include the per-restart trace");

    // equivalence
    auto* eq = app.add_subcommand("equivalence", "witnesses of non-identifiability, or injectivity probes");
    ParamsArgs eq_params;
    eq_params.add_to(eq);
    std::vector<double> taus;
    int n_tau = 5;
    std::string probe;
    std::size_t n_pairs = 500;
    bool with_pairs = false;
    eq->add_option("--tau", taus, "transform parameters (default: evenly spaced inside the range)");
    eq->add_option("--n-tau", n_tau, "number of default tau values");
    eq->add_option("--probe", probe, "probe a model: Q_mu, Q_alpha, Q_beta, Q_lambda0 or a support like 11,21");
    eq->add_option("--pairs", n_pairs, "probe pairs");
    eq->add_flag("--with-pairs", with_pairs, "list every probe pair");
    eq->add_option("--seed", seed, "random seed");
    eq->add_option("--out", out_path, "output JSON (stdout if omitted)");

    // support
    auto* sup = app.add_subcommand("support", "three-step support detection");
    std::vector<std::string> replicate_files;
    std::size_t parts = 10;
    std::string rule = "quantile";
    std::string correction = "none";
    SupportOptions sup_opts;
    bool no_refit = false;
    std::string csv_path;
    sup->add_option("--events", replicate_files, "replicate CSVs; a single file is partitioned")->required();
    sup->add_option("--parts", parts, "windows when a single series is given");
    sup->add_option("--rule", rule, "quantile or null_proportion");
    sup->add_option("--quantile", sup_opts.quantile_level, "lower quantile level");
    sup->add_option("--threshold", sup_opts.null_threshold, "estimates at or below count as null");
    sup->add_option("--null-proportion", sup_opts.null_proportion, "cutoff for the null_proportion rule");
    sup->add_option("--correction", correction, "none, bonferroni or bh");
    sup->add_option("--M-policy", m_policy, "n, nlogn or an integer");
    sup->add_option("--restarts", restarts, "random restarts per fit");
    sup->add_option("--seed", seed, "random seed");
    sup->add_option("--jobs", jobs, "parallel fits");
    sup->add_flag("--no-refit", no_refit, "stop after support detection");
    sup->add_option("--out", out_path, "output JSON (stdout if omitted)");
    sup->add_option("--csv", csv_path, "also write the support table as CSV");

    // experiment
    auto* exp = app.add_subcommand("experiment", "run a study and write CSV tables");
    std::string exp_id;
    int trials = 0;
    std::uint64_t exp_seed = 0;
    int exp_jobs = 0;
    std::string exp_policy;
    exp->add_option("id", exp_id,
                    "univariate-horizon, univariate-noise, compensation, bivariate-sweep, "
                    "bivariate-scenarios, bivariate-partition, bivariate, spike-slab")
        ->required();
    exp->add_option("--config", config_file, "INI config file");
    exp->add_option("--seed", exp_seed, "master seed (overrides the config)");
    exp->add_option("--jobs", exp_jobs, "parallel trials (overrides the config)");
    exp->add_option("--trials", trials, "trials per cell (overrides the config)");
    exp->add_option("--M-policy", exp_policy, "comma-separated list of n, nlogn, integers");
    std::string exp_out = "results";
    exp->add_option("--out", exp_out, "output directory");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (*sim) {
            const NoisyHawkesParams p = sim_params.resolve();
            const SimulationConfig cfg{horizon, burn_in, seed};
            const EventSeries events = simulate_noisy(p, cfg);
            save_events(out_path, events, {seed, p});
            json summary{{"events", out_path}, {"total", events.total_count()}};
            for (int i = 0; i < events.dim(); ++i) summary["counts"].push_back(events.count(i));
            std::cout << summary.dump() << '\n';
        } else if (*per) {
            std::vector<EventSeries> series;
            for (const auto& f : event_files) series.push_back(load_events(f).events);
            std::size_t total = 0;
            for (const auto& s : series) total += s.total_count();
            const std::size_t m = frequency_count(MPolicy::parse(m_policy), std::max<std::size_t>(1, total / series.size()));
            std::vector<Periodogram> pgs;
            for (const auto& s : series) pgs.push_back(periodogram(s, m, method_from_string(method)));
            const Periodogram pg = average_periodograms(pgs);
            if (out_path.empty()) {
                write_periodogram_csv(std::cout, pg);
            } else {
                std::ofstream out = open_out(out_path);
                write_periodogram_csv(out, pg);
            }
        } else if (*fitc) {
            const EventSeries events = load_events(events_file).events;
            const ModelSpec spec = model_for(model_file, events.dim());
            FitOptions opts;
            opts.restarts = restarts;
            opts.seed = seed;
            opts.m_policy = MPolicy::parse(m_policy);
            opts.periodogram_method = method_from_string(method);
            const FitResult result = fit(spec, events, opts);
            json j = fit_to_json(result, verbose);
            j["model"] = model_to_json(spec);
            emit_json(j, out_path);
        } else if (*eq) {
            if (!probe.empty()) {
                ProbeOptions po;
                po.n_pairs = n_pairs;
                po.seed = seed;
                emit_json(probe_to_json(injectivity_probe(probe_spec(probe), po), with_pairs), out_path);
            } else {
                const NoisyHawkesParams p = eq_params.resolve();
                p.validate_stationary();
                std::string family;
                TauRange range;
                std::function<NoisyHawkesParams(double)> map;
                if (p.dim() == 1) {
                    family = "univariate";
                    range = uni_tau_range(p);
                    map = [&](double t) { return uni_equivalent(p, t); };
                } else if (p.dim() == 2) {
                    const SupportPattern pattern = classify_support((p.alpha.array() > 0.0).matrix());
                    family = to_string(pattern);
                    if (pattern == SupportPattern::Diagonal) {
                        range = biv_diag_tau_range(p);
                        map = [&](double t) { return biv_equivalent_diag(p, t); };
                    } else if (pattern == SupportPattern::FirstRowOnly) {
                        range = biv_row_tau_range(p);
                        map = [&](double t) { return biv_equivalent_row(p, t); };
                    } else if (pattern == SupportPattern::SecondRowOnly) {
                        range = biv_row_second_tau_range(p);
                        map = [&](double t) { return biv_equivalent_row_second(p, t); };
                    } else {
                        throw ConfigError("no equivalence map for support pattern " + family +
                                          "; use --probe to test injectivity");
                    }
                } else {
                    throw ConfigError("equivalence maps exist for d = 1 and d = 2 only");
                }
                if (taus.empty()) taus = interior_taus(range, n_tau);
                json j{{"family", family},
                       {"params", params_to_json(p)},
                       {"tau_range", {{"lo", range.lo}, {"hi", range.hi}, {"excludes_zero", range.excludes_zero}}}};
                j["witnesses"] = json::array();
                const std::vector<double> grid = log_grid(1e-3, 64.0, 200);
                for (double t : taus) {
                    if (!range.contains(t)) throw ConfigError("tau = " + format_double(t) + " is outside the range");
                    const NoisyHawkesParams q = map(t);
                    j["witnesses"].push_back(
                        {{"tau", t}, {"params", params_to_json(q)}, {"discrepancy", spectral_discrepancy(p, q, grid)}});
                }
                emit_json(j, out_path);
            }
        } else if (*sup) {
            ThreeStepOptions opts;
            opts.fit.restarts = restarts;
            opts.fit.seed = seed;
            opts.fit.m_policy = MPolicy::parse(m_policy);
            opts.support = sup_opts;
            opts.support.rule = support_rule_from_string(rule);
            opts.support.correction = correction_from_string(correction);
            opts.support.validate();
            opts.n_parts = parts;
            opts.jobs = jobs;
            opts.refit = !no_refit;
            opts.on_warning = [](const SupportWarning& w) {
                std::cerr << "warning [" << w.code << "] " << w.message << '\n';
            };
            ThreeStepResult result;
            if (replicate_files.size() == 1) {
                result = three_step_fit(load_events(replicate_files.front()).events, opts);
            } else {
                std::vector<EventSeries> reps;
                for (const auto& f : replicate_files) reps.push_back(load_events(f).events);
                result = three_step_fit(reps, opts);
            }
            emit_json(three_step_to_json(result), out_path);
            if (!csv_path.empty()) {
                std::ofstream out = open_out(csv_path);
                write_support_csv(out, result.report);
            }
        } else if (*exp) {
            ExperimentConfig cfg;
            if (!config_file.empty()) cfg = load_experiment_config(config_file, cfg);
            cfg.id = exp_id;
            if (exp->count("--seed")) cfg.seed = exp_seed;
            if (exp->count("--jobs")) cfg.jobs = exp_jobs;
            if (exp->count("--trials")) cfg.trials = trials;
            if (!exp_policy.empty()) {
                cfg.m_policies.clear();
                std::stringstream ss(exp_policy);
                std::string item;
                while (std::getline(ss, item, ',')) cfg.m_policies.push_back(MPolicy::parse(item));
            }
            cfg.validate();

            const fs::path dir(exp_out);
            fs::create_directories(dir);
            json files = json::array();
            std::vector<Timing> timings;
            const auto start = std::chrono::steady_clock::now();
            auto timed = [&](const std::string& label, auto&& run) {
                const auto t0 = std::chrono::steady_clock::now();
                run();
                timings.push_back({label, std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count()});
            };

            if (exp_id == "univariate-horizon" || exp_id == "univariate-noise") {
                const SweepAxis axis = exp_id == "univariate-horizon" ? SweepAxis::Horizon : SweepAxis::Noise;
                timed(exp_id, [&] {
                    const UniSweepResult r = run_univariate_sweep(cfg, axis);
                    write_tables(r.tables(cfg.seed), dir, files);
                    for (const auto& t : r.timings()) timings.push_back(t);
                });
            } else if (exp_id == "compensation") {
                timed(exp_id, [&] { write_tables(run_compensation_study(cfg).tables(cfg.seed), dir, files); });
            } else if (exp_id == "bivariate-sweep" || exp_id == "bivariate") {
                timed("bivariate-sweep", [&] { write_tables(run_bivariate_sweep(cfg).tables(cfg.seed), dir, files); });
            }
            if (exp_id == "bivariate-scenarios" || exp_id == "bivariate") {
                timed("bivariate-scenarios",
                      [&] { write_tables(run_bivariate_scenarios(cfg, true).tables(cfg.seed), dir, files); });
            }
            if (exp_id == "bivariate-partition" || exp_id == "bivariate") {
                timed("bivariate-partition",
                      [&] { write_tables(run_bivariate_partition(cfg).tables(cfg.seed), dir, files); });
            }
            if (exp_id == "spike-slab") {
                timed(exp_id, [&] { write_tables(run_spike_slab_study(cfg).tables(cfg.seed), dir, files); });
            }
            if (files.empty()) throw ConfigError("unknown experiment id '" + exp_id + "'");

            const std::string timings_name = exp_id + "_timings.csv";
            {
                std::ofstream out = open_out((dir / timings_name).string());
                out << "label,seconds\n";
                for (const auto& t : timings) out << t.label << ',' << format_double(t.seconds) << '\n';
            }
            json manifest;
            manifest["experiment"] = exp_id;
            manifest["config"] = config_to_json(cfg);
            manifest["config_file"] = config_file;
            manifest["tables"] = files;
            manifest["timings"] = timings_name;
            manifest["versions"] = {{"nhawkes", kVersion},
                                    {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." +
                                                  std::to_string(EIGEN_MAJOR_VERSION) + "." +
                                                  std::to_string(EIGEN_MINOR_VERSION)},
                                    {"cli11", CLI11_VERSION},
                                    {"compiler", __VERSION__}};
            manifest["total_seconds"] =
                std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
            open_out((dir / (exp_id + "_manifest.json")).string()) << manifest.dump(2) << '\n';
            std::cout << "wrote " << files.size() << " tables to " << dir.string() << '\n';
        }
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 2;
    } catch (const NumericalError& e) {
        std::cerr << "numerical failure: " << e.what() << '\n';
        return 3;
    } catch (const fs::filesystem_error& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 2;
    }
    return 0;
}
