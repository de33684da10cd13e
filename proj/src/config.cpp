#include "nhawkes/error.hpp"
#include "nhawkes/experiments.hpp"
#include "nhawkes/json_io.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <cerrno>
#include <cstdlib>
#include <functional>
#include <map>
#include <set>
#include <sstream>

namespace nhawkes {

namespace {

namespace pt = boost::property_tree;

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t");
    return s.substr(b, e - b + 1);
}

std::vector<std::string> split_list(const std::string& text) {
    std::vector<std::string> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

double parse_double(const std::string& key, const std::string& text) {
    const std::string t = trim(text);
    char* end = nullptr;
    errno = 0;
    const double v = std::strtod(t.c_str(), &end);
    if (t.empty() || end != t.c_str() + t.size() || errno == ERANGE) {
        throw ConfigError("config key '" + key + "': expected a number, got '" + text + "'");
    }
    return v;
}

long long parse_int(const std::string& key, const std::string& text) {
    const std::string t = trim(text);
    char* end = nullptr;
    errno = 0;
    const long long v = std::strtoll(t.c_str(), &end, 10);
    if (t.empty() || end != t.c_str() + t.size() || errno == ERANGE) {
        throw ConfigError("config key '" + key + "': expected an integer, got '" + text + "'");
    }
    return v;
}

std::vector<double> parse_doubles(const std::string& key, const std::string& text) {
    std::vector<double> out;
    for (const auto& item : split_list(text)) out.push_back(parse_double(key, item));
    return out;
}

Eigen::Vector2d parse_pair(const std::string& key, const std::string& text) {
    const auto v = parse_doubles(key, text);
    if (v.size() != 2) throw ConfigError("config key '" + key + "': expected two comma-separated numbers");
    return {v[0], v[1]};
}

using Setter = std::function<void(ExperimentConfig&, const std::string&, const std::string&)>;

std::map<std::string, Setter> setters() {
    std::map<std::string, Setter> s;
    auto num = [](double ExperimentConfig::*field) {
        return Setter([field](ExperimentConfig& c, const std::string& k, const std::string& v) {
            c.*field = parse_double(k, v);
        });
    };
    auto integer = [](int ExperimentConfig::*field) {
        return Setter([field](ExperimentConfig& c, const std::string& k, const std::string& v) {
            c.*field = static_cast<int>(parse_int(k, v));
        });
    };
    auto list = [](std::vector<double> ExperimentConfig::*field) {
        return Setter([field](ExperimentConfig& c, const std::string& k, const std::string& v) {
            c.*field = parse_doubles(k, v);
        });
    };
    s["seed"] = [](ExperimentConfig& c, const std::string& k, const std::string& v) {
        const long long x = parse_int(k, v);
        if (x < 0) throw ConfigError("seed must be nonnegative");
        c.seed = static_cast<std::uint64_t>(x);
    };
    s["trials"] = integer(&ExperimentConfig::trials);
    s["jobs"] = integer(&ExperimentConfig::jobs);
    s["restarts"] = integer(&ExperimentConfig::restarts);
    s["burn_in"] = num(&ExperimentConfig::burn_in);
    s["m_policy"] = [](ExperimentConfig& c, const std::string&, const std::string& v) {
        c.m_policies.clear();
        for (const auto& item : split_list(v)) c.m_policies.push_back(MPolicy::parse(item));
    };

    s["univariate.mu"] = num(&ExperimentConfig::uni_mu);
    s["univariate.alpha"] = num(&ExperimentConfig::uni_alpha);
    s["univariate.beta"] = num(&ExperimentConfig::uni_beta);
    s["univariate.lambda0"] = num(&ExperimentConfig::uni_lambda0);
    s["univariate.models"] = [](ExperimentConfig& c, const std::string&, const std::string& v) {
        c.uni_models.clear();
        for (const auto& item : split_list(v)) c.uni_models.push_back(uni_model_from_string(item));
    };
    s["univariate.horizons"] = list(&ExperimentConfig::horizons);
    s["univariate.noise_ratios"] = list(&ExperimentConfig::noise_ratios);
    s["univariate.noise_horizon"] = num(&ExperimentConfig::noise_horizon);

    s["compensation.lambda0"] = num(&ExperimentConfig::compensation_lambda0);
    s["compensation.horizon"] = num(&ExperimentConfig::compensation_horizon);

    s["bivariate.mu"] = [](ExperimentConfig& c, const std::string& k, const std::string& v) {
        c.biv_mu = parse_pair(k, v);
    };
    s["bivariate.beta"] = [](ExperimentConfig& c, const std::string& k, const std::string& v) {
        c.biv_beta = parse_pair(k, v);
    };
    s["bivariate.lambda0"] = num(&ExperimentConfig::biv_lambda0);
    s["bivariate.alpha21_levels"] = list(&ExperimentConfig::alpha21_levels);
    s["bivariate.sweep_horizons"] = list(&ExperimentConfig::sweep_horizons);
    s["bivariate.scenario_horizon"] = num(&ExperimentConfig::scenario_horizon);
    s["bivariate.replicates"] = integer(&ExperimentConfig::replicates);
    s["bivariate.pipeline_repetitions"] = integer(&ExperimentConfig::pipeline_repetitions);
    s["bivariate.partition_horizon"] = num(&ExperimentConfig::partition_horizon);
    s["bivariate.partition_window"] = num(&ExperimentConfig::partition_window);

    s["support.rule"] = [](ExperimentConfig& c, const std::string&, const std::string& v) {
        c.support.rule = support_rule_from_string(trim(v));
    };
    s["support.correction"] = [](ExperimentConfig& c, const std::string&, const std::string& v) {
        c.support.correction = correction_from_string(trim(v));
    };
    s["support.quantile_level"] = [](ExperimentConfig& c, const std::string& k, const std::string& v) {
        c.support.quantile_level = parse_double(k, v);
    };
    s["support.null_threshold"] = [](ExperimentConfig& c, const std::string& k, const std::string& v) {
        c.support.null_threshold = parse_double(k, v);
    };
    s["support.null_proportion"] = [](ExperimentConfig& c, const std::string& k, const std::string& v) {
        c.support.null_proportion = parse_double(k, v);
    };
    s["support.min_fits"] = [](ExperimentConfig& c, const std::string& k, const std::string& v) {
        const long long x = parse_int(k, v);
        if (x < 1) throw ConfigError("support.min_fits must be at least 1");
        c.support.min_fits = static_cast<std::size_t>(x);
    };

    s["spike_slab.replications"] = integer(&ExperimentConfig::spike_replications);
    s["spike_slab.target_events"] = num(&ExperimentConfig::spike_target_events);
    s["spike_slab.parts"] = [](ExperimentConfig& c, const std::string& k, const std::string& v) {
        const long long x = parse_int(k, v);
        if (x < 2) throw ConfigError("spike_slab.parts must be at least 2");
        c.spike_parts = static_cast<std::size_t>(x);
    };
    s["spike_slab.null_proportion"] = num(&ExperimentConfig::spike_null_proportion);
    s["spike_slab.noise_cut"] = num(&ExperimentConfig::spike_noise_cut);
    return s;
}

std::vector<std::string> policy_names(const std::vector<MPolicy>& ps) {
    std::vector<std::string> out;
    for (const auto& p : ps) out.push_back(p.to_string());
    return out;
}

} // namespace

ExperimentConfig load_experiment_config(const std::string& path, ExperimentConfig base) {
    pt::ptree tree;
    try {
        pt::read_ini(path, tree);
    } catch (const pt::ini_parser_error& e) {
        throw ConfigError("cannot read config '" + path + "': " + e.message() + " (line " +
                          std::to_string(e.line()) + ")");
    }
    const auto table = setters();
    auto apply = [&](const std::string& key, const std::string& value) {
        const auto it = table.find(key);
        if (it == table.end()) throw ConfigError("unknown config key '" + key + "'");
        it->second(base, key, value);
    };
    for (const auto& [name, node] : tree) {
        if (node.empty()) {
            apply(name, node.data());
            continue;
        }
        for (const auto& [key, leaf] : node) apply(name + "." + key, leaf.data());
    }
    base.validate();
    return base;
}

nlohmann::json config_to_json(const ExperimentConfig& cfg) {
    nlohmann::json j;
    j["id"] = cfg.id;
    j["seed"] = cfg.seed;
    j["trials"] = cfg.trials;
    j["jobs"] = cfg.jobs;
    j["restarts"] = cfg.restarts;
    j["burn_in"] = cfg.burn_in;
    j["m_policy"] = policy_names(cfg.m_policies);
    std::vector<std::string> models;
    for (UniModel m : cfg.uni_models) models.push_back(to_string(m));
    j["univariate"] = {{"mu", cfg.uni_mu},
                       {"alpha", cfg.uni_alpha},
                       {"beta", cfg.uni_beta},
                       {"lambda0", cfg.uni_lambda0},
                       {"models", models},
                       {"horizons", cfg.horizons},
                       {"noise_ratios", cfg.noise_ratios},
                       {"noise_horizon", cfg.noise_horizon}};
    j["compensation"] = {{"lambda0", cfg.compensation_lambda0}, {"horizon", cfg.compensation_horizon}};
    j["bivariate"] = {{"mu", {cfg.biv_mu(0), cfg.biv_mu(1)}},
                      {"beta", {cfg.biv_beta(0), cfg.biv_beta(1)}},
                      {"lambda0", cfg.biv_lambda0},
                      {"alpha21_levels", cfg.alpha21_levels},
                      {"sweep_horizons", cfg.sweep_horizons},
                      {"scenario_horizon", cfg.scenario_horizon},
                      {"replicates", cfg.replicates},
                      {"pipeline_repetitions", cfg.pipeline_repetitions},
                      {"partition_horizon", cfg.partition_horizon},
                      {"partition_window", cfg.partition_window}};
    j["support"] = {{"rule", to_string(cfg.support.rule)},
                    {"correction", to_string(cfg.support.correction)},
                    {"quantile_level", cfg.support.quantile_level},
                    {"null_threshold", cfg.support.null_threshold},
                    {"null_proportion", cfg.support.null_proportion},
                    {"min_fits", cfg.support.min_fits}};
    j["spike_slab"] = {{"replications", cfg.spike_replications},
                       {"target_events", cfg.spike_target_events},
                       {"parts", cfg.spike_parts},
                       {"null_proportion", cfg.spike_null_proportion},
                       {"noise_cut", cfg.spike_noise_cut}};
    return j;
}

} // namespace nhawkes
