#include "nhawkes/events.hpp"

#include "nhawkes/error.hpp"
#include "nhawkes/json_io.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <istream>
#include <numeric>
#include <ostream>
#include <sstream>
#include <tuple>

namespace nhawkes {

EventSeries::EventSeries(int d, double t_start, double t_end)
    : t_start_(t_start), t_end_(t_end), times_(static_cast<std::size_t>(std::max(d, 0))) {
    if (d < 1) {
        throw ConfigError("event series needs at least one component");
    }
    if (!(t_end > t_start)) {
        throw ConfigError("event series window must have t_end > t_start");
    }
}

EventSeries::EventSeries(double t_start, double t_end, std::vector<std::vector<double>> times)
    : t_start_(t_start), t_end_(t_end), times_(std::move(times)) {
    if (times_.empty()) {
        throw ConfigError("event series needs at least one component");
    }
    if (!(t_end > t_start)) {
        throw ConfigError("event series window must have t_end > t_start");
    }
    for (std::size_t c = 0; c < times_.size(); ++c) {
        const auto& ts = times_[c];
        for (std::size_t k = 0; k < ts.size(); ++k) {
            if (!(ts[k] >= t_start && ts[k] <= t_end)) {
                throw ConfigError("event time " + format_double(ts[k]) + " of component " +
                                  std::to_string(c) + " lies outside the window");
            }
            if (k > 0 && !(ts[k] > ts[k - 1])) {
                throw ConfigError("event times of component " + std::to_string(c) +
                                  " are not strictly increasing");
            }
        }
    }
}

std::size_t EventSeries::total_count() const noexcept {
    return std::accumulate(times_.begin(), times_.end(), std::size_t{0},
                           [](std::size_t acc, const auto& ts) { return acc + ts.size(); });
}

EventSeries superpose(const EventSeries& a, const EventSeries& b) {
    if (a.dim() != b.dim()) {
        throw ConfigError("cannot superpose series of different dimension");
    }
    if (a.t_start() != b.t_start() || a.t_end() != b.t_end()) {
        throw ConfigError("cannot superpose series observed on different windows");
    }
    std::vector<std::vector<double>> merged(static_cast<std::size_t>(a.dim()));
    for (int c = 0; c < a.dim(); ++c) {
        auto& out = merged[static_cast<std::size_t>(c)];
        out.reserve(a.count(c) + b.count(c));
        std::merge(a.times(c).begin(), a.times(c).end(), b.times(c).begin(), b.times(c).end(),
                   std::back_inserter(out));
    }
    // Coincident times have probability zero for continuous processes but are
    // still rejected by the constructor, which keeps the invariant explicit.
    return EventSeries(a.t_start(), a.t_end(), std::move(merged));
}

std::string format_double(double value) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
    if (ec != std::errc{}) {
        throw NumericalError("cannot format double");
    }
    return std::string(buf, ptr);
}

namespace {

double parse_double(std::string_view s) {
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size()) {
        throw ConfigError("malformed number '" + std::string(s) + "'");
    }
    return v;
}

} // namespace

void write_events_csv(std::ostream& out, const EventSeries& events) {
    std::vector<std::pair<double, int>> rows;
    rows.reserve(events.total_count());
    for (int c = 0; c < events.dim(); ++c) {
        for (double t : events.times(c)) {
            rows.emplace_back(t, c);
        }
    }
    std::sort(rows.begin(), rows.end());
    out << "component_index,time\n";
    for (const auto& [t, c] : rows) {
        out << c << ',' << format_double(t) << '\n';
    }
}

EventSeries read_events_csv(std::istream& in, int d, double t_start, double t_end) {
    std::string line;
    if (!std::getline(in, line)) {
        throw ConfigError("events CSV is empty");
    }
    if (line != "component_index,time") {
        throw ConfigError("events CSV has unexpected header '" + line + "'");
    }
    std::vector<std::vector<double>> times(static_cast<std::size_t>(d));
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) {
            continue;
        }
        const auto comma = line.find(',');
        if (comma == std::string::npos) {
            throw ConfigError("events CSV line " + std::to_string(line_no) + " has no comma");
        }
        int c = 0;
        auto [ptr, ec] = std::from_chars(line.data(), line.data() + comma, c);
        if (ec != std::errc{} || ptr != line.data() + comma || c < 0 || c >= d) {
            throw ConfigError("events CSV line " + std::to_string(line_no) +
                              " has an invalid component index");
        }
        times[static_cast<std::size_t>(c)].push_back(
            parse_double(std::string_view(line).substr(comma + 1)));
    }
    return EventSeries(t_start, t_end, std::move(times));
}

std::string sidecar_path(const std::string& csv_path) {
    const auto slash = csv_path.find_last_of('/');
    const auto dot = csv_path.find_last_of('.');
    if (dot != std::string::npos && (slash == std::string::npos || dot > slash)) {
        return csv_path.substr(0, dot) + ".json";
    }
    return csv_path + ".json";
}

void save_events(const std::string& csv_path, const EventSeries& events,
                 const EventsMetadata& meta) {
    std::ofstream csv(csv_path);
    if (!csv) {
        throw ConfigError("cannot open '" + csv_path + "' for writing");
    }
    write_events_csv(csv, events);

    nlohmann::json side;
    side["d"] = events.dim();
    side["window"] = {events.t_start(), events.t_end()};
    side["seed"] = meta.seed ? nlohmann::json(*meta.seed) : nlohmann::json(nullptr);
    side["params"] = meta.params ? params_to_json(*meta.params) : nlohmann::json(nullptr);
    std::vector<std::size_t> counts;
    for (int c = 0; c < events.dim(); ++c) {
        counts.push_back(events.count(c));
    }
    side["counts"] = counts;
    std::ofstream js(sidecar_path(csv_path));
    if (!js) {
        throw ConfigError("cannot open sidecar for '" + csv_path + "'");
    }
    js << side.dump(2) << '\n';
}

LoadedEvents load_events(const std::string& csv_path) {
    std::ifstream js(sidecar_path(csv_path));
    if (!js) {
        throw ConfigError("missing sidecar '" + sidecar_path(csv_path) + "'");
    }
    nlohmann::json side;
    try {
        side = nlohmann::json::parse(js);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("malformed sidecar: ") + e.what());
    }
    std::ifstream csv(csv_path);
    if (!csv) {
        throw ConfigError("cannot open '" + csv_path + "'");
    }
    try {
        const int d = side.at("d").get<int>();
        const auto window = side.at("window").get<std::vector<double>>();
        if (window.size() != 2) {
            throw ConfigError("sidecar window must have two entries");
        }
        EventsMetadata meta;
        if (side.contains("seed") && !side["seed"].is_null()) {
            meta.seed = side["seed"].get<std::uint64_t>();
        }
        if (side.contains("params") && !side["params"].is_null()) {
            meta.params = params_from_json(side["params"]);
        }
        return {read_events_csv(csv, d, window[0], window[1]), meta};
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("malformed sidecar: ") + e.what());
    }
}

nlohmann::json matrix_to_json(const Eigen::MatrixXd& m) {
    nlohmann::json rows = nlohmann::json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        nlohmann::json row = nlohmann::json::array();
        for (Eigen::Index j = 0; j < m.cols(); ++j) {
            row.push_back(m(i, j));
        }
        rows.push_back(row);
    }
    return rows;
}

Eigen::MatrixXd matrix_from_json(const nlohmann::json& j) {
    const auto rows = j.get<std::vector<std::vector<double>>>();
    const auto n = static_cast<Eigen::Index>(rows.size());
    const auto m = n == 0 ? Eigen::Index{0} : static_cast<Eigen::Index>(rows[0].size());
    Eigen::MatrixXd out(n, m);
    for (Eigen::Index i = 0; i < n; ++i) {
        if (static_cast<Eigen::Index>(rows[static_cast<std::size_t>(i)].size()) != m) {
            throw ConfigError("ragged matrix in JSON");
        }
        for (Eigen::Index k = 0; k < m; ++k) {
            out(i, k) = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(k)];
        }
    }
    return out;
}

nlohmann::json params_to_json(const NoisyHawkesParams& params) {
    nlohmann::json j;
    j["mu"] = std::vector<double>(params.mu.data(), params.mu.data() + params.mu.size());
    j["alpha"] = matrix_to_json(params.alpha);
    j["beta"] = std::vector<double>(params.beta.data(), params.beta.data() + params.beta.size());
    j["lambda0"] = params.lambda0;
    return j;
}

NoisyHawkesParams params_from_json(const nlohmann::json& j) {
    NoisyHawkesParams p;
    try {
        const auto mu = j.at("mu").get<std::vector<double>>();
        const auto beta = j.at("beta").get<std::vector<double>>();
        p.mu = Eigen::Map<const Eigen::VectorXd>(mu.data(), static_cast<Eigen::Index>(mu.size()));
        p.beta = Eigen::Map<const Eigen::VectorXd>(beta.data(), static_cast<Eigen::Index>(beta.size()));
        p.alpha = matrix_from_json(j.at("alpha"));
        p.lambda0 = j.at("lambda0").get<double>();
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("malformed parameter JSON: ") + e.what());
    }
    p.validate();
    return p;
}

} // namespace nhawkes
