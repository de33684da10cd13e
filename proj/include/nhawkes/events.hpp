#pragma once

#include "nhawkes/params.hpp"

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace nhawkes {

/// Sorted event times of a d-variate point process observed on [t_start, t_end].
/// Component labels only; the Hawkes/Poisson origin of an event is never stored.
class EventSeries {
public:
    /// Empty series with d components on [t_start, t_end].
    EventSeries(int d, double t_start, double t_end);

    /// Takes ownership of per-component times. Throws ConfigError unless every
    /// component is strictly increasing and lies inside the window.
    EventSeries(double t_start, double t_end, std::vector<std::vector<double>> times);

    [[nodiscard]] int dim() const noexcept { return static_cast<int>(times_.size()); }
    [[nodiscard]] double t_start() const noexcept { return t_start_; }
    [[nodiscard]] double t_end() const noexcept { return t_end_; }
    [[nodiscard]] double horizon() const noexcept { return t_end_ - t_start_; }

    [[nodiscard]] const std::vector<double>& times(int component) const { return times_.at(component); }
    [[nodiscard]] std::size_t count(int component) const { return times_.at(component).size(); }
    [[nodiscard]] std::size_t total_count() const noexcept;
    [[nodiscard]] bool empty() const noexcept { return total_count() == 0; }

    bool operator==(const EventSeries& other) const = default;

private:
    double t_start_;
    double t_end_;
    std::vector<std::vector<double>> times_;
};

/// Component-wise sorted merge of two series sharing dimension and window.
[[nodiscard]] EventSeries superpose(const EventSeries& a, const EventSeries& b);

/// Generation metadata stored in the JSON sidecar next to an events CSV.
struct EventsMetadata {
    std::optional<std::uint64_t> seed;
    std::optional<NoisyHawkesParams> params;
};

/// CSV with header "component_index,time", rows sorted by time (ties broken by
/// component). Times are written in shortest round-trip decimal form.
void write_events_csv(std::ostream& out, const EventSeries& events);

/// Reads a CSV produced by write_events_csv. Dimension and window come from
/// the caller (normally from the sidecar).
[[nodiscard]] EventSeries read_events_csv(std::istream& in, int d, double t_start, double t_end);

/// Writes `<path>` (CSV) and the sidecar `sidecar_path(path)` (JSON).
void save_events(const std::string& csv_path, const EventSeries& events,
                 const EventsMetadata& meta = {});

struct LoadedEvents {
    EventSeries events;
    EventsMetadata meta;
};

[[nodiscard]] LoadedEvents load_events(const std::string& csv_path);

/// "runs/x.csv" -> "runs/x.json".
[[nodiscard]] std::string sidecar_path(const std::string& csv_path);

/// Shortest decimal representation that parses back to the same double.
[[nodiscard]] std::string format_double(double value);

} // namespace nhawkes
