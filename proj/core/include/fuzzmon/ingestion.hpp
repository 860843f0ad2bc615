#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "fuzzmon/time_bucket.hpp"

namespace fuzzmon {

// One per-second traffic sample, as read from the metrics CSV:
//   timestamp,packets_per_sec,bytes_per_sec,utilization
struct MetricRecord {
    std::int64_t timestamp = 0;
    double packets_per_sec = 0.0;
    double bytes_per_sec = 0.0;
    double utilization = 0.0;  // fraction of link capacity, [0, 1]
};

enum class MetricField { packets_per_sec, bytes_per_sec, utilization };

// Maps a rule/KB variable name onto the CSV column it reads.  Accepted
// aliases: packets_per_sec -> pkts, packets, packet_rate, traffic;
// bytes_per_sec -> bytes, bandwidth, byte_rate; utilization -> util.
std::optional<MetricField> metric_field_for(std::string_view variable_name);

class CsvError : public std::runtime_error {
public:
    CsvError(const std::string& source, std::size_t line, const std::string& message);
    std::size_t line() const { return line_; }

private:
    std::size_t line_ = 0;
};

// Streaming reader; validates the header, field count, value ranges and
// strictly increasing timestamps.  Errors cite the 1-based file line.
class CsvReader {
public:
    explicit CsvReader(const std::filesystem::path& path);

    // nullopt at end of stream.
    std::optional<MetricRecord> next();

private:
    std::string source_;
    std::ifstream in_;
    std::size_t line_no_ = 1;  // header consumed in the constructor
    std::optional<std::int64_t> last_timestamp_;
};

std::vector<MetricRecord> read_csv(const std::filesystem::path& path);

// One tumbling window of samples: start/end are epoch-aligned multiples of
// the window length, the metric fields hold per-window means, and a window
// with record_count == 0 is a gap marker emitted for interior empty windows.
struct MetricWindow {
    std::int64_t start = 0;
    std::int64_t end = 0;
    double packets_per_sec = 0.0;
    double bytes_per_sec = 0.0;
    double utilization = 0.0;
    std::size_t record_count = 0;
    TimeBucketKey bucket;

    bool is_gap() const { return record_count == 0; }
    double value(MetricField field) const;
};

// Folds an ordered record stream into tumbling windows.  Windows are closed
// (and gaps between them emitted) as soon as a record from a later window
// arrives; flush() closes the final window.
class Windowizer {
public:
    Windowizer(std::int64_t window_seconds, BucketScheme scheme);

    std::vector<MetricWindow> push(const MetricRecord& record);
    std::optional<MetricWindow> flush();

private:
    MetricWindow close_current();

    std::int64_t window_seconds_;
    BucketScheme scheme_;
    bool open_ = false;
    std::int64_t current_start_ = 0;
    double sum_pkts_ = 0.0, sum_bytes_ = 0.0, sum_util_ = 0.0;
    std::size_t count_ = 0;
};

std::vector<MetricWindow> windowize(const std::vector<MetricRecord>& records,
                                    std::int64_t window_seconds, BucketScheme scheme);

// ---- Synthetic traffic ------------------------------------------------------

enum class ScenarioKind { outage, flash_crowd, abuse, config_change };

const char* to_string(ScenarioKind kind);
std::optional<ScenarioKind> scenario_kind_from_string(std::string_view s);

// A labelled anomaly injected into generated traffic, active over
// [start, start + duration).
//   outage        traffic drops to zero
//   flash_crowd   rate multiplied by `magnitude`, decaying back toward 1
//   abuse         rate pinned at magnitude x base, regardless of hour
//   config_change rate multiplied by `magnitude` from `start` onwards
struct AnomalyScenario {
    ScenarioKind kind = ScenarioKind::outage;
    std::int64_t start = 0;
    std::int64_t duration = 0;
    double magnitude = 1.0;

    bool operator==(const AnomalyScenario&) const = default;
};

// Shape of the clean diurnal curve: a sinusoidal bump between day_start_hour
// and day_end_hour on top of a constant base, damped on weekends, with
// independent uniform noise on the packet and byte streams.
struct DiurnalProfile {
    double base_pps = 2000.0;
    double amp_pps = 8000.0;
    double day_start_hour = 7.0;
    double day_end_hour = 19.0;
    double weekend_factor = 0.3;
    double noise_pps = 200.0;
    double bytes_per_packet = 600.0;
    double link_capacity_bps = 100e6;  // 100 Mbit/s
};

// Emits one record per second for `days` days starting at start_ts.  The
// stream is a pure function of (seed, days, start_ts, scenarios, profile):
// the generator draws exactly two uniform deviates per second from its own
// mt19937_64 mapping, so traces from the same seed stay sample-aligned even
// when scenario lists differ.  Throws std::invalid_argument on scenarios
// that overlap with a different kind or fall outside the stream.
void generate_traffic(std::uint64_t seed, int days, std::int64_t start_ts,
                      const std::vector<AnomalyScenario>& scenarios,
                      const DiurnalProfile& profile,
                      const std::function<void(const MetricRecord&)>& sink);

void write_csv(const std::filesystem::path& path, std::uint64_t seed, int days,
               std::int64_t start_ts, const std::vector<AnomalyScenario>& scenarios,
               const DiurnalProfile& profile);

// Sidecar scenario files: header `kind,start,duration,magnitude`, one
// scenario per line.
void write_scenarios(const std::filesystem::path& path,
                     const std::vector<AnomalyScenario>& scenarios);
std::vector<AnomalyScenario> read_scenarios(const std::filesystem::path& path);

}  // namespace fuzzmon
