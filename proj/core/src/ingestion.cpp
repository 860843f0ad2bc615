#include "fuzzmon/ingestion.hpp"

#include <algorithm>
#include <cctype>
#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <random>
#include <sstream>

namespace fuzzmon {
namespace {

constexpr std::int64_t kSecondsPerDay = 86400;
constexpr double kPi = 3.14159265358979323846;
constexpr const char* kCsvHeader = "timestamp,packets_per_sec,bytes_per_sec,utilization";
constexpr const char* kScenarioHeader = "kind,start,duration,magnitude";

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::size_t pos = 0;
    while (true) {
        const std::size_t next = line.find(',', pos);
        if (next == std::string::npos) {
            fields.push_back(line.substr(pos));
            return fields;
        }
        fields.push_back(line.substr(pos, next - pos));
        pos = next + 1;
    }
}

double parse_double(const std::string& source, std::size_t line, const std::string& field) {
    errno = 0;
    char* end = nullptr;
    const double value = std::strtod(field.c_str(), &end);
    if (field.empty() || end != field.c_str() + field.size() || errno == ERANGE ||
        !std::isfinite(value)) {
        throw CsvError(source, line, "malformed number '" + field + "'");
    }
    return value;
}

std::int64_t parse_int64(const std::string& source, std::size_t line,
                         const std::string& field) {
    errno = 0;
    char* end = nullptr;
    const long long value = std::strtoll(field.c_str(), &end, 10);
    if (field.empty() || end != field.c_str() + field.size() || errno == ERANGE) {
        throw CsvError(source, line, "malformed integer '" + field + "'");
    }
    return static_cast<std::int64_t>(value);
}

std::string lower(std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return out;
}

// Uniform deviate in [-1, 1) from the top 53 bits of one engine draw; avoids
// std::uniform_real_distribution, whose output is not pinned down by the
// standard, so identical seeds give identical traces on every platform.
double uniform_pm1(std::mt19937_64& rng) {
    const double unit = static_cast<double>(rng() >> 11) * 0x1.0p-53;
    return 2.0 * unit - 1.0;
}

bool active(const AnomalyScenario& s, std::int64_t ts) {
    return ts >= s.start && ts < s.start + s.duration;
}

}  // namespace

std::optional<MetricField> metric_field_for(std::string_view variable_name) {
    const std::string name = lower(variable_name);
    if (name == "pkts" || name == "packets" || name == "packet_rate" ||
        name == "packets_per_sec" || name == "traffic") {
        return MetricField::packets_per_sec;
    }
    if (name == "bytes" || name == "bandwidth" || name == "byte_rate" ||
        name == "bytes_per_sec") {
        return MetricField::bytes_per_sec;
    }
    if (name == "util" || name == "utilization") {
        return MetricField::utilization;
    }
    return std::nullopt;
}

CsvError::CsvError(const std::string& source, std::size_t line, const std::string& message)
    : std::runtime_error(source + ":" + std::to_string(line) + ": " + message), line_(line) {}

CsvReader::CsvReader(const std::filesystem::path& path)
    : source_(path.string()), in_(path, std::ios::binary) {
    if (!in_) throw CsvError(source_, 0, "cannot open file");
    std::string header;
    if (!std::getline(in_, header)) throw CsvError(source_, 1, "missing header");
    if (!header.empty() && header.back() == '\r') header.pop_back();
    if (header != kCsvHeader) {
        throw CsvError(source_, 1, "unexpected header '" + header + "', expected '" +
                                       kCsvHeader + "'");
    }
}

std::optional<MetricRecord> CsvReader::next() {
    std::string line;
    while (std::getline(in_, line)) {
        ++line_no_;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;

        const std::vector<std::string> fields = split_csv_line(line);
        if (fields.size() != 4) {
            throw CsvError(source_, line_no_,
                           "expected 4 fields, got " + std::to_string(fields.size()));
        }
        MetricRecord rec;
        rec.timestamp = parse_int64(source_, line_no_, fields[0]);
        rec.packets_per_sec = parse_double(source_, line_no_, fields[1]);
        rec.bytes_per_sec = parse_double(source_, line_no_, fields[2]);
        rec.utilization = parse_double(source_, line_no_, fields[3]);

        if (rec.timestamp < 0) {
            throw CsvError(source_, line_no_, "timestamp must be non-negative");
        }
        if (last_timestamp_ && rec.timestamp <= *last_timestamp_) {
            throw CsvError(source_, line_no_, "timestamps not strictly increasing");
        }
        last_timestamp_ = rec.timestamp;
        if (rec.packets_per_sec < 0.0) {
            throw CsvError(source_, line_no_, "packets_per_sec must be non-negative");
        }
        if (rec.bytes_per_sec < 0.0) {
            throw CsvError(source_, line_no_, "bytes_per_sec must be non-negative");
        }
        if (rec.utilization < 0.0 || rec.utilization > 1.0) {
            throw CsvError(source_, line_no_, "utilization must be within [0, 1]");
        }
        return rec;
    }
    return std::nullopt;
}

std::vector<MetricRecord> read_csv(const std::filesystem::path& path) {
    CsvReader reader(path);
    std::vector<MetricRecord> records;
    while (auto rec = reader.next()) records.push_back(*rec);
    return records;
}

double MetricWindow::value(MetricField field) const {
    switch (field) {
        case MetricField::packets_per_sec: return packets_per_sec;
        case MetricField::bytes_per_sec: return bytes_per_sec;
        default: return utilization;
    }
}

Windowizer::Windowizer(std::int64_t window_seconds, BucketScheme scheme)
    : window_seconds_(window_seconds), scheme_(scheme) {
    if (window_seconds <= 0) {
        throw std::invalid_argument("window length must be positive");
    }
}

MetricWindow Windowizer::close_current() {
    MetricWindow w;
    w.start = current_start_;
    w.end = current_start_ + window_seconds_;
    w.record_count = count_;
    if (count_ > 0) {
        const double n = static_cast<double>(count_);
        w.packets_per_sec = sum_pkts_ / n;
        w.bytes_per_sec = sum_bytes_ / n;
        w.utilization = sum_util_ / n;
    }
    w.bucket = bucket_for_timestamp(w.start, scheme_);
    sum_pkts_ = sum_bytes_ = sum_util_ = 0.0;
    count_ = 0;
    return w;
}

std::vector<MetricWindow> Windowizer::push(const MetricRecord& record) {
    const std::int64_t ws = (record.timestamp / window_seconds_) * window_seconds_;
    std::vector<MetricWindow> closed;
    if (!open_) {
        open_ = true;
        current_start_ = ws;
    } else if (ws < current_start_) {
        throw std::invalid_argument("records not in increasing timestamp order");
    } else if (ws > current_start_) {
        closed.push_back(close_current());
        // Explicit gap markers for interior windows nothing fell into.
        for (std::int64_t s = current_start_ + window_seconds_; s < ws; s += window_seconds_) {
            MetricWindow gap;
            gap.start = s;
            gap.end = s + window_seconds_;
            gap.bucket = bucket_for_timestamp(s, scheme_);
            closed.push_back(gap);
        }
        current_start_ = ws;
    }
    sum_pkts_ += record.packets_per_sec;
    sum_bytes_ += record.bytes_per_sec;
    sum_util_ += record.utilization;
    ++count_;
    return closed;
}

std::optional<MetricWindow> Windowizer::flush() {
    if (!open_) return std::nullopt;
    open_ = false;
    return close_current();
}

std::vector<MetricWindow> windowize(const std::vector<MetricRecord>& records,
                                    std::int64_t window_seconds, BucketScheme scheme) {
    Windowizer wz(window_seconds, scheme);
    std::vector<MetricWindow> out;
    for (const MetricRecord& rec : records) {
        for (MetricWindow& w : wz.push(rec)) out.push_back(std::move(w));
    }
    if (auto last = wz.flush()) out.push_back(*last);
    return out;
}

const char* to_string(ScenarioKind kind) {
    switch (kind) {
        case ScenarioKind::outage: return "outage";
        case ScenarioKind::flash_crowd: return "flash_crowd";
        case ScenarioKind::abuse: return "abuse";
        default: return "config_change";
    }
}

std::optional<ScenarioKind> scenario_kind_from_string(std::string_view s) {
    if (s == "outage") return ScenarioKind::outage;
    if (s == "flash_crowd") return ScenarioKind::flash_crowd;
    if (s == "abuse") return ScenarioKind::abuse;
    if (s == "config_change") return ScenarioKind::config_change;
    return std::nullopt;
}

void generate_traffic(std::uint64_t seed, int days, std::int64_t start_ts,
                      const std::vector<AnomalyScenario>& scenarios,
                      const DiurnalProfile& profile,
                      const std::function<void(const MetricRecord&)>& sink) {
    if (days < 1) throw std::invalid_argument("generator needs at least one day");
    if (start_ts < 0) throw std::invalid_argument("start timestamp must be non-negative");
    if (profile.base_pps < 0.0 || profile.amp_pps < 0.0 || profile.noise_pps < 0.0 ||
        profile.weekend_factor < 0.0 || profile.bytes_per_packet <= 0.0 ||
        profile.link_capacity_bps <= 0.0 || profile.day_start_hour < 0.0 ||
        profile.day_end_hour > 24.0 || profile.day_start_hour >= profile.day_end_hour) {
        throw std::invalid_argument("invalid traffic profile");
    }
    const std::int64_t end_ts = start_ts + static_cast<std::int64_t>(days) * kSecondsPerDay;
    for (const AnomalyScenario& s : scenarios) {
        if (s.duration <= 0) throw std::invalid_argument("scenario duration must be positive");
        if (s.kind != ScenarioKind::outage && !(s.magnitude > 0.0)) {
            throw std::invalid_argument("scenario magnitude must be positive");
        }
        if (s.start < start_ts || s.start + s.duration > end_ts) {
            throw std::invalid_argument("scenario falls outside the generated stream");
        }
    }
    for (std::size_t i = 0; i < scenarios.size(); ++i) {
        for (std::size_t j = i + 1; j < scenarios.size(); ++j) {
            const AnomalyScenario& a = scenarios[i];
            const AnomalyScenario& b = scenarios[j];
            const bool overlap =
                a.start < b.start + b.duration && b.start < a.start + a.duration;
            if (overlap && a.kind != b.kind) {
                throw std::invalid_argument("scenarios of different kinds overlap");
            }
        }
    }

    std::mt19937_64 rng(seed);
    const double day_span = profile.day_end_hour - profile.day_start_hour;
    for (std::int64_t ts = start_ts; ts < end_ts; ++ts) {
        // Exactly two draws per second, unconditionally, to keep traces from
        // the same seed aligned regardless of the scenario list.
        const double noise_pkts = uniform_pm1(rng) * profile.noise_pps;
        const double noise_bytes = uniform_pm1(rng) * profile.noise_pps;

        const double hour = static_cast<double>(ts % kSecondsPerDay) / 3600.0;
        double curve = 0.0;
        if (hour > profile.day_start_hour && hour < profile.day_end_hour) {
            curve = std::sin(kPi * (hour - profile.day_start_hour) / day_span);
        }
        const bool weekend =
            bucket_for_timestamp(ts).day_class == DayClass::weekend;
        double rate = profile.base_pps +
                      profile.amp_pps * curve * (weekend ? profile.weekend_factor : 1.0);

        bool outage = false;
        double abuse_rate = -1.0;
        for (const AnomalyScenario& s : scenarios) {
            switch (s.kind) {
                case ScenarioKind::outage:
                    if (active(s, ts)) outage = true;
                    break;
                case ScenarioKind::flash_crowd:
                    if (active(s, ts)) {
                        const double decay = std::exp(-static_cast<double>(ts - s.start) /
                                                      static_cast<double>(s.duration));
                        rate *= 1.0 + (s.magnitude - 1.0) * decay;
                    }
                    break;
                case ScenarioKind::abuse:
                    if (active(s, ts)) {
                        abuse_rate = std::max(abuse_rate, s.magnitude * profile.base_pps);
                    }
                    break;
                case ScenarioKind::config_change:
                    if (ts >= s.start) rate *= s.magnitude;
                    break;
            }
        }
        if (abuse_rate >= 0.0) rate = abuse_rate;

        MetricRecord rec;
        rec.timestamp = ts;
        if (!outage) {
            rec.packets_per_sec = std::max(0.0, rate + noise_pkts);
            rec.bytes_per_sec =
                std::max(0.0, (rate + noise_bytes) * profile.bytes_per_packet);
            rec.utilization =
                std::clamp(rec.bytes_per_sec * 8.0 / profile.link_capacity_bps, 0.0, 1.0);
        }
        sink(rec);
    }
}

void write_csv(const std::filesystem::path& path, std::uint64_t seed, int days,
               std::int64_t start_ts, const std::vector<AnomalyScenario>& scenarios,
               const DiurnalProfile& profile) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw CsvError(path.string(), 0, "cannot write file");
    out << kCsvHeader << '\n';
    char buf[160];
    generate_traffic(seed, days, start_ts, scenarios, profile, [&](const MetricRecord& rec) {
        std::snprintf(buf, sizeof(buf), "%lld,%.3f,%.3f,%.6f\n",
                      static_cast<long long>(rec.timestamp), rec.packets_per_sec,
                      rec.bytes_per_sec, rec.utilization);
        out << buf;
    });
    out.flush();
    if (!out) throw CsvError(path.string(), 0, "write failed");
}

void write_scenarios(const std::filesystem::path& path,
                     const std::vector<AnomalyScenario>& scenarios) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw CsvError(path.string(), 0, "cannot write file");
    out << kScenarioHeader << '\n';
    char buf[128];
    for (const AnomalyScenario& s : scenarios) {
        std::snprintf(buf, sizeof(buf), "%s,%lld,%lld,%.6f\n", to_string(s.kind),
                      static_cast<long long>(s.start), static_cast<long long>(s.duration),
                      s.magnitude);
        out << buf;
    }
    out.flush();
    if (!out) throw CsvError(path.string(), 0, "write failed");
}

std::vector<AnomalyScenario> read_scenarios(const std::filesystem::path& path) {
    const std::string source = path.string();
    std::ifstream in(path, std::ios::binary);
    if (!in) throw CsvError(source, 0, "cannot open file");
    std::string line;
    if (!std::getline(in, line)) throw CsvError(source, 1, "missing header");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != kScenarioHeader) {
        throw CsvError(source, 1,
                       "unexpected header '" + line + "', expected '" + kScenarioHeader + "'");
    }
    std::vector<AnomalyScenario> scenarios;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const std::vector<std::string> fields = split_csv_line(line);
        if (fields.size() != 4) {
            throw CsvError(source, line_no,
                           "expected 4 fields, got " + std::to_string(fields.size()));
        }
        AnomalyScenario s;
        const std::optional<ScenarioKind> kind = scenario_kind_from_string(fields[0]);
        if (!kind) throw CsvError(source, line_no, "unknown scenario kind '" + fields[0] + "'");
        s.kind = *kind;
        s.start = parse_int64(source, line_no, fields[1]);
        s.duration = parse_int64(source, line_no, fields[2]);
        s.magnitude = parse_double(source, line_no, fields[3]);
        if (s.duration <= 0) throw CsvError(source, line_no, "duration must be positive");
        scenarios.push_back(s);
    }
    return scenarios;
}

}  // namespace fuzzmon
