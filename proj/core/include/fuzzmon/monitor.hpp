#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "fuzzmon/fuzzy_engine.hpp"
#include "fuzzmon/ingestion.hpp"
#include "fuzzmon/knowledge_base.hpp"
#include "fuzzmon/partition_learning.hpp"
#include "fuzzmon/time_bucket.hpp"

namespace fuzzmon {

// Operational failure while running (unreadable input, replay mismatch, ...).
// Distinct from std::invalid_argument, which callers map to a usage error.
class RunError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

enum class Severity { warning, critical };

const char* to_string(Severity severity);

struct Alarm {
    std::int64_t timestamp = 0;
    double score = 0.0;
    Severity severity = Severity::warning;
    std::uint64_t kb_version = 0;
    Assessment assessment;
    std::string message;
};

struct MonitorConfig {
    std::filesystem::path kb_path;
    std::filesystem::path kb_out_path;      // defaults to kb_path when learning
    std::filesystem::path rules_path;       // optional: replaces the KB rule base
    std::filesystem::path input_path;
    std::filesystem::path alarm_log_path;   // optional
    std::filesystem::path run_log_path;     // optional: one line per assessed window
    std::filesystem::path replay_log_path;  // optional: verify against a prior run log
    std::filesystem::path scenarios_path;   // optional: labels for detection metrics

    std::int64_t window_seconds = 60;
    BucketScheme scheme = BucketScheme::hour_weekday;
    LearnerConfig learner;
    double warn_threshold = 0.5;
    double crit_threshold = 0.75;
    std::string notifier_command;  // {score} {timestamp} {severity} placeholders
    bool learning = true;
    bool alarms = true;
    std::optional<std::int64_t> from_ts;  // inclusive record filter
    std::optional<std::int64_t> to_ts;    // exclusive record filter
};

// Throws std::invalid_argument naming the offending field (thresholds must
// satisfy 0 < warn < crit <= 1, paths for KB and input must be set, ...).
void check_monitor_config(const MonitorConfig& cfg);

// key=value file ('#' comments, blank lines ignored), applied over `base`.
// Keys: kb kb_out rules input alarm_log run_log scenarios window_len
// bucket_scheme alpha input_gain min_samples epsilon_spread warn_threshold
// crit_threshold notifier learning from to.  Unknown keys throw.
MonitorConfig apply_config_file(MonitorConfig base, const std::filesystem::path& path);

// Severity for a score, after the caps that keep immature knowledge from
// paging anyone: an assessment in an unlearned bucket, or made while a
// referenced bucket is still warming up, never exceeds warning.
std::optional<Severity> classify_score(double score, const MonitorConfig& cfg,
                                       bool cap_at_warning);

// Canonical alarm-log line (JSON object, fixed key order, 6-decimal reals).
std::string format_alarm_line(const Alarm& alarm);

// Replaces {score} (6 decimals), {timestamp} and {severity} in the template.
std::string render_notifier_command(const std::string& command_template, const Alarm& alarm);

struct ScenarioOutcome {
    AnomalyScenario scenario;
    std::size_t windows = 0;  // assessed windows overlapping the scenario
    std::size_t hits = 0;     // of those, windows scoring >= crit_threshold
};

struct RunReport {
    std::size_t windows = 0;       // assessed (non-gap) windows
    std::size_t gap_windows = 0;
    std::size_t warning_alarms = 0;
    std::size_t critical_alarms = 0;
    std::size_t learner_commits = 0;
    std::size_t dropped_ticks = 0;
    std::size_t clamped_windows = 0;
    std::size_t notifier_failures = 0;
    std::uint64_t kb_version = 0;
    std::vector<ScenarioOutcome> scenarios;  // only with labelled input
    std::size_t clean_windows = 0;
    std::size_t clean_criticals = 0;

    std::string to_text() const;
};

// Drives one pass over the input: records are filtered to [from, to), folded
// into tumbling windows, each non-gap window is assessed against the current
// knowledge-base snapshot and then offered to the learner, which commits one
// boundary update per (variable, bucket run).  Interleaving is synchronous
// and deterministic; the KnowledgeBase store itself is safe for concurrent
// readers.  On success the updated KB is saved to kb_out_path (when learning)
// and the report returned.  Throws RunError on operational failures.
RunReport run_monitor(const MonitorConfig& cfg);

}  // namespace fuzzmon
