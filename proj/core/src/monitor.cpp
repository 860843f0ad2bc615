#include "fuzzmon/monitor.hpp"

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <map>
#include <set>
#include <sstream>

#include "fuzzmon/rule_dsl.hpp"

namespace fuzzmon {
namespace {

std::string trim(const std::string& s) {
    const std::size_t first = s.find_first_not_of(" \t\r");
    if (first == std::string::npos) return "";
    const std::size_t last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
}

[[noreturn]] void bad_config(const std::string& source, std::size_t line,
                             const std::string& message) {
    throw std::invalid_argument("config " + source + ":" + std::to_string(line) + ": " +
                                message);
}

double config_real(const std::string& source, std::size_t line, const std::string& value) {
    errno = 0;
    char* end = nullptr;
    const double parsed = std::strtod(value.c_str(), &end);
    if (value.empty() || end != value.c_str() + value.size() || errno == ERANGE) {
        bad_config(source, line, "malformed number '" + value + "'");
    }
    return parsed;
}

std::int64_t config_int(const std::string& source, std::size_t line, const std::string& value) {
    errno = 0;
    char* end = nullptr;
    const long long parsed = std::strtoll(value.c_str(), &end, 10);
    if (value.empty() || end != value.c_str() + value.size() || errno == ERANGE) {
        bad_config(source, line, "malformed integer '" + value + "'");
    }
    return static_cast<std::int64_t>(parsed);
}

void replace_all(std::string& text, std::string_view placeholder, const std::string& value) {
    std::size_t pos = 0;
    while ((pos = text.find(placeholder, pos)) != std::string::npos) {
        text.replace(pos, placeholder.size(), value);
        pos += value.size();
    }
}

bool windows_overlap(std::int64_t a_start, std::int64_t a_end, std::int64_t b_start,
                     std::int64_t b_end) {
    return a_start < b_end && b_start < a_end;
}

}  // namespace

const char* to_string(Severity severity) {
    return severity == Severity::critical ? "critical" : "warning";
}

void check_monitor_config(const MonitorConfig& cfg) {
    if (cfg.kb_path.empty()) throw std::invalid_argument("no knowledge base path configured");
    if (cfg.input_path.empty()) throw std::invalid_argument("no input path configured");
    if (cfg.window_seconds <= 0) throw std::invalid_argument("window_len must be positive");
    check_learner_config(cfg.learner);
    if (!(cfg.warn_threshold > 0.0) || !(cfg.warn_threshold < cfg.crit_threshold) ||
        !(cfg.crit_threshold <= 1.0)) {
        throw std::invalid_argument("thresholds must satisfy 0 < warn < crit <= 1");
    }
    if (cfg.from_ts && cfg.to_ts && !(*cfg.from_ts < *cfg.to_ts)) {
        throw std::invalid_argument("'from' must be earlier than 'to'");
    }
}

MonitorConfig apply_config_file(MonitorConfig base, const std::filesystem::path& path) {
    const std::string source = path.string();
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("cannot open config file '" + source + "'");
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const std::string stripped = trim(line);
        if (stripped.empty() || stripped[0] == '#') continue;
        const std::size_t eq = stripped.find('=');
        if (eq == std::string::npos) bad_config(source, line_no, "expected key=value");
        const std::string key = trim(stripped.substr(0, eq));
        const std::string value = trim(stripped.substr(eq + 1));
        if (key.empty()) bad_config(source, line_no, "empty key");

        if (key == "kb") base.kb_path = value;
        else if (key == "kb_out") base.kb_out_path = value;
        else if (key == "rules") base.rules_path = value;
        else if (key == "input") base.input_path = value;
        else if (key == "alarm_log") base.alarm_log_path = value;
        else if (key == "run_log") base.run_log_path = value;
        else if (key == "scenarios") base.scenarios_path = value;
        else if (key == "window_len") base.window_seconds = config_int(source, line_no, value);
        else if (key == "bucket_scheme") {
            if (value == "hour_weekday") base.scheme = BucketScheme::hour_weekday;
            else if (value == "hour_only") base.scheme = BucketScheme::hour_only;
            else bad_config(source, line_no, "unknown bucket_scheme '" + value + "'");
        } else if (key == "alpha") base.learner.alpha = config_real(source, line_no, value);
        else if (key == "input_gain") {
            base.learner.input_gain = config_real(source, line_no, value);
        } else if (key == "min_samples") {
            const std::int64_t n = config_int(source, line_no, value);
            if (n < 0) bad_config(source, line_no, "min_samples must be non-negative");
            base.learner.min_samples = static_cast<std::size_t>(n);
        } else if (key == "epsilon_spread") {
            base.learner.epsilon_spread = config_real(source, line_no, value);
        } else if (key == "warn_threshold") {
            base.warn_threshold = config_real(source, line_no, value);
        } else if (key == "crit_threshold") {
            base.crit_threshold = config_real(source, line_no, value);
        } else if (key == "notifier") {
            base.notifier_command = value;
        } else if (key == "learning") {
            if (value == "on" || value == "true") base.learning = true;
            else if (value == "off" || value == "false") base.learning = false;
            else bad_config(source, line_no, "learning must be on/off/true/false");
        } else if (key == "from") {
            base.from_ts = config_int(source, line_no, value);
        } else if (key == "to") {
            base.to_ts = config_int(source, line_no, value);
        } else {
            bad_config(source, line_no, "unknown key '" + key + "'");
        }
    }
    return base;
}

std::optional<Severity> classify_score(double score, const MonitorConfig& cfg,
                                       bool cap_at_warning) {
    if (score >= cfg.crit_threshold) {
        return cap_at_warning ? Severity::warning : Severity::critical;
    }
    if (score >= cfg.warn_threshold) return Severity::warning;
    return std::nullopt;
}

std::string format_alarm_line(const Alarm& alarm) {
    std::string out = "{\"timestamp\":" + std::to_string(alarm.timestamp);
    out += ",\"score\":" + format_real(alarm.score);
    out += ",\"severity\":\"" + std::string(to_string(alarm.severity)) + "\"";
    out += ",\"kb_version\":" + std::to_string(alarm.kb_version);
    out += ",\"bucket\":\"" + to_string(alarm.assessment.bucket) + "\"";
    out += ",\"confidence\":\"";
    out += alarm.assessment.confidence == Confidence::learned ? "learned" : "unlearned";
    out += "\",\"rule_strengths\":[";
    for (std::size_t i = 0; i < alarm.assessment.rule_strengths.size(); ++i) {
        if (i > 0) out += ',';
        out += format_real(alarm.assessment.rule_strengths[i]);
    }
    out += "],\"message\":\"" + alarm.message + "\"}";
    return out;
}

std::string render_notifier_command(const std::string& command_template, const Alarm& alarm) {
    std::string cmd = command_template;
    replace_all(cmd, "{score}", format_real(alarm.score));
    replace_all(cmd, "{timestamp}", std::to_string(alarm.timestamp));
    replace_all(cmd, "{severity}", to_string(alarm.severity));
    return cmd;
}

std::string RunReport::to_text() const {
    std::ostringstream out;
    out << "windows=" << windows << " gaps=" << gap_windows << '\n';
    out << "alarms warning=" << warning_alarms << " critical=" << critical_alarms << '\n';
    out << "learner commits=" << learner_commits << " dropped=" << dropped_ticks << '\n';
    out << "clamped_windows=" << clamped_windows << '\n';
    out << "notifier_failures=" << notifier_failures << '\n';
    out << "kb_version=" << kb_version << '\n';
    for (const ScenarioOutcome& sc : scenarios) {
        const double rate =
            sc.windows == 0 ? 0.0
                            : static_cast<double>(sc.hits) / static_cast<double>(sc.windows);
        out << "scenario " << to_string(sc.scenario.kind) << " start=" << sc.scenario.start
            << " duration=" << sc.scenario.duration << " windows=" << sc.windows
            << " hits=" << sc.hits << " hit_rate=" << format_real(rate) << '\n';
    }
    if (!scenarios.empty() || clean_windows > 0) {
        const double rate = clean_windows == 0 ? 0.0
                                               : static_cast<double>(clean_criticals) /
                                                     static_cast<double>(clean_windows);
        out << "clean windows=" << clean_windows << " criticals=" << clean_criticals
            << " rate=" << format_real(rate) << '\n';
    }
    return out.str();
}

namespace {

class MonitorRun {
public:
    explicit MonitorRun(const MonitorConfig& cfg) : cfg_(cfg) {}

    RunReport run() {
        check_monitor_config(cfg_);
        setup_state();
        open_streams();

        CsvReader reader(cfg_.input_path);
        Windowizer windowizer(cfg_.window_seconds, cfg_.scheme);
        while (auto record = reader.next()) {
            if (cfg_.from_ts && record->timestamp < *cfg_.from_ts) continue;
            if (cfg_.to_ts && record->timestamp >= *cfg_.to_ts) break;
            for (const MetricWindow& w : windowizer.push(*record)) handle_window(w);
        }
        if (auto last = windowizer.flush()) handle_window(*last);
        flush_ticks();

        if (replay_.is_open()) {
            std::string leftover;
            if (std::getline(replay_, leftover)) {
                throw RunError("replay log has more windows than this run");
            }
        }
        if (cfg_.learning) {
            const std::filesystem::path out_path =
                cfg_.kb_out_path.empty() ? cfg_.kb_path : cfg_.kb_out_path;
            save_kb(*store_->snapshot(), out_path);
        }
        report_.kb_version = store_->version();
        return report_;
    }

private:
    void setup_state() {
        KbState initial = load_kb(cfg_.kb_path);
        if (!cfg_.rules_path.empty()) {
            std::ifstream in(cfg_.rules_path, std::ios::binary);
            if (!in) {
                throw RunError("cannot open rules file '" + cfg_.rules_path.string() + "'");
            }
            std::ostringstream buf;
            buf << in.rdbuf();
            RuleBase rules = parse_rules(buf.str()).rules;
            for (const Diagnostic& diag : validate_rules(rules, initial.variables)) {
                if (diag.rule_id >= 0) {
                    throw RunError(cfg_.rules_path.string() + ": rule " +
                                   std::to_string(diag.rule_id) + ": " + diag.message);
                }
            }
            initial.rules = std::move(rules);
        }
        if (cfg_.alarms && initial.rules.rules.empty()) {
            throw RunError("knowledge base has no rules to evaluate");
        }

        if (cfg_.alarms) {
            for (const Rule& rule : initial.rules.rules) {
                for (const Clause& clause : rule.antecedents) {
                    referenced_.insert(clause.variable);
                }
            }
        }
        // The learner tracks every declared variable; assessment reads the
        // ones the rules mention.  Either way each needs a CSV column.
        std::set<std::string> needed = referenced_;
        if (cfg_.learning) {
            for (const LinguisticVariable& var : initial.variables) needed.insert(var.name);
        }
        for (const std::string& name : needed) {
            const std::optional<MetricField> field = metric_field_for(name);
            if (!field) {
                throw RunError("variable '" + name +
                               "' has no metric binding (expected a packets/bytes/utilization "
                               "alias)");
            }
            bindings_.emplace(name, *field);
        }
        store_.emplace(std::move(initial));
    }

    void open_streams() {
        if (!cfg_.alarm_log_path.empty()) {
            alarm_log_.open(cfg_.alarm_log_path, std::ios::binary | std::ios::trunc);
            if (!alarm_log_) {
                throw RunError("cannot write alarm log '" + cfg_.alarm_log_path.string() + "'");
            }
        }
        if (!cfg_.run_log_path.empty()) {
            run_log_.open(cfg_.run_log_path, std::ios::binary | std::ios::trunc);
            if (!run_log_) {
                throw RunError("cannot write run log '" + cfg_.run_log_path.string() + "'");
            }
        }
        if (!cfg_.replay_log_path.empty()) {
            replay_.open(cfg_.replay_log_path, std::ios::binary);
            if (!replay_) {
                throw RunError("cannot open replay log '" + cfg_.replay_log_path.string() +
                               "'");
            }
        }
        if (!cfg_.scenarios_path.empty()) {
            for (const AnomalyScenario& sc : read_scenarios(cfg_.scenarios_path)) {
                report_.scenarios.push_back(ScenarioOutcome{sc, 0, 0});
            }
            labelled_ = true;
        }
    }

    void handle_window(const MetricWindow& w) {
        if (w.is_gap()) {
            ++report_.gap_windows;
            return;
        }
        ++report_.windows;
        if (cfg_.alarms) assess_one(w);
        if (cfg_.learning) accumulate(w);
    }

    void assess_one(const MetricWindow& w) {
        const KbSnapshot snap = store_->snapshot();

        std::map<std::string, double> values;
        for (const auto& [name, field] : bindings_) values[name] = w.value(field);

        bool clamped = false;
        bool warming_up = false;
        for (const std::string& name : referenced_) {
            const LinguisticVariable* var = snap->find_variable(name);
            const double v = values.at(name);
            if (v < var->domain_min || v > var->domain_max) clamped = true;
            if (cfg_.learning) {
                const BoundarySet* bs = snap->find_boundaries(name, w.bucket);
                if (bs != nullptr && bs->sample_count < cfg_.learner.min_samples) {
                    warming_up = true;
                }
            }
        }
        if (clamped) ++report_.clamped_windows;

        const Assessment assessment = assess_window(*snap, values, w.bucket, w.start);
        const bool cap =
            warming_up || assessment.confidence == Confidence::unlearned_bucket;
        const std::optional<Severity> severity = classify_score(assessment.score, cfg_, cap);
        const std::string score6 = format_real(assessment.score);

        bool in_scenario = false;
        if (labelled_) {
            for (ScenarioOutcome& sc : report_.scenarios) {
                if (windows_overlap(w.start, w.end, sc.scenario.start,
                                    sc.scenario.start + sc.scenario.duration)) {
                    ++sc.windows;
                    if (assessment.score >= cfg_.crit_threshold) ++sc.hits;
                    in_scenario = true;
                }
            }
            if (!in_scenario) ++report_.clean_windows;
        }

        if (severity) {
            Alarm alarm;
            alarm.timestamp = w.start;
            alarm.score = assessment.score;
            alarm.severity = *severity;
            alarm.kb_version = snap->version;
            alarm.assessment = assessment;
            alarm.message = "score " + score6 + " at or above " + to_string(*severity) +
                            " threshold";
            if (cap && classify_score(assessment.score, cfg_, false) == Severity::critical) {
                alarm.message += warming_up ? " (capped: bucket warming up)"
                                            : " (capped: unlearned bucket)";
            }
            if (*severity == Severity::critical) {
                ++report_.critical_alarms;
                if (labelled_ && !in_scenario) ++report_.clean_criticals;
            } else {
                ++report_.warning_alarms;
            }
            if (alarm_log_.is_open()) alarm_log_ << format_alarm_line(alarm) << '\n';
            if (*severity == Severity::critical && !cfg_.notifier_command.empty()) {
                const std::string cmd = render_notifier_command(cfg_.notifier_command, alarm);
                const int rc = std::system(cmd.c_str());
                if (rc != 0) {
                    ++report_.notifier_failures;
                    std::cerr << "notifier exited with status " << rc << ": " << cmd << '\n';
                }
            }
        }

        const std::string run_line =
            std::to_string(w.start) + " " + std::to_string(snap->version) + " " + score6;
        if (run_log_.is_open()) run_log_ << run_line << '\n';
        if (replay_.is_open()) {
            std::string expected;
            if (!std::getline(replay_, expected)) {
                throw RunError("replay log ended before window " + std::to_string(w.start));
            }
            if (!expected.empty() && expected.back() == '\r') expected.pop_back();
            if (expected != run_line) {
                throw RunError("replay mismatch at window " + std::to_string(w.start) +
                               ": expected '" + expected + "', got '" + run_line + "'");
            }
        }
    }

    void accumulate(const MetricWindow& w) {
        if (acc_bucket_ && *acc_bucket_ != w.bucket) flush_ticks();
        acc_bucket_ = w.bucket;
        for (const auto& [name, field] : bindings_) {
            accumulated_[name].push_back(w.value(field));
        }
    }

    void flush_ticks() {
        if (!acc_bucket_) return;
        const KbSnapshot snap = store_->snapshot();
        for (auto& [name, values] : accumulated_) {
            if (values.empty()) continue;
            SampleWindow sample;
            sample.variable = name;
            sample.bucket = *acc_bucket_;
            sample.values = std::move(values);
            sample.period_seconds = cfg_.window_seconds;
            values.clear();

            TickResult tick = learn_tick(*snap, sample, cfg_.learner);
            if (tick.status == TickStatus::fresh_partition ||
                tick.status == TickStatus::refined) {
                store_->commit_boundaries(name, *acc_bucket_, std::move(*tick.boundaries));
                ++report_.learner_commits;
            } else {
                ++report_.dropped_ticks;
            }
        }
        acc_bucket_.reset();
    }

    MonitorConfig cfg_;
    std::optional<KnowledgeBase> store_;
    std::set<std::string> referenced_;
    std::map<std::string, MetricField> bindings_;
    std::ofstream alarm_log_;
    std::ofstream run_log_;
    std::ifstream replay_;
    bool labelled_ = false;
    std::optional<TimeBucketKey> acc_bucket_;
    std::map<std::string, std::vector<double>> accumulated_;
    RunReport report_;
};

}  // namespace

RunReport run_monitor(const MonitorConfig& cfg) {
    MonitorRun run(cfg);
    return run.run();
}

}  // namespace fuzzmon
