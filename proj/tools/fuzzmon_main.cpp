// fuzzmon: self-learning fuzzy-logic network monitor.
//
// Exit codes: 0 clean run, 1 operational failure (unreadable/malformed
// inputs, detection of a replay mismatch, rule problems), 2 usage or
// configuration error.

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "fuzzmon/fuzzy_engine.hpp"
#include "fuzzmon/ingestion.hpp"
#include "fuzzmon/knowledge_base.hpp"
#include "fuzzmon/monitor.hpp"
#include "fuzzmon/partition_learning.hpp"
#include "fuzzmon/rule_dsl.hpp"

namespace {

using namespace fuzzmon;

constexpr int kExitOk = 0;
constexpr int kExitFailure = 1;
constexpr int kExitUsage = 2;

// Variables available when a rules file is checked without a knowledge base.
std::vector<LinguisticVariable> default_variables() {
    return {
        LinguisticVariable{"bandwidth", 0.0, 1e9, {"low", "normal", "high"}},
        LinguisticVariable{"util", 0.0, 1.0, {"low", "normal", "extreme"}},
    };
}

std::string read_text_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw RunError("cannot open file '" + path.string() + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

AnomalyScenario parse_scenario_flag(const std::string& text) {
    // kind:start:duration:magnitude, e.g. flash_crowd:1736121600:3600:10
    std::vector<std::string> parts;
    std::size_t pos = 0;
    while (true) {
        const std::size_t next = text.find(':', pos);
        if (next == std::string::npos) {
            parts.push_back(text.substr(pos));
            break;
        }
        parts.push_back(text.substr(pos, next - pos));
        pos = next + 1;
    }
    if (parts.size() != 4) {
        throw std::invalid_argument("scenario '" + text +
                                    "' is not kind:start:duration:magnitude");
    }
    AnomalyScenario sc;
    const auto kind = scenario_kind_from_string(parts[0]);
    if (!kind) throw std::invalid_argument("unknown scenario kind '" + parts[0] + "'");
    sc.kind = *kind;
    try {
        sc.start = std::stoll(parts[1]);
        sc.duration = std::stoll(parts[2]);
        sc.magnitude = std::stod(parts[3]);
    } catch (const std::exception&) {
        throw std::invalid_argument("scenario '" + text + "' has malformed numbers");
    }
    return sc;
}

LinguisticVariable parse_variable_flag(const std::string& text) {
    // "name min max term1,term2,..."
    std::istringstream in(text);
    std::string name, terms;
    double lo = 0.0, hi = 0.0;
    if (!(in >> name >> lo >> hi >> terms)) {
        throw std::invalid_argument("variable '" + text +
                                    "' is not '<name> <min> <max> <terms>'");
    }
    LinguisticVariable var;
    var.name = name;
    var.domain_min = lo;
    var.domain_max = hi;
    std::size_t pos = 0;
    while (true) {
        const std::size_t next = terms.find(',', pos);
        if (next == std::string::npos) {
            var.terms.push_back(terms.substr(pos));
            break;
        }
        var.terms.push_back(terms.substr(pos, next - pos));
        pos = next + 1;
    }
    return var;
}

// Shared monitor/learn/eval options; values the user did not pass on the
// command line keep whatever the config file (or default) set.
struct RunFlags {
    std::string config, kb, kb_out, rules, input, alarm_log, run_log, replay, scenarios;
    std::string bucket_scheme, notifier;
    std::int64_t window_len = 0;
    double alpha = 0.0, input_gain = 0.0, epsilon_spread = 0.0;
    std::int64_t min_samples = -1;
    double warn = 0.0, crit = 0.0;
    std::int64_t from = 0, to = 0;
    bool no_learning = false;
};

void add_run_options(CLI::App* cmd, RunFlags& f, bool learning_toggle) {
    cmd->add_option("--config", f.config, "key=value config file applied first");
    cmd->add_option("--kb", f.kb, "knowledge base file");
    cmd->add_option("--kb-out", f.kb_out, "where to save the refined knowledge base");
    cmd->add_option("--rules", f.rules, "rules file overriding the KB rule base");
    cmd->add_option("--input", f.input, "metrics CSV to process");
    cmd->add_option("--alarm-log", f.alarm_log, "alarm log output (JSON lines)");
    cmd->add_option("--run-log", f.run_log, "per-window run log output");
    cmd->add_option("--scenarios", f.scenarios, "scenario sidecar for detection metrics");
    cmd->add_option("--window-len", f.window_len, "window length in seconds");
    cmd->add_option("--bucket-scheme", f.bucket_scheme, "hour_weekday or hour_only");
    cmd->add_option("--alpha", f.alpha, "learning rate in (0, 1]");
    cmd->add_option("--input-gain", f.input_gain, "update rule input gain");
    cmd->add_option("--min-samples", f.min_samples, "samples required per learning tick");
    cmd->add_option("--epsilon-spread", f.epsilon_spread,
                    "relative spread used to repair degenerate partitions");
    cmd->add_option("--warn-threshold", f.warn, "warning score threshold");
    cmd->add_option("--crit-threshold", f.crit, "critical score threshold");
    cmd->add_option("--notifier", f.notifier,
                    "command run on critical alarms ({score} {timestamp} {severity})");
    cmd->add_option("--from", f.from, "ignore records before this timestamp");
    cmd->add_option("--to", f.to, "ignore records at or after this timestamp");
    if (learning_toggle) {
        cmd->add_flag("--no-learning", f.no_learning, "assess only; never refine the KB");
        cmd->add_option("--verify-replay", f.replay,
                        "verify this run against a previous run log");
    }
}

bool passed(const CLI::App* cmd, const std::string& name) {
    const CLI::Option* opt = cmd->get_option_no_throw(name);
    return opt != nullptr && opt->count() > 0;
}

MonitorConfig build_config(const CLI::App* cmd, const RunFlags& f, MonitorConfig cfg) {
    if (passed(cmd, "--config")) cfg = apply_config_file(std::move(cfg), f.config);
    if (passed(cmd, "--kb")) cfg.kb_path = f.kb;
    if (passed(cmd, "--kb-out")) cfg.kb_out_path = f.kb_out;
    if (passed(cmd, "--rules")) cfg.rules_path = f.rules;
    if (passed(cmd, "--input")) cfg.input_path = f.input;
    if (passed(cmd, "--alarm-log")) cfg.alarm_log_path = f.alarm_log;
    if (passed(cmd, "--run-log")) cfg.run_log_path = f.run_log;
    if (passed(cmd, "--scenarios")) cfg.scenarios_path = f.scenarios;
    if (passed(cmd, "--window-len")) cfg.window_seconds = f.window_len;
    if (passed(cmd, "--bucket-scheme")) {
        if (f.bucket_scheme == "hour_weekday") cfg.scheme = BucketScheme::hour_weekday;
        else if (f.bucket_scheme == "hour_only") cfg.scheme = BucketScheme::hour_only;
        else throw std::invalid_argument("unknown bucket scheme '" + f.bucket_scheme + "'");
    }
    if (passed(cmd, "--alpha")) cfg.learner.alpha = f.alpha;
    if (passed(cmd, "--input-gain")) cfg.learner.input_gain = f.input_gain;
    if (passed(cmd, "--min-samples")) {
        if (f.min_samples < 0) throw std::invalid_argument("min-samples must be non-negative");
        cfg.learner.min_samples = static_cast<std::size_t>(f.min_samples);
    }
    if (passed(cmd, "--epsilon-spread")) cfg.learner.epsilon_spread = f.epsilon_spread;
    if (passed(cmd, "--warn-threshold")) cfg.warn_threshold = f.warn;
    if (passed(cmd, "--crit-threshold")) cfg.crit_threshold = f.crit;
    if (passed(cmd, "--notifier")) cfg.notifier_command = f.notifier;
    if (passed(cmd, "--from")) cfg.from_ts = f.from;
    if (passed(cmd, "--to")) cfg.to_ts = f.to;
    if (passed(cmd, "--no-learning")) cfg.learning = !f.no_learning;
    if (passed(cmd, "--verify-replay")) cfg.replay_log_path = f.replay;
    return cfg;
}

int cmd_gen(const CLI::App* cmd, const std::string& out, const std::string& scenarios_out,
            std::uint64_t seed, int days, std::int64_t start_ts,
            const std::vector<std::string>& scenario_flags, const DiurnalProfile& profile) {
    (void)cmd;
    std::vector<AnomalyScenario> scenarios;
    scenarios.reserve(scenario_flags.size());
    for (const std::string& flag : scenario_flags) {
        scenarios.push_back(parse_scenario_flag(flag));
    }
    write_csv(out, seed, days, start_ts, scenarios, profile);
    if (!scenarios_out.empty()) write_scenarios(scenarios_out, scenarios);
    std::cout << "wrote " << days << " day(s) of traffic to " << out << '\n';
    if (!scenarios_out.empty()) {
        std::cout << "wrote " << scenarios.size() << " scenario label(s) to " << scenarios_out
                  << '\n';
    }
    return kExitOk;
}

int cmd_rules_check(const std::string& rules_path, const std::string& kb_path) {
    const std::string text = read_text_file(rules_path);
    const ParseResult parsed = parse_rules(text);

    std::vector<LinguisticVariable> variables;
    if (!kb_path.empty()) {
        variables = load_kb(kb_path).variables;
    } else {
        variables = default_variables();
    }

    for (const Diagnostic& warning : parsed.warnings) {
        std::cout << "warning: rule " << warning.rule_id << ": " << warning.message << '\n';
    }
    const std::vector<Diagnostic> problems = validate_rules(parsed.rules, variables);
    bool fatal = false;
    for (const Diagnostic& diag : problems) {
        if (diag.rule_id >= 0) {
            std::cout << "error: rule " << diag.rule_id << " clause " << diag.clause_index
                      << ": " << diag.message << '\n';
            fatal = true;
        } else {
            std::cout << "error: " << diag.message << '\n';
            fatal = true;
        }
    }
    if (fatal) return kExitFailure;
    std::cout << parsed.rules.rules.size() << " rules OK\n";
    return kExitOk;
}

int cmd_kb_show(const std::string& kb_path) {
    const KbState state = load_kb(kb_path);
    std::cout << "knowledge base: " << kb_path << '\n';
    std::cout << "version: " << state.version << '\n';
    std::cout << "variables (" << state.variables.size() << "):\n";
    for (const LinguisticVariable& var : state.variables) {
        std::cout << "  " << var.name << " [" << format_real(var.domain_min) << ", "
                  << format_real(var.domain_max) << "] terms:";
        for (const std::string& term : var.terms) std::cout << ' ' << term;
        std::cout << '\n';
    }
    std::cout << "rules (" << state.rules.rules.size() << "):\n";
    for (const Rule& rule : state.rules.rules) {
        std::cout << "  " << rule.id << ": " << pretty_print(rule) << '\n';
    }
    std::cout << "membership (" << state.membership.size() << " bucket entries):\n";
    for (const auto& [key, bs] : state.membership) {
        std::cout << "  " << key.variable << ' ' << to_string(key.bucket) << ' ';
        for (std::size_t i = 0; i < bs.boundaries.size(); ++i) {
            if (i > 0) std::cout << ';';
            std::cout << format_real(bs.boundaries[i]);
        }
        std::cout << " n=" << bs.sample_count << '\n';
    }
    return kExitOk;
}

int cmd_kb_init(const std::string& kb_path, const std::vector<std::string>& var_flags,
                const std::string& rules_path) {
    KbState state;
    for (const std::string& flag : var_flags) {
        state.variables.push_back(parse_variable_flag(flag));
    }
    std::sort(state.variables.begin(), state.variables.end(),
              [](const LinguisticVariable& a, const LinguisticVariable& b) {
                  return a.name < b.name;
              });
    if (!rules_path.empty()) {
        state.rules = parse_rules(read_text_file(rules_path)).rules;
    }
    check_kb(state);
    for (const Diagnostic& diag : validate_rules(state.rules, state.variables)) {
        if (diag.rule_id >= 0) {
            throw RunError("rule " + std::to_string(diag.rule_id) + ": " + diag.message);
        }
    }
    save_kb(state, kb_path);
    std::cout << "initialised " << kb_path << " with " << state.variables.size()
              << " variable(s) and " << state.rules.rules.size() << " rule(s)\n";
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"self-learning fuzzy-logic network monitor"};
    app.require_subcommand(1);

    // --- gen -----------------------------------------------------------
    auto* gen = app.add_subcommand("gen", "generate synthetic traffic CSV");
    std::string gen_out, gen_scenarios_out;
    std::uint64_t gen_seed = 42;
    int gen_days = 1;
    std::int64_t gen_start = 0;
    std::vector<std::string> gen_scenarios;
    DiurnalProfile profile;
    double link_mbps = 100.0;
    gen->add_option("--out", gen_out, "output CSV path")->required();
    gen->add_option("--scenarios-out", gen_scenarios_out, "scenario sidecar output path");
    gen->add_option("--seed", gen_seed, "RNG seed");
    gen->add_option("--days", gen_days, "number of days to generate");
    gen->add_option("--start-ts", gen_start, "first timestamp (Unix epoch seconds)");
    gen->add_option("--scenario", gen_scenarios,
                    "inject anomaly kind:start:duration:magnitude (repeatable)");
    gen->add_option("--base-pps", profile.base_pps, "base packet rate");
    gen->add_option("--amp-pps", profile.amp_pps, "diurnal amplitude");
    gen->add_option("--noise-pps", profile.noise_pps, "uniform noise amplitude");
    gen->add_option("--weekend-factor", profile.weekend_factor, "weekend damping factor");
    gen->add_option("--bytes-per-packet", profile.bytes_per_packet, "mean packet size");
    gen->add_option("--link-mbps", link_mbps, "link capacity in Mbit/s");
    gen->add_option("--day-start", profile.day_start_hour, "diurnal bump start hour");
    gen->add_option("--day-end", profile.day_end_hour, "diurnal bump end hour");

    // --- learn / monitor / eval ----------------------------------------
    auto* learn = app.add_subcommand("learn", "refine baselines from a metrics CSV");
    RunFlags learn_flags;
    add_run_options(learn, learn_flags, /*learning_toggle=*/false);

    auto* monitor = app.add_subcommand("monitor", "assess a metrics CSV, learning as it goes");
    RunFlags monitor_flags;
    add_run_options(monitor, monitor_flags, /*learning_toggle=*/true);

    auto* eval = app.add_subcommand("eval", "score a labelled CSV and report detection rates");
    RunFlags eval_flags;
    add_run_options(eval, eval_flags, /*learning_toggle=*/false);

    // --- rules ----------------------------------------------------------
    auto* rules = app.add_subcommand("rules", "rule base utilities");
    rules->require_subcommand(1);
    auto* rules_check = rules->add_subcommand("check", "parse and validate a rules file");
    std::string rules_path, rules_kb;
    rules_check->add_option("--rules", rules_path, "rules file to check")->required();
    rules_check->add_option("--kb", rules_kb, "knowledge base declaring the variables");

    // --- kb ---------------------------------------------------------------
    auto* kb = app.add_subcommand("kb", "knowledge base utilities");
    kb->require_subcommand(1);
    auto* kb_show = kb->add_subcommand("show", "print a knowledge base");
    std::string show_path;
    kb_show->add_option("--kb", show_path, "knowledge base file")->required();
    auto* kb_init = kb->add_subcommand("init", "create an empty knowledge base");
    std::string init_path, init_rules;
    std::vector<std::string> init_vars;
    kb_init->add_option("--kb", init_path, "output knowledge base file")->required();
    kb_init->add_option("--var", init_vars, "declare '<name> <min> <max> <terms>' (repeatable)")
        ->required();
    kb_init->add_option("--rules", init_rules, "rules file to embed");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);  // --help / --version
        std::cerr << "error: " << e.what() << '\n';
        return kExitUsage;
    }

    try {
        if (gen->parsed()) {
            profile.link_capacity_bps = link_mbps * 1e6;
            return cmd_gen(gen, gen_out, gen_scenarios_out, gen_seed, gen_days, gen_start,
                           gen_scenarios, profile);
        }
        if (learn->parsed()) {
            MonitorConfig cfg;
            cfg.learning = true;
            cfg.alarms = false;
            cfg = build_config(learn, learn_flags, std::move(cfg));
            std::cout << run_monitor(cfg).to_text();
            return kExitOk;
        }
        if (monitor->parsed()) {
            MonitorConfig cfg;
            cfg = build_config(monitor, monitor_flags, std::move(cfg));
            std::cout << run_monitor(cfg).to_text();
            return kExitOk;
        }
        if (eval->parsed()) {
            MonitorConfig cfg;
            cfg.alarms = true;
            cfg = build_config(eval, eval_flags, std::move(cfg));
            cfg.learning = false;  // evaluation never contaminates the KB
            if (cfg.scenarios_path.empty()) {
                throw std::invalid_argument("eval needs --scenarios labels");
            }
            std::cout << run_monitor(cfg).to_text();
            return kExitOk;
        }
        if (rules_check->parsed()) {
            return cmd_rules_check(rules_path, rules_kb);
        }
        if (kb_show->parsed()) {
            return cmd_kb_show(show_path);
        }
        if (kb_init->parsed()) {
            return cmd_kb_init(init_path, init_vars, init_rules);
        }
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitFailure;
    }
    return kExitUsage;
}
