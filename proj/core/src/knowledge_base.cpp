#include "fuzzmon/knowledge_base.hpp"

#include <algorithm>
#include <cctype>
#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

namespace fuzzmon {
namespace {

bool is_identifier(std::string_view s) {
    if (s.empty()) return false;
    if (!std::isalpha(static_cast<unsigned char>(s[0])) && s[0] != '_') return false;
    return std::all_of(s.begin(), s.end(), [](unsigned char c) {
        return std::isalnum(c) || c == '_';
    });
}

[[noreturn]] void fail_at(const std::string& source, std::size_t line, const std::string& msg) {
    throw KbError(source + ":" + std::to_string(line) + ": " + msg);
}

double parse_real_field(const std::string& source, std::size_t line, const std::string& field) {
    errno = 0;
    char* end = nullptr;
    const double value = std::strtod(field.c_str(), &end);
    if (end != field.c_str() + field.size() || field.empty() || errno == ERANGE ||
        !std::isfinite(value)) {
        fail_at(source, line, "malformed real number '" + field + "'");
    }
    return value;
}

std::uint64_t parse_count_field(const std::string& source, std::size_t line,
                                const std::string& field) {
    if (field.empty() ||
        !std::all_of(field.begin(), field.end(),
                     [](unsigned char c) { return std::isdigit(c); })) {
        fail_at(source, line, "malformed count '" + field + "'");
    }
    errno = 0;
    char* end = nullptr;
    const unsigned long long value = std::strtoull(field.c_str(), &end, 10);
    if (errno == ERANGE) fail_at(source, line, "count out of range '" + field + "'");
    return static_cast<std::uint64_t>(value);
}

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::size_t pos = 0;
    while (true) {
        const std::size_t next = s.find(sep, pos);
        if (next == std::string::npos) {
            out.push_back(s.substr(pos));
            return out;
        }
        out.push_back(s.substr(pos, next - pos));
        pos = next + 1;
    }
}

std::vector<std::string> split_fields(const std::string& line) {
    std::vector<std::string> fields;
    std::istringstream in(line);
    std::string field;
    while (in >> field) fields.push_back(field);
    return fields;
}

}  // namespace

void check_variable(const LinguisticVariable& var) {
    if (!is_identifier(var.name)) {
        throw std::invalid_argument("variable name '" + var.name + "' is not an identifier");
    }
    if (!std::isfinite(var.domain_min) || !std::isfinite(var.domain_max) ||
        !(var.domain_min < var.domain_max)) {
        throw std::invalid_argument("variable '" + var.name +
                                    "': domain_min must be less than domain_max");
    }
    if (var.terms.size() < 2) {
        throw std::invalid_argument("variable '" + var.name + "': needs at least two terms");
    }
    for (const std::string& term : var.terms) {
        if (!is_identifier(term)) {
            throw std::invalid_argument("variable '" + var.name + "': term '" + term +
                                        "' is not an identifier");
        }
        if (std::count(var.terms.begin(), var.terms.end(), term) != 1) {
            throw std::invalid_argument("variable '" + var.name + "': duplicate term '" + term +
                                        "'");
        }
    }
}

void check_boundaries(const BoundarySet& bs, const LinguisticVariable& var) {
    const std::size_t expected = var.terms.size() - 1;
    if (bs.boundaries.size() != expected) {
        throw std::invalid_argument("variable '" + var.name + "': expected " +
                                    std::to_string(expected) + " boundaries, got " +
                                    std::to_string(bs.boundaries.size()));
    }
    for (std::size_t i = 0; i < bs.boundaries.size(); ++i) {
        const double b = bs.boundaries[i];
        if (!std::isfinite(b)) {
            throw std::invalid_argument("variable '" + var.name + "': boundary not finite");
        }
        if (b < var.domain_min || b > var.domain_max) {
            throw std::invalid_argument("variable '" + var.name + "': boundary out of domain");
        }
        if (i > 0 && !(bs.boundaries[i - 1] < b)) {
            throw std::invalid_argument("variable '" + var.name +
                                        "': boundaries not increasing");
        }
    }
}

const LinguisticVariable* KbState::find_variable(std::string_view name) const {
    for (const LinguisticVariable& var : variables) {
        if (var.name == name) return &var;
    }
    return nullptr;
}

const BoundarySet* KbState::find_boundaries(std::string_view variable,
                                            TimeBucketKey bucket) const {
    const auto it = membership.find(MembershipKey{std::string(variable), bucket});
    return it == membership.end() ? nullptr : &it->second;
}

void check_kb(const KbState& state) {
    try {
        for (std::size_t i = 0; i < state.variables.size(); ++i) {
            check_variable(state.variables[i]);
            if (i > 0 && !(state.variables[i - 1].name < state.variables[i].name)) {
                throw std::invalid_argument("variables not sorted by unique name");
            }
        }
        for (std::size_t i = 0; i < state.rules.rules.size(); ++i) {
            if (state.rules.rules[i].id != static_cast<int>(i)) {
                throw std::invalid_argument("rule ids not dense");
            }
            if (state.rules.rules[i].antecedents.empty()) {
                throw std::invalid_argument("rule " + std::to_string(i) + " has no antecedents");
            }
        }
        for (const auto& [key, bs] : state.membership) {
            if (key.bucket.hour_of_day < 0 || key.bucket.hour_of_day >= kHoursPerDay) {
                throw std::invalid_argument("membership hour out of range");
            }
            const LinguisticVariable* var = state.find_variable(key.variable);
            if (var == nullptr) {
                throw std::invalid_argument("membership references unknown variable '" +
                                            key.variable + "'");
            }
            check_boundaries(bs, *var);
        }
    } catch (const std::invalid_argument& e) {
        throw KbError(e.what());
    }
    for (const Diagnostic& diag : validate_rules(state.rules, state.variables)) {
        if (diag.rule_id >= 0) {
            throw KbError("rule " + std::to_string(diag.rule_id) + ": " + diag.message);
        }
    }
}

KnowledgeBase::KnowledgeBase() : state_(std::make_shared<const KbState>()) {}

KnowledgeBase::KnowledgeBase(KbState initial) {
    check_kb(initial);
    state_ = std::make_shared<const KbState>(std::move(initial));
}

KbSnapshot KnowledgeBase::snapshot() const {
    std::lock_guard<std::mutex> lock(mutex_);
    return state_;
}

std::uint64_t KnowledgeBase::version() const {
    std::lock_guard<std::mutex> lock(mutex_);
    return state_->version;
}

void KnowledgeBase::commit_boundaries(const std::string& variable, TimeBucketKey bucket,
                                      BoundarySet bs) {
    std::lock_guard<std::mutex> lock(mutex_);
    const LinguisticVariable* var = state_->find_variable(variable);
    if (var == nullptr) {
        throw KbError("commit for unknown variable '" + variable + "'");
    }
    if (bucket.hour_of_day < 0 || bucket.hour_of_day >= kHoursPerDay) {
        throw KbError("commit for out-of-range hour " + std::to_string(bucket.hour_of_day));
    }
    try {
        check_boundaries(bs, *var);
    } catch (const std::invalid_argument& e) {
        throw KbError(e.what());
    }
    auto next = std::make_shared<KbState>(*state_);
    next->membership[MembershipKey{variable, bucket}] = std::move(bs);
    next->version = state_->version + 1;
    state_ = std::move(next);
}

void KnowledgeBase::commit_rules(RuleBase rules) {
    std::lock_guard<std::mutex> lock(mutex_);
    for (const Diagnostic& diag : validate_rules(rules, state_->variables)) {
        if (diag.rule_id >= 0) {
            throw KbError("rule " + std::to_string(diag.rule_id) + ": " + diag.message);
        }
    }
    auto next = std::make_shared<KbState>(*state_);
    next->rules = std::move(rules);
    next->version = state_->version + 1;
    state_ = std::move(next);
}

std::string format_real(double value) {
    if (value == 0.0) value = 0.0;  // normalise -0 so output is canonical
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.6f", value);
    return buf;
}

std::string serialize_kb(const KbState& state) {
    std::string out;
    out += "fuzzmon-kb v1\n";
    out += "version " + std::to_string(state.version) + "\n";

    out += "[variables]\n";
    std::vector<const LinguisticVariable*> vars;
    vars.reserve(state.variables.size());
    for (const LinguisticVariable& var : state.variables) vars.push_back(&var);
    std::sort(vars.begin(), vars.end(),
              [](const LinguisticVariable* a, const LinguisticVariable* b) {
                  return a->name < b->name;
              });
    for (const LinguisticVariable* var : vars) {
        out += var->name + " " + format_real(var->domain_min) + " " +
               format_real(var->domain_max) + " ";
        for (std::size_t i = 0; i < var->terms.size(); ++i) {
            if (i > 0) out += ',';
            out += var->terms[i];
        }
        out += '\n';
    }

    out += "[rules]\n";
    out += pretty_print(state.rules);

    out += "[membership]\n";
    for (const auto& [key, bs] : state.membership) {
        char hour[8];
        std::snprintf(hour, sizeof(hour), "%02d", key.bucket.hour_of_day);
        out += key.variable + " " + hour + " " + to_string(key.bucket.day_class) + " ";
        for (std::size_t i = 0; i < bs.boundaries.size(); ++i) {
            if (i > 0) out += ';';
            out += format_real(bs.boundaries[i]);
        }
        out += " n=" + std::to_string(bs.sample_count) + "\n";
    }
    return out;
}

KbState parse_kb(std::string_view text, const std::string& source_name) {
    std::vector<std::string> lines;
    {
        std::size_t pos = 0;
        while (pos <= text.size()) {
            const std::size_t eol = text.find('\n', pos);
            if (eol == std::string_view::npos) {
                lines.emplace_back(text.substr(pos));
                break;
            }
            lines.emplace_back(text.substr(pos, eol - pos));
            pos = eol + 1;
        }
        // A trailing newline leaves one empty phantom line; drop it.
        if (!lines.empty() && lines.back().empty()) lines.pop_back();
    }

    std::size_t ln = 0;  // 0-based index into lines; reported 1-based
    const auto current_line = [&] { return ln + 1; };

    if (ln >= lines.size() || lines[ln] != "fuzzmon-kb v1") {
        fail_at(source_name, 1, "unsupported format, expected header 'fuzzmon-kb v1'");
    }
    ++ln;

    KbState state;
    if (ln >= lines.size() || lines[ln].rfind("version ", 0) != 0) {
        fail_at(source_name, current_line(), "expected 'version <N>' line");
    }
    state.version = parse_count_field(source_name, current_line(), lines[ln].substr(8));
    ++ln;

    if (ln >= lines.size() || lines[ln] != "[variables]") {
        fail_at(source_name, current_line(), "expected '[variables]' section");
    }
    ++ln;
    while (ln < lines.size() && lines[ln] != "[rules]") {
        const std::vector<std::string> fields = split_fields(lines[ln]);
        if (fields.empty()) fail_at(source_name, current_line(), "blank line in [variables]");
        if (fields.size() != 4) {
            fail_at(source_name, current_line(),
                    "expected '<name> <min> <max> <terms>', got " +
                        std::to_string(fields.size()) + " fields");
        }
        LinguisticVariable var;
        var.name = fields[0];
        var.domain_min = parse_real_field(source_name, current_line(), fields[1]);
        var.domain_max = parse_real_field(source_name, current_line(), fields[2]);
        var.terms = split(fields[3], ',');
        try {
            check_variable(var);
        } catch (const std::invalid_argument& e) {
            fail_at(source_name, current_line(), e.what());
        }
        if (state.find_variable(var.name) != nullptr) {
            fail_at(source_name, current_line(), "duplicate variable '" + var.name + "'");
        }
        state.variables.push_back(std::move(var));
        ++ln;
    }
    std::sort(state.variables.begin(), state.variables.end(),
              [](const LinguisticVariable& a, const LinguisticVariable& b) {
                  return a.name < b.name;
              });

    if (ln >= lines.size()) fail_at(source_name, current_line(), "missing '[rules]' section");
    ++ln;  // consume [rules]
    const std::size_t rules_first_line = current_line();
    std::string rules_text;
    while (ln < lines.size() && lines[ln] != "[membership]") {
        rules_text += lines[ln];
        rules_text += '\n';
        ++ln;
    }
    try {
        state.rules = parse_rules(rules_text).rules;
    } catch (const ParseError& e) {
        fail_at(source_name, rules_first_line + static_cast<std::size_t>(e.line()) - 1,
                "column " + std::to_string(e.column()) + ": " + e.what());
    }

    if (ln >= lines.size()) {
        fail_at(source_name, current_line(), "missing '[membership]' section");
    }
    ++ln;  // consume [membership]
    while (ln < lines.size()) {
        const std::vector<std::string> fields = split_fields(lines[ln]);
        if (fields.empty()) fail_at(source_name, current_line(), "blank line in [membership]");
        if (fields.size() != 5) {
            fail_at(source_name, current_line(),
                    "expected '<name> <hour> <day> <boundaries> n=<count>', got " +
                        std::to_string(fields.size()) + " fields");
        }
        MembershipKey key;
        key.variable = fields[0];
        const LinguisticVariable* var = state.find_variable(key.variable);
        if (var == nullptr) {
            fail_at(source_name, current_line(), "unknown variable '" + key.variable + "'");
        }
        const std::uint64_t hour = parse_count_field(source_name, current_line(), fields[1]);
        if (hour >= static_cast<std::uint64_t>(kHoursPerDay)) {
            fail_at(source_name, current_line(), "hour out of range '" + fields[1] + "'");
        }
        key.bucket.hour_of_day = static_cast<int>(hour);
        const std::optional<DayClass> dc = day_class_from_string(fields[2]);
        if (!dc) fail_at(source_name, current_line(), "unknown day class '" + fields[2] + "'");
        key.bucket.day_class = *dc;

        BoundarySet bs;
        for (const std::string& piece : split(fields[3], ';')) {
            bs.boundaries.push_back(parse_real_field(source_name, current_line(), piece));
        }
        if (fields[4].rfind("n=", 0) != 0) {
            fail_at(source_name, current_line(), "expected 'n=<count>', got '" + fields[4] + "'");
        }
        bs.sample_count = parse_count_field(source_name, current_line(), fields[4].substr(2));
        try {
            check_boundaries(bs, *var);
        } catch (const std::invalid_argument& e) {
            fail_at(source_name, current_line(), e.what());
        }
        if (state.membership.count(key) != 0) {
            fail_at(source_name, current_line(), "duplicate membership entry for '" +
                                                     key.variable + " " +
                                                     to_string(key.bucket) + "'");
        }
        state.membership.emplace(std::move(key), std::move(bs));
        ++ln;
    }

    for (const Diagnostic& diag : validate_rules(state.rules, state.variables)) {
        if (diag.rule_id >= 0) {
            throw KbError(source_name + ": rule " + std::to_string(diag.rule_id) + ": " +
                          diag.message);
        }
    }
    return state;
}

KbState load_kb(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw KbError("cannot open knowledge base file '" + path.string() + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_kb(buf.str(), path.string());
}

void save_kb(const KbState& state, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw KbError("cannot write knowledge base file '" + path.string() + "'");
    out << serialize_kb(state);
    out.flush();
    if (!out) throw KbError("write failed for knowledge base file '" + path.string() + "'");
}

}  // namespace fuzzmon
