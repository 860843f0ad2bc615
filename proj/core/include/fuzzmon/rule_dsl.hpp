#pragma once

#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "fuzzmon/variable.hpp"

namespace fuzzmon {

// One antecedent of a rule.  A fuzzy clause ("util IS extreme") is evaluated
// against the current window; a baseline clause ("util IS USUALLY low") is
// evaluated against what the knowledge base has learned for the time bucket.
enum class ClauseKind { fuzzy, baseline };

enum class ConditionTerm { normal, abnormal };

struct Clause {
    ClauseKind kind = ClauseKind::fuzzy;
    std::string variable;
    std::string term;

    bool operator==(const Clause&) const = default;
};

struct Rule {
    int id = 0;  // dense, assigned in file order starting at 0
    std::vector<Clause> antecedents;
    ConditionTerm consequent = ConditionTerm::normal;

    bool operator==(const Rule&) const = default;
};

struct RuleBase {
    std::vector<Rule> rules;

    bool operator==(const RuleBase&) const = default;
};

// Non-fatal findings from parsing or validation.  rule_id / clause_index are
// -1 when the finding is not tied to a specific rule or clause.
struct Diagnostic {
    int rule_id = -1;
    int clause_index = -1;
    std::string message;
};

// Syntax errors carry the 1-based line and column of the offending token.
class ParseError : public std::runtime_error {
public:
    ParseError(int line, int column, const std::string& message);

    int line() const { return line_; }
    int column() const { return column_; }

private:
    int line_ = 0;
    int column_ = 0;
};

struct ParseResult {
    RuleBase rules;
    std::vector<Diagnostic> warnings;  // e.g. textually duplicate rules
};

// Grammar, one rule per line ('#' starts a comment, blank lines ignored):
//   rule   := IF clause (AND clause)* THEN condition IS (normal|abnormal)
//   clause := identifier IS [USUALLY] identifier
// Keywords are case-insensitive; identifiers are [A-Za-z_][A-Za-z0-9_]*.
// Throws ParseError on the first syntax or lexical error.
ParseResult parse_rules(std::string_view text);

// Checks every clause against the declared variables: unknown variable names,
// unknown terms, and an empty rule base are reported (never thrown).
std::vector<Diagnostic> validate_rules(const RuleBase& rules,
                                       const std::vector<LinguisticVariable>& variables);

// Canonical text form.  parse_rules(pretty_print(rb)).rules == rb for any
// valid rule base; keywords are upper-cased and spacing normalised.
std::string pretty_print(const Rule& rule);
std::string pretty_print(const RuleBase& rules);

}  // namespace fuzzmon
