#include "fuzzmon/rule_dsl.hpp"

#include <algorithm>
#include <cctype>
#include <set>
#include <sstream>

namespace fuzzmon {
namespace {

struct Token {
    std::string text;  // original spelling
    int line = 0;
    int column = 0;  // 1-based, points at the first character
};

bool is_ident_start(char c) {
    return std::isalpha(static_cast<unsigned char>(c)) || c == '_';
}

bool is_ident_char(char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_';
}

std::string to_upper(std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return static_cast<char>(std::toupper(c)); });
    return out;
}

bool is_keyword(const Token& tok, std::string_view keyword) {
    return to_upper(tok.text) == keyword;
}

bool is_reserved(const Token& tok) {
    const std::string up = to_upper(tok.text);
    return up == "IF" || up == "AND" || up == "THEN" || up == "IS" || up == "USUALLY";
}

// Splits one logical line into identifier tokens.  Anything that is neither
// whitespace nor an identifier is a lexical error.
std::vector<Token> tokenize_line(std::string_view line, int line_no) {
    std::vector<Token> tokens;
    std::size_t i = 0;
    while (i < line.size()) {
        const char c = line[i];
        if (c == ' ' || c == '\t' || c == '\r') {
            ++i;
            continue;
        }
        if (!is_ident_start(c)) {
            std::ostringstream msg;
            msg << "unexpected character '" << c << "'";
            throw ParseError(line_no, static_cast<int>(i) + 1, msg.str());
        }
        const std::size_t start = i;
        while (i < line.size() && is_ident_char(line[i])) ++i;
        tokens.push_back(Token{std::string(line.substr(start, i - start)), line_no,
                               static_cast<int>(start) + 1});
    }
    return tokens;
}

class LineParser {
public:
    LineParser(std::vector<Token> tokens, int line_no)
        : tokens_(std::move(tokens)), line_no_(line_no) {}

    Rule parse_rule(int rule_id) {
        Rule rule;
        rule.id = rule_id;
        expect_keyword("IF");
        rule.antecedents.push_back(parse_clause());
        while (!at_end() && is_keyword(peek(), "AND")) {
            advance();
            rule.antecedents.push_back(parse_clause());
        }
        expect_keyword("THEN");
        const Token out = expect_identifier("output variable");
        if (to_upper(out.text) != "CONDITION") {
            throw ParseError(out.line, out.column,
                             "expected output variable 'condition', got '" + out.text + "'");
        }
        expect_keyword("IS");
        const Token term = expect_identifier("output term");
        const std::string up = to_upper(term.text);
        if (up == "NORMAL") {
            rule.consequent = ConditionTerm::normal;
        } else if (up == "ABNORMAL") {
            rule.consequent = ConditionTerm::abnormal;
        } else {
            throw ParseError(term.line, term.column,
                             "expected output term 'normal' or 'abnormal', got '" + term.text +
                                 "'");
        }
        if (!at_end()) {
            const Token& extra = peek();
            throw ParseError(extra.line, extra.column,
                             "unexpected trailing token '" + extra.text + "'");
        }
        return rule;
    }

private:
    Clause parse_clause() {
        Clause clause;
        const Token var = expect_identifier("variable name");
        clause.variable = var.text;
        expect_keyword("IS");
        if (!at_end() && is_keyword(peek(), "USUALLY")) {
            advance();
            clause.kind = ClauseKind::baseline;
        }
        const Token term = expect_identifier("term name");
        clause.term = term.text;
        return clause;
    }

    bool at_end() const { return pos_ >= tokens_.size(); }

    const Token& peek() const { return tokens_[pos_]; }

    Token advance() { return tokens_[pos_++]; }

    void expect_keyword(std::string_view keyword) {
        if (at_end()) {
            throw ParseError(line_no_, end_column(), "expected " + std::string(keyword) +
                                                         ", got end of line");
        }
        const Token tok = advance();
        if (!is_keyword(tok, keyword)) {
            throw ParseError(tok.line, tok.column,
                             "expected " + std::string(keyword) + ", got '" + tok.text + "'");
        }
    }

    Token expect_identifier(std::string_view what) {
        if (at_end()) {
            throw ParseError(line_no_, end_column(),
                             "expected " + std::string(what) + ", got end of line");
        }
        const Token tok = advance();
        // Reserved words in value position are almost always a structural
        // mistake; reject them so errors point at the right token.
        if (is_reserved(tok)) {
            throw ParseError(tok.line, tok.column,
                             "expected " + std::string(what) + ", got keyword '" + tok.text +
                                 "'");
        }
        return tok;
    }

    int end_column() const {
        if (tokens_.empty()) return 1;
        const Token& last = tokens_.back();
        return last.column + static_cast<int>(last.text.size());
    }

    std::vector<Token> tokens_;
    int line_no_ = 0;
    std::size_t pos_ = 0;
};

}  // namespace

ParseError::ParseError(int line, int column, const std::string& message)
    : std::runtime_error("line " + std::to_string(line) + ", column " + std::to_string(column) +
                         ": " + message),
      line_(line),
      column_(column) {}

ParseResult parse_rules(std::string_view text) {
    ParseResult result;
    std::set<std::string> seen;
    int line_no = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        const std::size_t eol = text.find('\n', pos);
        std::string_view line = (eol == std::string_view::npos)
                                    ? text.substr(pos)
                                    : text.substr(pos, eol - pos);
        ++line_no;
        const std::size_t hash = line.find('#');
        if (hash != std::string_view::npos) line = line.substr(0, hash);

        std::vector<Token> tokens = tokenize_line(line, line_no);
        if (!tokens.empty()) {
            const int rule_id = static_cast<int>(result.rules.rules.size());
            LineParser parser(std::move(tokens), line_no);
            Rule rule = parser.parse_rule(rule_id);
            const std::string canonical = pretty_print(rule);
            if (!seen.insert(canonical).second) {
                result.warnings.push_back(
                    Diagnostic{rule_id, -1, "duplicate of an earlier rule"});
            }
            result.rules.rules.push_back(std::move(rule));
        }

        if (eol == std::string_view::npos) break;
        pos = eol + 1;
    }
    return result;
}

std::vector<Diagnostic> validate_rules(const RuleBase& rules,
                                       const std::vector<LinguisticVariable>& variables) {
    std::vector<Diagnostic> diagnostics;
    if (rules.rules.empty()) {
        diagnostics.push_back(Diagnostic{-1, -1, "rule base is empty"});
        return diagnostics;
    }
    for (const Rule& rule : rules.rules) {
        for (std::size_t ci = 0; ci < rule.antecedents.size(); ++ci) {
            const Clause& clause = rule.antecedents[ci];
            const auto var = std::find_if(variables.begin(), variables.end(),
                                          [&](const LinguisticVariable& v) {
                                              return v.name == clause.variable;
                                          });
            if (var == variables.end()) {
                diagnostics.push_back(Diagnostic{rule.id, static_cast<int>(ci),
                                                 "unknown variable '" + clause.variable + "'"});
                continue;
            }
            if (var->term_index(clause.term) < 0) {
                diagnostics.push_back(Diagnostic{rule.id, static_cast<int>(ci),
                                                 "unknown term '" + clause.term +
                                                     "' for variable '" + clause.variable + "'"});
            }
        }
    }
    return diagnostics;
}

std::string pretty_print(const Rule& rule) {
    std::ostringstream out;
    out << "IF ";
    for (std::size_t i = 0; i < rule.antecedents.size(); ++i) {
        if (i > 0) out << " AND ";
        const Clause& clause = rule.antecedents[i];
        out << clause.variable << " IS ";
        if (clause.kind == ClauseKind::baseline) out << "USUALLY ";
        out << clause.term;
    }
    out << " THEN condition IS "
        << (rule.consequent == ConditionTerm::normal ? "normal" : "abnormal");
    return out.str();
}

std::string pretty_print(const RuleBase& rules) {
    std::string out;
    for (const Rule& rule : rules.rules) {
        out += pretty_print(rule);
        out += '\n';
    }
    return out;
}

}  // namespace fuzzmon
