#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <stdexcept>
#include <string>
#include <string_view>

#include "fuzzmon/rule_dsl.hpp"
#include "fuzzmon/time_bucket.hpp"
#include "fuzzmon/variable.hpp"

namespace fuzzmon {

class KbError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct MembershipKey {
    std::string variable;
    TimeBucketKey bucket;

    auto operator<=>(const MembershipKey&) const = default;
};

// One immutable knowledge-base state: variable declarations, the rule base,
// and per-(variable, time bucket) learned term boundaries.  version counts
// committed changes since the state was created empty or loaded.
struct KbState {
    std::vector<LinguisticVariable> variables;
    RuleBase rules;
    std::map<MembershipKey, BoundarySet> membership;
    std::uint64_t version = 0;

    const LinguisticVariable* find_variable(std::string_view name) const;
    const BoundarySet* find_boundaries(std::string_view variable, TimeBucketKey bucket) const;

    bool operator==(const KbState&) const = default;
};

using KbSnapshot = std::shared_ptr<const KbState>;

// Single-writer / multi-reader store.  Readers take an immutable snapshot
// that stays valid (and unchanged) for as long as they hold it; each commit
// installs a fresh copy with version incremented by exactly one, so a reader
// is never exposed to a half-applied update.
class KnowledgeBase {
public:
    KnowledgeBase();  // empty state, version 0
    explicit KnowledgeBase(KbState initial);

    KbSnapshot snapshot() const;
    std::uint64_t version() const;

    // Validates the boundary set against the declared variable and commits it
    // for (variable, bucket).  Throws KbError and leaves the store untouched
    // if the variable is unknown or the boundaries violate an invariant.
    void commit_boundaries(const std::string& variable, TimeBucketKey bucket, BoundarySet bs);

    // Replaces the rule base after validating it against the declared
    // variables; throws KbError listing the first offending clause.
    void commit_rules(RuleBase rules);

private:
    mutable std::mutex mutex_;
    KbSnapshot state_;
};

// Full structural validation of a state (variables, rules, membership);
// throws KbError on the first violation.
void check_kb(const KbState& state);

// ---- Persistence -----------------------------------------------------------
//
// Text format, strict and canonical (saving any state twice produces
// byte-identical files):
//
//   fuzzmon-kb v1
//   version <N>
//   [variables]
//   <name> <min> <max> <term1,term2,...>          (sorted by name)
//   [rules]
//   <one rule per line, canonical DSL form>       (in id order)
//   [membership]
//   <name> <hour> <weekday|weekend> <b1;b2;...> n=<count>
//
// Reals are printed with six decimal places; membership lines are sorted by
// (variable, hour, day class); all three section headers are always present.

std::string serialize_kb(const KbState& state);

// Parses serialize_kb output.  source_name is used in error messages.
// Throws KbError with a file line number on any structural problem.
KbState parse_kb(std::string_view text, const std::string& source_name);

KbState load_kb(const std::filesystem::path& path);
void save_kb(const KbState& state, const std::filesystem::path& path);

// Canonical rendering of a real number in KB files and logs (six decimals).
std::string format_real(double value);

}  // namespace fuzzmon
