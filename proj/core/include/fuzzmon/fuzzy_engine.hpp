#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "fuzzmon/knowledge_base.hpp"
#include "fuzzmon/rule_dsl.hpp"
#include "fuzzmon/time_bucket.hpp"
#include "fuzzmon/variable.hpp"

namespace fuzzmon {

// Baseline class reported for a bucket nobody has learned yet.
inline constexpr const char* kUnlearnedBaseline = "unlearned";

// Piecewise-linear membership functions for one variable, derived from its
// term boundaries.  Adjacent terms ramp linearly across a transition zone of
// half-width h_i centred on boundary b_i, so they cross at exactly 0.5 and
// the k terms sum to 1 everywhere (a Ruspini partition).  h_i is the largest
// half-width that keeps transition zones disjoint and inside the domain:
//   h_i = min(smallest adjacent boundary gap / 2, b_i - dmin, dmax - b_i).
struct MembershipFunctionSet {
    std::string variable;
    std::vector<std::string> terms;
    double domain_min = 0.0;
    double domain_max = 1.0;
    std::vector<double> boundaries;
    std::vector<double> half_widths;

    // Degree of term i at x (x must already lie inside the domain).
    double membership(std::size_t term_index, double x) const;
};

// Throws std::invalid_argument on arity mismatch or invalid boundaries.
MembershipFunctionSet shapes_from_boundaries(const LinguisticVariable& var,
                                             const BoundarySet& bs);

struct FuzzifiedValue {
    std::string variable;
    std::vector<std::pair<std::string, double>> memberships;  // in term order
    bool clamped = false;  // input fell outside the domain and was clamped

    // 0.0 for unknown terms and for the all-zero placeholder used when a
    // bucket has no learned boundaries.
    double degree(std::string_view term) const;
};

// Clamps x into the domain and evaluates every term.
FuzzifiedValue fuzzify(const MembershipFunctionSet& shapes, double x);

// What the knowledge base considers usual for (variable, bucket): the
// bucket's historical centre classified against reference shapes built from
// the element-wise mean of that variable's learned boundaries across all
// buckets.  Ties pick the lower term; an unlearned bucket reports
// kUnlearnedBaseline.
std::string baseline_class(const KbState& snapshot, std::string_view variable,
                           TimeBucketKey bucket);

// Midpoint of the middle region described by a boundary set (for an odd
// boundary count, the middle boundary itself).
double bucket_centre(const BoundarySet& bs);

// Element-wise mean of all learned boundary sets for the variable, or
// nullopt when no bucket has been learned.
std::optional<std::vector<double>> aggregate_boundaries(const KbState& snapshot,
                                                        std::string_view variable);

enum class ConditionLabel { normal, abnormal };
enum class Confidence { learned, unlearned_bucket };

struct Assessment {
    double score = 0.0;                 // centroid in [0, 1]
    ConditionLabel label = ConditionLabel::normal;
    std::vector<double> rule_strengths;  // firing degree per rule, indexed by id
    Confidence confidence = Confidence::learned;
    TimeBucketKey bucket;
    std::int64_t timestamp = 0;
};

// Firing degree per rule: min over antecedent degrees.  Fuzzy clauses read
// from `inputs`; baseline clauses compare `baselines` to the clause term
// (equal -> 1, different or unlearned -> 0).  Throws std::invalid_argument
// if a clause references a variable absent from the maps.
std::vector<double> evaluate_rules(const RuleBase& rules,
                                   const std::map<std::string, FuzzifiedValue>& inputs,
                                   const std::map<std::string, std::string>& baselines);

// Mamdani aggregation over the condition domain [0, 1]: each rule clips its
// consequent shape at its firing degree, shapes combine by max, and the
// score is the centroid of the combined shape (trapezoidal integration,
// step 0.001).  No firing at all scores 0.  Throws on an empty rule base.
Assessment defuzzify(const RuleBase& rules, const std::vector<double>& firings);

// Full pipeline for one window: fuzzify every referenced variable with the
// bucket's boundaries, resolve baseline classes, evaluate rules, defuzzify.
// Variables whose bucket is unlearned contribute 0 to every clause and mark
// the assessment unlearned_bucket.  Throws std::invalid_argument if a
// referenced variable is missing from `values` or undeclared.
Assessment assess_window(const KbState& snapshot, const std::map<std::string, double>& values,
                         TimeBucketKey bucket, std::int64_t timestamp);

}  // namespace fuzzmon
