#include "fuzzmon/fuzzy_engine.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <stdexcept>

namespace fuzzmon {
namespace {

// Linear ramp from 0 to 1 across [b-h, b+h]; a step at b when h is 0.
double ramp_up(double x, double b, double h) {
    if (h > 0.0) {
        return std::clamp((x - (b - h)) / (2.0 * h), 0.0, 1.0);
    }
    return x >= b ? 1.0 : 0.0;
}

constexpr int kCentroidSteps = 1000;  // trapezoidal integration over [0, 1]

double output_normal(double x) { return std::clamp(1.0 - 2.0 * x, 0.0, 1.0); }
double output_abnormal(double x) { return std::clamp(2.0 * x - 1.0, 0.0, 1.0); }

}  // namespace

double MembershipFunctionSet::membership(std::size_t term_index, double x) const {
    const std::size_t n = boundaries.size();
    const double up =
        term_index == 0 ? 1.0 : ramp_up(x, boundaries[term_index - 1], half_widths[term_index - 1]);
    const double down =
        term_index == n ? 1.0 : 1.0 - ramp_up(x, boundaries[term_index], half_widths[term_index]);
    return std::min(up, down);
}

MembershipFunctionSet shapes_from_boundaries(const LinguisticVariable& var,
                                             const BoundarySet& bs) {
    check_boundaries(bs, var);
    MembershipFunctionSet shapes;
    shapes.variable = var.name;
    shapes.terms = var.terms;
    shapes.domain_min = var.domain_min;
    shapes.domain_max = var.domain_max;
    shapes.boundaries = bs.boundaries;
    shapes.half_widths.reserve(bs.boundaries.size());
    for (std::size_t i = 0; i < bs.boundaries.size(); ++i) {
        const double b = bs.boundaries[i];
        double h = std::min(b - var.domain_min, var.domain_max - b);
        if (i > 0) h = std::min(h, 0.5 * (b - bs.boundaries[i - 1]));
        if (i + 1 < bs.boundaries.size()) h = std::min(h, 0.5 * (bs.boundaries[i + 1] - b));
        shapes.half_widths.push_back(h);
    }
    return shapes;
}

double FuzzifiedValue::degree(std::string_view term) const {
    for (const auto& [name, value] : memberships) {
        if (name == term) return value;
    }
    return 0.0;
}

FuzzifiedValue fuzzify(const MembershipFunctionSet& shapes, double x) {
    FuzzifiedValue fv;
    fv.variable = shapes.variable;
    const double clamped = std::clamp(x, shapes.domain_min, shapes.domain_max);
    fv.clamped = clamped != x;
    fv.memberships.reserve(shapes.terms.size());
    for (std::size_t i = 0; i < shapes.terms.size(); ++i) {
        fv.memberships.emplace_back(shapes.terms[i], shapes.membership(i, clamped));
    }
    return fv;
}

double bucket_centre(const BoundarySet& bs) {
    const std::size_t n = bs.boundaries.size();
    if (n == 0) throw std::invalid_argument("bucket centre of empty boundary set");
    if (n % 2 == 1) return bs.boundaries[n / 2];
    return 0.5 * (bs.boundaries[n / 2 - 1] + bs.boundaries[n / 2]);
}

std::optional<std::vector<double>> aggregate_boundaries(const KbState& snapshot,
                                                        std::string_view variable) {
    std::vector<double> sum;
    std::size_t buckets = 0;
    for (const auto& [key, bs] : snapshot.membership) {
        if (key.variable != variable) continue;
        if (sum.empty()) sum.assign(bs.boundaries.size(), 0.0);
        for (std::size_t i = 0; i < bs.boundaries.size(); ++i) sum[i] += bs.boundaries[i];
        ++buckets;
    }
    if (buckets == 0) return std::nullopt;
    for (double& v : sum) v /= static_cast<double>(buckets);
    return sum;
}

std::string baseline_class(const KbState& snapshot, std::string_view variable,
                           TimeBucketKey bucket) {
    const LinguisticVariable* var = snapshot.find_variable(variable);
    if (var == nullptr) {
        throw std::invalid_argument("baseline class for unknown variable '" +
                                    std::string(variable) + "'");
    }
    const BoundarySet* bs = snapshot.find_boundaries(variable, bucket);
    if (bs == nullptr) return kUnlearnedBaseline;

    // Classify this bucket's historical centre against reference shapes from
    // the variable's cross-bucket average boundaries, so "usually low" means
    // low relative to the variable's overall learned behaviour.
    BoundarySet reference;
    reference.boundaries = *aggregate_boundaries(snapshot, variable);
    MembershipFunctionSet shapes;
    try {
        shapes = shapes_from_boundaries(*var, reference);
    } catch (const std::invalid_argument&) {
        // Rounding can collapse averaged boundaries onto each other; fall
        // back to the bucket's own shapes rather than fail the assessment.
        shapes = shapes_from_boundaries(*var, *bs);
    }
    const FuzzifiedValue fv = fuzzify(shapes, bucket_centre(*bs));

    std::size_t best = 0;
    for (std::size_t i = 1; i < fv.memberships.size(); ++i) {
        if (fv.memberships[i].second > fv.memberships[best].second) best = i;
    }
    return fv.memberships[best].first;
}

std::vector<double> evaluate_rules(const RuleBase& rules,
                                   const std::map<std::string, FuzzifiedValue>& inputs,
                                   const std::map<std::string, std::string>& baselines) {
    std::vector<double> firings;
    firings.reserve(rules.rules.size());
    for (const Rule& rule : rules.rules) {
        double firing = 1.0;
        for (const Clause& clause : rule.antecedents) {
            double degree = 0.0;
            if (clause.kind == ClauseKind::fuzzy) {
                const auto it = inputs.find(clause.variable);
                if (it == inputs.end()) {
                    throw std::invalid_argument("rule " + std::to_string(rule.id) +
                                                " references unbound variable '" +
                                                clause.variable + "'");
                }
                degree = it->second.degree(clause.term);
            } else {
                const auto it = baselines.find(clause.variable);
                if (it == baselines.end()) {
                    throw std::invalid_argument("rule " + std::to_string(rule.id) +
                                                " references unbound variable '" +
                                                clause.variable + "'");
                }
                degree = (it->second == clause.term) ? 1.0 : 0.0;
            }
            firing = std::min(firing, degree);
        }
        firings.push_back(firing);
    }
    return firings;
}

Assessment defuzzify(const RuleBase& rules, const std::vector<double>& firings) {
    if (rules.rules.empty()) {
        throw std::invalid_argument("defuzzify with an empty rule base");
    }
    if (firings.size() != rules.rules.size()) {
        throw std::invalid_argument("firing vector does not match rule count");
    }

    double f_normal = 0.0;
    double f_abnormal = 0.0;
    for (const Rule& rule : rules.rules) {
        const double f = firings[static_cast<std::size_t>(rule.id)];
        if (rule.consequent == ConditionTerm::normal) {
            f_normal = std::max(f_normal, f);
        } else {
            f_abnormal = std::max(f_abnormal, f);
        }
    }

    Assessment out;
    out.rule_strengths = firings;
    if (f_normal > 0.0 || f_abnormal > 0.0) {
        double num = 0.0;
        double den = 0.0;
        for (int j = 0; j <= kCentroidSteps; ++j) {
            const double x = static_cast<double>(j) / kCentroidSteps;
            const double mu = std::max(std::min(f_normal, output_normal(x)),
                                       std::min(f_abnormal, output_abnormal(x)));
            const double w = (j == 0 || j == kCentroidSteps) ? 0.5 : 1.0;
            num += w * x * mu;
            den += w * mu;
        }
        out.score = num / den;
    }
    out.label = out.score >= 0.5 ? ConditionLabel::abnormal : ConditionLabel::normal;
    return out;
}

Assessment assess_window(const KbState& snapshot, const std::map<std::string, double>& values,
                         TimeBucketKey bucket, std::int64_t timestamp) {
    std::set<std::string> referenced;
    for (const Rule& rule : snapshot.rules.rules) {
        for (const Clause& clause : rule.antecedents) referenced.insert(clause.variable);
    }

    std::map<std::string, FuzzifiedValue> inputs;
    std::map<std::string, std::string> baselines;
    Confidence confidence = Confidence::learned;
    for (const std::string& name : referenced) {
        const LinguisticVariable* var = snapshot.find_variable(name);
        if (var == nullptr) {
            throw std::invalid_argument("rule references undeclared variable '" + name + "'");
        }
        const auto value_it = values.find(name);
        if (value_it == values.end()) {
            throw std::invalid_argument("no input value bound for variable '" + name + "'");
        }
        const BoundarySet* bs = snapshot.find_boundaries(name, bucket);
        if (bs == nullptr) {
            // Unlearned bucket: every clause over this variable reads 0.
            inputs.emplace(name, FuzzifiedValue{name, {}, false});
            confidence = Confidence::unlearned_bucket;
        } else {
            inputs.emplace(name, fuzzify(shapes_from_boundaries(*var, *bs), value_it->second));
        }
        baselines.emplace(name, baseline_class(snapshot, name, bucket));
    }

    Assessment out = defuzzify(snapshot.rules, evaluate_rules(snapshot.rules, inputs, baselines));
    out.confidence = confidence;
    out.bucket = bucket;
    out.timestamp = timestamp;
    return out;
}

}  // namespace fuzzmon
