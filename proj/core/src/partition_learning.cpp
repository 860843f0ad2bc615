#include "fuzzmon/partition_learning.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace fuzzmon {
namespace {

double mean_of(const std::vector<double>& values) {
    return std::accumulate(values.begin(), values.end(), 0.0) /
           static_cast<double>(values.size());
}

double spread_epsilon(double centre, const LearnerConfig& cfg) {
    return cfg.epsilon_spread * std::max(1.0, std::fabs(centre));
}

// Repairs ties/near-ties left by degenerate splits: any adjacent pair closer
// than epsilon is pushed apart symmetrically around its midpoint.  Bounded
// number of passes; the boundary vectors here have at most four entries.
void enforce_min_gaps(std::vector<double>& bs, const LearnerConfig& cfg) {
    for (int pass = 0; pass < 8; ++pass) {
        bool changed = false;
        for (std::size_t i = 1; i < bs.size(); ++i) {
            const double mid = 0.5 * (bs[i - 1] + bs[i]);
            const double eps = spread_epsilon(mid, cfg);
            if (bs[i] - bs[i - 1] < eps) {
                bs[i - 1] = mid - eps;
                bs[i] = mid + eps;
                changed = true;
            }
        }
        if (!changed) return;
    }
}

bool strictly_increasing(const std::vector<double>& bs) {
    for (std::size_t i = 1; i < bs.size(); ++i) {
        if (!(bs[i - 1] < bs[i])) return false;
    }
    return true;
}

}  // namespace

void check_learner_config(const LearnerConfig& cfg) {
    if (!(cfg.alpha > 0.0) || !(cfg.alpha <= 1.0) || !std::isfinite(cfg.alpha)) {
        throw std::invalid_argument("learner alpha must be in (0, 1]");
    }
    if (!std::isfinite(cfg.input_gain) || cfg.input_gain == 0.0) {
        throw std::invalid_argument("learner input_gain must be finite and non-zero");
    }
    if (cfg.min_samples < 1) {
        throw std::invalid_argument("learner min_samples must be at least 1");
    }
    if (!(cfg.epsilon_spread > 0.0) || !std::isfinite(cfg.epsilon_spread)) {
        throw std::invalid_argument("learner epsilon_spread must be positive");
    }
}

PartitionError::PartitionError(PartitionFailure kind, const std::string& message)
    : std::runtime_error(message), kind_(kind) {}

std::vector<double> recursive_average_partition(const std::vector<double>& values,
                                                std::size_t term_count,
                                                const LearnerConfig& cfg) {
    if (term_count != 2 && term_count != 3 && term_count != 5) {
        throw PartitionError(PartitionFailure::unsupported_term_count,
                             "unsupported term count " + std::to_string(term_count));
    }
    if (values.size() < cfg.min_samples) {
        throw PartitionError(PartitionFailure::too_few_samples,
                             "need at least " + std::to_string(cfg.min_samples) +
                                 " samples, got " + std::to_string(values.size()));
    }

    const auto [min_it, max_it] = std::minmax_element(values.begin(), values.end());
    if (*min_it == *max_it) {
        // Constant data: no split exists, so fabricate the thinnest valid
        // partition centred on the value.
        const double c = *min_it;
        const double eps = spread_epsilon(c, cfg);
        switch (term_count) {
            case 2: return {c};
            case 3: return {c - eps, c + eps};
            default: return {c - 2.0 * eps, c - eps, c + eps, c + 2.0 * eps};
        }
    }

    if (term_count == 2) {
        return {mean_of(values)};
    }

    const double m0 = mean_of(values);
    std::vector<double> low, high;
    for (const double v : values) {
        (v <= m0 ? low : high).push_back(v);
    }
    // Non-constant data puts at least one value on each side of the mean
    // (the minimum in low, the maximum in high) except in pathological
    // rounding cases, which we treat like constant data.
    if (low.empty() || high.empty()) {
        const double eps = spread_epsilon(m0, cfg);
        if (term_count == 3) return {m0 - eps, m0 + eps};
        return {m0 - 2.0 * eps, m0 - eps, m0 + eps, m0 + 2.0 * eps};
    }
    std::vector<double> bs{mean_of(low), mean_of(high)};

    if (term_count == 5) {
        std::vector<double> outer_low, outer_high;
        for (const double v : values) {
            if (v <= bs[0]) outer_low.push_back(v);
            if (v > bs[1]) outer_high.push_back(v);
        }
        if (outer_low.empty() || outer_high.empty()) {
            throw PartitionError(PartitionFailure::empty_subregion,
                                 "empty sub-region while splitting for five terms");
        }
        bs = {mean_of(outer_low), bs[0], bs[1], mean_of(outer_high)};
    }

    enforce_min_gaps(bs, cfg);
    return bs;
}

UpdateStep perceptron_update(double w_previous, double v_observed, const LearnerConfig& cfg) {
    if (!std::isfinite(w_previous) || !std::isfinite(v_observed)) {
        throw std::invalid_argument("perceptron update on non-finite value");
    }
    UpdateStep step;
    step.w_previous = w_previous;
    step.v_observed = v_observed;
    step.error = v_observed - w_previous;
    step.delta = cfg.alpha * cfg.input_gain * step.error;
    step.w_next = w_previous + step.delta;
    if (!std::isfinite(step.w_next)) {
        throw std::invalid_argument("perceptron update produced non-finite weight");
    }
    return step;
}

TickResult learn_tick(const KbState& snapshot, const SampleWindow& window,
                      const LearnerConfig& cfg) {
    const LinguisticVariable* var = snapshot.find_variable(window.variable);
    if (var == nullptr) {
        throw std::invalid_argument("learn tick for unknown variable '" + window.variable +
                                    "'");
    }
    if (window.values.size() < cfg.min_samples) {
        return TickResult{TickStatus::dropped_too_few, std::nullopt};
    }

    std::vector<double> clamped;
    clamped.reserve(window.values.size());
    for (const double v : window.values) {
        clamped.push_back(std::clamp(v, var->domain_min, var->domain_max));
    }

    std::vector<double> fresh;
    try {
        fresh = recursive_average_partition(clamped, var->terms.size(), cfg);
    } catch (const PartitionError& e) {
        if (e.kind() == PartitionFailure::too_few_samples) {
            return TickResult{TickStatus::dropped_too_few, std::nullopt};
        }
        if (e.kind() == PartitionFailure::empty_subregion) {
            return TickResult{TickStatus::dropped_degenerate, std::nullopt};
        }
        throw;
    }

    // The constant-data spread can poke past a domain edge; slide the whole
    // partition back inside without changing its gaps.
    if (!fresh.empty()) {
        if (fresh.front() < var->domain_min) {
            const double shift = var->domain_min - fresh.front();
            for (double& b : fresh) b += shift;
        } else if (fresh.back() > var->domain_max) {
            const double shift = fresh.back() - var->domain_max;
            for (double& b : fresh) b -= shift;
        }
        if (fresh.front() < var->domain_min || fresh.back() > var->domain_max) {
            return TickResult{TickStatus::dropped_degenerate, std::nullopt};
        }
    }

    const BoundarySet* previous = snapshot.find_boundaries(window.variable, window.bucket);
    if (previous == nullptr) {
        BoundarySet bs;
        bs.boundaries = std::move(fresh);
        bs.sample_count = window.values.size();
        return TickResult{TickStatus::fresh_partition, std::move(bs)};
    }

    BoundarySet bs;
    bs.boundaries.reserve(previous->boundaries.size());
    for (std::size_t i = 0; i < previous->boundaries.size(); ++i) {
        bs.boundaries.push_back(perceptron_update(previous->boundaries[i], fresh[i], cfg).w_next);
    }
    const bool in_domain = bs.boundaries.front() >= var->domain_min &&
                           bs.boundaries.back() <= var->domain_max;
    if (!strictly_increasing(bs.boundaries) || !in_domain) {
        return TickResult{TickStatus::dropped_crossing, std::nullopt};
    }
    bs.sample_count = previous->sample_count + window.values.size();
    return TickResult{TickStatus::refined, std::move(bs)};
}

double stability_metric(const std::vector<BoundarySet>& history) {
    if (history.size() < 2) {
        throw std::invalid_argument("stability metric needs at least two boundary sets");
    }
    const BoundarySet& a = history[history.size() - 2];
    const BoundarySet& b = history[history.size() - 1];
    if (a.boundaries.size() != b.boundaries.size()) {
        throw std::invalid_argument("stability metric on mismatched boundary arity");
    }
    double worst = 0.0;
    for (std::size_t i = 0; i < a.boundaries.size(); ++i) {
        worst = std::max(worst, std::fabs(b.boundaries[i] - a.boundaries[i]));
    }
    return worst;
}

}  // namespace fuzzmon
