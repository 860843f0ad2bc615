#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "fuzzmon/knowledge_base.hpp"
#include "fuzzmon/time_bucket.hpp"
#include "fuzzmon/variable.hpp"

namespace fuzzmon {

struct LearnerConfig {
    double alpha = 0.1;        // learning rate, (0, 1]
    double input_gain = 1.0;   // fixed input weighting of the update rule
    std::size_t min_samples = 12;
    double epsilon_spread = 1e-6;  // relative half-gap used to repair degenerate splits
};

// Throws std::invalid_argument naming the offending field.
void check_learner_config(const LearnerConfig& cfg);

// Aggregated observations of one variable inside one time bucket: the window
// means collected while the stream stayed in that bucket.
struct SampleWindow {
    std::string variable;
    TimeBucketKey bucket;
    std::vector<double> values;
    std::int64_t period_seconds = 60;
};

enum class PartitionFailure { too_few_samples, empty_subregion, unsupported_term_count };

class PartitionError : public std::runtime_error {
public:
    PartitionError(PartitionFailure kind, const std::string& message);
    PartitionFailure kind() const { return kind_; }

private:
    PartitionFailure kind_;
};

// Splits the data by its mean, recursively, into term boundaries:
//   k=2 -> [mean]
//   k=3 -> [mean(low half), mean(high half)]   halves split at the mean
//   k=5 -> k=3 boundaries plus the means of the outermost quarters
// Constant data degenerates to boundaries spread symmetrically around the
// value by epsilon_spread (scaled by max(1, |value|)).  Values are used as
// given; callers clamp to the variable domain first.  Throws PartitionError
// on too few samples, an empty sub-region (k=5), or k not in {2, 3, 5}.
std::vector<double> recursive_average_partition(const std::vector<double>& values,
                                                std::size_t term_count,
                                                const LearnerConfig& cfg);

// One delta-rule update of a stored boundary towards a fresh observation:
//   error = observed - previous
//   delta = alpha * input_gain * error
//   next  = previous + delta
// With input_gain = 1 this is an exponential moving average, so the update
// is a contraction: the boundary moves toward the observation and never
// overshoots it.  Throws std::invalid_argument on non-finite inputs.
struct UpdateStep {
    double w_previous = 0.0;
    double v_observed = 0.0;
    double error = 0.0;
    double delta = 0.0;
    double w_next = 0.0;
};

UpdateStep perceptron_update(double w_previous, double v_observed, const LearnerConfig& cfg);

enum class TickStatus {
    fresh_partition,   // bucket had no boundaries; stored the partition as-is
    refined,           // existing boundaries nudged toward the fresh partition
    dropped_too_few,   // fewer than min_samples values; nothing stored
    dropped_degenerate,  // partition failed (empty sub-region); previous kept
    dropped_crossing   // update would cross/escape the domain; previous kept
};

struct TickResult {
    TickStatus status = TickStatus::dropped_too_few;
    std::optional<BoundarySet> boundaries;  // set for fresh_partition / refined
};

// Pure learning step against a snapshot: partitions the window's values and
// either adopts the partition (unseen bucket) or moves each stored boundary
// toward its fresh counterpart.  Values are clamped to the variable domain
// before partitioning.  The caller commits the returned boundaries.
// Throws std::invalid_argument if the window names an unknown variable.
TickResult learn_tick(const KbState& snapshot, const SampleWindow& window,
                      const LearnerConfig& cfg);

// Largest absolute per-boundary movement between the two most recent entries.
// Throws std::invalid_argument on fewer than two entries or arity mismatch.
double stability_metric(const std::vector<BoundarySet>& history);

}  // namespace fuzzmon
