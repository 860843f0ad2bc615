#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace fuzzmon {

// A monitored quantity together with the ordered linguistic terms it can be
// described by (e.g. utilization in [0,1] with terms low / normal / extreme).
// Terms are ordered from lowest to highest region of the domain.
struct LinguisticVariable {
    std::string name;
    double domain_min = 0.0;
    double domain_max = 1.0;
    std::vector<std::string> terms;

    int term_index(std::string_view term) const {
        for (std::size_t i = 0; i < terms.size(); ++i) {
            if (terms[i] == term) return static_cast<int>(i);
        }
        return -1;
    }

    bool operator==(const LinguisticVariable&) const = default;
};

// k ordered terms are separated by k-1 strictly increasing boundaries.  The
// sample_count records how many window means contributed to these values.
struct BoundarySet {
    std::vector<double> boundaries;
    std::uint64_t sample_count = 0;

    bool operator==(const BoundarySet&) const = default;
};

// Throws std::invalid_argument naming the offending field.
void check_variable(const LinguisticVariable& var);

// Validates arity (terms-1 boundaries), strict monotonicity and domain
// containment of a boundary set against its variable.
void check_boundaries(const BoundarySet& bs, const LinguisticVariable& var);

}  // namespace fuzzmon
