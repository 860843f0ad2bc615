#include <benchmark/benchmark.h>

#include <cstdint>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "fuzzmon/fuzzy_engine.hpp"
#include "fuzzmon/knowledge_base.hpp"
#include "fuzzmon/partition_learning.hpp"
#include "fuzzmon/rule_dsl.hpp"
#include "fuzzmon/time_bucket.hpp"
#include "fuzzmon/variable.hpp"

using namespace fuzzmon;

namespace {

std::vector<double> sample_window_means(std::size_t n, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> dist(2000.0, 15.0);
    std::vector<double> xs(n);
    for (double& x : xs) x = dist(rng);
    return xs;
}

LinguisticVariable bench_variable() {
    LinguisticVariable var;
    var.name = "pkts";
    var.domain_min = 0.0;
    var.domain_max = 1.0e6;
    var.terms = {"low", "normal", "extreme"};
    return var;
}

void bm_fresh_partition(benchmark::State& state) {
    const auto xs = sample_window_means(static_cast<std::size_t>(state.range(0)), 1234);
    LearnerConfig cfg;
    for (auto _ : state) {
        benchmark::DoNotOptimize(recursive_average_partition(xs, 3, cfg));
    }
}
BENCHMARK(bm_fresh_partition)->Arg(60)->Arg(600)->Arg(6000);

void bm_perceptron_update(benchmark::State& state) {
    LearnerConfig cfg;
    double w = 1988.0;
    for (auto _ : state) {
        w = perceptron_update(w, 2012.0, cfg).w_next;
        benchmark::DoNotOptimize(w);
    }
}
BENCHMARK(bm_perceptron_update);

void bm_shapes_from_boundaries(benchmark::State& state) {
    const LinguisticVariable var = bench_variable();
    BoundarySet bs;
    bs.boundaries = {1988.0, 2012.0};
    bs.sample_count = 420;
    for (auto _ : state) {
        benchmark::DoNotOptimize(shapes_from_boundaries(var, bs));
    }
}
BENCHMARK(bm_shapes_from_boundaries);

void bm_fuzzify(benchmark::State& state) {
    const LinguisticVariable var = bench_variable();
    BoundarySet bs;
    bs.boundaries = {1988.0, 2012.0};
    bs.sample_count = 420;
    const MembershipFunctionSet shapes = shapes_from_boundaries(var, bs);
    double x = 1950.0;
    for (auto _ : state) {
        benchmark::DoNotOptimize(fuzzify(shapes, x));
        x += 0.5;
        if (x > 2050.0) x = 1950.0;
    }
}
BENCHMARK(bm_fuzzify);

void bm_defuzzify(benchmark::State& state) {
    const RuleBase rules = parse_rules(
                               "IF pkts IS low THEN condition IS normal\n"
                               "IF pkts IS extreme THEN condition IS abnormal\n")
                               .rules;
    std::vector<double> firings = {0.6, 0.4};
    for (auto _ : state) {
        benchmark::DoNotOptimize(defuzzify(rules, firings));
    }
}
BENCHMARK(bm_defuzzify);

void bm_assess_window(benchmark::State& state) {
    KbState kb;
    kb.variables.push_back(bench_variable());
    BoundarySet bs;
    bs.boundaries = {1988.0, 2012.0};
    bs.sample_count = 420;
    const TimeBucketKey bucket{0, DayClass::weekday};
    kb.membership[MembershipKey{"pkts", bucket}] = bs;
    kb.rules = parse_rules(
                   "IF pkts IS extreme AND pkts IS USUALLY normal THEN condition IS "
                   "abnormal\n"
                   "IF pkts IS normal THEN condition IS normal\n")
                   .rules;
    const std::map<std::string, double> values = {{"pkts", 2004.0}};
    for (auto _ : state) {
        benchmark::DoNotOptimize(assess_window(kb, values, bucket, 1736121600));
    }
}
BENCHMARK(bm_assess_window);

}  // namespace

BENCHMARK_MAIN();
