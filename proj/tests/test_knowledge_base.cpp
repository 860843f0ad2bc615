#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <atomic>
#include <cstdio>
#include <filesystem>
#include <random>
#include <thread>
#include <vector>

#include "fuzzmon/knowledge_base.hpp"
#include "fuzzmon/rule_dsl.hpp"

using namespace fuzzmon;

namespace {

KbState small_state() {
    KbState state;
    state.variables = {
        LinguisticVariable{"bandwidth", 0.0, 1e9, {"low", "normal", "high"}},
        LinguisticVariable{"util", 0.0, 1.0, {"low", "normal", "extreme"}},
    };
    state.rules = parse_rules("IF util IS extreme THEN condition IS abnormal\n"
                              "IF util IS normal THEN condition IS normal")
                      .rules;
    return state;
}

// Reals quantised to the file format's six decimals, so that save/load is an
// exact identity on the in-memory value.
double quantised(std::mt19937_64& rng, double lo, double hi) {
    std::uniform_real_distribution<double> dist(lo, hi);
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.6f", dist(rng));
    return std::strtod(buf, nullptr);
}

std::filesystem::path temp_file(const char* name) {
    return std::filesystem::temp_directory_path() / name;
}

}  // namespace

TEST_CASE("empty state serialises to the canonical skeleton") {
    const KbState state;
    CHECK(serialize_kb(state) ==
          "fuzzmon-kb v1\n"
          "version 0\n"
          "[variables]\n"
          "[rules]\n"
          "[membership]\n");
    const KbState round = parse_kb(serialize_kb(state), "mem");
    CHECK(round == state);
}

TEST_CASE("serialisation round-trips variables, rules, membership and version") {
    KbState state = small_state();
    state.version = 17;
    state.membership[MembershipKey{"util", {3, DayClass::weekday}}] =
        BoundarySet{{0.25, 0.5}, 720};
    state.membership[MembershipKey{"util", {3, DayClass::weekend}}] =
        BoundarySet{{0.125, 0.75}, 120};
    state.membership[MembershipKey{"bandwidth", {14, DayClass::weekday}}] =
        BoundarySet{{1000.5, 2000.25}, 60};

    const std::string text = serialize_kb(state);
    const KbState round = parse_kb(text, "mem");
    CHECK(round == state);
    CHECK(round.version == 17);
    // Canonical: serialising the parse gives identical bytes.
    CHECK(serialize_kb(round) == text);
}

TEST_CASE("membership lines are sorted by variable, hour, day class") {
    KbState state = small_state();
    state.membership[MembershipKey{"util", {14, DayClass::weekday}}] = BoundarySet{{0.2, 0.4}, 1};
    state.membership[MembershipKey{"bandwidth", {3, DayClass::weekend}}] =
        BoundarySet{{10.0, 20.0}, 1};
    state.membership[MembershipKey{"bandwidth", {3, DayClass::weekday}}] =
        BoundarySet{{30.0, 40.0}, 1};
    state.membership[MembershipKey{"util", {9, DayClass::weekday}}] = BoundarySet{{0.1, 0.3}, 1};

    const std::string text = serialize_kb(state);
    const std::size_t b_wd = text.find("bandwidth 03 weekday");
    const std::size_t b_we = text.find("bandwidth 03 weekend");
    const std::size_t u_09 = text.find("util 09 weekday");
    const std::size_t u_14 = text.find("util 14 weekday");
    REQUIRE(b_wd != std::string::npos);
    CHECK(b_wd < b_we);
    CHECK(b_we < u_09);
    CHECK(u_09 < u_14);
}

TEST_CASE("loader rejects structural problems with line numbers") {
    SUBCASE("bad header") {
        CHECK_THROWS_WITH_AS(parse_kb("fuzzmon-kb v2\nversion 0\n[variables]\n[rules]\n[membership]\n", "kb"),
                             doctest::Contains("kb:1"), KbError);
    }
    SUBCASE("decreasing boundaries") {
        const std::string text =
            "fuzzmon-kb v1\nversion 0\n[variables]\n"
            "util 0.000000 1.000000 low,normal,extreme\n"
            "[rules]\n[membership]\n"
            "util 03 weekday 0.800000;0.300000 n=5\n";
        try {
            parse_kb(text, "kb");
            FAIL("expected KbError");
        } catch (const KbError& e) {
            CHECK(std::string(e.what()).find("boundaries not increasing") != std::string::npos);
            CHECK(std::string(e.what()).find("kb:7") != std::string::npos);
        }
    }
    SUBCASE("boundary outside the domain") {
        const std::string text =
            "fuzzmon-kb v1\nversion 0\n[variables]\n"
            "util 0.000000 1.000000 low,normal,extreme\n"
            "[rules]\n[membership]\n"
            "util 03 weekday 0.200000;1.500000 n=5\n";
        CHECK_THROWS_WITH_AS(parse_kb(text, "kb"), doctest::Contains("out of domain"), KbError);
    }
    SUBCASE("rule referencing an unknown term names the rule") {
        const std::string text =
            "fuzzmon-kb v1\nversion 0\n[variables]\n"
            "util 0.000000 1.000000 low,normal,extreme\n"
            "[rules]\n"
            "IF util IS low THEN condition IS normal\n"
            "IF util IS huge THEN condition IS abnormal\n"
            "[membership]\n";
        try {
            parse_kb(text, "kb");
            FAIL("expected KbError");
        } catch (const KbError& e) {
            CHECK(std::string(e.what()).find("rule 1") != std::string::npos);
            CHECK(std::string(e.what()).find("huge") != std::string::npos);
        }
    }
    SUBCASE("rule syntax error carries the file line") {
        const std::string text =
            "fuzzmon-kb v1\nversion 0\n[variables]\n"
            "util 0.000000 1.000000 low,normal,extreme\n"
            "[rules]\n"
            "IF util IS low THEN condition IS normal\n"
            "IF util low THEN condition IS normal\n"
            "[membership]\n";
        CHECK_THROWS_WITH_AS(parse_kb(text, "kb"), doctest::Contains("kb:7"), KbError);
    }
    SUBCASE("wrong arity membership line") {
        const std::string text =
            "fuzzmon-kb v1\nversion 0\n[variables]\n"
            "util 0.000000 1.000000 low,normal,extreme\n"
            "[rules]\n[membership]\n"
            "util 03 weekday 0.500000 n=5\n";
        CHECK_THROWS_WITH_AS(parse_kb(text, "kb"), doctest::Contains("expected 2 boundaries"),
                             KbError);
    }
    SUBCASE("duplicate membership entry") {
        const std::string text =
            "fuzzmon-kb v1\nversion 0\n[variables]\n"
            "util 0.000000 1.000000 low,normal,extreme\n"
            "[rules]\n[membership]\n"
            "util 03 weekday 0.200000;0.500000 n=5\n"
            "util 03 weekday 0.300000;0.600000 n=5\n";
        CHECK_THROWS_WITH_AS(parse_kb(text, "kb"), doctest::Contains("duplicate"), KbError);
    }
    SUBCASE("unknown membership variable") {
        const std::string text =
            "fuzzmon-kb v1\nversion 0\n[variables]\n"
            "util 0.000000 1.000000 low,normal,extreme\n"
            "[rules]\n[membership]\n"
            "pkts 03 weekday 0.200000;0.500000 n=5\n";
        CHECK_THROWS_WITH_AS(parse_kb(text, "kb"), doctest::Contains("unknown variable"),
                             KbError);
    }
}

TEST_CASE("save and load through the filesystem") {
    const auto path = temp_file("fuzzmon_kb_roundtrip.kb");
    KbState state = small_state();
    state.version = 3;
    state.membership[MembershipKey{"util", {0, DayClass::weekend}}] =
        BoundarySet{{0.25, 0.75}, 42};
    save_kb(state, path);
    const KbState loaded = load_kb(path);
    CHECK(loaded == state);
    std::filesystem::remove(path);

    CHECK_THROWS_AS(load_kb("/nonexistent/fuzzmon.kb"), KbError);
}

TEST_CASE("commits bump the version by exactly one and validate first") {
    KnowledgeBase store(small_state());
    CHECK(store.version() == 0);
    store.commit_boundaries("util", {3, DayClass::weekday}, BoundarySet{{0.2, 0.6}, 10});
    CHECK(store.version() == 1);
    store.commit_boundaries("util", {3, DayClass::weekday}, BoundarySet{{0.3, 0.7}, 20});
    CHECK(store.version() == 2);

    // Rejected commits leave state and version untouched.
    CHECK_THROWS_AS(
        store.commit_boundaries("util", {3, DayClass::weekday}, BoundarySet{{0.9, 0.1}, 1}),
        KbError);
    CHECK_THROWS_AS(
        store.commit_boundaries("util", {3, DayClass::weekday}, BoundarySet{{0.2, 1.5}, 1}),
        KbError);
    CHECK_THROWS_AS(
        store.commit_boundaries("nope", {3, DayClass::weekday}, BoundarySet{{0.2, 0.6}, 1}),
        KbError);
    CHECK(store.version() == 2);
    const KbSnapshot snap = store.snapshot();
    CHECK(snap->find_boundaries("util", {3, DayClass::weekday})->boundaries ==
          std::vector<double>{0.3, 0.7});
}

TEST_CASE("snapshots are immutable under later commits") {
    KnowledgeBase store(small_state());
    const KbSnapshot before = store.snapshot();
    store.commit_boundaries("util", {5, DayClass::weekday}, BoundarySet{{0.1, 0.9}, 1});
    CHECK(before->version == 0);
    CHECK(before->find_boundaries("util", {5, DayClass::weekday}) == nullptr);
    const KbSnapshot after = store.snapshot();
    CHECK(after->version == 1);
    CHECK(after->find_boundaries("util", {5, DayClass::weekday}) != nullptr);
}

TEST_CASE("commit_rules replaces the rule base atomically") {
    KnowledgeBase store(small_state());
    RuleBase good = parse_rules("IF bandwidth IS high THEN condition IS abnormal").rules;
    store.commit_rules(good);
    CHECK(store.version() == 1);
    CHECK(store.snapshot()->rules == good);

    RuleBase bad = parse_rules("IF bandwidth IS enormous THEN condition IS abnormal").rules;
    CHECK_THROWS_AS(store.commit_rules(bad), KbError);
    CHECK(store.version() == 1);
    CHECK(store.snapshot()->rules == good);
}

TEST_CASE("readers always observe a state consistent with its version") {
    // The writer commits a deterministic function of the version; readers
    // in other threads must never see a half-applied mix.
    KnowledgeBase store(small_state());
    constexpr int kCommits = 400;
    std::atomic<bool> done{false};
    std::atomic<int> inconsistencies{0};

    std::vector<std::thread> readers;
    for (int t = 0; t < 4; ++t) {
        readers.emplace_back([&] {
            while (!done.load(std::memory_order_relaxed)) {
                const KbSnapshot snap = store.snapshot();
                const std::uint64_t v = snap->version;
                const BoundarySet* bs =
                    snap->find_boundaries("util", {7, DayClass::weekday});
                if (v == 0) {
                    if (bs != nullptr) inconsistencies.fetch_add(1);
                } else {
                    const double expected = static_cast<double>(v) / (kCommits + 1);
                    if (bs == nullptr || bs->sample_count != v ||
                        bs->boundaries[0] != expected) {
                        inconsistencies.fetch_add(1);
                    }
                }
            }
        });
    }

    for (int i = 1; i <= kCommits; ++i) {
        const double b = static_cast<double>(i) / (kCommits + 1);
        store.commit_boundaries("util", {7, DayClass::weekday},
                                BoundarySet{{b, b + 0.001}, static_cast<std::uint64_t>(i)});
    }
    done.store(true);
    for (std::thread& t : readers) t.join();

    CHECK(inconsistencies.load() == 0);
    CHECK(store.version() == kCommits);
}

TEST_CASE("random quantised states survive save/load byte-for-byte") {
    std::mt19937_64 rng(4242);
    for (int iter = 0; iter < 25; ++iter) {
        KbState state = small_state();
        state.version = rng() % 1000;
        std::uniform_int_distribution<int> hour(0, 23);
        std::uniform_int_distribution<int> day(0, 1);
        const int entries = static_cast<int>(rng() % 20);
        for (int e = 0; e < entries; ++e) {
            MembershipKey key{rng() % 2 == 0 ? "util" : "bandwidth",
                              {hour(rng), day(rng) ? DayClass::weekend : DayClass::weekday}};
            const LinguisticVariable* var =
                key.variable == "util" ? &state.variables[1] : &state.variables[0];
            const double span = var->domain_max - var->domain_min;
            double b1 = quantised(rng, var->domain_min, var->domain_min + span * 0.45);
            double b2 = quantised(rng, var->domain_min + span * 0.5, var->domain_max);
            state.membership[key] = BoundarySet{{b1, b2}, rng() % 100000};
        }
        const std::string bytes = serialize_kb(state);
        const KbState loaded = parse_kb(bytes, "mem");
        CHECK(loaded == state);
        CHECK(serialize_kb(loaded) == bytes);
    }
}
