#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <random>
#include <string>
#include <vector>

#include "fuzzmon/ingestion.hpp"
#include "fuzzmon/time_bucket.hpp"

using namespace fuzzmon;

namespace {

// 2025-01-06 00:00:00 UTC, a Monday.
constexpr std::int64_t kMonday = 1736121600;

std::filesystem::path temp_file(const std::string& name) {
    const auto dir = std::filesystem::temp_directory_path() / "fuzzmon_ingestion_tests";
    std::filesystem::create_directories(dir);
    return dir / name;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    REQUIRE(out.good());
    out << text;
}

MetricRecord rec(std::int64_t ts, double pkts, double bytes = 0.0, double util = 0.0) {
    return MetricRecord{ts, pkts, bytes, util};
}

std::vector<MetricRecord> capture(std::uint64_t seed, int days, std::int64_t start,
                                  const std::vector<AnomalyScenario>& scenarios,
                                  const DiurnalProfile& profile = {}) {
    std::vector<MetricRecord> out;
    generate_traffic(seed, days, start, scenarios, profile,
                     [&](const MetricRecord& r) { out.push_back(r); });
    return out;
}

}  // namespace

TEST_CASE("variable names map onto CSV columns through aliases") {
    CHECK(metric_field_for("pkts") == MetricField::packets_per_sec);
    CHECK(metric_field_for("Packets") == MetricField::packets_per_sec);
    CHECK(metric_field_for("packet_rate") == MetricField::packets_per_sec);
    CHECK(metric_field_for("traffic") == MetricField::packets_per_sec);
    CHECK(metric_field_for("bandwidth") == MetricField::bytes_per_sec);
    CHECK(metric_field_for("BYTES") == MetricField::bytes_per_sec);
    CHECK(metric_field_for("byte_rate") == MetricField::bytes_per_sec);
    CHECK(metric_field_for("util") == MetricField::utilization);
    CHECK(metric_field_for("utilization") == MetricField::utilization);
    CHECK_FALSE(metric_field_for("latency").has_value());
    CHECK_FALSE(metric_field_for("").has_value());
}

TEST_CASE("the reader accepts a well-formed file, CRLF and blank lines included") {
    const auto path = temp_file("happy.csv");
    write_text(path,
               "timestamp,packets_per_sec,bytes_per_sec,utilization\r\n"
               "100,2000.5,1200000.25,0.096\r\n"
               "\n"
               "101,0,0,0\n"
               "105,1813.2,950000,1.0\n");
    const std::vector<MetricRecord> records = read_csv(path);
    REQUIRE(records.size() == 3);
    CHECK(records[0].timestamp == 100);
    CHECK(records[0].packets_per_sec == 2000.5);
    CHECK(records[0].bytes_per_sec == 1200000.25);
    CHECK(records[0].utilization == 0.096);
    CHECK(records[1].timestamp == 101);
    CHECK(records[2].timestamp == 105);
    CHECK(records[2].utilization == 1.0);
}

TEST_CASE("reader errors cite the offending one-based line") {
    SUBCASE("missing file") {
        CHECK_THROWS_WITH_AS(read_csv(temp_file("no_such.csv")),
                             doctest::Contains("cannot open file"), CsvError);
    }
    SUBCASE("wrong header") {
        const auto path = temp_file("bad_header.csv");
        write_text(path, "ts,pkts,bytes,util\n1,2,3,0.1\n");
        try {
            read_csv(path);
            FAIL("expected CsvError");
        } catch (const CsvError& e) {
            CHECK(e.line() == 1);
            CHECK(std::string(e.what()).find("unexpected header") != std::string::npos);
            CHECK(std::string(e.what()).find(":1:") != std::string::npos);
        }
    }
    SUBCASE("out-of-range utilization on line 7") {
        const auto path = temp_file("bad_util.csv");
        std::string text = "timestamp,packets_per_sec,bytes_per_sec,utilization\n";
        for (int i = 0; i < 5; ++i) {
            text += std::to_string(100 + i) + ",10,10,0.5\n";
        }
        text += "105,10,10,1.5\n";
        write_text(path, text);
        try {
            read_csv(path);
            FAIL("expected CsvError");
        } catch (const CsvError& e) {
            CHECK(e.line() == 7);
            CHECK(std::string(e.what()).find("utilization must be within [0, 1]") !=
                  std::string::npos);
        }
    }
    SUBCASE("timestamps must strictly increase") {
        const auto path = temp_file("non_monotone.csv");
        write_text(path,
                   "timestamp,packets_per_sec,bytes_per_sec,utilization\n"
                   "100,1,1,0\n"
                   "100,1,1,0\n");
        try {
            read_csv(path);
            FAIL("expected CsvError");
        } catch (const CsvError& e) {
            CHECK(e.line() == 3);
            CHECK(std::string(e.what()).find("strictly increasing") != std::string::npos);
        }
    }
    SUBCASE("field count") {
        const auto path = temp_file("fields.csv");
        write_text(path,
                   "timestamp,packets_per_sec,bytes_per_sec,utilization\n"
                   "100,1,1\n");
        CHECK_THROWS_WITH_AS(read_csv(path), doctest::Contains("expected 4 fields, got 3"),
                             CsvError);
    }
    SUBCASE("malformed numbers") {
        const auto path = temp_file("nan.csv");
        write_text(path,
                   "timestamp,packets_per_sec,bytes_per_sec,utilization\n"
                   "100,fast,1,0\n");
        CHECK_THROWS_WITH_AS(read_csv(path), doctest::Contains("malformed number 'fast'"),
                             CsvError);
    }
    SUBCASE("negative rates and timestamps") {
        const auto path = temp_file("neg.csv");
        write_text(path,
                   "timestamp,packets_per_sec,bytes_per_sec,utilization\n"
                   "100,-1,1,0\n");
        CHECK_THROWS_WITH_AS(read_csv(path),
                             doctest::Contains("packets_per_sec must be non-negative"),
                             CsvError);
        write_text(path,
                   "timestamp,packets_per_sec,bytes_per_sec,utilization\n"
                   "-5,1,1,0\n");
        CHECK_THROWS_WITH_AS(read_csv(path),
                             doctest::Contains("timestamp must be non-negative"), CsvError);
    }
}

TEST_CASE("tumbling windows are epoch-aligned means") {
    const std::vector<MetricRecord> records = {
        rec(130, 10.0, 100.0, 0.1),
        rec(150, 20.0, 200.0, 0.2),
        rec(179, 30.0, 300.0, 0.3),
        rec(185, 50.0, 500.0, 0.5),
    };
    const auto windows = windowize(records, 60, BucketScheme::hour_weekday);
    REQUIRE(windows.size() == 2);
    CHECK(windows[0].start == 120);
    CHECK(windows[0].end == 180);
    CHECK(windows[0].record_count == 3);
    CHECK(windows[0].packets_per_sec == doctest::Approx(20.0));
    CHECK(windows[0].bytes_per_sec == doctest::Approx(200.0));
    CHECK(windows[0].utilization == doctest::Approx(0.2));
    CHECK(windows[1].start == 180);
    CHECK(windows[1].record_count == 1);
    CHECK(windows[1].packets_per_sec == 50.0);
    CHECK_FALSE(windows[0].is_gap());
    CHECK(windows[0].value(MetricField::bytes_per_sec) == windows[0].bytes_per_sec);
}

TEST_CASE("interior empty windows become gap markers") {
    const std::vector<MetricRecord> records = {rec(30, 1.0), rec(250, 2.0)};
    const auto windows = windowize(records, 60, BucketScheme::hour_weekday);
    REQUIRE(windows.size() == 5);  // [0,60) data, three gaps, [240,300) data
    CHECK(windows[0].record_count == 1);
    for (int i = 1; i <= 3; ++i) {
        CHECK(windows[i].is_gap());
        CHECK(windows[i].start == 60 * i);
        CHECK(windows[i].end == 60 * (i + 1));
    }
    CHECK(windows[4].start == 240);
    CHECK(windows[4].record_count == 1);
}

TEST_CASE("windows carry their time bucket") {
    const std::vector<MetricRecord> records = {
        rec(kMonday + 30, 1.0),                              // Monday 00:00
        rec(kMonday + 5 * 86400 + 12 * 3600 + 30, 1.0),      // Saturday 12:00
    };
    const auto windows = windowize(records, 60, BucketScheme::hour_weekday);
    REQUIRE(windows.size() >= 2);
    CHECK(windows.front().bucket == TimeBucketKey{0, DayClass::weekday});
    CHECK(windows.back().bucket == TimeBucketKey{12, DayClass::weekend});

    const auto hour_only = windowize(records, 60, BucketScheme::hour_only);
    CHECK(hour_only.back().bucket == TimeBucketKey{12, DayClass::weekday});
}

TEST_CASE("window record counts conserve the input stream") {
    std::mt19937_64 rng(909);
    std::vector<MetricRecord> records;
    std::int64_t ts = 1000;
    for (int i = 0; i < 500; ++i) {
        ts += 1 + static_cast<std::int64_t>(rng() % 400);
        records.push_back(rec(ts, static_cast<double>(rng() % 100)));
    }
    const auto windows = windowize(records, 60, BucketScheme::hour_weekday);
    std::size_t total = 0;
    for (std::size_t i = 0; i < windows.size(); ++i) {
        total += windows[i].record_count;
        CHECK(windows[i].start % 60 == 0);
        CHECK(windows[i].end == windows[i].start + 60);
        if (i > 0) CHECK(windows[i].start == windows[i - 1].end);  // contiguous incl. gaps
    }
    CHECK(total == records.size());
    CHECK(windows.front().start == (records.front().timestamp / 60) * 60);
    CHECK(windows.back().start == (records.back().timestamp / 60) * 60);
}

TEST_CASE("the windowizer rejects out-of-order records and empty flushes") {
    Windowizer wz(60, BucketScheme::hour_weekday);
    CHECK_FALSE(wz.flush().has_value());
    wz.push(rec(300, 1.0));
    CHECK_THROWS_AS(wz.push(rec(100, 1.0)), std::invalid_argument);
    CHECK_THROWS_AS(Windowizer(0, BucketScheme::hour_weekday), std::invalid_argument);
}

TEST_CASE("generated traffic is a pure function of its inputs") {
    const auto a = capture(42, 1, kMonday, {});
    const auto b = capture(42, 1, kMonday, {});
    const auto c = capture(43, 1, kMonday, {});
    REQUIRE(a.size() == 86400);
    REQUIRE(b.size() == a.size());
    bool identical = true;
    bool differs_from_c = false;
    for (std::size_t i = 0; i < a.size(); ++i) {
        identical = identical && a[i].timestamp == b[i].timestamp &&
                    a[i].packets_per_sec == b[i].packets_per_sec &&
                    a[i].bytes_per_sec == b[i].bytes_per_sec &&
                    a[i].utilization == b[i].utilization;
        differs_from_c = differs_from_c || a[i].packets_per_sec != c[i].packets_per_sec;
    }
    CHECK(identical);
    CHECK(differs_from_c);
    CHECK(a.front().timestamp == kMonday);
    CHECK(a.back().timestamp == kMonday + 86399);
}

TEST_CASE("the diurnal curve peaks midday and is damped on weekends") {
    const auto week = capture(7, 7, kMonday, {});
    const auto at = [&](int day, double hour) {
        return week[static_cast<std::size_t>(day * 86400 + hour * 3600)].packets_per_sec;
    };
    // Night floor around base_pps, midday bump near base + amp.
    CHECK(at(0, 2.0) < 2300.0);
    CHECK(at(0, 12.0) > 8000.0);
    // Saturday midday well below Monday midday (weekend_factor 0.3).
    CHECK(at(5, 12.0) < 0.6 * at(0, 12.0));
    // Bytes and utilization follow the packet curve.
    const MetricRecord& noon = week[12 * 3600];
    CHECK(noon.bytes_per_sec > 1e6);
    CHECK(noon.utilization == doctest::Approx(noon.bytes_per_sec * 8.0 / 100e6));
}

TEST_CASE("outage windows are exactly zero") {
    const AnomalyScenario outage{ScenarioKind::outage, kMonday + 3600, 1800, 1.0};
    const auto records = capture(42, 1, kMonday, {outage});
    for (std::int64_t ts = kMonday + 3600; ts < kMonday + 3600 + 1800; ++ts) {
        const MetricRecord& r = records[static_cast<std::size_t>(ts - kMonday)];
        CHECK(r.packets_per_sec == 0.0);
        CHECK(r.bytes_per_sec == 0.0);
        CHECK(r.utilization == 0.0);
    }
    CHECK(records[3599].packets_per_sec > 0.0);
    CHECK(records[3600 + 1800].packets_per_sec > 0.0);
}

TEST_CASE("a flash crowd multiplies the same-seed clean trace") {
    const AnomalyScenario flash{ScenarioKind::flash_crowd, kMonday + 7200, 3600, 10.0};
    const auto clean = capture(42, 1, kMonday, {});
    const auto burst = capture(42, 1, kMonday, {flash});
    // Same seed: samples are aligned, so outside the scenario the traces match.
    CHECK(burst[100].packets_per_sec == clean[100].packets_per_sec);
    // At onset the rate is scaled ten-fold (before the shared noise term).
    CHECK(burst[7200].packets_per_sec >= 5.0 * clean[7200].packets_per_sec);
    // The decay brings it back down monotonically in expectation: by the end
    // of the hour the multiplier has decayed to 1 + 9/e ~ 4.3.
    CHECK(burst[7200 + 3599].packets_per_sec < burst[7200].packets_per_sec);
    // After the scenario the traces realign exactly.
    CHECK(burst[7200 + 3600].packets_per_sec == clean[7200 + 3600].packets_per_sec);
}

TEST_CASE("abuse pins the rate regardless of hour") {
    const AnomalyScenario abuse{ScenarioKind::abuse, kMonday + 2 * 3600, 3600, 5.0};
    const auto records = capture(42, 1, kMonday, {abuse});
    for (std::int64_t off = 2 * 3600; off < 3 * 3600; off += 600) {
        const double pps = records[static_cast<std::size_t>(off)].packets_per_sec;
        CHECK(pps >= 5.0 * 2000.0 - 200.0);
        CHECK(pps <= 5.0 * 2000.0 + 200.0);
    }
}

TEST_CASE("a config change persists beyond its nominal duration") {
    const AnomalyScenario change{ScenarioKind::config_change, kMonday + 3600, 600, 3.0};
    const auto clean = capture(42, 1, kMonday, {});
    const auto changed = capture(42, 1, kMonday, {change});
    // Long after start + duration the multiplier still applies (02:00,
    // curve flat at base 2000, shared noise within +-200).
    const double late_clean = clean[2 * 3600].packets_per_sec;
    const double late_changed = changed[2 * 3600].packets_per_sec;
    CHECK(late_changed > 2.5 * late_clean - 600.0);
    CHECK(late_changed >= 3.0 * 2000.0 - 200.0);
}

TEST_CASE("scenario validation") {
    const DiurnalProfile profile;
    SUBCASE("different kinds may not overlap") {
        const std::vector<AnomalyScenario> bad = {
            {ScenarioKind::outage, kMonday + 1000, 1000, 1.0},
            {ScenarioKind::abuse, kMonday + 1500, 1000, 5.0},
        };
        CHECK_THROWS_AS(capture(1, 1, kMonday, bad), std::invalid_argument);
    }
    SUBCASE("same-kind overlap is allowed") {
        const std::vector<AnomalyScenario> ok = {
            {ScenarioKind::abuse, kMonday + 1000, 1000, 5.0},
            {ScenarioKind::abuse, kMonday + 1500, 1000, 8.0},
        };
        CHECK_NOTHROW(capture(1, 1, kMonday, ok));
    }
    SUBCASE("scenarios must fit the stream") {
        CHECK_THROWS_AS(
            capture(1, 1, kMonday, {{ScenarioKind::outage, kMonday + 86000, 1000, 1.0}}),
            std::invalid_argument);
        CHECK_THROWS_AS(capture(1, 1, kMonday, {{ScenarioKind::outage, kMonday - 10, 100, 1.0}}),
                        std::invalid_argument);
        CHECK_THROWS_AS(capture(1, 1, kMonday, {{ScenarioKind::outage, kMonday, 0, 1.0}}),
                        std::invalid_argument);
        CHECK_THROWS_AS(capture(1, 1, kMonday, {{ScenarioKind::abuse, kMonday, 100, 0.0}}),
                        std::invalid_argument);
    }
    SUBCASE("profile sanity") {
        DiurnalProfile bad = profile;
        bad.day_start_hour = 20.0;  // >= day_end_hour
        CHECK_THROWS_AS(capture(1, 1, kMonday, {}, bad), std::invalid_argument);
        bad = profile;
        bad.link_capacity_bps = 0.0;
        CHECK_THROWS_AS(capture(1, 1, kMonday, {}, bad), std::invalid_argument);
        CHECK_THROWS_AS(capture(1, 0, kMonday, {}), std::invalid_argument);
        CHECK_THROWS_AS(capture(1, 1, -5, {}), std::invalid_argument);
    }
}

TEST_CASE("written CSV round-trips through the reader") {
    const auto path = temp_file("roundtrip.csv");
    DiurnalProfile profile;
    profile.noise_pps = 50.0;
    write_csv(path, 99, 1, kMonday, {}, profile);

    std::vector<MetricRecord> direct;
    generate_traffic(99, 1, kMonday, {}, profile,
                     [&](const MetricRecord& r) { direct.push_back(r); });
    const std::vector<MetricRecord> reread = read_csv(path);
    REQUIRE(reread.size() == direct.size());
    for (std::size_t i = 0; i < reread.size(); i += 997) {
        CHECK(reread[i].timestamp == direct[i].timestamp);
        // Values are written with three (rates) and six (utilization)
        // decimals, so the reread stream matches to quantization error.
        CHECK(std::abs(reread[i].packets_per_sec - direct[i].packets_per_sec) <= 5e-4);
        CHECK(std::abs(reread[i].bytes_per_sec - direct[i].bytes_per_sec) <= 5e-4);
        CHECK(std::abs(reread[i].utilization - direct[i].utilization) <= 5e-7);
    }

    // Same parameters, same bytes.
    const auto path2 = temp_file("roundtrip2.csv");
    write_csv(path2, 99, 1, kMonday, {}, profile);
    std::ifstream f1(path, std::ios::binary), f2(path2, std::ios::binary);
    std::string s1((std::istreambuf_iterator<char>(f1)), std::istreambuf_iterator<char>());
    std::string s2((std::istreambuf_iterator<char>(f2)), std::istreambuf_iterator<char>());
    CHECK(s1 == s2);
    CHECK(s1.rfind("timestamp,packets_per_sec,bytes_per_sec,utilization\n", 0) == 0);
}

TEST_CASE("scenario sidecars round-trip") {
    const auto path = temp_file("scn.csv");
    const std::vector<AnomalyScenario> scenarios = {
        {ScenarioKind::outage, kMonday + 3600, 7200, 1.0},
        {ScenarioKind::flash_crowd, kMonday + 90000, 3600, 10.0},
        {ScenarioKind::abuse, kMonday + 180000, 21600, 5.0},
        {ScenarioKind::config_change, kMonday + 260000, 600, 0.25},
    };
    write_scenarios(path, scenarios);
    CHECK(read_scenarios(path) == scenarios);

    std::ifstream in(path, std::ios::binary);
    std::string header;
    std::getline(in, header);
    CHECK(header == "kind,start,duration,magnitude");

    SUBCASE("unknown kinds are rejected") {
        write_text(path, "kind,start,duration,magnitude\nflood,0,10,1.0\n");
        CHECK_THROWS_WITH_AS(read_scenarios(path),
                             doctest::Contains("unknown scenario kind 'flood'"), CsvError);
    }
    SUBCASE("header is mandatory") {
        write_text(path, "outage,0,10,1.0\n");
        CHECK_THROWS_WITH_AS(read_scenarios(path), doctest::Contains("unexpected header"),
                             CsvError);
    }
}

TEST_CASE("scenario kind names round-trip") {
    for (ScenarioKind k : {ScenarioKind::outage, ScenarioKind::flash_crowd,
                           ScenarioKind::abuse, ScenarioKind::config_change}) {
        CHECK(scenario_kind_from_string(to_string(k)) == k);
    }
    CHECK_FALSE(scenario_kind_from_string("meteor").has_value());
}
