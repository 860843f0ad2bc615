#pragma once

#include <compare>
#include <cstdint>
#include <cstdio>
#include <optional>
#include <string>
#include <string_view>

namespace fuzzmon {

// Historical context is keyed by hour-of-day plus a weekday/weekend split,
// so behaviour learned for "Tuesday 03:00" never bleeds into "Saturday 15:00".
enum class DayClass { weekday, weekend };

enum class BucketScheme {
    hour_weekday,  // 24 hours x {weekday, weekend} = 48 buckets
    hour_only      // 24 buckets, day class pinned to weekday
};

inline constexpr int kHoursPerDay = 24;
inline constexpr int kBucketCount = 48;

struct TimeBucketKey {
    int hour_of_day = 0;  // 0..23
    DayClass day_class = DayClass::weekday;

    auto operator<=>(const TimeBucketKey&) const = default;
};

// All bucket arithmetic is plain UTC integer math on Unix timestamps; no
// timezone database or locale is consulted, so results are identical on
// every host.  Day 0 (1970-01-01) was a Thursday.
inline TimeBucketKey bucket_for_timestamp(std::int64_t timestamp,
                                          BucketScheme scheme = BucketScheme::hour_weekday) {
    TimeBucketKey key;
    key.hour_of_day = static_cast<int>((timestamp / 3600) % kHoursPerDay);
    if (scheme == BucketScheme::hour_weekday) {
        const int day_of_week = static_cast<int>((timestamp / 86400 + 4) % 7);  // 0 = Sunday
        key.day_class = (day_of_week == 0 || day_of_week == 6) ? DayClass::weekend
                                                               : DayClass::weekday;
    }
    return key;
}

inline const char* to_string(DayClass dc) {
    return dc == DayClass::weekday ? "weekday" : "weekend";
}

inline std::optional<DayClass> day_class_from_string(std::string_view s) {
    if (s == "weekday") return DayClass::weekday;
    if (s == "weekend") return DayClass::weekend;
    return std::nullopt;
}

inline std::string to_string(const TimeBucketKey& key) {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "%s/%02d", to_string(key.day_class), key.hour_of_day);
    return buf;
}

}  // namespace fuzzmon
