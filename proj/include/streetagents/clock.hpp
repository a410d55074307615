#pragma once

#include <cstdint>
#include <cstdio>
#include <string>

#include "streetagents/errors.hpp"

namespace streetagents {

// Simulated wall clock. All timestamps are seconds on a timezone-free
// civil timeline so runs are reproducible regardless of host locale.
struct SimClock {
    std::int64_t now = 0;
    std::int64_t increment = 45;

    void advance() { now += increment; }
};

namespace detail {

// Days since 1970-01-01 for a civil date (Howard Hinnant's algorithm).
constexpr std::int64_t days_from_civil(int y, int m, int d) {
    y -= m <= 2;
    const std::int64_t era = (y >= 0 ? y : y - 399) / 400;
    const unsigned yoe = static_cast<unsigned>(y - era * 400);
    const unsigned doy = (153u * (m + (m > 2 ? -3 : 9)) + 2u) / 5u + d - 1;
    const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
    return era * 146097 + static_cast<std::int64_t>(doe) - 719468;
}

struct CivilDate {
    int year;
    int month;
    int day;
};

constexpr CivilDate civil_from_days(std::int64_t z) {
    z += 719468;
    const std::int64_t era = (z >= 0 ? z : z - 146096) / 146097;
    const unsigned doe = static_cast<unsigned>(z - era * 146097);
    const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
    const std::int64_t y = static_cast<std::int64_t>(yoe) + era * 400;
    const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
    const unsigned mp = (5 * doy + 2) / 153;
    const unsigned d = doy - (153 * mp + 2) / 5 + 1;
    const unsigned m = mp + (mp < 10 ? 3 : -9);
    return {static_cast<int>(y + (m <= 2)), static_cast<int>(m), static_cast<int>(d)};
}

inline constexpr const char* kMonthNames[12] = {
    "January", "February", "March",     "April",   "May",      "June",
    "July",    "August",   "September", "October", "November", "December"};

} // namespace detail

// Parses "YYYY-MM-DDTHH:MM:SS" into seconds on the civil timeline.
inline std::int64_t parse_civil_time(const std::string& text) {
    int y = 0, mo = 0, d = 0, h = 0, mi = 0, s = 0;
    if (std::sscanf(text.c_str(), "%d-%d-%dT%d:%d:%d", &y, &mo, &d, &h, &mi, &s) != 6) {
        throw ParseError("bad timestamp '" + text + "' (expected YYYY-MM-DDTHH:MM:SS)");
    }
    if (mo < 1 || mo > 12 || d < 1 || d > 31 || h < 0 || h > 23 || mi < 0 || mi > 59 ||
        s < 0 || s > 59) {
        throw ParseError("timestamp fields out of range in '" + text + "'");
    }
    return detail::days_from_civil(y, mo, d) * 86400 + h * 3600 + mi * 60 + s;
}

inline std::string format_civil_time(std::int64_t t) {
    std::int64_t days = t / 86400;
    std::int64_t sec = t % 86400;
    if (sec < 0) {
        sec += 86400;
        --days;
    }
    const auto date = detail::civil_from_days(days);
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%04d-%02d-%02dT%02lld:%02lld:%02lld", date.year,
                  date.month, date.day, static_cast<long long>(sec / 3600),
                  static_cast<long long>((sec / 60) % 60), static_cast<long long>(sec % 60));
    return buf;
}

// Long-form timestamp used when rendering memories into prompts,
// e.g. "November 02, 2023, 12:44:15 PM".
inline std::string format_memory_timestamp(std::int64_t t) {
    std::int64_t days = t / 86400;
    std::int64_t sec = t % 86400;
    if (sec < 0) {
        sec += 86400;
        --days;
    }
    const auto date = detail::civil_from_days(days);
    const int hour24 = static_cast<int>(sec / 3600);
    const int minute = static_cast<int>((sec / 60) % 60);
    const int second = static_cast<int>(sec % 60);
    const bool pm = hour24 >= 12;
    int hour12 = hour24 % 12;
    if (hour12 == 0) hour12 = 12;
    char buf[48];
    std::snprintf(buf, sizeof(buf), "%s %02d, %d, %02d:%02d:%02d %s",
                  detail::kMonthNames[date.month - 1], date.day, date.year, hour12, minute,
                  second, pm ? "PM" : "AM");
    return buf;
}

} // namespace streetagents
