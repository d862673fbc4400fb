#pragma once

#include <cstdint>
#include <cstdio>
#include <optional>
#include <string>
#include <string_view>

namespace pmrel {

// Unix seconds, always UTC.
using UnixSeconds = std::int64_t;

constexpr std::int64_t kSecondsPerDay = 86400;

namespace detail {

// Days since 1970-01-01 for a civil date (proleptic Gregorian).
inline std::int64_t days_from_civil(int y, unsigned m, unsigned d) {
    y -= m <= 2;
    const std::int64_t era = (y >= 0 ? y : y - 399) / 400;
    const unsigned yoe = static_cast<unsigned>(y - era * 400);
    const unsigned doy = (153 * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1;
    const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
    return era * 146097 + static_cast<std::int64_t>(doe) - 719468;
}

inline void civil_from_days(std::int64_t z, int& y, unsigned& m, unsigned& d) {
    z += 719468;
    const std::int64_t era = (z >= 0 ? z : z - 146096) / 146097;
    const unsigned doe = static_cast<unsigned>(z - era * 146097);
    const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
    const std::int64_t yy = static_cast<std::int64_t>(yoe) + era * 400;
    const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
    const unsigned mp = (5 * doy + 2) / 153;
    d = doy - (153 * mp + 2) / 5 + 1;
    m = mp + (mp < 10 ? 3 : -9);
    y = static_cast<int>(yy + (m <= 2));
}

inline bool parse_fixed_uint(std::string_view s, std::size_t pos, std::size_t len, unsigned& out) {
    if (pos + len > s.size()) return false;
    unsigned v = 0;
    for (std::size_t i = 0; i < len; ++i) {
        const char c = s[pos + i];
        if (c < '0' || c > '9') return false;
        v = v * 10 + static_cast<unsigned>(c - '0');
    }
    out = v;
    return true;
}

inline unsigned days_in_month(int y, unsigned m) {
    static constexpr unsigned lengths[] = {31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31};
    if (m == 2 && ((y % 4 == 0 && y % 100 != 0) || y % 400 == 0)) return 29;
    return lengths[m - 1];
}

}  // namespace detail

/// Parses an ISO-8601 timestamp with an explicit zone designator
/// ("2025-04-01T12:00:00Z", "2025-04-01 12:00:00+02:00"). Fractional
/// seconds are accepted and truncated. Naive timestamps (no zone) are
/// rejected, as are out-of-range date/time components.
inline std::optional<UnixSeconds> parse_iso8601_utc(std::string_view s) {
    unsigned year4 = 0, mon = 0, day = 0, hour = 0, min = 0, sec = 0;
    if (s.size() < 20) return std::nullopt;
    if (!detail::parse_fixed_uint(s, 0, 4, year4) || s[4] != '-' ||
        !detail::parse_fixed_uint(s, 5, 2, mon) || s[7] != '-' ||
        !detail::parse_fixed_uint(s, 8, 2, day))
        return std::nullopt;
    if (s[10] != 'T' && s[10] != ' ') return std::nullopt;
    if (!detail::parse_fixed_uint(s, 11, 2, hour) || s[13] != ':' ||
        !detail::parse_fixed_uint(s, 14, 2, min) || s[16] != ':' ||
        !detail::parse_fixed_uint(s, 17, 2, sec))
        return std::nullopt;
    std::size_t pos = 19;
    if (pos < s.size() && s[pos] == '.') {
        ++pos;
        const std::size_t start = pos;
        while (pos < s.size() && s[pos] >= '0' && s[pos] <= '9') ++pos;
        if (pos == start) return std::nullopt;
    }
    if (pos >= s.size()) return std::nullopt;  // naive timestamp

    std::int64_t offset = 0;
    if (s[pos] == 'Z') {
        if (pos + 1 != s.size()) return std::nullopt;
    } else if (s[pos] == '+' || s[pos] == '-') {
        const int sign = s[pos] == '+' ? 1 : -1;
        ++pos;
        unsigned oh = 0, om = 0;
        if (!detail::parse_fixed_uint(s, pos, 2, oh)) return std::nullopt;
        pos += 2;
        if (pos < s.size() && s[pos] == ':') ++pos;
        if (pos != s.size()) {
            if (!detail::parse_fixed_uint(s, pos, 2, om)) return std::nullopt;
            pos += 2;
            if (pos != s.size()) return std::nullopt;
        }
        if (oh > 23 || om > 59) return std::nullopt;
        offset = sign * static_cast<std::int64_t>(oh * 3600 + om * 60);
    } else {
        return std::nullopt;
    }

    const int year = static_cast<int>(year4);
    if (mon < 1 || mon > 12 || day < 1 || day > detail::days_in_month(year, mon)) return std::nullopt;
    if (hour > 23 || min > 59 || sec > 60) return std::nullopt;

    const std::int64_t days = detail::days_from_civil(year, mon, day);
    return days * kSecondsPerDay + hour * 3600 + min * 60 + sec - offset;
}

inline std::string format_iso8601_utc(UnixSeconds t) {
    std::int64_t days = t / kSecondsPerDay;
    std::int64_t rem = t % kSecondsPerDay;
    if (rem < 0) {
        rem += kSecondsPerDay;
        --days;
    }
    int y;
    unsigned m, d;
    detail::civil_from_days(days, y, m, d);
    char buf[24];
    std::snprintf(buf, sizeof(buf), "%04d-%02u-%02uT%02lld:%02lld:%02lldZ", y, m, d,
                  static_cast<long long>(rem / 3600), static_cast<long long>((rem / 60) % 60),
                  static_cast<long long>(rem % 60));
    return std::string(buf);
}

}  // namespace pmrel
