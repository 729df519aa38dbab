#pragma once

#include <chrono>
#include <cstdio>
#include <optional>
#include <string>
#include <string_view>

namespace defectflow {

// Day-precision UTC calendar date.
using Date = std::chrono::sys_days;

inline std::optional<Date> parse_date(std::string_view s) {
    if (s.size() != 10 || s[4] != '-' || s[7] != '-') return std::nullopt;
    auto digits = [&](std::size_t pos, std::size_t len) -> std::optional<int> {
        int v = 0;
        for (std::size_t i = pos; i < pos + len; ++i) {
            if (s[i] < '0' || s[i] > '9') return std::nullopt;
            v = v * 10 + (s[i] - '0');
        }
        return v;
    };
    auto y = digits(0, 4), m = digits(5, 2), d = digits(8, 2);
    if (!y || !m || !d) return std::nullopt;
    std::chrono::year_month_day ymd{std::chrono::year{*y}, std::chrono::month{static_cast<unsigned>(*m)},
                                    std::chrono::day{static_cast<unsigned>(*d)}};
    if (!ymd.ok()) return std::nullopt;
    return Date{ymd};
}

inline std::string format_date(Date date) {
    std::chrono::year_month_day ymd{date};
    char buf[16];
    std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(ymd.year()),
                  static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()));
    return buf;
}

// Months since 0000-01, used as a dense month index.
inline int month_index(Date date) {
    std::chrono::year_month_day ymd{date};
    return static_cast<int>(ymd.year()) * 12 + static_cast<int>(static_cast<unsigned>(ymd.month())) - 1;
}

inline std::string format_month(int index) {
    char buf[16];
    int y = index / 12;
    int m = index % 12 + 1;
    std::snprintf(buf, sizeof buf, "%04d-%02d", y, m);
    return buf;
}

inline Date month_start(int index) {
    return Date{std::chrono::year{index / 12} / std::chrono::month{static_cast<unsigned>(index % 12 + 1)} /
                std::chrono::day{1}};
}

inline long days_between(Date from, Date to) { return (to - from).count(); }

}  // namespace defectflow
