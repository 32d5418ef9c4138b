#pragma once

#include <compare>
#include <cstdint>
#include <string>
#include <string_view>

namespace dhbv::data {

/// Proleptic Gregorian calendar day.
struct Date {
    int year = 1970;
    int month = 1;
    int day = 1;

    auto operator<=>(const Date&) const = default;

    /// Days since 1970-01-01.
    std::int64_t serial() const;
    static Date from_serial(std::int64_t days);
    Date plus_days(std::int64_t n) const { return from_serial(serial() + n); }

    /// 1-based ordinal day within the year.
    int day_of_year() const;
    std::string to_string() const;
};

bool is_leap_year(int year);
int days_in_month(int year, int month);

/// Strict YYYY-MM-DD. Throws DataError on malformed or impossible dates.
Date parse_date(std::string_view text);

/// Signed day count b - a.
inline std::int64_t days_between(const Date& a, const Date& b) { return b.serial() - a.serial(); }

}  // namespace dhbv::data
