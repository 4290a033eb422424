#pragma once

#include <compare>
#include <cstdint>
#include <string>
#include <string_view>

namespace sentifuse {

/// Calendar day, stored as days since 1970-01-01 (proleptic Gregorian).
/// Arithmetic in whole days; no time zones, no time of day.
class Date {
public:
    Date() = default;

    static Date from_ymd(int year, int month, int day);

    /// Parses `YYYY-MM-DD`. A trailing timestamp (`YYYY-MM-DDThh:mm:ssZ`,
    /// or a space separator) is truncated to the calendar day.
    static Date parse(std::string_view text);

    static Date from_days(std::int32_t days) { return Date(days); }

    std::int32_t days_since_epoch() const { return days_; }
    std::string to_string() const; // YYYY-MM-DD

    Date operator+(int days) const { return Date(days_ + days); }
    Date operator-(int days) const { return Date(days_ - days); }
    int operator-(Date other) const { return days_ - other.days_; }

    auto operator<=>(const Date&) const = default;

private:
    explicit Date(std::int32_t days) : days_(days) {}
    std::int32_t days_ = 0;
};

} // namespace sentifuse
