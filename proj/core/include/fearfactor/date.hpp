#pragma once

#include <chrono>
#include <compare>
#include <cstdint>
#include <string>
#include <string_view>

namespace fearfactor {

/// Calendar date stored as days since 1970-01-01.
class Date {
public:
    constexpr Date() = default;
    constexpr explicit Date(std::int32_t days_since_epoch) : days_(days_since_epoch) {}
    Date(int year, unsigned month, unsigned day);
    explicit Date(std::chrono::year_month_day ymd);

    /// Parses strict YYYY-MM-DD. Throws std::invalid_argument on anything else.
    static Date parse(std::string_view text);

    [[nodiscard]] constexpr std::int32_t days() const { return days_; }
    [[nodiscard]] std::chrono::year_month_day ymd() const;
    [[nodiscard]] int year() const;
    [[nodiscard]] unsigned month() const;
    [[nodiscard]] unsigned day() const;
    /// 0 = Sunday ... 6 = Saturday.
    [[nodiscard]] unsigned weekday() const;
    /// year * 12 + (month - 1); equal for dates in the same calendar month.
    [[nodiscard]] int month_index() const;
    [[nodiscard]] std::string to_string() const;

    constexpr Date operator+(int d) const { return Date(days_ + d); }
    constexpr Date operator-(int d) const { return Date(days_ - d); }
    constexpr int operator-(Date other) const { return days_ - other.days_; }

    constexpr auto operator<=>(const Date&) const = default;

private:
    std::int32_t days_ = 0;
};

}  // namespace fearfactor
