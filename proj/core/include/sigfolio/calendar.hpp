#pragma once

#include <compare>
#include <cstdint>
#include <string>
#include <string_view>

namespace sigfolio {

// Calendar day, stored as days since 1970-01-01. Text form is ISO-8601
// (YYYY-MM-DD) everywhere files are read or written.
class Date {
  public:
    constexpr Date() = default;

    static constexpr Date from_days(std::int32_t days) {
        Date d;
        d.days_ = days;
        return d;
    }
    static Date from_ymd(int year, int month, int day);
    static Date parse(std::string_view iso);  // throws on malformed input

    constexpr std::int32_t days_since_epoch() const { return days_; }
    constexpr Date plus_days(std::int32_t n) const { return from_days(days_ + n); }

    void to_ymd(int& year, int& month, int& day) const;
    std::string to_string() const;

    friend constexpr auto operator<=>(Date a, Date b) = default;

  private:
    std::int32_t days_ = 0;
};

}  // namespace sigfolio
