#include "sigfolio/calendar.hpp"

#include <cstdio>
#include <stdexcept>

namespace sigfolio {

namespace {

// Proleptic Gregorian <-> days-since-epoch (Howard Hinnant's civil algorithms).
std::int32_t days_from_civil(int y, int m, int d) {
    y -= m <= 2;
    const int era = (y >= 0 ? y : y - 399) / 400;
    const unsigned yoe = static_cast<unsigned>(y - era * 400);
    const unsigned doy = (153u * static_cast<unsigned>(m + (m > 2 ? -3 : 9)) + 2u) / 5u +
                         static_cast<unsigned>(d) - 1u;
    const unsigned doe = yoe * 365u + yoe / 4u - yoe / 100u + doy;
    return era * 146097 + static_cast<std::int32_t>(doe) - 719468;
}

void civil_from_days(std::int32_t z, int& y, int& m, int& d) {
    z += 719468;
    const int era = (z >= 0 ? z : z - 146096) / 146097;
    const unsigned doe = static_cast<unsigned>(z - era * 146097);
    const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
    const int yr = static_cast<int>(yoe) + era * 400;
    const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
    const unsigned mp = (5 * doy + 2) / 153;
    d = static_cast<int>(doy - (153 * mp + 2) / 5 + 1);
    m = static_cast<int>(mp + (mp < 10 ? 3 : -9));
    y = yr + (m <= 2);
}

bool valid_ymd(int y, int m, int d) {
    if (m < 1 || m > 12 || d < 1) {
        return false;
    }
    static const int dim[] = {31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31};
    int max_d = dim[m - 1];
    if (m == 2) {
        const bool leap = (y % 4 == 0 && y % 100 != 0) || y % 400 == 0;
        max_d = leap ? 29 : 28;
    }
    return d <= max_d;
}

}  // namespace

Date Date::from_ymd(int year, int month, int day) {
    if (!valid_ymd(year, month, day)) {
        throw std::invalid_argument("invalid calendar date: " + std::to_string(year) + "-" +
                                    std::to_string(month) + "-" + std::to_string(day));
    }
    return from_days(days_from_civil(year, month, day));
}

Date Date::parse(std::string_view iso) {
    if (iso.size() != 10 || iso[4] != '-' || iso[7] != '-') {
        throw std::invalid_argument("malformed date '" + std::string(iso) +
                                    "', expected YYYY-MM-DD");
    }
    auto digits = [&](std::size_t pos, std::size_t len) {
        int value = 0;
        for (std::size_t i = pos; i < pos + len; ++i) {
            const char c = iso[i];
            if (c < '0' || c > '9') {
                throw std::invalid_argument("malformed date '" + std::string(iso) +
                                            "', expected YYYY-MM-DD");
            }
            value = value * 10 + (c - '0');
        }
        return value;
    };
    return from_ymd(digits(0, 4), digits(5, 2), digits(8, 2));
}

void Date::to_ymd(int& year, int& month, int& day) const {
    civil_from_days(days_, year, month, day);
}

std::string Date::to_string() const {
    int y = 0;
    int m = 0;
    int d = 0;
    to_ymd(y, m, d);
    char buf[16];
    std::snprintf(buf, sizeof(buf), "%04d-%02d-%02d", y, m, d);
    return buf;
}

}  // namespace sigfolio
