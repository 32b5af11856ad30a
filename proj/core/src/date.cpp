#include "fearfactor/date.hpp"

#include <charconv>
#include <cstdio>
#include <stdexcept>

namespace fearfactor {

namespace chr = std::chrono;

Date::Date(int year, unsigned month, unsigned day)
    : Date(chr::year_month_day{chr::year{year}, chr::month{month}, chr::day{day}}) {}

Date::Date(chr::year_month_day ymd) {
    if (!ymd.ok()) throw std::invalid_argument("invalid calendar date");
    days_ = static_cast<std::int32_t>(chr::sys_days{ymd}.time_since_epoch().count());
}

Date Date::parse(std::string_view text) {
    auto fail = [&] { return std::invalid_argument("expected YYYY-MM-DD, got '" + std::string(text) + "'"); };
    if (text.size() != 10 || text[4] != '-' || text[7] != '-') throw fail();
    auto field = [&](std::size_t pos, std::size_t len) {
        int v = 0;
        auto [ptr, ec] = std::from_chars(text.data() + pos, text.data() + pos + len, v);
        if (ec != std::errc{} || ptr != text.data() + pos + len) throw fail();
        return v;
    };
    const int y = field(0, 4);
    const int m = field(5, 2);
    const int d = field(8, 2);
    chr::year_month_day ymd{chr::year{y}, chr::month{static_cast<unsigned>(m)}, chr::day{static_cast<unsigned>(d)}};
    if (!ymd.ok()) throw fail();
    return Date(ymd);
}

chr::year_month_day Date::ymd() const { return chr::year_month_day{chr::sys_days{chr::days{days_}}}; }

int Date::year() const { return static_cast<int>(ymd().year()); }
unsigned Date::month() const { return static_cast<unsigned>(ymd().month()); }
unsigned Date::day() const { return static_cast<unsigned>(ymd().day()); }

unsigned Date::weekday() const { return chr::weekday{chr::sys_days{chr::days{days_}}}.c_encoding(); }

int Date::month_index() const {
    const auto v = ymd();
    return static_cast<int>(v.year()) * 12 + static_cast<int>(static_cast<unsigned>(v.month())) - 1;
}

std::string Date::to_string() const {
    const auto v = ymd();
    char buf[16];
    std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(v.year()), static_cast<unsigned>(v.month()),
                  static_cast<unsigned>(v.day()));
    return buf;
}

}  // namespace fearfactor
