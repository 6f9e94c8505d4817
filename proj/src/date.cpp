#include "rxsentinel/date.hpp"

#include <cstdio>

#include "rxsentinel/errors.hpp"

namespace rxsentinel {

namespace chr = std::chrono;

Date::Date(int y, unsigned m, unsigned d) {
  const chr::year_month_day ymd{chr::year{y}, chr::month{m}, chr::day{d}};
  if (!ymd.ok()) {
    throw ParseError(0, "invalid calendar date");
  }
  days_ = chr::sys_days{ymd};
}

Date Date::parse(std::string_view text) {
  auto digits = [&](std::size_t from, std::size_t count) {
    int value = 0;
    for (std::size_t i = from; i < from + count; ++i) {
      const char c = text[i];
      if (c < '0' || c > '9') {
        throw ParseError(0, "bad date '" + std::string(text) + "'");
      }
      value = value * 10 + (c - '0');
    }
    return value;
  };
  if (text.size() != 10 || text[4] != '-' || text[7] != '-') {
    throw ParseError(0, "bad date '" + std::string(text) + "'");
  }
  const chr::year_month_day ymd{chr::year{digits(0, 4)},
                                chr::month{static_cast<unsigned>(digits(5, 2))},
                                chr::day{static_cast<unsigned>(digits(8, 2))}};
  if (!ymd.ok()) {
    throw ParseError(0, "bad date '" + std::string(text) + "'");
  }
  return Date{chr::sys_days{ymd}};
}

std::string Date::to_string() const {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", year(), month(), day());
  return buf;
}

int Date::year() const { return static_cast<int>(chr::year_month_day{days_}.year()); }

unsigned Date::month() const {
  return static_cast<unsigned>(chr::year_month_day{days_}.month());
}

unsigned Date::day() const {
  return static_cast<unsigned>(chr::year_month_day{days_}.day());
}

}  // namespace rxsentinel
