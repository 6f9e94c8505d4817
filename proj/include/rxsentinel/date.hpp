#pragma once

#include <chrono>
#include <compare>
#include <string>
#include <string_view>

namespace rxsentinel {

/// Calendar date with day arithmetic. Stored as days since 1970-01-01.
class Date {
 public:
  constexpr Date() = default;
  constexpr explicit Date(std::chrono::sys_days days) : days_(days) {}
  Date(int year, unsigned month, unsigned day);

  /// Parses strict `YYYY-MM-DD`; throws ParseError on anything else.
  static Date parse(std::string_view text);

  std::string to_string() const;

  int year() const;
  unsigned month() const;
  unsigned day() const;

  long serial() const { return days_.time_since_epoch().count(); }

  Date plus_days(long n) const { return Date{days_ + std::chrono::days{n}}; }
  long days_until(const Date& other) const { return other.serial() - serial(); }

  friend auto operator<=>(const Date&, const Date&) = default;

 private:
  std::chrono::sys_days days_{};
};

}  // namespace rxsentinel
