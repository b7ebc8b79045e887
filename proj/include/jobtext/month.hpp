#pragma once

#include <compare>
#include <cstdio>
#include <optional>
#include <string>
#include <string_view>

namespace jobtext {

/// Calendar month. No days, no time zones.
class YearMonth {
 public:
  constexpr YearMonth() = default;
  constexpr YearMonth(int year, int month) : ordinal_(year * 12 + (month - 1)) {}

  static constexpr YearMonth from_ordinal(int ordinal) {
    YearMonth m;
    m.ordinal_ = ordinal;
    return m;
  }

  /// Accepts "YYYY-MM" and anything longer that starts with it ("YYYY-MM-DD",
  /// ISO timestamps); the day part is truncated after a light sanity check.
  static std::optional<YearMonth> parse(std::string_view s) {
    auto digits = [](std::string_view v) {
      for (char c : v)
        if (c < '0' || c > '9') return false;
      return !v.empty();
    };
    if (s.size() < 7 || s[4] != '-') return std::nullopt;
    auto y = s.substr(0, 4);
    auto m = s.substr(5, 2);
    if (!digits(y) || !digits(m)) return std::nullopt;
    if (s.size() > 7) {
      if (s[7] != '-' || s.size() < 10 || !digits(s.substr(8, 2))) return std::nullopt;
      const int day = (s[8] - '0') * 10 + (s[9] - '0');
      if (day < 1 || day > 31) return std::nullopt;
    }
    const int year = (y[0] - '0') * 1000 + (y[1] - '0') * 100 + (y[2] - '0') * 10 + (y[3] - '0');
    const int month = (m[0] - '0') * 10 + (m[1] - '0');
    if (month < 1 || month > 12) return std::nullopt;
    return YearMonth(year, month);
  }

  [[nodiscard]] constexpr int year() const { return ordinal_ / 12; }
  [[nodiscard]] constexpr int month() const { return ordinal_ % 12 + 1; }
  [[nodiscard]] constexpr int ordinal() const { return ordinal_; }

  [[nodiscard]] constexpr YearMonth plus(int months) const { return from_ordinal(ordinal_ + months); }
  [[nodiscard]] constexpr YearMonth minus(int months) const { return from_ordinal(ordinal_ - months); }

  /// Inclusive month count from a to b (0 when b < a).
  static constexpr int span(YearMonth a, YearMonth b) { return b.ordinal_ < a.ordinal_ ? 0 : b.ordinal_ - a.ordinal_ + 1; }

  [[nodiscard]] std::string str() const {
    char buf[16];
    std::snprintf(buf, sizeof buf, "%04d-%02d", year(), month());
    return buf;
  }

  constexpr auto operator<=>(const YearMonth&) const = default;

 private:
  int ordinal_ = 0;
};

}  // namespace jobtext
