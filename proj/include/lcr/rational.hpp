#pragma once

#include <compare>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace lcr {

/// Exact fraction over 64-bit integers, always stored in lowest terms with a
/// positive denominator. Arithmetic that would overflow throws std::overflow_error.
class Rational {
 public:
  Rational() = default;
  Rational(std::int64_t value) : num_(value) {}  // NOLINT(implicit)
  Rational(std::int64_t num, std::int64_t den);

  std::int64_t num() const { return num_; }
  std::int64_t den() const { return den_; }
  bool is_integer() const { return den_ == 1; }
  double to_double() const { return static_cast<double>(num_) / static_cast<double>(den_); }

  /// "a" when the denominator is one, otherwise "a/b".
  std::string str() const;

  Rational operator+(const Rational& o) const;
  Rational operator-(const Rational& o) const;
  Rational operator*(const Rational& o) const;
  Rational operator/(const Rational& o) const;
  Rational operator-() const { return Rational(-num_, den_); }

  bool operator==(const Rational& o) const = default;
  std::strong_ordering operator<=>(const Rational& o) const;

 private:
  static Rational from_wide(__int128 num, __int128 den);

  std::int64_t num_ = 0;
  std::int64_t den_ = 1;
};

/// Parses an optionally signed run of decimal digits. Returns nullopt on any
/// other character or on int64 overflow.
std::optional<std::int64_t> parse_int64(std::string_view text);

}  // namespace lcr
