#pragma once

#include <compare>
#include <cstdint>
#include <cstdlib>
#include <optional>
#include <string>

namespace kerrsym {

/// Exact half-integer, stored as twice its value.
class HalfInteger {
 public:
  constexpr HalfInteger() = default;

  static constexpr HalfInteger from_twice(std::int64_t twice) { return HalfInteger(twice); }
  static constexpr HalfInteger from_int(std::int64_t v) { return HalfInteger(2 * v); }

  [[nodiscard]] constexpr std::int64_t twice() const noexcept { return twice_; }
  [[nodiscard]] constexpr double value() const noexcept { return 0.5 * static_cast<double>(twice_); }
  [[nodiscard]] constexpr bool is_integer() const noexcept { return twice_ % 2 == 0; }
  [[nodiscard]] constexpr HalfInteger abs() const noexcept { return HalfInteger(twice_ < 0 ? -twice_ : twice_); }

  constexpr HalfInteger operator-() const noexcept { return HalfInteger(-twice_); }
  friend constexpr HalfInteger operator+(HalfInteger a, HalfInteger b) { return HalfInteger(a.twice_ + b.twice_); }
  friend constexpr HalfInteger operator-(HalfInteger a, HalfInteger b) { return HalfInteger(a.twice_ - b.twice_); }
  friend constexpr auto operator<=>(HalfInteger, HalfInteger) = default;

  [[nodiscard]] std::string str() const {
    if (is_integer()) return std::to_string(twice_ / 2);
    return std::to_string(twice_) + "/2";
  }

 private:
  constexpr explicit HalfInteger(std::int64_t twice) : twice_(twice) {}
  std::int64_t twice_ = 0;
};

/// Quasi-spin labels of an eigenstate. parity is (-1)^n for Fock states.
struct QuasiSpinLabel {
  HalfInteger j;
  HalfInteger m;
  int parity = +1;
  std::optional<std::int64_t> v;
  std::optional<int> pi_prime;

  [[nodiscard]] bool valid() const noexcept {
    return m.abs() <= j && (j - m).is_integer();
  }
};

/// (-1)^n as +1 / -1.
constexpr int parity_sign(std::int64_t n) noexcept { return (n % 2 == 0) ? +1 : -1; }

}  // namespace kerrsym
