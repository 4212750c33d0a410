#pragma once

#include <bit>
#include <cstdint>

namespace cgemm {

// Brain float 16: the upper half of an IEEE binary32. Equality is bitwise.
struct Bf16 {
  std::uint16_t bits = 0;

  static constexpr Bf16 from_bits(std::uint16_t b) noexcept { return Bf16{b}; }

  // Round-to-nearest-even; NaN stays NaN (quieted).
  static Bf16 from_float(float f) noexcept {
    const auto u = std::bit_cast<std::uint32_t>(f);
    if ((u & 0x7F800000u) == 0x7F800000u && (u & 0x007FFFFFu) != 0) {
      return Bf16{static_cast<std::uint16_t>((u >> 16) | 0x0040u)};
    }
    const std::uint32_t bias = 0x7FFFu + ((u >> 16) & 1u);
    return Bf16{static_cast<std::uint16_t>((u + bias) >> 16)};
  }

  [[nodiscard]] float to_float() const noexcept {
    return std::bit_cast<float>(static_cast<std::uint32_t>(bits) << 16);
  }

  [[nodiscard]] bool is_nan() const noexcept {
    return (bits & 0x7F80u) == 0x7F80u && (bits & 0x007Fu) != 0;
  }
  [[nodiscard]] bool is_zero() const noexcept { return (bits & 0x7FFFu) == 0; }
  [[nodiscard]] bool sign() const noexcept { return (bits & 0x8000u) != 0; }

  friend constexpr bool operator==(Bf16, Bf16) = default;
};

}  // namespace cgemm
