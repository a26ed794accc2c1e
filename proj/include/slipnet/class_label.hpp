#pragma once

#include <compare>
#include <cstdint>
#include <functional>
#include <string>

namespace slipnet {

// Observed terrain class: either an annotated soil id or a pseudo-class
// created for terrain outside the annotation set. Printed as "S<id>" and
// "U<k>" (k counts from 1).
class ClassLabel {
 public:
  constexpr ClassLabel() = default;

  static constexpr ClassLabel annotated(std::int32_t soil_id) { return ClassLabel(soil_id); }
  static constexpr ClassLabel pseudo(std::int32_t k) { return ClassLabel(kPseudoBase + k); }
  static constexpr ClassLabel none() { return ClassLabel(); }

  constexpr bool valid() const { return value_ >= 0; }
  constexpr bool is_pseudo() const { return value_ >= kPseudoBase; }
  constexpr std::int32_t value() const { return value_; }
  // Soil id for annotated labels, k for pseudo labels.
  constexpr std::int32_t number() const { return is_pseudo() ? value_ - kPseudoBase : value_; }

  std::string str() const;
  // Inverse of str(); throws InvalidArgument on malformed text.
  static ClassLabel parse(const std::string& text);

  auto operator<=>(const ClassLabel&) const = default;

 private:
  static constexpr std::int32_t kPseudoBase = 1 << 20;
  constexpr explicit ClassLabel(std::int32_t v) : value_(v) {}
  std::int32_t value_ = -1;
};

}  // namespace slipnet

template <>
struct std::hash<slipnet::ClassLabel> {
  std::size_t operator()(const slipnet::ClassLabel& l) const noexcept {
    return std::hash<std::int32_t>{}(l.value());
  }
};
