#include "skn/semiring.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <limits>

namespace skn {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

bool parse_decimal(std::string_view text, double& out) {
  if (text.empty()) return false;
  const char* first = text.data();
  const char* last = text.data() + text.size();
  if (*first == '+') ++first;
  auto [ptr, ec] = std::from_chars(first, last, out);
  return ec == std::errc() && ptr == last && std::isfinite(out);
}

}  // namespace

Semiring Semiring::boolean() { return Semiring(SemiringKind::boolean, 0.0); }

Semiring Semiring::real(double equality_tolerance) {
  return Semiring(SemiringKind::real, equality_tolerance);
}

Semiring Semiring::min_tropical() {
  return Semiring(SemiringKind::min_tropical, 0.0);
}

Semiring Semiring::from_name(std::string_view name) {
  if (name == "boolean") return boolean();
  if (name == "real") return real();
  if (name == "min-tropical") return min_tropical();
  throw std::invalid_argument(fmt::format(
      "unknown semiring '{}' (expected boolean, real or min-tropical)", name));
}

std::string_view Semiring::name() const {
  switch (kind_) {
    case SemiringKind::boolean:
      return "boolean";
    case SemiringKind::real:
      return "real";
    case SemiringKind::min_tropical:
      return "min-tropical";
  }
  return "?";
}

Weight Semiring::zero() const {
  return kind_ == SemiringKind::min_tropical ? Weight{kInf} : Weight{0.0};
}

Weight Semiring::one() const {
  return kind_ == SemiringKind::min_tropical ? Weight{0.0} : Weight{1.0};
}

Weight Semiring::add(Weight a, Weight b) const {
  switch (kind_) {
    case SemiringKind::boolean:
      return Weight{(a.value != 0.0 || b.value != 0.0) ? 1.0 : 0.0};
    case SemiringKind::real:
      return Weight{a.value + b.value};
    case SemiringKind::min_tropical:
      return Weight{std::min(a.value, b.value)};
  }
  return a;
}

Weight Semiring::mul(Weight a, Weight b) const {
  switch (kind_) {
    case SemiringKind::boolean:
      return Weight{(a.value != 0.0 && b.value != 0.0) ? 1.0 : 0.0};
    case SemiringKind::real:
      // Keep 0 absorbing once a divergent sum has overflowed to inf.
      if (a.value == 0.0 || b.value == 0.0) return Weight{0.0};
      return Weight{a.value * b.value};
    case SemiringKind::min_tropical:
      // inf is the annihilator even against a (non-carrier) -inf operand.
      if (a.value == kInf || b.value == kInf) return Weight{kInf};
      return Weight{a.value + b.value};
  }
  return a;
}

Semiring Semiring::with_tolerance(double tolerance) const {
  if (!(tolerance >= 0.0)) {
    throw std::invalid_argument("equality tolerance must be non-negative");
  }
  return Semiring(kind_, tolerance);
}

bool Semiring::equal(Weight a, Weight b) const {
  if (a.value == b.value) return true;
  if (tolerance_ == 0.0 || !std::isfinite(a.value) || !std::isfinite(b.value)) {
    return false;
  }
  const double scale =
      std::max({1.0, std::fabs(a.value), std::fabs(b.value)});
  return std::fabs(a.value - b.value) <= tolerance_ * scale;
}

bool Semiring::contains(Weight w) const {
  switch (kind_) {
    case SemiringKind::boolean:
      return w.value == 0.0 || w.value == 1.0;
    case SemiringKind::real:
      return std::isfinite(w.value);
    case SemiringKind::min_tropical:
      return std::isfinite(w.value) || w.value == kInf;
  }
  return false;
}

Weight Semiring::parse_literal(std::string_view text) const {
  switch (kind_) {
    case SemiringKind::boolean:
      if (text == "true" || text == "#t" || text == "1") return Weight{1.0};
      if (text == "false" || text == "#f" || text == "0") return Weight{0.0};
      break;
    case SemiringKind::real: {
      double v = 0.0;
      if (parse_decimal(text, v)) return Weight{v};
      break;
    }
    case SemiringKind::min_tropical: {
      if (text == "inf" || text == "+inf") return Weight{kInf};
      double v = 0.0;
      if (parse_decimal(text, v)) return Weight{v};
      break;
    }
  }
  throw WeightLiteralError(fmt::format(
      "weight literal '{}' is not an element of the {} semiring", text,
      name()));
}

std::string Semiring::render(Weight w) const {
  if (kind_ == SemiringKind::boolean) return w.value != 0.0 ? "true" : "false";
  if (w.value == kInf) return "inf";
  if (w.value == -kInf) return "-inf";
  std::array<char, 64> buf{};
  auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), w.value);
  return std::string(buf.data(), ptr);
}

}  // namespace skn
