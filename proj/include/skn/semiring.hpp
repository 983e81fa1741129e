#pragma once

#include <compare>
#include <stdexcept>
#include <string>
#include <string_view>

namespace skn {

/// One element of a semiring carrier. The carrier a weight belongs to is
/// fixed by the Semiring that produced it: booleans are 0.0/1.0, reals are
/// finite doubles, min-tropical weights are doubles extended with +inf.
struct Weight {
  double value = 0.0;

  friend auto operator<=>(const Weight&, const Weight&) = default;
};

enum class SemiringKind { boolean, real, min_tropical };

class WeightLiteralError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A commutative semiring with a zero (additive identity, multiplicative
/// annihilator) and a one (multiplicative identity). Values are immutable and
/// cheap to copy.
class Semiring {
 public:
  static Semiring boolean();
  static Semiring real(double equality_tolerance = 1e-9);
  static Semiring min_tropical();

  /// Accepts "boolean", "real" and "min-tropical". Throws std::invalid_argument.
  static Semiring from_name(std::string_view name);

  SemiringKind kind() const { return kind_; }
  std::string_view name() const;

  Weight zero() const;
  Weight one() const;
  Weight add(Weight a, Weight b) const;
  Weight mul(Weight a, Weight b) const;

  bool idempotent_add() const { return kind_ != SemiringKind::real; }

  /// Tolerance for fixpoint convergence. Zero means exact comparison.
  double equality_tolerance() const { return tolerance_; }
  Semiring with_tolerance(double tolerance) const;

  /// Equality used by the fixpoint driver.
  bool equal(Weight a, Weight b) const;

  bool contains(Weight w) const;

  /// boolean: true|false|#t|#f|0|1; real: decimal; min-tropical: decimal or inf.
  Weight parse_literal(std::string_view text) const;

  /// Inverse of parse_literal: true/false, shortest round-trip decimal, or inf.
  std::string render(Weight w) const;

  friend bool operator==(const Semiring& a, const Semiring& b) {
    return a.kind_ == b.kind_;
  }

 private:
  Semiring(SemiringKind kind, double tolerance)
      : kind_(kind), tolerance_(tolerance) {}

  SemiringKind kind_;
  double tolerance_;
};

}  // namespace skn
