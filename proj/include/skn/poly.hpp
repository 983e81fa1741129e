#pragma once

#include <cstddef>
#include <map>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "skn/eval.hpp"
#include "skn/semiring.hpp"
#include "skn/syntax.hpp"
#include "skn/typecheck.hpp"

namespace skn {

// ---------------------------------------------------------------------------
// Shells and holes
// ---------------------------------------------------------------------------

/// The part of a value that does not sit at a type variable, with holes where
/// type variables do.
struct Shell {
  enum class Kind { sole, left, right, pair, hole };

  Kind kind = Kind::sole;
  std::string tyvar;         // hole
  std::vector<Shell> parts;  // one for left/right, two for pair

  static Shell sole() { return {}; }
  static Shell left(Shell s);
  static Shell right(Shell s);
  static Shell pair(Shell a, Shell b);
  static Shell hole(std::string alpha);

  std::string str() const;
  friend bool operator==(const Shell&, const Shell&) = default;
};

/// Throws std::invalid_argument when `v` does not fit the shape of `t`.
Shell shell_of(const Type& t, const Value& v);

/// Values at the `alpha` holes of `v`, in-order.
std::vector<Value> holes_of(const std::string& alpha, const Type& t, const Value& v);

using EnvShell = std::vector<std::pair<std::string, Shell>>;

EnvShell envshell(const Bindings& delta, const ValueEnv& env);
std::vector<Value> envholes(const std::string& alpha, const Bindings& delta,
                            const ValueEnv& env);

/// Same shells, and for each type variable the hole pairs that are equal
/// under env1 are exactly those equal under env2.
bool eqpat_check(const Bindings& delta, const ValueEnv& env1, const ValueEnv& env2);

/// Picks v2 : sigma2(tau) so that env1 + {x: v1} and env2 + {x: v2} keep the
/// same equality pattern under delta, x:tau: matched holes reuse the partner's
/// value, new holes take a value not yet used. Throws std::runtime_error when
/// sigma2 is too small to supply one.
Value eqpat_extend(const Bindings& delta, const Subst& sigma2, const ValueEnv& env1,
                   const ValueEnv& env2, const Type& tau, const Value& v1);

// ---------------------------------------------------------------------------
// Occurrence counts and sizes
// ---------------------------------------------------------------------------

/// Sum takes the larger side, Prod adds.
std::size_t count_type(const std::string& alpha, const Type& t);
std::size_t count_env(const std::string& alpha, const Bindings& delta);
/// Largest count_env over every environment reached under fresh binders.
std::size_t count_goal(const std::string& alpha, const Goal& g, const Bindings& delta);
std::size_t count_relation(const std::string& alpha, const RelationDef& rel);

/// Right-nested Sum of n Units; 1 gives Unit.
Type canonical_type(std::size_t n);
bool is_canonical(const Type& t);

/// One size per type variable of a relation, in declaration order.
using SizeSubst = std::vector<std::size_t>;

/// max(1, count_relation) per type variable.
SizeSubst smallest_large_enough(const RelationDef& rel);

/// |t| with each type variable replaced by a type of the given size.
/// Throws std::overflow_error past 2^40.
std::size_t size_under(const Type& t, const std::map<std::string, std::size_t>& sizes);

struct InstanceKey {
  std::string rel;
  SizeSubst sizes;  // empty for monomorphic relations

  /// `R` for monomorphic relations, `R$<3,4>` otherwise.
  std::string mangled() const;
  friend auto operator<=>(const InstanceKey&, const InstanceKey&) = default;
};

Subst canonical_subst(const RelationDef& rel, const SizeSubst& sizes);

/// Applies `sigma` to parameter, fresh and annotation types and renames the
/// relation. Resolved types and call info are dropped; check the result again.
RelationDef instantiate_relation(const RelationDef& rel, const Subst& sigma,
                                 std::string name);

// ---------------------------------------------------------------------------
// Code generation
// ---------------------------------------------------------------------------

/// Hands out variable names that collide with nothing already in use.
class NameSupply {
 public:
  NameSupply() = default;
  explicit NameSupply(const RelationDef& rel);
  void reserve(const std::string& name) { used_.insert(name); }
  std::string fresh(const std::string& hint = "");

 private:
  std::set<std::string> used_;
  int counter_ = 0;
};

/// Goal over vars1 (typed sigma1(delta)) and vars2 (typed sigma2(delta)) with
/// weight one exactly when the two environments share an equality pattern.
/// Hole slots of each type variable are shared between Sum branches.
Goal enforce_eqpat_codegen(const Bindings& delta, const std::vector<std::string>& vars1,
                           const std::vector<std::string>& vars2, const Subst& sigma1,
                           const Subst& sigma2, NameSupply& names);

/// Goal with weight one exactly when vars2 is the image of vars1 under the
/// index-preserving map from sigma1 to sigma2 types. Sizes must agree.
Goal coerce_codegen(const Bindings& delta, const std::vector<std::string>& vars1,
                    const std::vector<std::string>& vars2, const Subst& sigma1,
                    const Subst& sigma2, NameSupply& names);

/// A call with every type-variable position holding a plain variable and no
/// variable at two different callee types.
struct NormalizedCall {
  std::vector<std::pair<std::string, Type>> hoisted;  // fresh vars at caller types
  std::vector<Goal> bindings;                         // (== t v) per hoisted var
  Goal::Call call;
  Bindings generic_env;

  /// Wraps `inner` (which uses `call`) with the hoisted variables.
  Goal wrap(Goal inner) const;
};

NormalizedCall normalize_call(const Goal::Call& call, const RelSig& callee,
                              const TypeEnv& caller, NameSupply& names);

class LoweringError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};
class InstanceExplosion : public LoweringError {
 public:
  using LoweringError::LoweringError;
};
class NonIdempotentSemiring : public LoweringError {
 public:
  using LoweringError::LoweringError;
};
class NotLargeEnough : public LoweringError {
 public:
  using LoweringError::LoweringError;
};

/// Call `target` (an instance with parameter types sigma2(callee params)) in
/// place of `call`, tying arguments together with enforce_eqpat. Throws
/// NotLargeEnough when a size of sigma1 is below the matching size of sigma2,
/// NonIdempotentSemiring when `k` lacks idempotent addition.
Goal compile_call(const Goal::Call& call, const RelSig& callee, const TypeEnv& caller,
                  const Subst& sigma2, const std::string& target, const Semiring& k,
                  NameSupply& names);

/// Same shape as compile_call, but for equal sizes: arguments are carried
/// across by the index-preserving bijection.
Goal coerce_call(const Goal::Call& call, const RelSig& callee, const TypeEnv& caller,
                 const Subst& sigma2, const std::string& target, NameSupply& names);

// ---------------------------------------------------------------------------
// Lowering
// ---------------------------------------------------------------------------

enum class PolyMode { monomorphize, large_enough };

struct LowerOptions {
  std::size_t instance_cap = 10000;
  /// Largest table, and largest fresh-variable domain, an instance may have.
  std::size_t cell_cap = std::size_t{1} << 22;
};

struct LowerResult {
  Program program;  // checked, monomorphic
  std::vector<InstanceKey> instances;
  /// Polymorphic relations whose large-enough instance may serve calls.
  std::set<std::string> eligible;
  std::vector<std::string> notes;
};

LowerResult lower_program(const Program& checked, PolyMode mode, const Semiring& k,
                          const LowerOptions& options = {});

std::vector<InstanceKey> collect_instances(const Program& checked, PolyMode mode,
                                           const Semiring& k,
                                           const LowerOptions& options = {});

}  // namespace skn
