#pragma once

#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "skn/syntax.hpp"

namespace skn {

/// Type variable substitution.
using Subst = std::map<std::string, Type>;

Type apply_subst(const Subst& s, const Type& t);

/// Ordered variable typing, x : τ. Later bindings shadow earlier ones.
using Bindings = std::vector<std::pair<std::string, Type>>;

struct TypeEnv {
  Bindings vars;
  std::vector<std::string> tyvars;

  const Type* lookup(std::string_view name) const;
  bool has_tyvar(std::string_view name) const;
  TypeEnv extended(std::string name, Type type) const;
};

struct RelSig {
  std::vector<std::string> tyvars;
  std::vector<Type> params;
};

using RelEnv = std::map<std::string, RelSig, std::less<>>;

RelEnv rel_env_of(const Program& p);

class TypeError : public std::runtime_error {
 public:
  explicit TypeError(const std::string& message) : std::runtime_error(message) {}
};

/// All per-relation failures of check_program, one message each.
class ProgramTypeError : public TypeError {
 public:
  explicit ProgramTypeError(std::vector<std::string> errors);
  const std::vector<std::string>& errors() const { return errors_; }

 private:
  std::vector<std::string> errors_;
};

class NonGenericCall : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// What the checker knows about one call site.
struct CallInfo {
  int call_id = 0;
  /// Callee tyvar -> caller type.
  Subst subst;
  /// Caller variable -> type over the callee's tyvars, in first-occurrence
  /// order. Empty optional when the call is not generic; see reason.
  std::optional<Bindings> generic_env;
  std::string nongeneric_reason;
};

void check_type_valid(const TypeEnv& env, const Type& t);

/// Type of `v`. When `expected` is given it also drives inference of
/// unannotated left/right. Throws TypeError.
Type type_of_value(const TypeEnv& env, const Value& v,
                   const std::optional<Type>& expected = std::nullopt);

/// Same as type_of_value, and returns `v` with every left/right annotated.
Value annotate_value(const TypeEnv& env, const Value& v, const Type& expected);

/// One-way matching of declared parameter types against argument types.
Subst infer_call_subst(const RelSig& callee, const std::vector<Type>& arg_types);

/// Generic environment of a call: each variable free in the arguments gets the
/// callee-side type it sits at. Throws NonGenericCall.
Bindings generic_arg_env(const Goal::Call& call, const RelSig& callee,
                         const TypeEnv& caller);

/// Checks `g` and returns it with resolved types on ==, =/= and calls.
Goal check_goal(const RelEnv& rels, const TypeEnv& env, const Goal& g);

RelationDef check_relation(const RelEnv& rels, const RelationDef& rel);

/// Checks every relation against the signatures of all of them. Throws
/// ProgramTypeError listing every failure.
Program check_program(const Program& p);

}  // namespace skn
