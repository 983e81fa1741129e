#pragma once

#include <cstddef>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace skn {

// ---------------------------------------------------------------------------
// Types
// ---------------------------------------------------------------------------

/// Type expression: Unit | (Sum a b) | (Prod a b) | type variable.
/// Immutable; copies share structure.
class Type {
 public:
  enum class Kind { unit, sum, prod, var };

  Type();  // Unit

  static Type unit();
  static Type sum(Type left, Type right);
  static Type prod(Type first, Type second);
  static Type var(std::string name);

  Kind kind() const;
  bool is_unit() const { return kind() == Kind::unit; }
  bool is_sum() const { return kind() == Kind::sum; }
  bool is_prod() const { return kind() == Kind::prod; }
  bool is_var() const { return kind() == Kind::var; }

  /// Left summand / first factor.
  const Type& left() const;
  /// Right summand / second factor.
  const Type& right() const;
  /// Type variable name.
  const std::string& name() const;

  /// True when no type variable occurs anywhere inside.
  bool is_concrete() const;

  std::string str() const;

  friend bool operator==(const Type& a, const Type& b);

 private:
  struct Node;
  explicit Type(std::shared_ptr<const Node> node) : node_(std::move(node)) {}
  std::shared_ptr<const Node> node_;
};

/// Type variables of `t` in first-occurrence order, without duplicates.
std::vector<std::string> free_type_vars(const Type& t);

// ---------------------------------------------------------------------------
// Values
// ---------------------------------------------------------------------------

/// Value expression: sole | (left v) | (right v) | (pair v v) | variable.
/// `left`/`right` may carry the full Sum type as an annotation; source code
/// usually omits it and the type checker fills it in.
///
/// operator== compares values and ignores annotations. Use `identical` for
/// syntax-level comparison.
class Value {
 public:
  enum class Kind { sole, left, right, pair, var };

  Value();  // sole

  static Value sole();
  static Value left(Value inner, std::optional<Type> annot = std::nullopt);
  static Value right(Value inner, std::optional<Type> annot = std::nullopt);
  static Value pair(Value first, Value second);
  static Value var(std::string name);

  Kind kind() const;
  bool is_var() const { return kind() == Kind::var; }

  /// Payload of left/right.
  const Value& inner() const;
  const Value& first() const;
  const Value& second() const;
  const std::optional<Type>& annotation() const;
  const std::string& name() const;

  /// No variables anywhere inside.
  bool is_concrete() const;

  friend bool operator==(const Value& a, const Value& b);

 private:
  struct Node;
  explicit Value(std::shared_ptr<const Node> node) : node_(std::move(node)) {}
  std::shared_ptr<const Node> node_;
};

bool identical(const Value& a, const Value& b);

/// Variables of `v` in first-occurrence order, without duplicates.
std::vector<std::string> free_vars(const Value& v);

/// Canonical rendering of a concrete value, annotations omitted:
/// `sole`, `(left sole)`, `(pair (right sole) sole)`.
/// Throws std::invalid_argument for non-concrete values.
std::string render_value(const Value& v);

/// Source rendering of any value; annotations are printed when present.
std::string render_value_source(const Value& v);

// ---------------------------------------------------------------------------
// Goals
// ---------------------------------------------------------------------------

struct CallInfo;  // typecheck.hpp

class Goal {
 public:
  struct Conj;
  struct Disj;
  struct Fresh;
  struct Unify;
  struct Disunify;
  struct Call;
  struct Factor;
  using Node = std::variant<Conj, Disj, Fresh, Unify, Disunify, Call, Factor>;

  Goal();  // succeed

  static Goal conj(Goal lhs, Goal rhs);
  static Goal disj(Goal lhs, Goal rhs);
  static Goal fresh(std::string var, Type type, Goal body);
  static Goal unify(Value lhs, Value rhs, std::optional<Type> type = {});
  static Goal disunify(Value lhs, Value rhs, std::optional<Type> type = {});
  static Goal call(std::string rel, std::vector<Value> args,
                   std::shared_ptr<const CallInfo> info = nullptr);
  static Goal factor(std::string literal);

  /// Right-nested conjunction/disjunction of two or more goals.
  static Goal conj_all(const std::vector<Goal>& goals);
  static Goal disj_all(const std::vector<Goal>& goals);
  /// A goal that always has weight one.
  static Goal succeed();

  const Node& node() const;

  template <class T>
  const T* as() const;

 private:
  explicit Goal(std::shared_ptr<const Node> node) : node_(std::move(node)) {}
  std::shared_ptr<const Node> node_;
};

struct Goal::Conj {
  Goal lhs, rhs;
};
struct Goal::Disj {
  Goal lhs, rhs;
};
struct Goal::Fresh {
  std::string var;
  Type type;
  Goal body;
};
struct Goal::Unify {
  Value lhs, rhs;
  std::optional<Type> type;  // resolved argument type, set by the checker
};
struct Goal::Disunify {
  Value lhs, rhs;
  std::optional<Type> type;
};
struct Goal::Call {
  std::string rel;
  std::vector<Value> args;
  std::shared_ptr<const CallInfo> info;  // set by the checker
};
struct Goal::Factor {
  std::string literal;
};

inline const Goal::Node& Goal::node() const { return *node_; }

template <class T>
const T* Goal::as() const {
  return std::get_if<T>(node_.get());
}

bool identical(const Goal& a, const Goal& b);

// ---------------------------------------------------------------------------
// Relations and programs
// ---------------------------------------------------------------------------

struct Param {
  std::string name;
  Type type;
};

struct RelationDef {
  std::string name;
  std::vector<std::string> tyvars;
  std::vector<Param> params;
  Goal body;

  bool is_polymorphic() const { return !tyvars.empty(); }
};

struct Program {
  std::vector<RelationDef> relations;

  const RelationDef* find(std::string_view name) const;
};

bool identical(const RelationDef& a, const RelationDef& b);
bool identical(const Program& a, const Program& b);

// ---------------------------------------------------------------------------
// Parsing and printing
// ---------------------------------------------------------------------------

struct SourceLocation {
  int line = 1;
  int column = 1;
};

class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& message, SourceLocation where);
  SourceLocation where() const { return where_; }

 private:
  SourceLocation where_;
};

/// Parses `.skn` source. n-ary conj/disj are right-nested, multi-binder fresh
/// is nested, a fresh binder that shadows an enclosing variable is renamed,
/// and an omitted forall list is collected from the parameter types.
Program parse_program(std::string_view text);

/// Parses a single type or value, e.g. for command-line arguments and tests.
Type parse_type(std::string_view text);
Value parse_value(std::string_view text);

std::string render_goal(const Goal& g, int indent = 0);
std::string render_relation(const RelationDef& rel);
/// Source text that parse_program maps back to an identical Program.
std::string render_program(const Program& p);

}  // namespace skn
