#include "skn/syntax.hpp"

#include <fmt/format.h>

#include <algorithm>

namespace skn {

// ---------------------------------------------------------------------------
// Type
// ---------------------------------------------------------------------------

struct Type::Node {
  Kind kind = Kind::unit;
  Type left_, right_;  // unused for unit/var
  std::string name;
  bool concrete = true;

  Node() = default;
  Node(Kind k, Type l, Type r)
      : kind(k),
        left_(std::move(l)),
        right_(std::move(r)),
        concrete(left_.is_concrete() && right_.is_concrete()) {}
  Node(std::string n) : kind(Kind::var), name(std::move(n)), concrete(false) {}
};

Type::Type() : node_(nullptr) {}

Type Type::unit() { return Type(); }

Type Type::sum(Type left, Type right) {
  return Type(
      std::make_shared<const Node>(Kind::sum, std::move(left), std::move(right)));
}

Type Type::prod(Type first, Type second) {
  return Type(std::make_shared<const Node>(Kind::prod, std::move(first),
                                           std::move(second)));
}

Type Type::var(std::string name) {
  return Type(std::make_shared<const Node>(std::move(name)));
}

Type::Kind Type::kind() const { return node_ ? node_->kind : Kind::unit; }

const Type& Type::left() const {
  if (!node_ || node_->kind == Kind::var) {
    throw std::logic_error("Type::left on a type without components");
  }
  return node_->left_;
}

const Type& Type::right() const {
  if (!node_ || node_->kind == Kind::var) {
    throw std::logic_error("Type::right on a type without components");
  }
  return node_->right_;
}

const std::string& Type::name() const {
  if (!node_ || node_->kind != Kind::var) {
    throw std::logic_error("Type::name on a non-variable type");
  }
  return node_->name;
}

bool Type::is_concrete() const { return !node_ || node_->concrete; }

std::string Type::str() const {
  switch (kind()) {
    case Kind::unit:
      return "Unit";
    case Kind::sum:
      return fmt::format("(Sum {} {})", left().str(), right().str());
    case Kind::prod:
      return fmt::format("(Prod {} {})", left().str(), right().str());
    case Kind::var:
      return name();
  }
  return "?";
}

bool operator==(const Type& a, const Type& b) {
  if (a.node_ == b.node_) return true;
  if (a.kind() != b.kind()) return false;
  switch (a.kind()) {
    case Type::Kind::unit:
      return true;
    case Type::Kind::var:
      return a.name() == b.name();
    default:
      return a.left() == b.left() && a.right() == b.right();
  }
}

namespace {
void collect_tyvars(const Type& t, std::vector<std::string>& out) {
  switch (t.kind()) {
    case Type::Kind::unit:
      return;
    case Type::Kind::var:
      if (std::find(out.begin(), out.end(), t.name()) == out.end()) {
        out.push_back(t.name());
      }
      return;
    default:
      collect_tyvars(t.left(), out);
      collect_tyvars(t.right(), out);
  }
}
}  // namespace

std::vector<std::string> free_type_vars(const Type& t) {
  std::vector<std::string> out;
  collect_tyvars(t, out);
  return out;
}

// ---------------------------------------------------------------------------
// Value
// ---------------------------------------------------------------------------

struct Value::Node {
  Kind kind = Kind::sole;
  Value a, b;
  std::optional<Type> annot;
  std::string name;
  bool concrete = true;
};

Value::Value() : node_(nullptr) {}

Value Value::sole() { return Value(); }

Value Value::left(Value inner, std::optional<Type> annot) {
  auto n = std::make_shared<Node>();
  n->kind = Kind::left;
  n->concrete = inner.is_concrete();
  n->a = std::move(inner);
  n->annot = std::move(annot);
  return Value(std::move(n));
}

Value Value::right(Value inner, std::optional<Type> annot) {
  auto n = std::make_shared<Node>();
  n->kind = Kind::right;
  n->concrete = inner.is_concrete();
  n->a = std::move(inner);
  n->annot = std::move(annot);
  return Value(std::move(n));
}

Value Value::pair(Value first, Value second) {
  auto n = std::make_shared<Node>();
  n->kind = Kind::pair;
  n->concrete = first.is_concrete() && second.is_concrete();
  n->a = std::move(first);
  n->b = std::move(second);
  return Value(std::move(n));
}

Value Value::var(std::string name) {
  auto n = std::make_shared<Node>();
  n->kind = Kind::var;
  n->concrete = false;
  n->name = std::move(name);
  return Value(std::move(n));
}

Value::Kind Value::kind() const { return node_ ? node_->kind : Kind::sole; }

const Value& Value::inner() const {
  if (kind() != Kind::left && kind() != Kind::right) {
    throw std::logic_error("Value::inner on a non-sum value");
  }
  return node_->a;
}

const Value& Value::first() const {
  if (kind() != Kind::pair) throw std::logic_error("Value::first on non-pair");
  return node_->a;
}

const Value& Value::second() const {
  if (kind() != Kind::pair) throw std::logic_error("Value::second on non-pair");
  return node_->b;
}

const std::optional<Type>& Value::annotation() const {
  static const std::optional<Type> none;
  return node_ ? node_->annot : none;
}

const std::string& Value::name() const {
  if (kind() != Kind::var) throw std::logic_error("Value::name on non-variable");
  return node_->name;
}

bool Value::is_concrete() const { return !node_ || node_->concrete; }

bool operator==(const Value& a, const Value& b) {
  if (a.node_ == b.node_) return true;
  if (a.kind() != b.kind()) return false;
  switch (a.kind()) {
    case Value::Kind::sole:
      return true;
    case Value::Kind::left:
    case Value::Kind::right:
      return a.inner() == b.inner();
    case Value::Kind::pair:
      return a.first() == b.first() && a.second() == b.second();
    case Value::Kind::var:
      return a.name() == b.name();
  }
  return false;
}

bool identical(const Value& a, const Value& b) {
  if (a.kind() != b.kind()) return false;
  switch (a.kind()) {
    case Value::Kind::sole:
      return true;
    case Value::Kind::left:
    case Value::Kind::right:
      return a.annotation() == b.annotation() && identical(a.inner(), b.inner());
    case Value::Kind::pair:
      return identical(a.first(), b.first()) && identical(a.second(), b.second());
    case Value::Kind::var:
      return a.name() == b.name();
  }
  return false;
}

namespace {
void collect_vars(const Value& v, std::vector<std::string>& out) {
  switch (v.kind()) {
    case Value::Kind::sole:
      return;
    case Value::Kind::left:
    case Value::Kind::right:
      collect_vars(v.inner(), out);
      return;
    case Value::Kind::pair:
      collect_vars(v.first(), out);
      collect_vars(v.second(), out);
      return;
    case Value::Kind::var:
      if (std::find(out.begin(), out.end(), v.name()) == out.end()) {
        out.push_back(v.name());
      }
      return;
  }
}

void render_value_into(const Value& v, bool annotations, std::string& out) {
  switch (v.kind()) {
    case Value::Kind::sole:
      out += "sole";
      return;
    case Value::Kind::left:
    case Value::Kind::right:
      out += v.kind() == Value::Kind::left ? "(left " : "(right ";
      if (annotations && v.annotation()) {
        out += '{';
        out += v.annotation()->str();
        out += "} ";
      }
      render_value_into(v.inner(), annotations, out);
      out += ')';
      return;
    case Value::Kind::pair:
      out += "(pair ";
      render_value_into(v.first(), annotations, out);
      out += ' ';
      render_value_into(v.second(), annotations, out);
      out += ')';
      return;
    case Value::Kind::var:
      out += v.name();
      return;
  }
}
}  // namespace

std::vector<std::string> free_vars(const Value& v) {
  std::vector<std::string> out;
  collect_vars(v, out);
  return out;
}

std::string render_value(const Value& v) {
  if (!v.is_concrete()) {
    throw std::invalid_argument("render_value: value contains variables");
  }
  std::string out;
  render_value_into(v, false, out);
  return out;
}

std::string render_value_source(const Value& v) {
  std::string out;
  render_value_into(v, true, out);
  return out;
}

// ---------------------------------------------------------------------------
// Goal
// ---------------------------------------------------------------------------

Goal::Goal() : Goal(succeed()) {}

Goal Goal::conj(Goal lhs, Goal rhs) {
  return Goal(std::make_shared<const Node>(Conj{std::move(lhs), std::move(rhs)}));
}

Goal Goal::disj(Goal lhs, Goal rhs) {
  return Goal(std::make_shared<const Node>(Disj{std::move(lhs), std::move(rhs)}));
}

Goal Goal::fresh(std::string var, Type type, Goal body) {
  return Goal(std::make_shared<const Node>(
      Fresh{std::move(var), std::move(type), std::move(body)}));
}

Goal Goal::unify(Value lhs, Value rhs, std::optional<Type> type) {
  return Goal(std::make_shared<const Node>(
      Unify{std::move(lhs), std::move(rhs), std::move(type)}));
}

Goal Goal::disunify(Value lhs, Value rhs, std::optional<Type> type) {
  return Goal(std::make_shared<const Node>(
      Disunify{std::move(lhs), std::move(rhs), std::move(type)}));
}

Goal Goal::call(std::string rel, std::vector<Value> args,
                std::shared_ptr<const CallInfo> info) {
  return Goal(std::make_shared<const Node>(
      Call{std::move(rel), std::move(args), std::move(info)}));
}

Goal Goal::factor(std::string literal) {
  return Goal(std::make_shared<const Node>(Factor{std::move(literal)}));
}

Goal Goal::conj_all(const std::vector<Goal>& goals) {
  if (goals.empty()) return succeed();
  Goal acc = goals.back();
  for (auto it = goals.rbegin() + 1; it != goals.rend(); ++it) acc = conj(*it, acc);
  return acc;
}

Goal Goal::disj_all(const std::vector<Goal>& goals) {
  if (goals.empty()) throw std::invalid_argument("disj_all of no goals");
  Goal acc = goals.back();
  for (auto it = goals.rbegin() + 1; it != goals.rend(); ++it) acc = disj(*it, acc);
  return acc;
}

Goal Goal::succeed() {
  static const Goal g(std::make_shared<const Node>(
      Unify{Value::sole(), Value::sole(), Type::unit()}));
  return g;
}

bool identical(const Goal& a, const Goal& b) {
  if (a.node().index() != b.node().index()) return false;
  return std::visit(
      [&](const auto& x) -> bool {
        using T = std::decay_t<decltype(x)>;
        const auto& y = std::get<T>(b.node());
        if constexpr (std::is_same_v<T, Goal::Conj> ||
                      std::is_same_v<T, Goal::Disj>) {
          return identical(x.lhs, y.lhs) && identical(x.rhs, y.rhs);
        } else if constexpr (std::is_same_v<T, Goal::Fresh>) {
          return x.var == y.var && x.type == y.type && identical(x.body, y.body);
        } else if constexpr (std::is_same_v<T, Goal::Unify> ||
                             std::is_same_v<T, Goal::Disunify>) {
          return identical(x.lhs, y.lhs) && identical(x.rhs, y.rhs);
        } else if constexpr (std::is_same_v<T, Goal::Call>) {
          if (x.rel != y.rel || x.args.size() != y.args.size()) return false;
          for (std::size_t i = 0; i < x.args.size(); ++i) {
            if (!identical(x.args[i], y.args[i])) return false;
          }
          return true;
        } else {
          return x.literal == y.literal;
        }
      },
      a.node());
}

const RelationDef* Program::find(std::string_view name) const {
  for (const auto& r : relations) {
    if (r.name == name) return &r;
  }
  return nullptr;
}

bool identical(const RelationDef& a, const RelationDef& b) {
  if (a.name != b.name || a.tyvars != b.tyvars ||
      a.params.size() != b.params.size()) {
    return false;
  }
  for (std::size_t i = 0; i < a.params.size(); ++i) {
    if (a.params[i].name != b.params[i].name ||
        !(a.params[i].type == b.params[i].type)) {
      return false;
    }
  }
  return identical(a.body, b.body);
}

bool identical(const Program& a, const Program& b) {
  if (a.relations.size() != b.relations.size()) return false;
  for (std::size_t i = 0; i < a.relations.size(); ++i) {
    if (!identical(a.relations[i], b.relations[i])) return false;
  }
  return true;
}

// ---------------------------------------------------------------------------
// Printing
// ---------------------------------------------------------------------------

namespace {

void render_goal_into(const Goal& g, int indent, std::string& out) {
  const std::string pad(static_cast<std::size_t>(indent) * 2, ' ');
  out += pad;
  std::visit(
      [&](const auto& x) {
        using T = std::decay_t<decltype(x)>;
        if constexpr (std::is_same_v<T, Goal::Conj> ||
                      std::is_same_v<T, Goal::Disj>) {
          out += std::is_same_v<T, Goal::Conj> ? "(conj\n" : "(disj\n";
          render_goal_into(x.lhs, indent + 1, out);
          out += '\n';
          render_goal_into(x.rhs, indent + 1, out);
          out += ')';
        } else if constexpr (std::is_same_v<T, Goal::Fresh>) {
          out += fmt::format("(fresh (({} : {}))\n", x.var, x.type.str());
          render_goal_into(x.body, indent + 1, out);
          out += ')';
        } else if constexpr (std::is_same_v<T, Goal::Unify> ||
                             std::is_same_v<T, Goal::Disunify>) {
          out += std::is_same_v<T, Goal::Unify> ? "(== " : "(=/= ";
          out += render_value_source(x.lhs);
          out += ' ';
          out += render_value_source(x.rhs);
          out += ')';
        } else if constexpr (std::is_same_v<T, Goal::Call>) {
          out += '(';
          out += x.rel;
          for (const auto& a : x.args) {
            out += ' ';
            out += render_value_source(a);
          }
          out += ')';
        } else {
          out += "(factor ";
          out += x.literal;
          out += ')';
        }
      },
      g.node());
}

}  // namespace

std::string render_goal(const Goal& g, int indent) {
  std::string out;
  render_goal_into(g, indent, out);
  return out;
}

std::string render_relation(const RelationDef& rel) {
  std::string out = "(defrel (" + rel.name;
  if (!rel.tyvars.empty()) {
    out += " forall";
    for (const auto& a : rel.tyvars) out += " " + a;
    out += " .";
  }
  for (const auto& p : rel.params) {
    out += fmt::format(" ({} : {})", p.name, p.type.str());
  }
  out += ")\n";
  render_goal_into(rel.body, 1, out);
  out += ")\n";
  return out;
}

std::string render_program(const Program& p) {
  std::string out;
  for (std::size_t i = 0; i < p.relations.size(); ++i) {
    if (i) out += '\n';
    out += render_relation(p.relations[i]);
  }
  return out;
}

}  // namespace skn
