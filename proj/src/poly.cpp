#include "skn/poly.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <stdexcept>

namespace skn {

// ---------------------------------------------------------------------------
// Shells and holes
// ---------------------------------------------------------------------------

Shell Shell::left(Shell s) {
  Shell out;
  out.kind = Kind::left;
  out.parts.push_back(std::move(s));
  return out;
}

Shell Shell::right(Shell s) {
  Shell out;
  out.kind = Kind::right;
  out.parts.push_back(std::move(s));
  return out;
}

Shell Shell::pair(Shell a, Shell b) {
  Shell out;
  out.kind = Kind::pair;
  out.parts.push_back(std::move(a));
  out.parts.push_back(std::move(b));
  return out;
}

Shell Shell::hole(std::string alpha) {
  Shell out;
  out.kind = Kind::hole;
  out.tyvar = std::move(alpha);
  return out;
}

std::string Shell::str() const {
  switch (kind) {
    case Kind::sole:
      return "sole";
    case Kind::left:
      return "(left " + parts[0].str() + ")";
    case Kind::right:
      return "(right " + parts[0].str() + ")";
    case Kind::pair:
      return "(pair " + parts[0].str() + " " + parts[1].str() + ")";
    case Kind::hole:
      return "(hole " + tyvar + ")";
  }
  return "";
}

namespace {

std::invalid_argument shape_error(const Type& t, const Value& v) {
  return std::invalid_argument(
      fmt::format("value {} does not fit type {}", render_value_source(v), t.str()));
}

void collect_holes(const std::string& alpha, const Type& t, const Value& v,
                   std::vector<Value>& out) {
  switch (t.kind()) {
    case Type::Kind::var:
      if (t.name() == alpha) out.push_back(v);
      return;
    case Type::Kind::unit:
      if (v.kind() != Value::Kind::sole) throw shape_error(t, v);
      return;
    case Type::Kind::sum:
      if (v.kind() == Value::Kind::left) {
        collect_holes(alpha, t.left(), v.inner(), out);
      } else if (v.kind() == Value::Kind::right) {
        collect_holes(alpha, t.right(), v.inner(), out);
      } else {
        throw shape_error(t, v);
      }
      return;
    case Type::Kind::prod:
      if (v.kind() != Value::Kind::pair) throw shape_error(t, v);
      collect_holes(alpha, t.left(), v.first(), out);
      collect_holes(alpha, t.right(), v.second(), out);
      return;
  }
}

const Value& lookup_value(const ValueEnv& env, const std::string& x) {
  auto it = env.find(x);
  if (it == env.end()) {
    throw std::invalid_argument(fmt::format("environment has no value for '{}'", x));
  }
  return it->second;
}

std::vector<std::string> env_tyvars(const Bindings& delta) {
  std::vector<std::string> out;
  for (const auto& [x, t] : delta) {
    for (auto& a : free_type_vars(t)) {
      if (std::find(out.begin(), out.end(), a) == out.end()) out.push_back(a);
    }
  }
  return out;
}

}  // namespace

Shell shell_of(const Type& t, const Value& v) {
  switch (t.kind()) {
    case Type::Kind::var:
      return Shell::hole(t.name());
    case Type::Kind::unit:
      if (v.kind() != Value::Kind::sole) throw shape_error(t, v);
      return Shell::sole();
    case Type::Kind::sum:
      if (v.kind() == Value::Kind::left) return Shell::left(shell_of(t.left(), v.inner()));
      if (v.kind() == Value::Kind::right) {
        return Shell::right(shell_of(t.right(), v.inner()));
      }
      throw shape_error(t, v);
    case Type::Kind::prod:
      if (v.kind() != Value::Kind::pair) throw shape_error(t, v);
      return Shell::pair(shell_of(t.left(), v.first()), shell_of(t.right(), v.second()));
  }
  throw shape_error(t, v);
}

std::vector<Value> holes_of(const std::string& alpha, const Type& t, const Value& v) {
  std::vector<Value> out;
  collect_holes(alpha, t, v, out);
  return out;
}

EnvShell envshell(const Bindings& delta, const ValueEnv& env) {
  EnvShell out;
  for (const auto& [x, t] : delta) out.emplace_back(x, shell_of(t, lookup_value(env, x)));
  return out;
}

std::vector<Value> envholes(const std::string& alpha, const Bindings& delta,
                            const ValueEnv& env) {
  std::vector<Value> out;
  for (const auto& [x, t] : delta) collect_holes(alpha, t, lookup_value(env, x), out);
  return out;
}

bool eqpat_check(const Bindings& delta, const ValueEnv& env1, const ValueEnv& env2) {
  if (envshell(delta, env1) != envshell(delta, env2)) return false;
  for (const auto& alpha : env_tyvars(delta)) {
    const auto h1 = envholes(alpha, delta, env1);
    const auto h2 = envholes(alpha, delta, env2);
    if (h1.size() != h2.size()) return false;
    for (std::size_t i = 0; i < h1.size(); ++i) {
      for (std::size_t j = i + 1; j < h1.size(); ++j) {
        if ((h1[i] == h1[j]) != (h2[i] == h2[j])) return false;
      }
    }
  }
  return true;
}

namespace {

struct Extender {
  const Subst& sigma2;
  std::map<std::string, std::vector<Value>> holes1, holes2;

  Value walk(const Type& t, const Value& v) {
    switch (t.kind()) {
      case Type::Kind::var: {
        auto& h1 = holes1[t.name()];
        auto& h2 = holes2[t.name()];
        for (std::size_t j = 0; j < h1.size(); ++j) {
          if (h1[j] == v) {
            Value chosen = h2[j];
            h1.push_back(v);
            h2.push_back(chosen);
            return chosen;
          }
        }
        auto it = sigma2.find(t.name());
        if (it == sigma2.end()) {
          throw std::invalid_argument("eqpat_extend: no type for " + t.name());
        }
        for (const auto& candidate : enumerate_type(it->second)) {
          if (std::find(h2.begin(), h2.end(), candidate) == h2.end()) {
            h1.push_back(v);
            h2.push_back(candidate);
            return candidate;
          }
        }
        throw std::runtime_error(fmt::format(
            "eqpat_extend: {} has no unused value for a new {} hole",
            it->second.str(), t.name()));
      }
      case Type::Kind::unit:
        if (v.kind() != Value::Kind::sole) throw shape_error(t, v);
        return Value::sole();
      case Type::Kind::sum: {
        const Type annot = apply_subst(sigma2, t);
        if (v.kind() == Value::Kind::left) return Value::left(walk(t.left(), v.inner()), annot);
        if (v.kind() == Value::Kind::right) {
          return Value::right(walk(t.right(), v.inner()), annot);
        }
        throw shape_error(t, v);
      }
      case Type::Kind::prod:
        if (v.kind() != Value::Kind::pair) throw shape_error(t, v);
        {
          Value a = walk(t.left(), v.first());
          Value b = walk(t.right(), v.second());
          return Value::pair(std::move(a), std::move(b));
        }
    }
    throw shape_error(t, v);
  }
};

}  // namespace

Value eqpat_extend(const Bindings& delta, const Subst& sigma2, const ValueEnv& env1,
                   const ValueEnv& env2, const Type& tau, const Value& v1) {
  Extender ext{sigma2, {}, {}};
  Bindings all = delta;
  all.emplace_back("", tau);
  for (const auto& alpha : env_tyvars(all)) {
    ext.holes1[alpha] = envholes(alpha, delta, env1);
    ext.holes2[alpha] = envholes(alpha, delta, env2);
  }
  return ext.walk(tau, v1);
}

// ---------------------------------------------------------------------------
// Counting
// ---------------------------------------------------------------------------

std::size_t count_type(const std::string& alpha, const Type& t) {
  switch (t.kind()) {
    case Type::Kind::unit:
      return 0;
    case Type::Kind::var:
      return t.name() == alpha ? 1 : 0;
    case Type::Kind::sum:
      return std::max(count_type(alpha, t.left()), count_type(alpha, t.right()));
    case Type::Kind::prod:
      return count_type(alpha, t.left()) + count_type(alpha, t.right());
  }
  return 0;
}

std::size_t count_env(const std::string& alpha, const Bindings& delta) {
  std::size_t n = 0;
  for (const auto& [x, t] : delta) n += count_type(alpha, t);
  return n;
}

namespace {

std::size_t count_goal_from(const std::string& alpha, const Goal& g, std::size_t base) {
  if (auto c = g.as<Goal::Conj>()) {
    return std::max(count_goal_from(alpha, c->lhs, base), count_goal_from(alpha, c->rhs, base));
  }
  if (auto d = g.as<Goal::Disj>()) {
    return std::max(count_goal_from(alpha, d->lhs, base), count_goal_from(alpha, d->rhs, base));
  }
  if (auto f = g.as<Goal::Fresh>()) {
    return count_goal_from(alpha, f->body, base + count_type(alpha, f->type));
  }
  return base;
}

}  // namespace

std::size_t count_goal(const std::string& alpha, const Goal& g, const Bindings& delta) {
  return count_goal_from(alpha, g, count_env(alpha, delta));
}

std::size_t count_relation(const std::string& alpha, const RelationDef& rel) {
  Bindings delta;
  for (const auto& p : rel.params) delta.emplace_back(p.name, p.type);
  return count_goal(alpha, rel.body, delta);
}

Type canonical_type(std::size_t n) {
  if (n == 0) throw std::invalid_argument("canonical_type: size must be positive");
  Type t = Type::unit();
  for (std::size_t i = 1; i < n; ++i) t = Type::sum(Type::unit(), t);
  return t;
}

bool is_canonical(const Type& t) {
  const Type* cur = &t;
  while (cur->is_sum()) {
    if (!cur->left().is_unit()) return false;
    cur = &cur->right();
  }
  return cur->is_unit();
}

SizeSubst smallest_large_enough(const RelationDef& rel) {
  SizeSubst out;
  for (const auto& a : rel.tyvars) out.push_back(std::max<std::size_t>(1, count_relation(a, rel)));
  return out;
}

std::size_t size_under(const Type& t, const std::map<std::string, std::size_t>& sizes) {
  constexpr std::size_t kMax = std::size_t{1} << 40;
  switch (t.kind()) {
    case Type::Kind::unit:
      return 1;
    case Type::Kind::var: {
      auto it = sizes.find(t.name());
      if (it == sizes.end()) {
        throw std::invalid_argument("size_under: no size for " + t.name());
      }
      return it->second;
    }
    case Type::Kind::sum: {
      const std::size_t n = size_under(t.left(), sizes) + size_under(t.right(), sizes);
      if (n > kMax) throw std::overflow_error("type too large");
      return n;
    }
    case Type::Kind::prod: {
      const std::size_t a = size_under(t.left(), sizes);
      const std::size_t b = size_under(t.right(), sizes);
      if (a > kMax / b) throw std::overflow_error("type too large");
      return a * b;
    }
  }
  return 0;
}

std::string InstanceKey::mangled() const {
  if (sizes.empty()) return rel;
  return fmt::format("{}$<{}>", rel, fmt::join(sizes, ","));
}

Subst canonical_subst(const RelationDef& rel, const SizeSubst& sizes) {
  if (sizes.size() != rel.tyvars.size()) {
    throw std::invalid_argument("canonical_subst: one size per type variable");
  }
  Subst s;
  for (std::size_t i = 0; i < sizes.size(); ++i) s[rel.tyvars[i]] = canonical_type(sizes[i]);
  return s;
}

// ---------------------------------------------------------------------------
// Instantiation
// ---------------------------------------------------------------------------

namespace {

Value subst_value(const Subst& s, const Value& v) {
  switch (v.kind()) {
    case Value::Kind::sole:
    case Value::Kind::var:
      return v;
    case Value::Kind::left:
    case Value::Kind::right: {
      std::optional<Type> annot;
      if (v.annotation()) annot = apply_subst(s, *v.annotation());
      Value inner = subst_value(s, v.inner());
      return v.kind() == Value::Kind::left ? Value::left(std::move(inner), annot)
                                           : Value::right(std::move(inner), annot);
    }
    case Value::Kind::pair:
      return Value::pair(subst_value(s, v.first()), subst_value(s, v.second()));
  }
  return v;
}

Goal subst_goal(const Subst& s, const Goal& g) {
  if (auto c = g.as<Goal::Conj>()) return Goal::conj(subst_goal(s, c->lhs), subst_goal(s, c->rhs));
  if (auto d = g.as<Goal::Disj>()) return Goal::disj(subst_goal(s, d->lhs), subst_goal(s, d->rhs));
  if (auto f = g.as<Goal::Fresh>()) {
    return Goal::fresh(f->var, apply_subst(s, f->type), subst_goal(s, f->body));
  }
  if (auto u = g.as<Goal::Unify>()) return Goal::unify(subst_value(s, u->lhs), subst_value(s, u->rhs));
  if (auto u = g.as<Goal::Disunify>()) {
    return Goal::disunify(subst_value(s, u->lhs), subst_value(s, u->rhs));
  }
  if (auto c = g.as<Goal::Call>()) {
    std::vector<Value> args;
    for (const auto& a : c->args) args.push_back(subst_value(s, a));
    return Goal::call(c->rel, std::move(args));
  }
  return g;
}

void collect_names(const Value& v, std::set<std::string>& out) {
  for (auto& x : free_vars(v)) out.insert(x);
}

void collect_names(const Goal& g, std::set<std::string>& out) {
  if (auto c = g.as<Goal::Conj>()) {
    collect_names(c->lhs, out);
    collect_names(c->rhs, out);
  } else if (auto d = g.as<Goal::Disj>()) {
    collect_names(d->lhs, out);
    collect_names(d->rhs, out);
  } else if (auto f = g.as<Goal::Fresh>()) {
    out.insert(f->var);
    collect_names(f->body, out);
  } else if (auto u = g.as<Goal::Unify>()) {
    collect_names(u->lhs, out);
    collect_names(u->rhs, out);
  } else if (auto u = g.as<Goal::Disunify>()) {
    collect_names(u->lhs, out);
    collect_names(u->rhs, out);
  } else if (auto c = g.as<Goal::Call>()) {
    for (const auto& a : c->args) collect_names(a, out);
  }
}

}  // namespace

RelationDef instantiate_relation(const RelationDef& rel, const Subst& sigma,
                                 std::string name) {
  RelationDef out;
  out.name = std::move(name);
  for (const auto& a : rel.tyvars) {
    if (!sigma.count(a)) out.tyvars.push_back(a);
  }
  for (const auto& p : rel.params) out.params.push_back({p.name, apply_subst(sigma, p.type)});
  out.body = subst_goal(sigma, rel.body);
  return out;
}

NameSupply::NameSupply(const RelationDef& rel) {
  for (const auto& p : rel.params) used_.insert(p.name);
  collect_names(rel.body, used_);
}

std::string NameSupply::fresh(const std::string& hint) {
  for (;;) {
    std::string name = fmt::format("%{}{}", hint, counter_++);
    if (used_.insert(name).second) return name;
  }
}

// ---------------------------------------------------------------------------
// enforce-eqpat and coercion
// ---------------------------------------------------------------------------

namespace {

using VarList = std::vector<std::pair<std::string, Type>>;

Goal fresh_all(const VarList& vars, Goal body) {
  for (auto it = vars.rbegin(); it != vars.rend(); ++it) {
    body = Goal::fresh(it->first, it->second, std::move(body));
  }
  return body;
}

Goal unify_vars(const Value& a, const Value& b) { return Goal::unify(a, b); }

// Splits two values of sigma1(t) and sigma2(t) into matching structure.
// In eqpat mode a type-variable position is tied to the next hole slot; in
// coerce mode it gets the index bijection on the spot.
class Decon {
 public:
  enum class Mode { eqpat, coerce };

  using Slots = std::map<std::string, std::vector<std::pair<std::string, std::string>>>;

  Decon(Mode mode, const Subst& s1, const Subst& s2, NameSupply& names)
      : mode_(mode), s1_(s1), s2_(s2), names_(names) {}

  // `slots` gives this variable's hole slots per type variable.
  Goal run(const Value& x1, const Value& x2, const Type& t, const Slots& slots) {
    slots_ = &slots;
    std::map<std::string, std::size_t> offset;
    return decon(x1, x2, t, offset);
  }

 private:
  bool same_on_both_sides(const Type& t) const {
    if (t.is_concrete()) return true;
    return mode_ == Mode::coerce && apply_subst(s1_, t) == apply_subst(s2_, t);
  }

  std::pair<std::string, std::string> next_slot(const std::string& alpha,
                                                std::map<std::string, std::size_t>& offset) {
    const auto& v = slots_->at(alpha);
    return v.at(offset[alpha]++);
  }

  Goal bijection(const Value& a1, const Value& a2, const std::string& alpha) {
    const auto left = enumerate_type(s1_.at(alpha));
    const auto right = enumerate_type(s2_.at(alpha));
    if (left.size() != right.size()) {
      throw std::invalid_argument("coerce: sizes of " + alpha + " differ");
    }
    std::vector<Goal> cases;
    for (std::size_t i = 0; i < left.size(); ++i) {
      cases.push_back(Goal::conj(Goal::unify(a1, left[i]), Goal::unify(a2, right[i])));
    }
    return Goal::disj_all(cases);
  }

  Goal decon(const Value& x1, const Value& x2, const Type& t,
             std::map<std::string, std::size_t>& offset) {
    if (same_on_both_sides(t)) return unify_vars(x1, x2);
    if (t.is_var()) {
      if (mode_ == Mode::coerce) return bijection(x1, x2, t.name());
      auto [h1, h2] = next_slot(t.name(), offset);
      return Goal::conj(unify_vars(x1, Value::var(h1)), unify_vars(x2, Value::var(h2)));
    }
    if (t.is_sum()) {
      const auto start = offset;
      std::vector<Goal> branches;
      for (int side = 0; side < 2; ++side) {
        auto local = start;
        const Type& part = side == 0 ? t.left() : t.right();
        Component c = component(part, local);
        auto wrap = [&](Value v) {
          return side == 0 ? Value::left(std::move(v)) : Value::right(std::move(v));
        };
        std::vector<Goal> goals{unify_vars(x1, wrap(c.p1)), unify_vars(x2, wrap(c.p2))};
        for (auto& g : c.goals) goals.push_back(std::move(g));
        branches.push_back(fresh_all(c.vars, Goal::conj_all(goals)));
      }
      // both branches share slots, so the Sum uses max of its sides
      for (const auto& a : free_type_vars(t)) offset[a] += count_type(a, t);
      return Goal::disj(branches[0], branches[1]);
    }
    // product
    Component a = component(t.left(), offset);
    Component b = component(t.right(), offset);
    std::vector<Goal> goals{unify_vars(x1, Value::pair(a.p1, b.p1)),
                            unify_vars(x2, Value::pair(a.p2, b.p2))};
    for (auto& g : a.goals) goals.push_back(std::move(g));
    for (auto& g : b.goals) goals.push_back(std::move(g));
    VarList vars = a.vars;
    vars.insert(vars.end(), b.vars.begin(), b.vars.end());
    return fresh_all(vars, Goal::conj_all(goals));
  }

  struct Component {
    Value p1, p2;
    VarList vars;
    std::vector<Goal> goals;
  };

  // Placeholder values for one constructor argument of type `t`.
  Component component(const Type& t, std::map<std::string, std::size_t>& offset) {
    Component c;
    if (same_on_both_sides(t)) {
      const std::string v = names_.fresh("c");
      c.p1 = c.p2 = Value::var(v);
      c.vars.emplace_back(v, apply_subst(s1_, t));
      return c;
    }
    if (t.is_var() && mode_ == Mode::eqpat) {
      auto [h1, h2] = next_slot(t.name(), offset);
      c.p1 = Value::var(h1);
      c.p2 = Value::var(h2);
      return c;
    }
    const std::string v1 = names_.fresh("c");
    const std::string v2 = names_.fresh("c");
    c.p1 = Value::var(v1);
    c.p2 = Value::var(v2);
    c.vars.emplace_back(v1, apply_subst(s1_, t));
    c.vars.emplace_back(v2, apply_subst(s2_, t));
    c.goals.push_back(decon(c.p1, c.p2, t, offset));
    return c;
  }

  Mode mode_;
  const Subst& s1_;
  const Subst& s2_;
  NameSupply& names_;
  const Slots* slots_ = nullptr;
};

void check_families(const Bindings& delta, const std::vector<std::string>& vars1,
                    const std::vector<std::string>& vars2) {
  if (vars1.size() != delta.size() || vars2.size() != delta.size()) {
    throw std::invalid_argument("variable families must match the environment");
  }
}

}  // namespace

Goal enforce_eqpat_codegen(const Bindings& delta, const std::vector<std::string>& vars1,
                           const std::vector<std::string>& vars2, const Subst& sigma1,
                           const Subst& sigma2, NameSupply& names) {
  check_families(delta, vars1, vars2);
  Decon decon(Decon::Mode::eqpat, sigma1, sigma2, names);
  // Earlier slots per type variable, for the pairwise pattern goals.
  std::map<std::string, std::vector<std::pair<std::string, std::string>>> earlier;
  std::vector<std::pair<VarList, std::vector<Goal>>> levels;
  for (std::size_t k = 0; k < delta.size(); ++k) {
    const Type& t = delta[k].second;
    Decon::Slots slots;
    VarList vars;
    std::vector<Goal> goals;
    for (const auto& a : free_type_vars(t)) {
      for (std::size_t i = 0; i < count_type(a, t); ++i) {
        std::string h1 = names.fresh("h");
        std::string h2 = names.fresh("h");
        vars.emplace_back(h1, sigma1.at(a));
        vars.emplace_back(h2, sigma2.at(a));
        slots[a].emplace_back(h1, h2);
      }
    }
    goals.push_back(decon.run(Value::var(vars1[k]), Value::var(vars2[k]), t, slots));
    for (const auto& [a, mine] : slots) {
      auto& before = earlier[a];
      for (const auto& [h1j, h2j] : mine) {
        for (const auto& [h1i, h2i] : before) {
          const Value a1 = Value::var(h1i), b1 = Value::var(h1j);
          const Value a2 = Value::var(h2i), b2 = Value::var(h2j);
          goals.push_back(Goal::disj(
              Goal::conj(Goal::unify(a1, b1), Goal::unify(a2, b2)),
              Goal::conj(Goal::disunify(a1, b1), Goal::disunify(a2, b2))));
        }
        before.emplace_back(h1j, h2j);
      }
    }
    levels.emplace_back(std::move(vars), std::move(goals));
  }
  Goal acc = Goal::succeed();
  bool first = true;
  for (auto it = levels.rbegin(); it != levels.rend(); ++it) {
    auto goals = it->second;
    if (!first) goals.push_back(acc);
    first = false;
    acc = fresh_all(it->first, Goal::conj_all(goals));
  }
  return acc;
}

Goal coerce_codegen(const Bindings& delta, const std::vector<std::string>& vars1,
                    const std::vector<std::string>& vars2, const Subst& sigma1,
                    const Subst& sigma2, NameSupply& names) {
  check_families(delta, vars1, vars2);
  Decon decon(Decon::Mode::coerce, sigma1, sigma2, names);
  const Decon::Slots none;
  std::vector<Goal> goals;
  for (std::size_t k = 0; k < delta.size(); ++k) {
    goals.push_back(decon.run(Value::var(vars1[k]), Value::var(vars2[k]), delta[k].second, none));
  }
  return Goal::conj_all(goals);
}

// ---------------------------------------------------------------------------
// Call normalization and compilation
// ---------------------------------------------------------------------------

namespace {

class Normalizer {
 public:
  Normalizer(const Subst& sigma, NameSupply& names, NormalizedCall& out)
      : sigma_(sigma), names_(names), out_(out) {}

  Value walk(const Type& pattern, const Value& v) {
    if (v.is_var()) {
      for (const auto& [name, t] : out_.generic_env) {
        if (name != v.name()) continue;
        if (t == pattern) return v;
        return hoist(pattern, v);
      }
      out_.generic_env.emplace_back(v.name(), pattern);
      return v;
    }
    if (pattern.is_var()) return hoist(pattern, v);
    switch (v.kind()) {
      case Value::Kind::sole:
        return v;
      case Value::Kind::left:
        return Value::left(walk(pattern.left(), v.inner()));
      case Value::Kind::right:
        return Value::right(walk(pattern.right(), v.inner()));
      case Value::Kind::pair: {
        Value a = walk(pattern.left(), v.first());
        Value b = walk(pattern.right(), v.second());
        return Value::pair(std::move(a), std::move(b));
      }
      case Value::Kind::var:
        break;
    }
    return v;
  }

 private:
  Value hoist(const Type& pattern, const Value& v) {
    const std::string t = names_.fresh("t");
    out_.hoisted.emplace_back(t, apply_subst(sigma_, pattern));
    out_.bindings.push_back(Goal::unify(Value::var(t), v));
    out_.generic_env.emplace_back(t, pattern);
    return Value::var(t);
  }

  const Subst& sigma_;
  NameSupply& names_;
  NormalizedCall& out_;
};

Value rename_value(const Value& v, const std::map<std::string, std::string>& names) {
  switch (v.kind()) {
    case Value::Kind::var: {
      auto it = names.find(v.name());
      return it == names.end() ? v : Value::var(it->second);
    }
    case Value::Kind::left:
      return Value::left(rename_value(v.inner(), names));
    case Value::Kind::right:
      return Value::right(rename_value(v.inner(), names));
    case Value::Kind::pair:
      return Value::pair(rename_value(v.first(), names), rename_value(v.second(), names));
    case Value::Kind::sole:
      break;
  }
  return v;
}

const Subst& call_subst(const Goal::Call& call) {
  if (!call.info) {
    throw std::invalid_argument("call to '" + call.rel + "' has not been type checked");
  }
  return call.info->subst;
}

// Copies of every generic variable whose type mentions a callee type variable,
// with the call retargeted to them.
struct Retargeted {
  Bindings delta;
  std::vector<std::string> vars1, vars2;
  VarList copies;
  Goal call;
};

Retargeted retarget(const NormalizedCall& nc, const Subst& sigma2, const std::string& target,
                    NameSupply& names) {
  Retargeted r;
  std::map<std::string, std::string> renames;
  for (const auto& [x, t] : nc.generic_env) {
    if (t.is_concrete()) continue;
    const std::string copy = names.fresh("x");
    renames[x] = copy;
    r.delta.emplace_back(x, t);
    r.vars1.push_back(x);
    r.vars2.push_back(copy);
    r.copies.emplace_back(copy, apply_subst(sigma2, t));
  }
  std::vector<Value> args;
  for (const auto& a : nc.call.args) args.push_back(rename_value(a, renames));
  r.call = Goal::call(target, std::move(args));
  return r;
}

}  // namespace

Goal NormalizedCall::wrap(Goal inner) const {
  std::vector<Goal> goals = bindings;
  goals.push_back(std::move(inner));
  return fresh_all(hoisted, Goal::conj_all(goals));
}

NormalizedCall normalize_call(const Goal::Call& call, const RelSig& callee,
                              const TypeEnv& caller, NameSupply& names) {
  const Subst& sigma = call_subst(call);
  if (call.args.size() != callee.params.size()) {
    throw std::invalid_argument("normalize_call: arity mismatch for " + call.rel);
  }
  NormalizedCall out;
  Normalizer norm(sigma, names, out);
  std::vector<Value> args;
  for (std::size_t i = 0; i < call.args.size(); ++i) {
    args.push_back(norm.walk(callee.params[i], call.args[i]));
  }
  out.call = Goal::Call{call.rel, std::move(args), call.info};
  for (const auto& [x, t] : out.generic_env) {
    const Type* actual = caller.lookup(x);
    bool hoisted = false;
    for (const auto& h : out.hoisted) hoisted = hoisted || h.first == x;
    if (!hoisted && (!actual || !(apply_subst(sigma, t) == *actual))) {
      throw std::logic_error("normalize_call: variable '" + x + "' has the wrong type");
    }
  }
  return out;
}

Goal compile_call(const Goal::Call& call, const RelSig& callee, const TypeEnv& caller,
                  const Subst& sigma2, const std::string& target, const Semiring& k,
                  NameSupply& names) {
  if (!k.idempotent_add()) {
    throw NonIdempotentSemiring(fmt::format(
        "the {} semiring does not have idempotent addition", k.name()));
  }
  const Subst& sigma1 = call_subst(call);
  for (const auto& a : callee.tyvars) {
    const std::size_t n1 = type_size(sigma1.at(a));
    const std::size_t n2 = type_size(sigma2.at(a));
    if (n1 < n2) {
      throw NotLargeEnough(fmt::format("call to '{}' has |{}| = {}, below {}", call.rel, a,
                                       n1, n2));
    }
  }
  const NormalizedCall nc = normalize_call(call, callee, caller, names);
  Retargeted r = retarget(nc, sigma2, target, names);
  Goal eq = enforce_eqpat_codegen(r.delta, r.vars1, r.vars2, sigma1, sigma2, names);
  return nc.wrap(fresh_all(r.copies, Goal::conj(r.call, eq)));
}

Goal coerce_call(const Goal::Call& call, const RelSig& callee, const TypeEnv& caller,
                 const Subst& sigma2, const std::string& target, NameSupply& names) {
  const Subst& sigma1 = call_subst(call);
  for (const auto& a : callee.tyvars) {
    if (type_size(sigma1.at(a)) != type_size(sigma2.at(a))) {
      throw std::invalid_argument("coerce_call: sizes of " + a + " differ");
    }
  }
  const NormalizedCall nc = normalize_call(call, callee, caller, names);
  Retargeted r = retarget(nc, sigma2, target, names);
  Goal co = coerce_codegen(r.delta, r.vars1, r.vars2, sigma1, sigma2, names);
  return nc.wrap(fresh_all(r.copies, Goal::conj(r.call, co)));
}

}  // namespace skn
