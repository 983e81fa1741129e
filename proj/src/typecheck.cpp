#include "skn/typecheck.hpp"

#include <fmt/format.h>

#include <algorithm>

namespace skn {

Type apply_subst(const Subst& s, const Type& t) {
  switch (t.kind()) {
    case Type::Kind::unit:
      return t;
    case Type::Kind::var: {
      auto it = s.find(t.name());
      return it == s.end() ? t : it->second;
    }
    case Type::Kind::sum:
      return Type::sum(apply_subst(s, t.left()), apply_subst(s, t.right()));
    case Type::Kind::prod:
      return Type::prod(apply_subst(s, t.left()), apply_subst(s, t.right()));
  }
  return t;
}

const Type* TypeEnv::lookup(std::string_view name) const {
  for (auto it = vars.rbegin(); it != vars.rend(); ++it) {
    if (it->first == name) return &it->second;
  }
  return nullptr;
}

bool TypeEnv::has_tyvar(std::string_view name) const {
  return std::find(tyvars.begin(), tyvars.end(), name) != tyvars.end();
}

TypeEnv TypeEnv::extended(std::string name, Type type) const {
  TypeEnv out = *this;
  out.vars.emplace_back(std::move(name), std::move(type));
  return out;
}

RelEnv rel_env_of(const Program& p) {
  RelEnv out;
  for (const auto& r : p.relations) {
    RelSig sig;
    sig.tyvars = r.tyvars;
    for (const auto& param : r.params) sig.params.push_back(param.type);
    out.emplace(r.name, std::move(sig));
  }
  return out;
}

namespace {

std::string join(const std::vector<std::string>& xs, std::string_view sep) {
  std::string out;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (i) out += sep;
    out += xs[i];
  }
  return out;
}

}  // namespace

ProgramTypeError::ProgramTypeError(std::vector<std::string> errors)
    : TypeError(join(errors, "\n")), errors_(std::move(errors)) {}

namespace {

// A left/right without annotation where nothing determines the other summand.
class Uninferable : public TypeError {
 public:
  using TypeError::TypeError;
};

// A TypeError that already carries its location.
class Located : public TypeError {
 public:
  using TypeError::TypeError;
};

Value annotate(const TypeEnv& env, const Value& v, const std::optional<Type>& expected,
               Type& out) {
  switch (v.kind()) {
    case Value::Kind::sole:
      if (expected && !expected->is_unit()) {
        throw TypeError(fmt::format("sole does not have type {}", expected->str()));
      }
      out = Type::unit();
      return v;
    case Value::Kind::var: {
      const Type* t = env.lookup(v.name());
      if (!t) throw TypeError(fmt::format("unbound variable '{}'", v.name()));
      if (expected && !(*expected == *t)) {
        throw TypeError(fmt::format("variable '{}' has type {}, expected {}",
                                    v.name(), t->str(), expected->str()));
      }
      out = *t;
      return v;
    }
    case Value::Kind::left:
    case Value::Kind::right: {
      const bool is_left = v.kind() == Value::Kind::left;
      const char* ctor = is_left ? "left" : "right";
      std::optional<Type> t = v.annotation();
      if (t) {
        check_type_valid(env, *t);
        if (expected && !(*expected == *t)) {
          throw TypeError(fmt::format("({} {{{}}} ...) used where {} is expected",
                                      ctor, t->str(), expected->str()));
        }
      } else {
        t = expected;
      }
      if (!t) {
        throw Uninferable(fmt::format(
            "cannot infer the type of {}; add an annotation",
            render_value_source(v)));
      }
      if (!t->is_sum()) {
        throw TypeError(fmt::format("{} used where {} is expected",
                                    render_value_source(v), t->str()));
      }
      Type inner_t;
      Value inner = annotate(env, v.inner(), is_left ? t->left() : t->right(), inner_t);
      out = *t;
      return is_left ? Value::left(std::move(inner), *t)
                     : Value::right(std::move(inner), *t);
    }
    case Value::Kind::pair: {
      std::optional<Type> e1, e2;
      if (expected) {
        if (!expected->is_prod()) {
          throw TypeError(fmt::format("{} used where {} is expected",
                                      render_value_source(v), expected->str()));
        }
        e1 = expected->left();
        e2 = expected->right();
      }
      Type t1, t2;
      Value a = annotate(env, v.first(), e1, t1);
      Value b = annotate(env, v.second(), e2, t2);
      out = Type::prod(t1, t2);
      return Value::pair(std::move(a), std::move(b));
    }
  }
  throw std::logic_error("annotate: bad value");
}

void bind_tyvar(Subst& s, const std::string& a, const Type& t) {
  auto [it, inserted] = s.emplace(a, t);
  if (!inserted && !(it->second == t)) {
    throw TypeError(fmt::format(
        "type variable {} would be mapped to both {} and {}", a,
        it->second.str(), t.str()));
  }
}

void match_type(const Type& pattern, const Type& actual, Subst& s) {
  switch (pattern.kind()) {
    case Type::Kind::var:
      bind_tyvar(s, pattern.name(), actual);
      return;
    case Type::Kind::unit:
      if (!actual.is_unit()) {
        throw TypeError(fmt::format("expected Unit, found {}", actual.str()));
      }
      return;
    case Type::Kind::sum:
    case Type::Kind::prod:
      if (actual.kind() != pattern.kind()) {
        throw TypeError(fmt::format("expected {}, found {}", pattern.str(),
                                    actual.str()));
      }
      match_type(pattern.left(), actual.left(), s);
      match_type(pattern.right(), actual.right(), s);
      return;
  }
}

// Walks an argument against a parameter type, collecting tyvar bindings.
// Arguments at tyvar positions that cannot be typed on their own are
// left for the final annotation pass.
void match_value(const TypeEnv& env, const Type& pattern, const Value& v, Subst& s,
                 std::vector<std::string>& deferred) {
  if (pattern.is_var()) {
    try {
      Type t;
      annotate(env, v, std::nullopt, t);
      bind_tyvar(s, pattern.name(), t);
    } catch (const Uninferable&) {
      deferred.push_back(pattern.name());
    }
    return;
  }
  switch (v.kind()) {
    case Value::Kind::var: {
      const Type* t = env.lookup(v.name());
      if (!t) throw TypeError(fmt::format("unbound variable '{}'", v.name()));
      match_type(pattern, *t, s);
      return;
    }
    case Value::Kind::sole:
      if (!pattern.is_unit()) {
        throw TypeError(fmt::format("sole used where {} is expected", pattern.str()));
      }
      return;
    case Value::Kind::left:
    case Value::Kind::right:
      if (!pattern.is_sum()) {
        throw TypeError(fmt::format("{} used where {} is expected",
                                    render_value_source(v), pattern.str()));
      }
      if (v.annotation()) {
        check_type_valid(env, *v.annotation());
        match_type(pattern, *v.annotation(), s);
      }
      match_value(env, v.kind() == Value::Kind::left ? pattern.left() : pattern.right(),
                  v.inner(), s, deferred);
      return;
    case Value::Kind::pair:
      if (!pattern.is_prod()) {
        throw TypeError(fmt::format("{} used where {} is expected",
                                    render_value_source(v), pattern.str()));
      }
      match_value(env, pattern.left(), v.first(), s, deferred);
      match_value(env, pattern.right(), v.second(), s, deferred);
      return;
  }
}

void generic_walk(const Type& pattern, const Value& v, Bindings& out) {
  if (v.is_var()) {
    for (const auto& [name, t] : out) {
      if (name == v.name()) {
        if (!(t == pattern)) {
          throw NonGenericCall(fmt::format(
              "variable '{}' occurs at both {} and {}", name, t.str(), pattern.str()));
        }
        return;
      }
    }
    out.emplace_back(v.name(), pattern);
    return;
  }
  if (pattern.is_var()) {
    if (!v.is_concrete()) {
      throw NonGenericCall(fmt::format(
          "{} mentions variables inside type-variable position {}",
          render_value_source(v), pattern.name()));
    }
    return;
  }
  switch (v.kind()) {
    case Value::Kind::sole:
      return;
    case Value::Kind::left:
      generic_walk(pattern.left(), v.inner(), out);
      return;
    case Value::Kind::right:
      generic_walk(pattern.right(), v.inner(), out);
      return;
    case Value::Kind::pair:
      generic_walk(pattern.left(), v.first(), out);
      generic_walk(pattern.right(), v.second(), out);
      return;
    case Value::Kind::var:
      return;
  }
}

std::string short_goal(const Goal& g) {
  std::string s = render_goal(g);
  std::replace(s.begin(), s.end(), '\n', ' ');
  std::string out;
  bool space = false;
  for (char c : s) {
    if (c == ' ') {
      if (!space) out += c;
      space = true;
    } else {
      out += c;
      space = false;
    }
  }
  if (out.size() > 72) out = out.substr(0, 69) + "...";
  return out;
}

class Checker {
 public:
  explicit Checker(const RelEnv& rels) : rels_(rels) {}

  Goal check(const TypeEnv& env, const Goal& g, std::vector<std::string>& path) {
    try {
      return check_inner(env, g, path);
    } catch (const Located&) {
      throw;
    } catch (const TypeError& e) {
      std::string where = path.empty() ? "body" : join(path, " > ");
      throw Located(fmt::format("at {} in {}: {}", where, short_goal(g), e.what()));
    }
  }

 private:
  Goal check_inner(const TypeEnv& env, const Goal& g, std::vector<std::string>& path) {
    if (auto c = g.as<Goal::Conj>()) {
      path.push_back("conj.1");
      Goal a = check(env, c->lhs, path);
      path.back() = "conj.2";
      Goal b = check(env, c->rhs, path);
      path.pop_back();
      return Goal::conj(std::move(a), std::move(b));
    }
    if (auto d = g.as<Goal::Disj>()) {
      path.push_back("disj.1");
      Goal a = check(env, d->lhs, path);
      path.back() = "disj.2";
      Goal b = check(env, d->rhs, path);
      path.pop_back();
      return Goal::disj(std::move(a), std::move(b));
    }
    if (auto f = g.as<Goal::Fresh>()) {
      check_type_valid(env, f->type);
      if (env.lookup(f->var)) {
        throw TypeError(
            fmt::format("fresh variable '{}' shadows an enclosing binding", f->var));
      }
      path.push_back("fresh " + f->var);
      Goal body = check(env.extended(f->var, f->type), f->body, path);
      path.pop_back();
      return Goal::fresh(f->var, f->type, std::move(body));
    }
    if (auto u = g.as<Goal::Unify>()) {
      auto [a, b, t] = check_equation(env, u->lhs, u->rhs);
      return Goal::unify(std::move(a), std::move(b), std::move(t));
    }
    if (auto u = g.as<Goal::Disunify>()) {
      auto [a, b, t] = check_equation(env, u->lhs, u->rhs);
      return Goal::disunify(std::move(a), std::move(b), std::move(t));
    }
    if (auto c = g.as<Goal::Call>()) return check_call(env, *c);
    return g;  // factor: literal is checked against the semiring at load time
  }

  std::tuple<Value, Value, Type> check_equation(const TypeEnv& env, const Value& lhs,
                                               const Value& rhs) {
    Type t;
    try {
      Value a = annotate(env, lhs, std::nullopt, t);
      Type t2;
      Value b = annotate(env, rhs, t, t2);
      return {std::move(a), std::move(b), t};
    } catch (const Uninferable&) {
    }
    Value b = annotate(env, rhs, std::nullopt, t);
    Type t2;
    Value a = annotate(env, lhs, t, t2);
    return {std::move(a), std::move(b), t};
  }

  Goal check_call(const TypeEnv& env, const Goal::Call& c) {
    auto it = rels_.find(c.rel);
    if (it == rels_.end()) throw TypeError(fmt::format("unknown relation '{}'", c.rel));
    const RelSig& sig = it->second;
    if (sig.params.size() != c.args.size()) {
      throw TypeError(fmt::format("'{}' takes {} argument(s), given {}", c.rel,
                                  sig.params.size(), c.args.size()));
    }
    Subst s;
    std::vector<std::string> deferred;
    for (std::size_t i = 0; i < c.args.size(); ++i) {
      match_value(env, sig.params[i], c.args[i], s, deferred);
    }
    for (const auto& a : sig.tyvars) {
      if (!s.count(a)) {
        throw TypeError(fmt::format(
            "cannot infer type variable {} of '{}'; annotate the argument", a, c.rel));
      }
    }
    std::vector<Value> args;
    for (std::size_t i = 0; i < c.args.size(); ++i) {
      const Type expected = apply_subst(s, sig.params[i]);
      Type actual;
      args.push_back(annotate(env, c.args[i], expected, actual));
      if (!(actual == expected)) {
        throw std::logic_error("call argument type does not match substitution");
      }
    }
    auto info = std::make_shared<CallInfo>();
    info->call_id = next_call_id_++;
    info->subst = std::move(s);
    Goal::Call annotated{c.rel, args, nullptr};
    try {
      info->generic_env = generic_arg_env(annotated, sig, env);
    } catch (const NonGenericCall& e) {
      info->nongeneric_reason = e.what();
    }
    return Goal::call(c.rel, std::move(args), std::move(info));
  }

  const RelEnv& rels_;
  int next_call_id_ = 0;
};

RelationDef check_relation_with(Checker& checker, const RelationDef& rel) {
  TypeEnv env;
  env.tyvars = rel.tyvars;
  for (const auto& p : rel.params) {
    try {
      check_type_valid(env, p.type);
    } catch (const TypeError& e) {
      throw TypeError(fmt::format("parameter '{}': {}", p.name, e.what()));
    }
    env.vars.emplace_back(p.name, p.type);
  }
  for (const auto& a : rel.tyvars) {
    bool used = false;
    for (const auto& p : rel.params) {
      auto fv = free_type_vars(p.type);
      used = used || std::find(fv.begin(), fv.end(), a) != fv.end();
    }
    if (!used) {
      throw TypeError(
          fmt::format("type variable {} does not occur in the parameters", a));
    }
  }
  std::vector<std::string> path;
  RelationDef out = rel;
  out.body = checker.check(env, rel.body, path);
  return out;
}

}  // namespace

void check_type_valid(const TypeEnv& env, const Type& t) {
  for (const auto& a : free_type_vars(t)) {
    if (!env.has_tyvar(a)) {
      throw TypeError(fmt::format("unbound type variable {}", a));
    }
  }
}

Type type_of_value(const TypeEnv& env, const Value& v,
                   const std::optional<Type>& expected) {
  Type t;
  annotate(env, v, expected, t);
  return t;
}

Value annotate_value(const TypeEnv& env, const Value& v, const Type& expected) {
  Type t;
  return annotate(env, v, expected, t);
}

Subst infer_call_subst(const RelSig& callee, const std::vector<Type>& arg_types) {
  if (callee.params.size() != arg_types.size()) {
    throw TypeError(fmt::format("arity mismatch: expected {} argument(s), given {}",
                                callee.params.size(), arg_types.size()));
  }
  Subst s;
  for (std::size_t i = 0; i < arg_types.size(); ++i) {
    match_type(callee.params[i], arg_types[i], s);
  }
  for (const auto& a : callee.tyvars) {
    if (!s.count(a)) throw TypeError(fmt::format("type variable {} is unconstrained", a));
  }
  for (std::size_t i = 0; i < arg_types.size(); ++i) {
    if (!(apply_subst(s, callee.params[i]) == arg_types[i])) {
      throw std::logic_error("infer_call_subst: substitution does not reproduce args");
    }
  }
  return s;
}

Bindings generic_arg_env(const Goal::Call& call, const RelSig& callee,
                         const TypeEnv& caller) {
  if (call.args.size() != callee.params.size()) {
    throw TypeError(fmt::format("arity mismatch in call to '{}'", call.rel));
  }
  Bindings out;
  for (std::size_t i = 0; i < call.args.size(); ++i) {
    generic_walk(callee.params[i], call.args[i], out);
  }
  if (call.info) {
    for (const auto& [x, t] : out) {
      const Type* actual = caller.lookup(x);
      if (!actual || !(apply_subst(call.info->subst, t) == *actual)) {
        throw std::logic_error("generic_arg_env: inconsistent with substitution");
      }
    }
  }
  return out;
}

Goal check_goal(const RelEnv& rels, const TypeEnv& env, const Goal& g) {
  Checker checker(rels);
  std::vector<std::string> path;
  return checker.check(env, g, path);
}

RelationDef check_relation(const RelEnv& rels, const RelationDef& rel) {
  Checker checker(rels);
  return check_relation_with(checker, rel);
}

Program check_program(const Program& p) {
  const RelEnv rels = rel_env_of(p);
  Checker checker(rels);
  Program out;
  std::vector<std::string> errors;
  for (const auto& r : p.relations) {
    try {
      out.relations.push_back(check_relation_with(checker, r));
    } catch (const TypeError& e) {
      errors.push_back(fmt::format("relation '{}': {}", r.name, e.what()));
    }
  }
  if (!errors.empty()) throw ProgramTypeError(std::move(errors));
  return out;
}

}  // namespace skn
