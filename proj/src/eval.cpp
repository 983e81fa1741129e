#include "skn/eval.hpp"

#include <fmt/format.h>

#include <stdexcept>

namespace skn {

namespace {
constexpr std::size_t kMaxTypeSize = std::size_t{1} << 40;
}

std::size_t type_size(const Type& t) {
  switch (t.kind()) {
    case Type::Kind::unit:
      return 1;
    case Type::Kind::var:
      throw std::invalid_argument(
          fmt::format("type_size: type variable {} has no size", t.name()));
    case Type::Kind::sum: {
      const std::size_t n = type_size(t.left()) + type_size(t.right());
      if (n > kMaxTypeSize) throw std::overflow_error("type too large");
      return n;
    }
    case Type::Kind::prod: {
      const std::size_t a = type_size(t.left());
      const std::size_t b = type_size(t.right());
      if (a > kMaxTypeSize / b) throw std::overflow_error("type too large");
      return a * b;
    }
  }
  return 0;
}

std::vector<Value> enumerate_type(const Type& t) {
  const std::size_t n = type_size(t);
  std::vector<Value> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) out.push_back(index_value(i, t));
  return out;
}

std::size_t value_index(const Value& v, const Type& t) {
  auto mismatch = [&] {
    return std::invalid_argument(fmt::format("value {} does not have type {}",
                                             render_value_source(v), t.str()));
  };
  switch (v.kind()) {
    case Value::Kind::sole:
      if (!t.is_unit()) throw mismatch();
      return 0;
    case Value::Kind::left:
      if (!t.is_sum()) throw mismatch();
      return value_index(v.inner(), t.left());
    case Value::Kind::right:
      if (!t.is_sum()) throw mismatch();
      return type_size(t.left()) + value_index(v.inner(), t.right());
    case Value::Kind::pair:
      if (!t.is_prod()) throw mismatch();
      return value_index(v.first(), t.left()) * type_size(t.right()) +
             value_index(v.second(), t.right());
    case Value::Kind::var:
      throw std::invalid_argument(
          fmt::format("value_index: variable '{}' is not concrete", v.name()));
  }
  return 0;
}

Value index_value(std::size_t i, const Type& t) {
  switch (t.kind()) {
    case Type::Kind::unit:
      if (i != 0) break;
      return Value::sole();
    case Type::Kind::sum: {
      const std::size_t l = type_size(t.left());
      if (i < l) return Value::left(index_value(i, t.left()), t);
      if (i - l >= type_size(t.right())) break;
      return Value::right(index_value(i - l, t.right()), t);
    }
    case Type::Kind::prod: {
      const std::size_t r = type_size(t.right());
      if (i / r >= type_size(t.left())) break;
      return Value::pair(index_value(i / r, t.left()), index_value(i % r, t.right()));
    }
    case Type::Kind::var:
      type_size(t);  // throws
      break;
  }
  throw std::out_of_range(fmt::format("index {} out of range for {}", i, t.str()));
}

Value eval_value(const Value& v, const ValueEnv& env) {
  switch (v.kind()) {
    case Value::Kind::sole:
      return v;
    case Value::Kind::left:
      return Value::left(eval_value(v.inner(), env), v.annotation());
    case Value::Kind::right:
      return Value::right(eval_value(v.inner(), env), v.annotation());
    case Value::Kind::pair:
      return Value::pair(eval_value(v.first(), env), eval_value(v.second(), env));
    case Value::Kind::var: {
      auto it = env.find(v.name());
      if (it == env.end()) {
        throw std::invalid_argument(fmt::format("unbound variable '{}'", v.name()));
      }
      return it->second;
    }
  }
  return v;
}

std::size_t RelTable::offset(const std::vector<std::size_t>& index) const {
  if (index.size() != sizes.size()) {
    throw std::invalid_argument("RelTable::offset: wrong number of coordinates");
  }
  std::size_t flat = 0;
  for (std::size_t d = 0; d < sizes.size(); ++d) {
    if (index[d] >= sizes[d]) throw std::out_of_range("RelTable::offset");
    flat = flat * sizes[d] + index[d];
  }
  return flat;
}

std::vector<std::size_t> RelTable::coords(std::size_t flat) const {
  std::vector<std::size_t> out(sizes.size());
  for (std::size_t d = sizes.size(); d-- > 0;) {
    out[d] = flat % sizes[d];
    flat /= sizes[d];
  }
  return out;
}

RelTable zero_table(const RelationDef& rel, const Semiring& k) {
  RelTable t;
  t.rel = rel.name;
  t.params = rel.params;
  std::size_t cells = 1;
  for (const auto& p : rel.params) {
    const std::size_t n = type_size(p.type);
    t.sizes.push_back(n);
    if (cells > kMaxTypeSize / n) throw std::overflow_error("table too large");
    cells *= n;
  }
  t.cells.assign(cells, k.zero());
  return t;
}

namespace {

void validate_goal(const Goal& g, const Semiring& k) {
  std::visit(
      [&](const auto& x) {
        using T = std::decay_t<decltype(x)>;
        if constexpr (std::is_same_v<T, Goal::Conj> || std::is_same_v<T, Goal::Disj>) {
          validate_goal(x.lhs, k);
          validate_goal(x.rhs, k);
        } else if constexpr (std::is_same_v<T, Goal::Fresh>) {
          validate_goal(x.body, k);
        } else if constexpr (std::is_same_v<T, Goal::Factor>) {
          k.parse_literal(x.literal);
        }
      },
      g.node());
}

}  // namespace

void validate_weights(const Program& p, const Semiring& k) {
  for (const auto& r : p.relations) {
    try {
      validate_goal(r.body, k);
    } catch (const WeightLiteralError& e) {
      throw WeightLiteralError(fmt::format("relation '{}': {}", r.name, e.what()));
    }
  }
}

Weight eval_goal(const Goal& g, const Tables& tables, const ValueEnv& env,
                 const Semiring& k) {
  if (auto c = g.as<Goal::Conj>()) {
    const Weight a = eval_goal(c->lhs, tables, env, k);
    if (a == k.zero()) return a;
    return k.mul(a, eval_goal(c->rhs, tables, env, k));
  }
  if (auto d = g.as<Goal::Disj>()) {
    return k.add(eval_goal(d->lhs, tables, env, k), eval_goal(d->rhs, tables, env, k));
  }
  if (auto f = g.as<Goal::Fresh>()) {
    ValueEnv inner = env;
    Weight acc = k.zero();
    const std::size_t n = type_size(f->type);
    for (std::size_t i = 0; i < n; ++i) {
      inner.insert_or_assign(f->var, index_value(i, f->type));
      acc = k.add(acc, eval_goal(f->body, tables, inner, k));
    }
    return acc;
  }
  if (auto u = g.as<Goal::Unify>()) {
    return eval_value(u->lhs, env) == eval_value(u->rhs, env) ? k.one() : k.zero();
  }
  if (auto u = g.as<Goal::Disunify>()) {
    return eval_value(u->lhs, env) == eval_value(u->rhs, env) ? k.zero() : k.one();
  }
  if (auto c = g.as<Goal::Call>()) {
    auto it = tables.find(c->rel);
    if (it == tables.end()) {
      throw std::invalid_argument(fmt::format("no table for relation '{}'", c->rel));
    }
    const RelTable& t = it->second;
    std::vector<std::size_t> index;
    index.reserve(c->args.size());
    for (std::size_t i = 0; i < c->args.size(); ++i) {
      index.push_back(value_index(eval_value(c->args[i], env), t.params[i].type));
    }
    return t.at(index);
  }
  return k.parse_literal(g.as<Goal::Factor>()->literal);
}

RelTable eval_relation(const RelationDef& rel, const Tables& tables, const Semiring& k,
                       EvalStrategy strategy) {
  RelTable t = zero_table(rel, k);
  if (strategy == EvalStrategy::array) {
    t.cells = eval_goal_array(rel.body, rel.params, tables, k);
    return t;
  }
  ValueEnv env;
  for (std::size_t flat = 0; flat < t.cells.size(); ++flat) {
    const auto idx = t.coords(flat);
    for (std::size_t d = 0; d < idx.size(); ++d) {
      env.insert_or_assign(rel.params[d].name, index_value(idx[d], rel.params[d].type));
    }
    t.cells[flat] = eval_goal(rel.body, tables, env, k);
  }
  return t;
}

FixpointResult fixpoint(const Program& checked, const Semiring& k,
                        const FixpointOptions& options) {
  if (options.max_iters < 1) throw std::invalid_argument("max_iters must be >= 1");
  FixpointResult result;
  for (const auto& r : checked.relations) {
    if (r.is_polymorphic()) {
      throw std::invalid_argument(
          fmt::format("relation '{}' is polymorphic; lower the program first", r.name));
    }
    result.tables.emplace(r.name, zero_table(r, k));
  }
  if (options.observer) options.observer(0, result.tables);
  while (result.iterations < options.max_iters) {
    Tables next;
    for (const auto& r : checked.relations) {
      next.emplace(r.name, eval_relation(r, result.tables, k, options.strategy));
    }
    ++result.iterations;
    bool same = true;
    for (const auto& [name, t] : next) {
      const auto& old = result.tables.at(name).cells;
      for (std::size_t i = 0; i < t.cells.size() && same; ++i) {
        same = k.equal(old[i], t.cells[i]);
      }
      if (!same) break;
    }
    result.tables = std::move(next);
    if (options.observer) options.observer(result.iterations, result.tables);
    if (same) {
      result.converged = true;
      break;
    }
  }
  return result;
}

}  // namespace skn
