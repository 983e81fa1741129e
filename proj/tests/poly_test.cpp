#include <gtest/gtest.h>

#include <set>

#include "golden.hpp"
#include "properties.hpp"
#include "skn/driver.hpp"
#include "skn/poly.hpp"

using namespace skn;

namespace {

const Type U = Type::unit();
const Type B = Type::sum(U, U);
const Type A = Type::var("a");
const Type Bv = Type::var("b");
const Value sole = Value::sole();
const Value zero2 = Value::left(Value::sole());   // 0 of a size-2 type
const Value one2 = Value::right(Value::sole());   // 1 of a size-2 type

Program poly_corpus() {
  return load_program(skn::testing::read_text(std::string(SKN_CORPUS_DIR) + "/poly.skn"),
                      Semiring::boolean());
}

const Goal::Call* find_call(const Goal& g, const std::string& rel) {
  if (auto* c = g.as<Goal::Call>()) return c->rel == rel ? c : nullptr;
  if (auto* c = g.as<Goal::Conj>()) {
    auto* l = find_call(c->lhs, rel);
    return l ? l : find_call(c->rhs, rel);
  }
  if (auto* d = g.as<Goal::Disj>()) {
    auto* l = find_call(d->lhs, rel);
    return l ? l : find_call(d->rhs, rel);
  }
  if (auto* f = g.as<Goal::Fresh>()) return find_call(f->body, rel);
  return nullptr;
}

TEST(Shells, Examples) {
  EXPECT_EQ(shell_of(A, zero2), Shell::hole("a"));
  EXPECT_EQ(shell_of(Type::sum(A, U), Value::left(one2)), Shell::left(Shell::hole("a")));
  EXPECT_EQ(shell_of(Type::prod(A, A), Value::pair(sole, sole)),
            Shell::pair(Shell::hole("a"), Shell::hole("a")));
  EXPECT_THROW(shell_of(Type::sum(A, U), sole), std::invalid_argument);
}

TEST(Holes, Examples) {
  EXPECT_EQ(holes_of("a", A, zero2), std::vector<Value>{zero2});
  EXPECT_EQ(holes_of("a", Type::prod(A, A), Value::pair(sole, zero2)),
            (std::vector<Value>{sole, zero2}));
  EXPECT_TRUE(holes_of("b", A, sole).empty());
}

TEST(Holes, Environments) {
  const Bindings delta{{"x", A}};
  EXPECT_EQ(envshell(delta, {{"x", sole}}), (EnvShell{{"x", Shell::hole("a")}}));
  EXPECT_EQ(envholes("a", delta, {{"x", sole}}), std::vector<Value>{sole});
  EXPECT_TRUE(envshell({}, {}).empty());
  EXPECT_TRUE(envholes("a", {}, {}).empty());
  const Bindings two{{"x", Type::sum(A, A)}, {"y", A}};
  const ValueEnv env{{"x", Value::left(one2)}, {"y", zero2}};
  EXPECT_EQ(envshell(two, env),
            (EnvShell{{"x", Shell::left(Shell::hole("a"))}, {"y", Shell::hole("a")}}));
  EXPECT_EQ(envholes("a", two, env), (std::vector<Value>{one2, zero2}));
}

TEST(Eqpat, Examples) {
  const Bindings delta{{"x", Type::sum(A, A)}, {"y", A}};
  EXPECT_FALSE(eqpat_check(delta, {{"x", Value::left(sole)}, {"y", sole}},
                           {{"x", Value::right(sole)}, {"y", sole}}));
  EXPECT_TRUE(eqpat_check(delta, {{"x", Value::left(one2)}, {"y", zero2}},
                          {{"x", Value::left(zero2)}, {"y", one2}}));
  EXPECT_TRUE(eqpat_check(delta, {{"x", Value::left(zero2)}, {"y", zero2}},
                          {{"x", Value::left(sole)}, {"y", sole}}));
  EXPECT_FALSE(eqpat_check(delta, {{"x", Value::left(zero2)}, {"y", one2}},
                           {{"x", Value::left(sole)}, {"y", sole}}));
}

TEST(Eqpat, Extend) {
  const Bindings delta{{"x", A}};
  const Subst s2{{"a", B}};
  // x = 0 on both sides; a new distinct hole must get a fresh value.
  const Value v = eqpat_extend(delta, s2, {{"x", Value::left(Value::left(sole))}},
                               {{"x", zero2}}, A, Value::right(sole));
  EXPECT_EQ(v, one2);
  const Value same = eqpat_extend(delta, s2, {{"x", Value::right(sole)}}, {{"x", one2}}, A,
                                  Value::right(sole));
  EXPECT_EQ(same, one2);
  EXPECT_THROW(eqpat_extend(delta, Subst{{"a", U}}, {{"x", zero2}}, {{"x", sole}}, A, one2),
               std::runtime_error);
}

TEST(Counts, Types) {
  EXPECT_EQ(count_type("a", Type::prod(A, A)), 2u);
  EXPECT_EQ(count_type("a", Type::sum(A, A)), 1u);
  EXPECT_EQ(count_type("a", Type::sum(Type::prod(A, A), A)), 2u);
  EXPECT_EQ(count_type("a", Bv), 0u);
  EXPECT_EQ(count_env("a", {{"x", A}, {"y", Type::sum(A, U)}}), 2u);
}

TEST(Counts, Relations) {
  const Program p = poly_corpus();
  EXPECT_EQ(count_relation("a", *p.find("sum-swap")), 3u);
  EXPECT_EQ(count_relation("b", *p.find("sum-swap")), 3u);
  EXPECT_EQ(count_relation("a", *p.find("two-valued")), 2u);
  EXPECT_EQ(count_relation("a", *p.find("equal")), 2u);
  EXPECT_EQ(smallest_large_enough(*p.find("sum-swap")), (SizeSubst{3, 3}));
  EXPECT_EQ(smallest_large_enough(*p.find("two-valued")), (SizeSubst{2}));
  EXPECT_EQ(smallest_large_enough(*p.find("equal")), (SizeSubst{2}));
}

TEST(Counts, UnusedTypeVariableIsRejected) {
  EXPECT_THROW(check_program(parse_program("(defrel (r forall a . (x : Unit)) (== x x))")),
               TypeError);
}

TEST(Counts, LeafGoalsCountTheEnvironment) {
  skn::testing::Rng rng(21);
  for (int i = 0; i < 300; ++i) {
    Bindings delta;
    for (int j = 0; j < 3; ++j) {
      delta.emplace_back("x" + std::to_string(j),
                         skn::testing::random_generic_type(rng, {"a", "b"}, 2));
    }
    const Goal leaf = Goal::unify(Value::var("x0"), Value::var("x0"));
    for (const char* a : {"a", "b"}) {
      EXPECT_GE(count_goal(a, leaf, delta), count_env(a, delta));
      EXPECT_GE(count_goal(a, Goal::fresh("z", Type::prod(A, Bv), leaf), delta),
                count_env(a, delta) + 1);
    }
  }
}

TEST(Canonical, Types) {
  EXPECT_EQ(canonical_type(1), U);
  EXPECT_EQ(canonical_type(2), B);
  EXPECT_EQ(canonical_type(4), parse_type("(Sum Unit (Sum Unit (Sum Unit Unit)))"));
  EXPECT_THROW(canonical_type(0), std::invalid_argument);
  for (std::size_t n = 1; n < 40; ++n) {
    EXPECT_EQ(type_size(canonical_type(n)), n);
    EXPECT_TRUE(is_canonical(canonical_type(n)));
  }
  EXPECT_FALSE(is_canonical(Type::sum(B, U)));
  EXPECT_EQ(size_under(Type::prod(A, Type::sum(Bv, U)), {{"a", 3}, {"b", 4}}), 15u);
}

TEST(Instances, Mangling) {
  EXPECT_EQ((InstanceKey{"sum-swap", {3, 4}}).mangled(), "sum-swap$<3,4>");
  EXPECT_EQ((InstanceKey{"graph", {}}).mangled(), "graph");
}

TEST(Instances, Instantiate) {
  const Program p = poly_corpus();
  const RelationDef eq = instantiate_relation(*p.find("equal"), {{"a", U}}, "equal$<1>");
  EXPECT_FALSE(eq.is_polymorphic());
  EXPECT_EQ(eq.params[0].type, U);
  EXPECT_EQ(eq.name, "equal$<1>");
  const RelationDef mono = *p.find("equal-sole");
  EXPECT_EQ(render_relation(instantiate_relation(mono, {}, mono.name)), render_relation(mono));
}

TEST(Instances, SumSwapMatrices) {
  const Semiring k = Semiring::boolean();
  const Program p = poly_corpus();
  const RelationDef& swap = *p.find("sum-swap");
  for (auto [sizes, golden] :
       {std::pair{SizeSubst{3, 3}, &golden::sum_swap_3_3},
        std::pair{SizeSubst{3, 4}, &golden::sum_swap_3_4}}) {
    Program one;
    one.relations.push_back(instantiate_relation(swap, canonical_subst(swap, sizes),
                                                 InstanceKey{"sum-swap", sizes}.mangled()));
    one = check_program(one);
    const RelTable t = fixpoint(one, k).tables.begin()->second;
    for (std::size_t i = 0; i < golden->size(); ++i) {
      for (std::size_t j = 0; j < golden->size(); ++j) {
        EXPECT_EQ(t.at({i, j}).value, (*golden)[i][j]);
      }
    }
  }
}

TEST(Instances, CollectPerMode) {
  const Semiring k = Semiring::boolean();
  const Program p = poly_corpus();
  auto names = [](const std::vector<InstanceKey>& keys) {
    std::set<std::string> out;
    for (const auto& key : keys) out.insert(key.mangled());
    return out;
  };
  const auto mono = names(collect_instances(p, PolyMode::monomorphize, k));
  const auto le = names(collect_instances(p, PolyMode::large_enough, k));
  EXPECT_TRUE(mono.count("sum-swap$<3,4>"));
  EXPECT_FALSE(le.count("sum-swap$<3,4>"));
  EXPECT_TRUE(le.count("sum-swap$<3,3>"));
  EXPECT_TRUE(le.count("two-valued$<1>"));
  EXPECT_TRUE(le.count("two-valued$<2>"));
  EXPECT_TRUE(mono.count("swap-3-4"));
}

TEST(Instances, PolymorphicRecursionExplodes) {
  const Program p = check_program(parse_program(R"(
    (defrel (grow forall a . (x : a))
      (fresh ((y : (Prod a a))) (grow y)))
    (defrel (start (x : (Sum Unit Unit))) (grow x))
  )"));
  EXPECT_THROW(collect_instances(p, PolyMode::monomorphize, Semiring::boolean()),
               InstanceExplosion);
}

TEST(Instances, MonomorphicProgramIsUnchanged) {
  const Semiring k = Semiring::boolean();
  const Program p = load_program(
      skn::testing::read_text(std::string(SKN_CORPUS_DIR) + "/connect.skn"), k);
  for (PolyMode mode : {PolyMode::monomorphize, PolyMode::large_enough}) {
    const auto keys = collect_instances(p, mode, k);
    ASSERT_EQ(keys.size(), 2u);
    const LowerResult l = lower_program(p, mode, k);
    ASSERT_EQ(l.program.relations.size(), 2u);
    for (const auto& rel : p.relations) {
      EXPECT_EQ(render_relation(*l.program.find(rel.name)), render_relation(rel));
    }
  }
}

// Evaluates the deconstruction goal over the whole grid of both families.
std::vector<Weight> eqpat_grid(const Bindings& delta, const Subst& s1, const Subst& s2,
                               const Semiring& k) {
  NameSupply names;
  std::vector<std::string> v1, v2;
  std::vector<Param> scope;
  TypeEnv env;
  for (const auto& [x, t] : delta) {
    v1.push_back(x + "1");
    names.reserve(v1.back());
    scope.push_back({v1.back(), apply_subst(s1, t)});
  }
  for (const auto& [x, t] : delta) {
    v2.push_back(x + "2");
    names.reserve(v2.back());
    scope.push_back({v2.back(), apply_subst(s2, t)});
  }
  for (const auto& p : scope) env.vars.emplace_back(p.name, p.type);
  const Goal g = check_goal(RelEnv{}, env, enforce_eqpat_codegen(delta, v1, v2, s1, s2, names));
  return eval_goal_array(g, scope, {}, k);
}

TEST(EnforceEqpat, SingleHoleRelatesEverything) {
  const Semiring k = Semiring::boolean();
  // x : a with one hole: any pair of values is related.
  for (Weight w : eqpat_grid({{"x", A}}, {{"a", B}}, {{"a", canonical_type(3)}}, k)) {
    EXPECT_EQ(w, k.one());
  }
}

TEST(EnforceEqpat, SumOfHoles) {
  const Semiring k = Semiring::boolean();
  const auto cells = eqpat_grid({{"x", Type::sum(A, A)}}, {{"a", B}}, {{"a", U}}, k);
  // x1 over (Sum B B), x2 over (Sum U U): related exactly when constructors match.
  ASSERT_EQ(cells.size(), 8u);
  for (std::size_t i = 0; i < 4; ++i) {
    for (std::size_t j = 0; j < 2; ++j) {
      EXPECT_EQ(cells[i * 2 + j], (i < 2) == (j == 0) ? k.one() : k.zero());
    }
  }
}

TEST(EnforceEqpat, NoWeightInflationUnderRealForOneAssignment) {
  // Equal sizes and a single satisfying ancillary assignment per related pair.
  const Semiring k = Semiring::real();
  const auto cells = eqpat_grid({{"x", A}, {"y", A}}, {{"a", B}}, {{"a", B}}, k);
  for (Weight w : cells) EXPECT_TRUE(w == k.zero() || w == k.one());
}

TEST(EnforceEqpat, Exhaustive) {
  for (const Semiring& k : {Semiring::boolean(), Semiring::min_tropical()}) {
    const auto r = skn::testing::enforce_eqpat_exhaustive(k);
    EXPECT_TRUE(r.ok()) << r.summary();
    EXPECT_GT(r.cases, 1000u);
  }
}

TEST(Coerce, IsTheIndexBijection) {
  const Semiring k = Semiring::boolean();
  const Bindings delta{{"x", Type::prod(A, A)}};
  const Subst s1{{"a", Type::sum(B, U)}}, s2{{"a", canonical_type(3)}};
  NameSupply names;
  names.reserve("p");
  names.reserve("q");
  const Type t1 = apply_subst(s1, delta[0].second), t2 = apply_subst(s2, delta[0].second);
  TypeEnv env;
  env.vars = {{"p", t1}, {"q", t2}};
  const Goal g = check_goal(RelEnv{}, env, coerce_codegen(delta, {"p"}, {"q"}, s1, s2, names));
  const auto cells = eval_goal_array(g, {{"p", t1}, {"q", t2}}, {}, Semiring::real());
  for (std::size_t i = 0; i < 9; ++i) {
    for (std::size_t j = 0; j < 9; ++j) {
      EXPECT_EQ(cells[i * 9 + j].value, i == j ? 1.0 : 0.0) << i << "," << j;
    }
  }
  (void)k;
}

TEST(Normalize, HoistsConstructorsAtTypeVariables) {
  const Program p = poly_corpus();
  const RelationDef& caller = *p.find("swap-left");
  const Goal::Call* call = find_call(caller.body, "sum-swap");
  ASSERT_NE(call, nullptr);
  const RelSig callee = rel_env_of(p).at("sum-swap");
  TypeEnv env;
  for (const auto& param : caller.params) env.vars.emplace_back(param.name, param.type);
  NameSupply names(caller);
  const NormalizedCall nc = normalize_call(*call, callee, env, names);
  ASSERT_EQ(nc.hoisted.size(), 1u);
  EXPECT_EQ(nc.bindings.size(), 1u);
  // The constructor stays; only the payload at a type variable is hoisted.
  ASSERT_EQ(nc.call.args.size(), 2u);
  EXPECT_EQ(render_value_source(nc.call.args[0]), "(left " + nc.hoisted[0].first + ")");
  EXPECT_TRUE(nc.call.args[1].is_var());
  EXPECT_EQ(nc.generic_env.size(), 2u);
}

// swap-3-4's body rewritten by hand against the (3,3) instance.
TEST(CompileCall, SumSwapFromLargeEnoughInstance) {
  const Semiring k = Semiring::boolean();
  const Program p = poly_corpus();
  const RelationDef& swap = *p.find("sum-swap");
  const RelationDef& caller = *p.find("swap-3-4");
  const Goal::Call* call = find_call(caller.body, "sum-swap");
  ASSERT_NE(call, nullptr);
  const Subst sigma2 = canonical_subst(swap, {3, 3});
  TypeEnv env;
  for (const auto& param : caller.params) env.vars.emplace_back(param.name, param.type);
  NameSupply names(caller);
  const Goal body = compile_call(*call, rel_env_of(p).at("sum-swap"), env, sigma2,
                                 "sum-swap$<3,3>", k, names);
  Program out;
  out.relations.push_back(instantiate_relation(swap, sigma2, "sum-swap$<3,3>"));
  RelationDef compiled = caller;
  compiled.body = body;
  out.relations.push_back(compiled);
  out = check_program(out);
  const auto tables = fixpoint(out, k).tables;
  const RelTable& t = tables.at("swap-3-4");
  for (std::size_t i = 0; i < 7; ++i) {
    for (std::size_t j = 0; j < 7; ++j) {
      EXPECT_EQ(t.at({i, j}).value, golden::sum_swap_3_4[i][j]) << i << "," << j;
    }
  }
}

TEST(CompileCall, Gates) {
  const Program p = poly_corpus();
  const RelationDef& caller = *p.find("two-valued-1");
  const Goal::Call* call = find_call(caller.body, "two-valued");
  ASSERT_NE(call, nullptr);
  TypeEnv env;
  for (const auto& param : caller.params) env.vars.emplace_back(param.name, param.type);
  NameSupply names(caller);
  const RelSig sig = rel_env_of(p).at("two-valued");
  EXPECT_THROW(compile_call(*call, sig, env, {{"a", B}}, "two-valued$<2>", Semiring::boolean(),
                            names),
               NotLargeEnough);
  EXPECT_THROW(compile_call(*call, sig, env, {{"a", U}}, "two-valued$<1>", Semiring::real(),
                            names),
               NonIdempotentSemiring);
}

TEST(Lowering, NonIdempotentGate) {
  EXPECT_THROW(lower_program(poly_corpus(), PolyMode::large_enough, Semiring::real()),
               NonIdempotentSemiring);
  EXPECT_NO_THROW(lower_program(poly_corpus(), PolyMode::monomorphize, Semiring::real()));
}

TEST(Lowering, OutputIsMonomorphicAndChecks) {
  for (PolyMode mode : {PolyMode::monomorphize, PolyMode::large_enough}) {
    const LowerResult l = lower_program(poly_corpus(), mode, Semiring::boolean());
    for (const auto& rel : l.program.relations) EXPECT_FALSE(rel.is_polymorphic()) << rel.name;
    EXPECT_NO_THROW(check_program(parse_program(render_program(l.program))));
  }
}

TEST(Properties, ValuesShellsHoles) {
  const auto r = skn::testing::values_shells_holes();
  EXPECT_TRUE(r.ok()) << r.summary();
}

TEST(Properties, EqpatEquivalence) {
  skn::testing::Rng rng(31);
  const auto r = skn::testing::eqpat_equivrel(1000, rng);
  EXPECT_TRUE(r.ok()) << r.summary();
}

TEST(Properties, EqpatSubstitution) {
  skn::testing::Rng rng(32);
  const auto r = skn::testing::eqpat_substitution(1000, rng);
  EXPECT_TRUE(r.ok()) << r.summary();
}

TEST(Properties, EqpatExtend) {
  skn::testing::Rng rng(33);
  const auto r = skn::testing::eqpat_extend_property(300, rng);
  EXPECT_TRUE(r.ok()) << r.summary();
  EXPECT_GE(r.cases, 1000u);
}

TEST(Properties, EqpatWeightOnSumSwap) {
  const auto r = skn::testing::eqpat_weight_sum_swap();
  EXPECT_TRUE(r.ok()) << r.summary();
  EXPECT_GT(r.cases, 0u);
}

}  // namespace
