#include <gtest/gtest.h>

#include "properties.hpp"
#include "skn/driver.hpp"
#include "skn/poly.hpp"

using namespace skn;

namespace {

Program load(const std::string& name, const Semiring& k) {
  return load_program(skn::testing::read_text(std::string(SKN_CORPUS_DIR) + "/" + name), k);
}

std::vector<std::string> names_of(const Program& p) {
  std::vector<std::string> out;
  for (const auto& r : p.relations) out.push_back(r.name);
  return out;
}

bool has(const std::vector<std::string>& xs, const std::string& x) {
  return std::find(xs.begin(), xs.end(), x) != xs.end();
}

TEST(Lower, LargeEnoughServesBigCallsFromOneInstance) {
  const Semiring k = Semiring::boolean();
  const LowerResult l = lower_program(load("poly.skn", k), PolyMode::large_enough, k);
  const auto names = names_of(l.program);
  EXPECT_TRUE(has(names, "sum-swap$<3,3>"));
  EXPECT_FALSE(has(names, "sum-swap$<3,4>"));
  EXPECT_FALSE(has(names, "equal$<4>"));
  EXPECT_TRUE(l.eligible.count("sum-swap"));
}

TEST(Lower, MonomorphizeEmitsEverySize) {
  const Semiring k = Semiring::boolean();
  const LowerResult l = lower_program(load("poly.skn", k), PolyMode::monomorphize, k);
  const auto names = names_of(l.program);
  EXPECT_TRUE(has(names, "sum-swap$<3,3>"));
  EXPECT_TRUE(has(names, "sum-swap$<3,4>"));
  EXPECT_TRUE(has(names, "two-valued$<1>"));
  EXPECT_TRUE(has(names, "two-valued$<2>"));
  for (const auto& key : l.instances) EXPECT_TRUE(has(names, key.mangled()));
}

TEST(Lower, SmallCallsFallBackToMonomorphization) {
  const Semiring k = Semiring::boolean();
  const LowerResult l = lower_program(load("poly.skn", k), PolyMode::large_enough, k);
  EXPECT_TRUE(has(names_of(l.program), "two-valued$<1>"));
  EXPECT_FALSE(l.notes.empty());
}

TEST(Lower, InstanceCap) {
  const Semiring k = Semiring::boolean();
  LowerOptions tight;
  tight.instance_cap = 3;
  EXPECT_THROW(lower_program(load("poly.skn", k), PolyMode::monomorphize, k, tight),
               InstanceExplosion);
  LowerOptions small_cells;
  small_cells.cell_cap = 8;
  EXPECT_THROW(lower_program(load("poly.skn", k), PolyMode::monomorphize, k, small_cells),
               InstanceExplosion);
}

TEST(Lower, RenderedProgramReparses) {
  for (PolyMode mode : {PolyMode::monomorphize, PolyMode::large_enough}) {
    const Semiring k = Semiring::boolean();
    const LowerResult l = lower_program(load("poly.skn", k), mode, k);
    const Program again = check_program(parse_program(render_program(l.program)));
    const auto a = fixpoint(l.program, k).tables;
    const auto b = fixpoint(again, k).tables;
    for (const auto& [name, t] : a) EXPECT_EQ(t.cells, b.at(name).cells) << name;
  }
}

TEST(Lower, DeterministicOutput) {
  const Semiring k = Semiring::boolean();
  const Program p = load("poly.skn", k);
  EXPECT_EQ(render_program(lower_program(p, PolyMode::large_enough, k).program),
            render_program(lower_program(p, PolyMode::large_enough, k).program));
}

TEST(Lower, PolymorphicCallerOfPolymorphicCallee) {
  const Semiring k = Semiring::boolean();
  const Program p = check_program(parse_program(R"(
    (defrel (equal forall a . (x : a) (y : a)) (== x y))
    (defrel (both forall b . (x : (Prod b b)))
      (fresh ((p : b) (q : b))
        (conj (== x (pair p q)) (equal p q))))
    (defrel (use (x : (Prod (Sum Unit (Sum Unit Unit)) (Sum Unit (Sum Unit Unit)))))
      (both x))
  )"));
  const DiffReport d = diff_modes(p, k);
  EXPECT_TRUE(d.identical) << d.message;
  const auto ev = evaluate(p, PolyMode::large_enough, k);
  const RelTable& t = ev.fixpoint.tables.at("use");
  for (std::size_t i = 0; i < 3; ++i) {
    for (std::size_t j = 0; j < 3; ++j) {
      EXPECT_EQ(t.cells[i * 3 + j], i == j ? k.one() : k.zero());
    }
  }
}

TEST(Differential, CorpusAgreesAcrossModes) {
  for (const Semiring& k : {Semiring::boolean(), Semiring::min_tropical()}) {
    for (const auto& path : skn::testing::corpus_files()) {
      Program p;
      try {
        p = load_program(skn::testing::read_text(path), k);
      } catch (const WeightLiteralError&) {
        continue;
      }
      const DiffReport d = diff_modes(p, k);
      EXPECT_TRUE(d.identical) << path << ": " << d.message;
      EXPECT_TRUE(d.converged) << path;
    }
  }
}

TEST(Differential, RealIsRejected) {
  EXPECT_THROW(diff_modes(load("poly.skn", Semiring::real()), Semiring::real()),
               NonIdempotentSemiring);
}

TEST(Differential, RandomPrograms) {
  skn::testing::Rng rng(41);
  for (const Semiring& k : {Semiring::boolean(), Semiring::min_tropical()}) {
    const auto r = skn::testing::differential_modes(k, 60, rng);
    EXPECT_TRUE(r.ok()) << r.summary();
  }
}

TEST(Differential, LargerTypeVariables) {
  skn::testing::Rng rng(42);
  skn::testing::GenOptions options;
  options.max_tyvar_size = 4;
  for (int i = 0; i < 40; ++i) {
    const Program p = check_program(skn::testing::random_program(rng, options));
    const DiffReport d = diff_modes(p, Semiring::boolean());
    EXPECT_TRUE(d.identical) << d.message << "\n" << render_program(p);
  }
}

}  // namespace
