// One PASS/FAIL line per acceptance criterion; exit status is the number of
// failed criteria.

#include <fmt/format.h>

#include <cmath>
#include <functional>
#include <iostream>
#include <string>
#include <vector>

#include "golden.hpp"
#include "properties.hpp"
#include "skn/driver.hpp"

using namespace skn;
using namespace skn::testing;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;

  void require(bool cond, const std::string& what) {
    if (!cond && pass) {
      pass = false;
      detail = what;
    }
  }
};

Evaluation run_corpus(const std::string& file, const Semiring& k,
                      PolyMode mode = PolyMode::monomorphize) {
  const Program p = load_program(read_text(std::string(SKN_CORPUS_DIR) + "/" + file), k);
  return evaluate(p, mode, k);
}

template <class T>
void require_matrix(Outcome& o, const RelTable& t, const std::vector<std::vector<T>>& want,
                    const Semiring& k) {
  o.require(t.sizes.size() == 2 && t.sizes[0] == want.size() && t.sizes[1] == want[0].size(),
            t.rel + ": unexpected grid shape");
  if (!o.pass) return;
  for (std::size_t i = 0; i < want.size(); ++i) {
    for (std::size_t j = 0; j < want[i].size(); ++j) {
      const double got = t.at({i, j}).value;
      o.require(got == static_cast<double>(want[i][j]),
                fmt::format("{}[{}][{}] = {}, expected {}", t.rel, i, j, k.render(t.at({i, j})),
                            static_cast<double>(want[i][j])));
    }
  }
}

void require_vector(Outcome& o, const RelTable& t, const std::vector<int>& want,
                    const std::string& label) {
  o.require(t.cells.size() == want.size(), label + ": wrong table size");
  if (!o.pass) return;
  for (std::size_t i = 0; i < want.size(); ++i) {
    o.require(t.cells[i].value == want[i], fmt::format("{}[{}] = {}", label, i, t.cells[i].value));
  }
}

bool has_instance(const LowerResult& l, const std::string& name) {
  return l.program.find(name) != nullptr;
}

Outcome weighted_relations() {
  Outcome o;
  const auto ev = run_corpus("unfair-coin-flip.skn", Semiring::real());
  const RelTable& t = ev.fixpoint.tables.at("unfair-coin-flip");
  for (std::size_t i = 0; i < 2; ++i) {
    o.require(std::abs(t.cells[i].value - golden::unfair_coin[i]) <= 1e-12,
              fmt::format("cell {} = {}", i, t.cells[i].value));
  }
  if (o.pass) o.detail = "[0.7, 0.3]";
  return o;
}

Outcome recursion_fixpoint() {
  Outcome o;
  const auto ev = run_corpus("fair-coin-flip.skn", Semiring::real());
  const RelTable& t = ev.fixpoint.tables.at("fair-coin-flip");
  o.require(ev.fixpoint.converged, "did not converge");
  o.require(ev.fixpoint.iterations <= 200, fmt::format("{} iterations", ev.fixpoint.iterations));
  // Analytic fixpoint of w = 0.58 w + 0.21.
  const double w = 0.21 / (1 - 0.58);
  for (std::size_t i = 0; i < 2; ++i) {
    o.require(std::abs(t.cells[i].value - w) <= 1e-6,
              fmt::format("cell {} = {}", i, t.cells[i].value));
  }
  if (o.pass) {
    o.detail = fmt::format("[{:.9f}, {:.9f}] after {} iterations", t.cells[0].value,
                           t.cells[1].value, ev.fixpoint.iterations);
  }
  return o;
}

Outcome reachability() {
  Outcome o;
  const Semiring k = Semiring::boolean();
  const auto ev = run_corpus("connect.skn", k);
  require_matrix(o, ev.fixpoint.tables.at("connect"), golden::connect_reachability, k);
  if (o.pass) o.detail = "16/16 cells";
  return o;
}

Outcome shortest_paths() {
  Outcome o;
  const Semiring k = Semiring::min_tropical();
  const auto ev = run_corpus("connect.skn", k);
  require_matrix(o, ev.fixpoint.tables.at("connect"), golden::connect_shortest, k);
  if (o.pass) o.detail = "16/16 cells, (0,0) -> 2";
  return o;
}

Outcome eqpat_matrices() {
  Outcome o;
  const Semiring k = Semiring::boolean();
  const auto ev = run_corpus("poly.skn", k);
  require_matrix(o, ev.fixpoint.tables.at("sum-swap$<3,3>"), golden::sum_swap_3_3, k);
  require_matrix(o, ev.fixpoint.tables.at("sum-swap$<3,4>"), golden::sum_swap_3_4, k);
  if (o.pass) o.detail = "6x6 and 7x7";
  return o;
}

Outcome non_monomorphizing() {
  Outcome o;
  const Semiring k = Semiring::boolean();
  const auto ev = run_corpus("poly.skn", k, PolyMode::large_enough);
  o.require(!has_instance(ev.lowered, "sum-swap$<3,4>"), "a (3,4) instance was emitted");
  o.require(has_instance(ev.lowered, "sum-swap$<3,3>"), "no (3,3) instance");
  require_matrix(o, ev.fixpoint.tables.at("swap-3-4"), golden::sum_swap_3_4, k);
  if (o.pass) o.detail = "swap-3-4 served by sum-swap$<3,3>; 7x7 exact";
  return o;
}

Outcome large_enough_gating() {
  Outcome o;
  const Semiring k = Semiring::boolean();
  for (PolyMode mode : {PolyMode::monomorphize, PolyMode::large_enough}) {
    const auto ev = run_corpus("poly.skn", k, mode);
    const std::string m = mode == PolyMode::monomorphize ? "monomorphize" : "large-enough";
    require_vector(o, ev.fixpoint.tables.at("two-valued-2"), golden::two_valued_2,
                   m + " two-valued-2");
    require_vector(o, ev.fixpoint.tables.at("two-valued-1"), golden::two_valued_1,
                   m + " two-valued-1");
    o.require(has_instance(ev.lowered, "two-valued$<1>"),
              m + ": the size-1 call was not monomorphized");
    if (mode == PolyMode::large_enough) {
      o.require(ev.lowered.eligible.count("two-valued") == 1, "two-valued not eligible");
    }
  }
  if (o.pass) o.detail = "[1, 1] and [0] in both modes";
  return o;
}

Outcome differential() {
  Outcome o;
  std::vector<std::string> parts;
  for (const Semiring& k : {Semiring::boolean(), Semiring::min_tropical()}) {
    Rng rng(20240601);
    const auto r = differential_modes(k, 100, rng);
    o.require(r.ok() && r.cases == 100, r.summary());
    parts.push_back(fmt::format("{} {}/{}", k.name(), r.cases - r.failures, r.cases));
  }
  if (o.pass) o.detail = fmt::format("{}", fmt::join(parts, ", "));
  return o;
}

Outcome property_suites() {
  Outcome o;
  Rng rng(7);
  std::vector<PropertyResult> results;
  for (const Semiring& k : {Semiring::boolean(), Semiring::real(), Semiring::min_tropical()}) {
    results.push_back(semiring_axioms(k, 1000, rng));
  }
  results.push_back(index_bijection(64));
  results.push_back(values_shells_holes());
  results.push_back(eqpat_equivrel(1000, rng));
  results.push_back(eqpat_substitution(1000, rng));
  results.push_back(enforce_eqpat_exhaustive(Semiring::boolean()));
  for (const Semiring& k : {Semiring::boolean(), Semiring::min_tropical()}) {
    results.push_back(no_factor_weight(k, 1000, rng));
  }
  results.push_back(boolean_monotonicity(100, rng));
  std::vector<std::string> parts;
  for (const auto& r : results) {
    o.require(r.ok(), r.summary());
    // The exhaustive suites are bounded by their domain, the random ones by count.
    o.require(r.cases >= 1000, r.name + ": fewer than 1000 cases");
    parts.push_back(fmt::format("{} {}", r.name, r.cases));
  }
  if (o.pass) o.detail = fmt::format("{}", fmt::join(parts, "; "));
  return o;
}

Outcome evaluator_equivalence() {
  Outcome o;
  Rng rng(99);
  const auto r = scalar_vs_array(100, rng);
  o.require(r.ok(), r.summary());
  if (o.pass) o.detail = fmt::format("{} program/semiring runs", r.cases);
  return o;
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"weighted relations (unfair coin, real)", weighted_relations},
      {"recursion to a fixpoint (fair coin, real)", recursion_fixpoint},
      {"boolean transitive closure (connect)", reachability},
      {"min-tropical shortest paths (connect)", shortest_paths},
      {"equality-pattern matrices (sum-swap)", eqpat_matrices},
      {"large-enough pipeline serves (3,4) from (3,3)", non_monomorphizing},
      {"large-enough gating (two-valued)", large_enough_gating},
      {"differential oracle over random programs", differential},
      {"property suites", property_suites},
      {"scalar vs array evaluator", evaluator_equivalence},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail = std::string("exception: ") + e.what();
    }
    failed += !o.pass;
    std::cout << fmt::format("{} {:>2} {}: {}\n", o.pass ? "PASS" : "FAIL", i + 1,
                             criteria[i].first, o.detail)
              << std::flush;
  }
  return failed;
}
