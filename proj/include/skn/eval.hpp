#pragma once

#include <cstddef>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "skn/semiring.hpp"
#include "skn/syntax.hpp"

namespace skn {

/// |τ|. Throws std::invalid_argument for types with variables and
/// std::overflow_error past 2^40.
std::size_t type_size(const Type& t);

/// All values of `t`: lefts before rights, pairs first-component-major.
std::vector<Value> enumerate_type(const Type& t);

/// Position of `v` in enumerate_type(t).
std::size_t value_index(const Value& v, const Type& t);
Value index_value(std::size_t i, const Type& t);

using ValueEnv = std::map<std::string, Value, std::less<>>;

Value eval_value(const Value& v, const ValueEnv& env);

/// Dense weights of one relation, row-major over its parameters.
struct RelTable {
  std::string rel;
  std::vector<Param> params;
  std::vector<std::size_t> sizes;
  std::vector<Weight> cells;

  std::size_t offset(const std::vector<std::size_t>& index) const;
  Weight at(const std::vector<std::size_t>& index) const { return cells[offset(index)]; }
  /// Grid coordinates of cell `flat`.
  std::vector<std::size_t> coords(std::size_t flat) const;
};

using Tables = std::map<std::string, RelTable, std::less<>>;

/// A table for `rel` filled with the semiring zero.
RelTable zero_table(const RelationDef& rel, const Semiring& k);

/// Parses every factor literal of `p`. Throws WeightLiteralError.
void validate_weights(const Program& p, const Semiring& k);

/// Reference semantics: direct recursion, brute-force sums for fresh.
Weight eval_goal(const Goal& g, const Tables& tables, const ValueEnv& env,
                 const Semiring& k);

/// Goal weights over the whole grid of `scope`, computed with the array
/// evaluator. Row-major over `scope`.
std::vector<Weight> eval_goal_array(const Goal& g, const std::vector<Param>& scope,
                                    const Tables& tables, const Semiring& k);

enum class EvalStrategy { array, scalar };

/// One evaluation of a checked monomorphic relation against `tables`.
RelTable eval_relation(const RelationDef& rel, const Tables& tables, const Semiring& k,
                       EvalStrategy strategy = EvalStrategy::array);

struct FixpointOptions {
  int max_iters = 10000;
  EvalStrategy strategy = EvalStrategy::array;
  /// Called with each round's tables; round 0 is the all-zero start.
  std::function<void(int, const Tables&)> observer;
};

struct FixpointResult {
  Tables tables;
  bool converged = false;
  int iterations = 0;
};

/// Jacobi iteration from all-zero tables until two successive rounds agree
/// under k.equal, or max_iters rounds have run.
FixpointResult fixpoint(const Program& checked, const Semiring& k,
                        const FixpointOptions& options = {});

}  // namespace skn
