#pragma once

#include <optional>
#include <string>
#include <vector>

#include "skn/eval.hpp"
#include "skn/poly.hpp"
#include "skn/semiring.hpp"
#include "skn/syntax.hpp"

namespace skn {

enum class OutputFormat { tsv, json };

struct RunConfig {
  std::string source_path;
  std::string semiring = "boolean";
  PolyMode mode = PolyMode::monomorphize;
  double epsilon = 1e-9;
  int max_iters = 10000;
  OutputFormat format = OutputFormat::tsv;
  /// Relation names to emit. A plain name also selects its instances.
  std::vector<std::string> relations;
  bool diff = false;
  std::optional<std::string> emit_lowered;
};

namespace exit_code {
inline constexpr int ok = 0;
inline constexpr int input_error = 1;
inline constexpr int lowering_error = 2;
inline constexpr int no_convergence = 3;
inline constexpr int divergence = 4;
}  // namespace exit_code

struct RunOutput {
  int status = exit_code::ok;
  std::string out;
  std::string err;
};

/// Semiring by name; `epsilon` becomes the real semiring's tolerance.
Semiring make_semiring(const std::string& name, double epsilon = 1e-9);

/// Parses, checks, and validates factor literals against `k`.
Program load_program(const std::string& text, const Semiring& k);

struct Evaluation {
  LowerResult lowered;
  FixpointResult fixpoint;
};

Evaluation evaluate(const Program& checked, PolyMode mode, const Semiring& k,
                    int max_iters = 10000);

/// The tables named in `order`, in that order.
std::string emit_tables(const Tables& tables, const std::vector<std::string>& order,
                        const Semiring& k, OutputFormat format);

struct DiffReport {
  bool identical = true;
  bool converged = true;
  std::string message;
};

/// Runs both poly modes and compares the tables they share by name.
DiffReport diff_modes(const Program& checked, const Semiring& k, int max_iters = 10000);

/// The whole batch pipeline; never throws for bad input.
RunOutput run(const RunConfig& config);

}  // namespace skn
