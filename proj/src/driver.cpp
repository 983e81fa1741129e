#include "skn/driver.hpp"

#include <fmt/format.h>

#include <cmath>
#include <fstream>
#include <json.hpp>
#include <sstream>

#include "skn/typecheck.hpp"

namespace skn {

Semiring make_semiring(const std::string& name, double epsilon) {
  Semiring k = Semiring::from_name(name);
  if (k.kind() == SemiringKind::real) k = k.with_tolerance(epsilon);
  return k;
}

Program load_program(const std::string& text, const Semiring& k) {
  Program checked = check_program(parse_program(text));
  validate_weights(checked, k);
  return checked;
}

Evaluation evaluate(const Program& checked, PolyMode mode, const Semiring& k,
                    int max_iters) {
  Evaluation e;
  e.lowered = lower_program(checked, mode, k);
  FixpointOptions options;
  options.max_iters = max_iters;
  e.fixpoint = fixpoint(e.lowered.program, k, options);
  return e;
}

namespace {

std::string render_row_values(const RelTable& t, std::size_t flat,
                              std::vector<std::string>* out) {
  const auto idx = t.coords(flat);
  std::string line;
  for (std::size_t d = 0; d < idx.size(); ++d) {
    std::string v = render_value(index_value(idx[d], t.params[d].type));
    if (out) out->push_back(v);
    line += v;
    line += '\t';
  }
  return line;
}

nlohmann::json weight_json(Weight w, const Semiring& k) {
  switch (k.kind()) {
    case SemiringKind::boolean:
      return w == k.one();
    case SemiringKind::real:
      return w.value;
    case SemiringKind::min_tropical:
      if (std::isinf(w.value)) return "inf";
      return w.value;
  }
  return nullptr;
}

}  // namespace

std::string emit_tables(const Tables& tables, const std::vector<std::string>& order,
                        const Semiring& k, OutputFormat format) {
  if (format == OutputFormat::json) {
    nlohmann::json doc = nlohmann::json::array();
    for (const auto& name : order) {
      const RelTable& t = tables.at(name);
      nlohmann::json rel;
      rel["relation"] = name;
      rel["params"] = nlohmann::json::array();
      for (const auto& p : t.params) {
        rel["params"].push_back({{"name", p.name}, {"type", p.type.str()}});
      }
      rel["entries"] = nlohmann::json::array();
      for (std::size_t flat = 0; flat < t.cells.size(); ++flat) {
        std::vector<std::string> values;
        render_row_values(t, flat, &values);
        rel["entries"].push_back({{"values", values}, {"weight", weight_json(t.cells[flat], k)}});
      }
      doc.push_back(std::move(rel));
    }
    return doc.dump(2) + "\n";
  }
  std::string out;
  bool first = true;
  for (const auto& name : order) {
    const RelTable& t = tables.at(name);
    if (!first) out += '\n';
    first = false;
    out += '[' + name + "]\n";
    for (const auto& p : t.params) out += p.name + '\t';
    out += "weight\n";
    for (std::size_t flat = 0; flat < t.cells.size(); ++flat) {
      out += render_row_values(t, flat, nullptr);
      out += k.render(t.cells[flat]);
      out += '\n';
    }
  }
  return out;
}

DiffReport diff_modes(const Program& checked, const Semiring& k, int max_iters) {
  DiffReport report;
  const Evaluation mono = evaluate(checked, PolyMode::monomorphize, k, max_iters);
  const Evaluation le = evaluate(checked, PolyMode::large_enough, k, max_iters);
  report.converged = mono.fixpoint.converged && le.fixpoint.converged;
  std::size_t compared = 0;
  for (const auto& rel : mono.lowered.program.relations) {
    auto other = le.fixpoint.tables.find(rel.name);
    if (other == le.fixpoint.tables.end()) continue;
    const RelTable& a = mono.fixpoint.tables.at(rel.name);
    const RelTable& b = other->second;
    ++compared;
    for (std::size_t flat = 0; flat < a.cells.size(); ++flat) {
      if (a.cells[flat] == b.cells[flat]) continue;
      std::vector<std::string> values;
      render_row_values(a, flat, &values);
      report.identical = false;
      report.message = fmt::format(
          "{} differs at ({}): monomorphize {} vs large-enough {}", rel.name,
          fmt::join(values, ", "), k.render(a.cells[flat]), k.render(b.cells[flat]));
      return report;
    }
  }
  report.message = fmt::format("identical ({} shared relation(s))", compared);
  return report;
}

namespace {

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

bool all_in_carrier(const Tables& tables, const Semiring& k) {
  for (const auto& [name, t] : tables) {
    for (Weight w : t.cells) {
      if (!k.contains(w)) return false;
    }
  }
  return true;
}

std::string base_name(const std::string& mangled) {
  return mangled.substr(0, mangled.find('$'));
}

}  // namespace

RunOutput run(const RunConfig& config) {
  RunOutput r;
  auto fail = [&](int status, const std::string& message) {
    r.status = status;
    r.err += "error: " + message + "\n";
    return r;
  };

  if (config.epsilon < 0) return fail(exit_code::input_error, "--epsilon must be >= 0");
  if (config.max_iters < 1) return fail(exit_code::input_error, "--max-iters must be >= 1");

  Semiring k = Semiring::boolean();
  Program checked;
  try {
    k = make_semiring(config.semiring, config.epsilon);
    checked = load_program(read_file(config.source_path), k);
  } catch (const ParseError& e) {
    return fail(exit_code::input_error, fmt::format("{}:{}:{}: {}", config.source_path,
                                                    e.where().line, e.where().column,
                                                    e.what()));
  } catch (const ProgramTypeError& e) {
    for (const auto& m : e.errors()) r.err += "type error: " + m + "\n";
    r.status = exit_code::input_error;
    return r;
  } catch (const std::exception& e) {
    return fail(exit_code::input_error, e.what());
  }

  if (config.diff) {
    try {
      DiffReport d = diff_modes(checked, k, config.max_iters);
      r.out = d.message + "\n";
      if (!d.converged) {
        r.err += "warning: a fixpoint did not converge\n";
        if (d.identical) r.status = exit_code::no_convergence;
      }
      if (!d.identical) r.status = exit_code::divergence;
    } catch (const std::exception& e) {
      return fail(exit_code::lowering_error, e.what());
    }
    return r;
  }

  Evaluation ev;
  try {
    ev.lowered = lower_program(checked, config.mode, k);
  } catch (const std::exception& e) {
    return fail(exit_code::lowering_error, e.what());
  }
  if (config.emit_lowered) {
    std::ofstream out(*config.emit_lowered, std::ios::binary);
    out << render_program(ev.lowered.program);
    if (!out) return fail(exit_code::input_error, "cannot write " + *config.emit_lowered);
  }

  std::vector<std::string> order;
  for (const auto& rel : ev.lowered.program.relations) {
    if (config.relations.empty()) {
      order.push_back(rel.name);
      continue;
    }
    for (const auto& want : config.relations) {
      if (want == rel.name || want == base_name(rel.name)) {
        order.push_back(rel.name);
        break;
      }
    }
  }
  for (const auto& want : config.relations) {
    bool found = false;
    for (const auto& rel : ev.lowered.program.relations) {
      found = found || want == rel.name || want == base_name(rel.name);
    }
    if (!found) return fail(exit_code::input_error, "no relation named '" + want + "'");
  }

  FixpointOptions options;
  options.max_iters = config.max_iters;
  try {
    ev.fixpoint = fixpoint(ev.lowered.program, k, options);
  } catch (const std::exception& e) {
    return fail(exit_code::lowering_error, e.what());
  }
  if (!ev.fixpoint.converged) {
    r.status = exit_code::no_convergence;
    r.err += fmt::format("warning: no fixpoint after {} iterations; showing the last tables\n",
                         ev.fixpoint.iterations);
  } else if (!all_in_carrier(ev.fixpoint.tables, k)) {
    r.status = exit_code::no_convergence;
    r.err += "warning: weights diverged past the largest finite value\n";
  }
  r.out = emit_tables(ev.fixpoint.tables, order, k, config.format);
  return r;
}

}  // namespace skn
