// skn: batch driver for semiringKanren programs.

#include <CLI11.hpp>

#include <iostream>
#include <map>

#include "skn/driver.hpp"

int main(int argc, char** argv) {
  CLI::App app{"semiringKanren: weighted relational programs over semirings"};
  app.require_subcommand(1);

  skn::RunConfig config;
  std::string mode = "monomorphize";
  std::string format = "tsv";

  CLI::App* run = app.add_subcommand("run", "evaluate a program and print its tables");
  run->add_option("file", config.source_path, "program (.skn)")->required();
  run->add_option("--semiring", config.semiring, "boolean | real | min-tropical")
      ->envname("SKN_SEMIRING")
      ->check(CLI::IsMember({"boolean", "real", "min-tropical"}));
  run->add_option("--poly-mode", mode, "monomorphize | large-enough")
      ->check(CLI::IsMember({"monomorphize", "large-enough"}));
  run->add_option("--rel", config.relations, "relation to print (repeatable)");
  run->add_option("--epsilon", config.epsilon, "real-semiring convergence tolerance")
      ->check(CLI::NonNegativeNumber);
  run->add_option("--max-iters", config.max_iters, "fixpoint iteration limit")
      ->check(CLI::PositiveNumber);
  run->add_option("--format", format, "tsv | json")->check(CLI::IsMember({"tsv", "json"}));
  run->add_option("--emit-lowered", config.emit_lowered, "write the lowered program here");
  run->add_flag("--diff", config.diff, "compare both poly modes");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : skn::exit_code::input_error;
  }

  config.mode = mode == "large-enough" ? skn::PolyMode::large_enough
                                       : skn::PolyMode::monomorphize;
  config.format = format == "json" ? skn::OutputFormat::json : skn::OutputFormat::tsv;

  const skn::RunOutput out = skn::run(config);
  std::cout << out.out;
  std::cerr << out.err;
  return out.status;
}
