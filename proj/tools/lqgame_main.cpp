// Command-line front end: one session per invocation.

#include "lqgame/session.hpp"

#include <CLI11.hpp>

#include <iostream>

int main(int argc, char** argv) {
  using namespace lqgame;
  CLI::App app{"Forward and inverse solvers for linear-quadratic dynamic games"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir;
  std::uint64_t seed = 0;
  bool validate_only = false;

  for (const char* verb : {"forward", "inverse-mb", "inverse-mf", "equiv-gen", "verify"}) {
    CLI::App* sub = app.add_subcommand(verb);
    sub->add_option("--config", config_path, "Session config (JSON)")->required();
    sub->add_option("--out", out_dir, "Output directory (overrides LQGAME_OUT_DIR)");
    sub->add_option("--seed", seed, "Seed for probing noise");
    sub->add_flag("--validate-only", validate_only, "Check the config and exit");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : cli::exit_code::kConfig;
  }

  CLI::App* chosen = app.get_subcommands().front();
  cli::SessionRequest request;
  request.mode = *cli::parse_mode(chosen->get_name());
  request.validate_only = validate_only;
  if (!out_dir.empty()) request.out_dir = out_dir;
  if (chosen->count("--seed") > 0) request.seed = seed;

  const std::filesystem::path path(config_path);
  request.base_dir = path.has_parent_path() ? path.parent_path() : ".";
  try {
    request.config = io::read_json_file(path);
  } catch (const GameError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return cli::exit_code::kConfig;
  }

  const cli::SessionOutcome outcome = cli::run_session(request);
  if (outcome.exit_code == cli::exit_code::kOk) {
    std::cout << outcome.message << '\n';
  } else {
    std::cerr << "error (exit " << outcome.exit_code << "): " << outcome.message << '\n';
  }
  return outcome.exit_code;
}
