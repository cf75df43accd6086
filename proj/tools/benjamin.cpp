// benjamin <subcommand> --config <path> [--out <dir>] [--threads <n>]

#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "cli/commands.hpp"

int main(int argc, char** argv) {
  using namespace benjamin::cli;
  CLI::App app{"Solitary waves of Benjamin-type equations: generation, evolution and analysis"};
  app.require_subcommand(1, 1);

  std::string config;
  std::string out;
  int threads = 1;
  for (const auto& name : command_names()) {
    auto* sub = app.add_subcommand(name);
    sub->add_option("--config", config, "scenario file")->required()->check(CLI::ExistingFile);
    sub->add_option("--out", out, "output directory (default: $BENJAMIN_OUTPUT_ROOT/<config>-<command>)");
    sub->add_option("--threads", threads, "worker threads for study sweeps")->check(CLI::PositiveNumber);
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? exit_ok : exit_usage;
  }

  const std::string command = app.get_subcommands().front()->get_name();
  ScenarioConfig cfg;
  try {
    cfg = load_config(config);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return exit_usage;
  }
  const auto dir = out.empty() ? default_output_dir(command, cfg) : std::filesystem::path(out);
  const int code = run_command(command, cfg, dir, threads, std::cerr);
  if (code == exit_ok) std::cerr << "outputs in " << dir.string() << '\n';
  return code;
}
