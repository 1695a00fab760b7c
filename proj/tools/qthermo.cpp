#include <cstdlib>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "qthermo/cli/commands.hpp"

int main(int argc, char** argv) {
  using qthermo::cli::CommandRequest;

  CLI::App app{"Quantum-enhanced thermoreflectance imaging simulator"};
  app.require_subcommand(1);

  std::string config, input, out, data_dir;
  std::uint64_t seed = 0;
  int threads = 0;

  for (const char* name : {"optimize", "scan", "transient", "noise", "fit"}) {
    auto* sub = app.add_subcommand(name);
    sub->add_option("--config", config, "JSON run config or a previous manifest.json");
    sub->add_option("--seed", seed, "Override the config seed");
    sub->add_option("--out", out, "Output directory");
    sub->add_option("--threads", threads, "Worker threads")->check(CLI::Range(1, 256));
    sub->add_option("--data-dir", data_dir, "Preset directory root");
    if (std::string(name) == "fit") sub->add_option("--input", input, "Trace or two-column CSV");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : qthermo::cli::kConfigError;
  }

  CommandRequest request;
  request.command = app.get_subcommands().front()->get_name();
  auto* sub = app.get_subcommands().front();
  if (sub->count("--config")) request.config_path = config;
  if (request.command == "fit" && sub->count("--input")) request.input_path = input;
  if (sub->count("--seed")) request.overrides.seed = seed;
  if (sub->count("--threads")) request.overrides.threads = threads;
  if (sub->count("--out")) request.overrides.output_dir = out;
  request.data_dir = sub->count("--data-dir") ? data_dir : std::string(QTHERMO_DATA_DIR);
  if (const char* env = std::getenv("QTHERMO_DATA_DIR"); env && !sub->count("--data-dir")) {
    request.data_dir = env;
  }

  try {
    return qthermo::cli::run_command(request, std::cerr);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
