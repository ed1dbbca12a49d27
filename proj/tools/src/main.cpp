#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "polaron_cli/commands.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Lower spectral branches of the fixed-momentum polaron Hamiltonian"};
  app.require_subcommand(1);
  app.footer(
      "Config: key = value lines under [model] [epsilon] [coupling] [quadrature] [grid] [run].\n"
      "Exit codes: 0 ok, 2 input, 3 domain or failed validation, 4 numeric, 5 resource.");

  polaron::cli::RunOptions opts;
  double tol = 0.0;
  for (const auto& info : polaron::cli::commands()) {
    CLI::App* sub = app.add_subcommand(info.name, info.summary);
    sub->add_option("--config", opts.config_path, "config file")->required();
    sub->add_option("--out", opts.out_dir, "output directory")->capture_default_str();
    sub->add_option("--workers", opts.workers, "worker threads")->check(CLI::PositiveNumber)
        ->capture_default_str();
    sub->add_option("--tol", tol, "residual tolerance, overrides [run] tol")
        ->check(CLI::PositiveNumber);
    sub->footer("CSV columns:\n" + info.columns);
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    // argument errors share the input-error exit code
    app.exit(e);
    return 2;
  }

  const std::string command = app.get_subcommands().front()->get_name();
  if (app.get_subcommands().front()->count("--tol")) opts.tol = tol;
  return polaron::cli::run(command, opts, std::cerr);
}
