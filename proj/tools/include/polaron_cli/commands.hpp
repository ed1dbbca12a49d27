#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "polaron_cli/config.hpp"
#include "polaron_cli/table.hpp"

namespace polaron::cli {

struct RunOptions {
  std::string config_path;
  std::string out_dir = ".";
  int workers = 1;
  std::optional<double> tol;
};

struct CommandInfo {
  std::string name;
  std::string summary;
  std::string columns;  // CSV documentation for --help
};

const std::vector<CommandInfo>& commands();

// Tables produced by one command; nothing is written.
std::vector<Table> run_tables(const std::string& command, const RunConfig& cfg, int workers);

// Exit codes: 0 ok, 2 input, 3 domain (including a failed validation),
// 4 numeric, 5 resource, 1 anything else. On failure a JSON error record
// goes to `err` and to <out>/error.json.
int run(const std::string& command, const RunOptions& opts, std::ostream& err);

}  // namespace polaron::cli
