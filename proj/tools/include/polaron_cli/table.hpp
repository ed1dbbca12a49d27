#pragma once

#include <cstdint>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

namespace polaron::cli {

using Cell = std::variant<double, std::int64_t, bool, std::string>;

struct Table {
  std::string name;  // file stem
  std::vector<std::string> columns;
  std::vector<std::vector<Cell>> rows;

  void add(std::vector<Cell> row);
};

// 17 significant digits, shortest exponent form from to_chars.
std::string format_double(double v);
std::string format_cell(const Cell& c);

void write_csv(const Table& t, const std::string& path);
nlohmann::ordered_json to_json(const Table& t);

}  // namespace polaron::cli
