#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <variant>
#include <vector>

namespace robustkf::cli {

/// Empty, text, real or integer.
using Cell = std::variant<std::monostate, std::string, double, std::int64_t>;

/// Shortest decimal string that round-trips to the same double.
std::string format_double(double v);

/// A small column-oriented table written as CSV or JSON.
///
/// CSV layout: one `# ...` comment line recording the subcommand, seed and
/// config hash, then the header row, then one line per row.
struct Table {
  std::vector<std::string> columns;
  std::vector<std::vector<Cell>> rows;

  void write_csv(std::ostream& os, const std::string& comment) const;
  void write_json(std::ostream& os, const std::string& comment) const;
};

}  // namespace robustkf::cli
