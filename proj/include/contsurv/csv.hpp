#pragma once

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace contsurv::csv {

// Minimal reader for the comma-delimited, header-first dialect used by all
// file formats of this project. Double-quoted fields are accepted.
struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  std::optional<std::size_t> column(std::string_view name) const;
  std::size_t require_column(std::string_view name) const;
};

Table read(std::istream& in);
Table read_file(const std::string& path);

std::vector<std::string> split_line(std::string_view line);

// Parses a finite or non-finite double; returns nullopt on malformed text.
std::optional<double> parse_double(std::string_view text);

// Shortest decimal text that round-trips to the same double.
std::string format_double(double value);

}  // namespace contsurv::csv
