#include "rate/csv.hpp"

#include <charconv>
#include <fstream>
#include <ostream>
#include <sstream>
#include <string_view>

#include <fmt/format.h>

#include "rate/error.hpp"

namespace rate {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) {
    s.remove_suffix(1);
  }
  return s;
}

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    const std::size_t comma = line.find(',', start);
    if (comma == std::string_view::npos) {
      out.push_back(trim(line.substr(start)));
      return out;
    }
    out.push_back(trim(line.substr(start, comma - start)));
    start = comma + 1;
  }
}

}  // namespace

RawColumns parse_csv(const std::string& text) {
  std::vector<std::string_view> lines;
  {
    std::string_view rest(text);
    if (rest.starts_with("\xEF\xBB\xBF")) rest.remove_prefix(3);  // UTF-8 BOM
    while (!rest.empty()) {
      const std::size_t nl = rest.find('\n');
      std::string_view line = rest.substr(0, nl);
      if (!trim(line).empty()) lines.push_back(line);
      if (nl == std::string_view::npos) break;
      rest.remove_prefix(nl + 1);
    }
  }
  if (lines.empty()) throw SchemaError("CSV input is empty (header required)");

  RawColumns columns;
  for (std::string_view name : split_fields(lines[0])) {
    if (name.empty()) throw SchemaError("CSV header has an empty column name");
    columns.push_back({std::string(name), {}});
    columns.back().values.reserve(lines.size() - 1);
  }

  for (std::size_t r = 1; r < lines.size(); ++r) {
    auto fields = split_fields(lines[r]);
    if (fields.size() != columns.size()) {
      throw SchemaError(fmt::format(
          "column length mismatch: row {} has {} fields, header has {}", r,
          fields.size(), columns.size()));
    }
    for (std::size_t c = 0; c < fields.size(); ++c) {
      std::string_view f = fields[c];
      if (!f.empty() && f.front() == '+') f.remove_prefix(1);
      double v = 0.0;
      auto [ptr, ec] = std::from_chars(f.data(), f.data() + f.size(), v);
      if (f.empty() || ec != std::errc() || ptr != f.data() + f.size()) {
        throw SchemaError(fmt::format("non-numeric value '{}' in column '{}' at row {}",
                                      fields[c], columns[c].name, r));
      }
      columns[c].values.push_back(v);
    }
  }
  return columns;
}

RawColumns read_csv(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw SchemaError(fmt::format("cannot open '{}'", path));
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_csv(buf.str());
}

std::string format_double(double value) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, ptr);
}

void write_csv(std::ostream& out, const RawColumns& columns) {
  std::size_t rows = 0;
  for (std::size_t c = 0; c < columns.size(); ++c) {
    if (c > 0) out << ',';
    out << columns[c].name;
    rows = std::max(rows, columns[c].values.size());
  }
  out << '\n';
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < columns.size(); ++c) {
      if (c > 0) out << ',';
      out << format_double(columns[c].values.at(r));
    }
    out << '\n';
  }
}

std::string format_csv(const RawColumns& columns) {
  std::ostringstream out;
  write_csv(out, columns);
  return out.str();
}

}  // namespace rate
