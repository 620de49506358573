#include "vcm/dataset.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "vcm/errors.hpp"

namespace vcm {

namespace {

std::string trim(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t");
  if (begin == std::string::npos) return {};
  const auto end = s.find_last_not_of(" \t");
  return s.substr(begin, end - begin + 1);
}

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> fields;
  std::string::size_type start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    if (comma == std::string::npos) {
      fields.push_back(trim(line.substr(start)));
      break;
    }
    fields.push_back(trim(line.substr(start, comma - start)));
    start = comma + 1;
  }
  return fields;
}

bool parse_double(const std::string& cell, double& out) {
  const char* begin = cell.data();
  const char* end = begin + cell.size();
  auto [ptr, ec] = std::from_chars(begin, end, out);
  return ec == std::errc() && ptr == end && !cell.empty();
}

}  // namespace

bool Dataset::has_column(const std::string& name) const {
  for (const auto& column : columns) {
    if (column.name == name) return true;
  }
  return false;
}

const Dataset::Column& Dataset::column(const std::string& name) const {
  for (const auto& col : columns) {
    if (col.name == name) return col;
  }
  throw DataError("no column named '" + name + "'");
}

const Dataset::Column& Dataset::response() const {
  const Column* found = nullptr;
  for (const auto& col : columns) {
    if (col.kind != ColumnKind::response) continue;
    if (found != nullptr) throw DataError("more than one response column");
    found = &col;
  }
  if (found == nullptr) throw DataError("no response column declared");
  return *found;
}

Dataset parse_csv(const std::string& text,
                  const std::map<std::string, ColumnKind>& declared) {
  std::vector<std::string> lines;
  {
    std::istringstream stream(text);
    std::string line;
    while (std::getline(stream, line)) {
      if (!line.empty() && line.back() == '\r') line.pop_back();
      lines.push_back(line);
    }
  }
  while (!lines.empty() && trim(lines.back()).empty()) lines.pop_back();
  if (lines.empty()) throw DataError("empty file");

  const std::vector<std::string> header = split_fields(lines[0]);
  std::set<std::string> seen;
  Dataset data;
  for (const auto& name : header) {
    if (name.empty()) throw DataError("empty column name in header");
    if (!seen.insert(name).second) throw DataError("duplicate column name '" + name + "'");
    Dataset::Column column;
    column.name = name;
    data.columns.push_back(std::move(column));
  }

  data.n_rows = static_cast<int>(lines.size()) - 1;
  if (data.n_rows < 1) throw DataError("no data rows");
  for (int row = 0; row < data.n_rows; ++row) {
    const std::vector<std::string> fields = split_fields(lines[row + 1]);
    if (fields.size() != header.size()) {
      throw DataError("row " + std::to_string(row + 1) + " has " +
                      std::to_string(fields.size()) + " fields, expected " +
                      std::to_string(header.size()));
    }
    for (std::size_t c = 0; c < fields.size(); ++c) {
      data.columns[c].cells.push_back(fields[c]);
    }
  }

  for (const auto& [name, kind] : declared) {
    if (!data.has_column(name)) {
      throw DataError("declared column '" + name + "' not present in the file");
    }
  }

  for (auto& column : data.columns) {
    auto it = declared.find(column.name);
    bool numeric_needed;
    if (it != declared.end()) {
      column.kind = it->second;
      numeric_needed = column.kind != ColumnKind::factor;
    } else {
      // Default kind: covariate when every cell parses as a number.
      bool all_numeric = true;
      double value;
      for (const auto& cell : column.cells) {
        if (!parse_double(cell, value)) {
          all_numeric = false;
          break;
        }
      }
      column.kind = all_numeric ? ColumnKind::covariate : ColumnKind::factor;
      numeric_needed = all_numeric;
    }
    if (!numeric_needed) continue;
    column.numeric.resize(data.n_rows);
    for (int row = 0; row < data.n_rows; ++row) {
      double value;
      if (!parse_double(column.cells[row], value)) {
        throw DataError("row " + std::to_string(row + 1) + ", column " +
                        column.name + ": cannot parse '" + column.cells[row] +
                        "' as a number");
      }
      if (!std::isfinite(value)) {
        throw DataError("row " + std::to_string(row + 1) + ", column " +
                        column.name + ": non-finite value");
      }
      column.numeric[row] = value;
    }
  }
  return data;
}

Dataset load_csv(const std::string& path,
                 const std::map<std::string, ColumnKind>& declared) {
  std::ifstream file(path, std::ios::binary);
  if (!file) throw DataError("cannot open '" + path + "'");
  std::ostringstream buffer;
  buffer << file.rdbuf();
  return parse_csv(buffer.str(), declared);
}

Design to_design(const Dataset& dataset) {
  std::map<std::string, std::vector<std::string>> factors;
  std::map<std::string, Eigen::VectorXd> covariates;
  for (const auto& column : dataset.columns) {
    switch (column.kind) {
      case ColumnKind::factor:
        factors.emplace(column.name, column.cells);
        break;
      case ColumnKind::covariate:
        covariates.emplace(column.name, column.numeric);
        break;
      case ColumnKind::response:
        break;
    }
  }
  return Design(dataset.n_rows, std::move(factors), std::move(covariates));
}

}  // namespace vcm
