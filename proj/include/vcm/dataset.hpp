#pragma once

#include <Eigen/Dense>

#include <map>
#include <string>
#include <vector>

#include "vcm/design.hpp"

namespace vcm {

enum class ColumnKind { factor, covariate, response };

// Rectangular CSV contents with typed columns. Factor cells stay strings;
// covariate and response cells are parsed as finite reals.
struct Dataset {
  struct Column {
    std::string name;
    ColumnKind kind = ColumnKind::factor;
    std::vector<std::string> cells;
    Eigen::VectorXd numeric;  // covariate / response columns only
  };

  std::vector<Column> columns;
  int n_rows = 0;

  bool has_column(const std::string& name) const;
  const Column& column(const std::string& name) const;
  const Column& response() const;  // exactly one response column
};

// Parses simple CSV text: comma separators, one header row, UTF-8, no
// quoting. Declared kinds win; undeclared columns become factors when any
// cell is non-numeric, covariates otherwise.
Dataset parse_csv(const std::string& text,
                  const std::map<std::string, ColumnKind>& declared);

Dataset load_csv(const std::string& path,
                 const std::map<std::string, ColumnKind>& declared);

// Factors and covariates of the dataset as a Design (response excluded).
Design to_design(const Dataset& dataset);

}  // namespace vcm
