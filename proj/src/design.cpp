#include "vcm/design.hpp"

#include <set>
#include <utility>

#include "vcm/errors.hpp"

namespace vcm {

int TreatmentFactor::level_index(const std::string& label) const {
  for (int i = 0; i < n_levels(); ++i) {
    if (levels[i] == label) return i;
  }
  return -1;
}

TreatmentFactor make_factor(std::string name, const std::vector<std::string>& labels) {
  TreatmentFactor factor;
  factor.name = std::move(name);
  factor.assignment.reserve(labels.size());
  std::map<std::string, int> index;
  for (const auto& label : labels) {
    auto [it, inserted] = index.emplace(label, static_cast<int>(factor.levels.size()));
    if (inserted) factor.levels.push_back(label);
    factor.assignment.push_back(it->second);
  }
  return factor;
}

Design::Design(int n_units, std::map<std::string, std::vector<std::string>> factor_labels,
               std::map<std::string, Eigen::VectorXd> covariates)
    : n_units_(n_units), covariates_(std::move(covariates)) {
  if (n_units < 0) throw ModelError("negative unit count");
  for (auto& [name, labels] : factor_labels) {
    if (name.empty()) throw ModelError("empty factor name");
    if (static_cast<int>(labels.size()) != n_units) {
      throw ModelError("factor '" + name + "' has " + std::to_string(labels.size()) +
                       " entries for " + std::to_string(n_units) + " units");
    }
    factors_.emplace(name, make_factor(name, labels));
  }
  for (const auto& [name, values] : covariates_) {
    if (name.empty()) throw ModelError("empty covariate name");
    if (factors_.count(name) > 0) {
      throw ModelError("name '" + name + "' used for both a factor and a covariate");
    }
    if (static_cast<int>(values.size()) != n_units) {
      throw ModelError("covariate '" + name + "' has " + std::to_string(values.size()) +
                       " entries for " + std::to_string(n_units) + " units");
    }
  }
}

bool Design::has_factor(const std::string& name) const {
  return factors_.count(name) > 0;
}

bool Design::has_covariate(const std::string& name) const {
  return covariates_.count(name) > 0;
}

const TreatmentFactor& Design::factor(const std::string& name) const {
  auto it = factors_.find(name);
  if (it == factors_.end()) throw ModelError("unknown factor '" + name + "'");
  return it->second;
}

const Eigen::VectorXd& Design::covariate(const std::string& name) const {
  auto it = covariates_.find(name);
  if (it == covariates_.end()) throw ModelError("unknown covariate '" + name + "'");
  return it->second;
}

Design Design::restricted(const std::vector<int>& keep_units) const {
  const int m = static_cast<int>(keep_units.size());
  std::map<std::string, std::vector<std::string>> factor_labels;
  for (const auto& [name, factor] : factors_) {
    std::vector<std::string> labels;
    labels.reserve(m);
    for (int unit : keep_units) labels.push_back(factor.level_of(unit));
    factor_labels.emplace(name, std::move(labels));
  }
  std::map<std::string, Eigen::VectorXd> covariates;
  for (const auto& [name, values] : covariates_) {
    Eigen::VectorXd kept(m);
    for (int i = 0; i < m; ++i) kept[i] = values[keep_units[i]];
    covariates.emplace(name, std::move(kept));
  }
  return Design(m, std::move(factor_labels), std::move(covariates));
}

Eigen::MatrixXd indicator(const TreatmentFactor& factor) {
  Eigen::MatrixXd x = Eigen::MatrixXd::Zero(factor.n_units(), factor.n_levels());
  for (int i = 0; i < factor.n_units(); ++i) x(i, factor.assignment[i]) = 1.0;
  return x;
}

BlockRelation forget(const Eigen::MatrixXd& indicator_matrix) {
  BlockRelation relation;
  relation.matrix = indicator_matrix * indicator_matrix.transpose();
  relation.is_equivalence = true;
  return relation;
}

TreatmentFactor cross(const TreatmentFactor& a, const TreatmentFactor& b) {
  if (a.n_units() != b.n_units()) {
    throw ModelError("cannot cross '" + a.name + "' and '" + b.name +
                     "': unit counts differ");
  }
  TreatmentFactor result;
  result.name = a.name + "." + b.name;
  result.assignment.reserve(a.n_units());
  std::map<std::pair<int, int>, int> cells;
  for (int i = 0; i < a.n_units(); ++i) {
    const std::pair<int, int> cell{a.assignment[i], b.assignment[i]};
    auto [it, inserted] = cells.emplace(cell, static_cast<int>(result.levels.size()));
    if (inserted) {
      result.levels.push_back(a.levels[cell.first] + "." + b.levels[cell.second]);
    }
    result.assignment.push_back(it->second);
  }
  return result;
}

}  // namespace vcm
