#pragma once

#include <Eigen/Dense>

#include <map>
#include <string>
#include <vector>

namespace vcm {

// A treatment (classification) factor: a named list assigning one level to
// each unit. Levels are ordered by first occurrence; all algebra works on
// the integer assignment, labels exist for display and lookup.
struct TreatmentFactor {
  std::string name;
  std::vector<std::string> levels;
  std::vector<int> assignment;

  int n_units() const { return static_cast<int>(assignment.size()); }
  int n_levels() const { return static_cast<int>(levels.size()); }
  const std::string& level_of(int unit) const { return levels[assignment[unit]]; }
  int level_index(const std::string& label) const;  // -1 when unobserved
};

TreatmentFactor make_factor(std::string name, const std::vector<std::string>& labels);

// Symmetric 0/1 unit-by-unit relation. forget() always produces an
// equivalence relation; the flag records that.
struct BlockRelation {
  Eigen::MatrixXd matrix;
  bool is_equivalence = false;
};

// Immutable unit set with named factors and quantitative covariates.
// Factor and covariate names are disjoint and nonempty.
class Design {
 public:
  Design(int n_units, std::map<std::string, std::vector<std::string>> factor_labels,
         std::map<std::string, Eigen::VectorXd> covariates);

  int n_units() const { return n_units_; }
  bool has_factor(const std::string& name) const;
  bool has_covariate(const std::string& name) const;
  const TreatmentFactor& factor(const std::string& name) const;
  const Eigen::VectorXd& covariate(const std::string& name) const;
  const std::map<std::string, TreatmentFactor>& factors() const { return factors_; }
  const std::map<std::string, Eigen::VectorXd>& covariates() const { return covariates_; }

  // Sub-design on the listed units; levels that lose all units are dropped.
  Design restricted(const std::vector<int>& keep_units) const;

 private:
  int n_units_;
  std::map<std::string, TreatmentFactor> factors_;
  std::map<std::string, Eigen::VectorXd> covariates_;
};

// Indicator matrix X(A): one column per level, a single 1 per row at the
// assigned level's column.
Eigen::MatrixXd indicator(const TreatmentFactor& factor);

// Forgetful transform E = XXᵀ: level names are lost, the partition remains.
BlockRelation forget(const Eigen::MatrixXd& indicator_matrix);

// A.B: the factor whose levels are the observed ordered pairs (A(i), B(i)).
// Only observed pairs become levels.
TreatmentFactor cross(const TreatmentFactor& a, const TreatmentFactor& b);

}  // namespace vcm
