#pragma once

#include <Eigen/Dense>

#include <string>
#include <vector>

#include "vcm/design.hpp"
#include "vcm/terms.hpp"

namespace vcm {

// One term's slice of the model matrix. Factor and cross terms keep the
// TreatmentFactor whose levels define the columns; covariate terms map a
// single column.
struct MeanModelBlock {
  MeanTerm term;
  int col_start = 0;
  int col_count = 0;
  bool is_covariate = false;
  TreatmentFactor factor;  // only meaningful for factor / cross terms
  // Component level labels per unit, kept for cross terms so new units can
  // be matched to observed cells without relying on joined labels.
  std::vector<std::string> left_labels;
  std::vector<std::string> right_labels;
};

// Model matrix for a list of mean-formula terms. The column span, not the
// particular basis, is the contract; rank comes from a pivoted
// rank-revealing factorization.
struct MeanModel {
  std::vector<MeanModelBlock> blocks;
  Eigen::MatrixXd matrix;
  std::vector<std::string> column_names;
  Eigen::Index rank = 0;

  int n_units() const { return static_cast<int>(matrix.rows()); }
  std::vector<MeanTerm> terms() const;
};

MeanModel mean_model_matrix(const std::vector<MeanTerm>& terms, const Design& design);

// True iff the column span contains the constant vector and is closed under
// entrywise products of its elements.
bool is_ring(const MeanModel& model);

// True iff deleting the given level leaves the model's span unchanged: the
// row-restriction of the matrix spans the same space as the matrix rebuilt
// from the restricted design.
bool deletion_closure_check(const std::vector<MeanTerm>& terms, const Design& design,
                            const std::string& factor_name, const std::string& level);

}  // namespace vcm
