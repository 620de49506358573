#pragma once

#include <Eigen/Dense>

#include <string>
#include <vector>

#include "vcm/design.hpp"
#include "vcm/linalg.hpp"
#include "vcm/terms.hpp"

namespace vcm {

// One covariance term with its generator matrix and the per-unit data
// needed later for prediction: block terms keep the component level labels,
// kernel terms keep the covariate values.
struct CovarianceModelTerm {
  CovarianceTerm term;
  Eigen::MatrixXd generator;
  std::vector<std::string> left_labels;   // block terms
  std::vector<std::string> right_labels;  // block terms over E(A.B)
  Eigen::VectorXd covariate_values;       // kernel terms
};

// Ordered list of generators, identity first. Coefficients (the variance
// components) are unknown until fitting and constrained nonnegative.
struct CovarianceModel {
  std::vector<CovarianceModelTerm> terms;

  int n_units() const {
    return terms.empty() ? 0 : static_cast<int>(terms.front().generator.rows());
  }
  int n_terms() const { return static_cast<int>(terms.size()); }
  std::vector<std::string> term_labels() const;
};

// Generator matrix of a single term on a design:
//   identity      -> I_n
//   block(f)      -> forget(indicator(f)), the equivalence matrix
//   exch(x)       -> 1 + [x_i == x_j]
//   bm(x)         -> -|x_i - x_j|
//   spl3(x)       -> |x_i - x_j|^3
//   slope(x)      -> x xᵀ
Eigen::MatrixXd generator_matrix(const CovarianceTerm& term, const Design& design);

// Builds the full model (identity must be the first term).
CovarianceModel make_covariance_model(const std::vector<CovarianceTerm>& terms,
                                      const Design& design);

// Sum of coefficient-weighted generators. Coefficients must be nonnegative
// and the identity coefficient strictly positive.
Eigen::MatrixXd assemble(const CovarianceModel& model, const Eigen::VectorXd& coefficients);

// Linear spans of two sets of symmetric matrices coincide (matrices are
// vectorized and compared by two-sided rank tests).
bool span_equal(const std::vector<Eigen::MatrixXd>& gens_a,
                const std::vector<Eigen::MatrixXd>& gens_b,
                double rtol = linalg::kRankRtol);

// Checks that g is positive semidefinite on the orthogonal complement of
// polynomials in x of degree < cpd_order (degree < 1 means the constant;
// cpd_order 0 demands plain positive semidefiniteness).
bool conditional_pd_check(const Eigen::MatrixXd& g, int cpd_order,
                          const Eigen::VectorXd& x = Eigen::VectorXd());

}  // namespace vcm
