#pragma once

#include <Eigen/Dense>

#include <vector>

#include "vcm/covariance.hpp"
#include "vcm/mean_model.hpp"

namespace vcm {

struct FitConfig {
  int max_iterations = 200;
  double score_tolerance = 1e-8;
  double loglik_rel_tolerance = 1e-10;
  // Relative to the total sample variance of the response.
  double boundary_tolerance = 1e-8;
  int step_halving_limit = 30;
};

struct FitResult {
  Eigen::VectorXd components;      // per covariance term, all >= 0
  Eigen::VectorXd beta;            // GLS coefficients at the optimum
  Eigen::MatrixXd beta_cov;        // their covariance matrix
  double reml_loglik = 0.0;
  bool converged = false;
  std::vector<bool> boundary_flags;  // near-zero estimated components
  int iterations = 0;
};

// Orthonormal basis of the orthogonal complement of col(x): LᵀX = 0,
// LᵀL = I, with n - rank(x) columns. Errors on a saturated mean model.
Eigen::MatrixXd contrast_basis(const Eigen::MatrixXd& x);

// Restricted log-likelihood of the contrasts Lᵀy under V = Σ σ²_k G_k:
//   -1/2 [ log det(LᵀVL) + yᵀL (LᵀVL)⁻¹ Lᵀy + (n - r) log 2π ].
// The value does not depend on which orthonormal contrast basis is used.
double reml_loglik(const Eigen::VectorXd& coefficients, const Eigen::MatrixXd& l,
                   const Eigen::VectorXd& y, const CovarianceModel& cov);

struct ScoreInfo {
  Eigen::VectorXd score;        // d loglik / d sigma^2_k
  Eigen::MatrixXd information;  // expected information, 1/2 tr(W G̃_k W G̃_l)
};

ScoreInfo reml_score_info(const Eigen::VectorXd& coefficients, const Eigen::MatrixXd& l,
                          const Eigen::VectorXd& y, const CovarianceModel& cov);

// Maximizes the restricted likelihood over the nonnegative orthant by
// Fisher scoring with monotone step halving. Components pinned at zero
// re-enter when their score turns positive. Fails up front when the model
// is not identifiable or a generalized-covariance term lacks the required
// polynomial trend in the mean.
FitResult fit_reml(const MeanModel& mean, const CovarianceModel& cov,
                   const Eigen::VectorXd& y, const FitConfig& config = {});

struct GlsResult {
  Eigen::VectorXd beta;
  Eigen::MatrixXd beta_cov;
};

// Weighted least squares at fixed variance components. All algebra runs
// through the contrast representation, so generalized covariances are
// handled without inverting V on the full space; rank-deficient mean
// models are tolerated (only estimable functions are reliable).
GlsResult gls(const MeanModel& mean, const CovarianceModel& cov,
              const Eigen::VectorXd& coefficients, const Eigen::VectorXd& y);

}  // namespace vcm
