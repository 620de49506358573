#pragma once

#include <Eigen/Dense>

#include <map>
#include <string>
#include <vector>

#include "vcm/covariance.hpp"
#include "vcm/estimate.hpp"
#include "vcm/mean_model.hpp"

namespace vcm {

// Token for an unobserved factor level on a new unit. Such a unit carries
// its own block variance but shares no block with the data; two units in a
// contrast never share a NEW level.
inline constexpr const char* kNewLevel = "NEW";

// Factor levels and covariate values for a hypothetical new unit. Every
// factor and covariate referenced by the fitted model must be present;
// names the model does not reference are rejected.
struct NewUnit {
  std::map<std::string, std::string> levels;
  std::map<std::string, double> covariates;

  friend bool operator==(const NewUnit&, const NewUnit&) = default;
};

struct Prediction {
  double value = 0.0;
  double std_error = 0.0;
  double fixed_part = 0.0;     // x*ᵀ β̂
  double residual_part = 0.0;  // c*ᵀ P y
};

struct LevelEffect {
  std::string level;
  double effect = 0.0;
  double std_error = 0.0;
};

// Everything prediction needs: the fitted mean and covariance models, the
// response they were fitted to, and the estimates.
struct FittedModel {
  MeanModel mean;
  CovarianceModel cov;
  Eigen::VectorXd y;
  FitResult fit;
};

// Numerical smoothness report for the prediction curve over one covariate.
// For the cubic kernel the curve is a natural cubic spline: the third
// derivative is constant within inter-knot intervals, value/first/second
// derivatives are continuous at knots, and the second derivative vanishes
// outside the boundary knots. For the Brownian kernel the curve is
// piecewise linear and the analogous statements hold one order down.
struct CurveDiagnostics {
  int piecewise_degree = 3;  // 3 = cubic kernel, 1 = brownian kernel
  std::size_t n_knots = 0;
  double grid_step = 0.0;

  // Cubic kernel: max over intervals of (max-min)/|mean| of the estimated
  // third derivative. Brownian kernel: unused (0).
  double third_deriv_rel_variation = 0.0;

  // Knot continuity gaps and the scales to judge them against.
  double value_gap_max = 0.0, d1_gap_max = 0.0, d2_gap_max = 0.0;
  double value_scale = 0.0, d1_scale = 0.0, d2_scale = 0.0;

  // Second-derivative magnitudes: inside intervals, outside the boundary
  // knots, and at the knots themselves (the kink scale for brownian).
  double second_deriv_interior_max = 0.0;
  double second_deriv_exterior_max = 0.0;
  double second_deriv_knot_scale = 0.0;
};

// Universal-kriging predictions from a fitted model. Block terms contribute
// σ̂²_k when the new unit shares the block with a data unit, kernel terms
// contribute σ̂²_k K(x*, x_i); generalized covariances never require V⁻¹ on
// the full space.
class Predictor {
 public:
  explicit Predictor(const FittedModel& model);

  Prediction point(const NewUnit& unit) const;

  // Difference of conditional means, with the standard error taken from the
  // joint prediction-error covariance. Identical fully observed specs are
  // the same unit (zero contrast, zero error); NEW levels are fresh per
  // unit and never shared.
  Prediction contrast(const NewUnit& unit_a, const NewUnit& unit_b) const;

  // Predicted random effect per observed level of a block factor: the
  // contrast between a unit at that level and one at a NEW level, all else
  // held equal (same-unit counterfactual).
  std::vector<LevelEffect> effects(const std::string& factor_name) const;

  // Evaluates the prediction curve over a uniform grid and reports the
  // finite-difference smoothness diagnostics. Requires a cubic or brownian
  // kernel on the covariate and at least 8 grid points per knot interval.
  CurveDiagnostics curve_diagnostics(const std::string& covariate_name,
                                     const Eigen::VectorXd& grid) const;

  // Prediction curve value at x (all block factors taken at NEW levels).
  double curve_value(const std::string& covariate_name, double x) const;

 private:
  struct Cross {
    Eigen::VectorXd x_row;   // mean-model row
    Eigen::VectorXd c;       // covariances with the data units
    double k_self = 0.0;     // prior variance of the new unit
    bool has_new = false;
  };

  Cross cross_covariances(const NewUnit& unit) const;
  double k_between(const NewUnit& a, const NewUnit& b, const Cross& ca,
                   const Cross& cb) const;
  void validate(const NewUnit& unit) const;

  const FittedModel& model_;
  Eigen::MatrixXd l_;         // contrast basis
  Eigen::LLT<Eigen::MatrixXd> m_llt_;  // LᵀVL
  Eigen::MatrixXd v_;
  Eigen::VectorXd py_;        // P y
  Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> x_cod_;
};

Prediction blup_point(const FittedModel& model, const NewUnit& unit);
Prediction blup_contrast(const FittedModel& model, const NewUnit& a, const NewUnit& b);
std::vector<LevelEffect> effect_predict(const FittedModel& model,
                                        const std::string& factor_name);
CurveDiagnostics spline_property_check(const FittedModel& model,
                                       const std::string& covariate_name,
                                       const Eigen::VectorXd& grid);

}  // namespace vcm
