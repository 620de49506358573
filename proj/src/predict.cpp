#include "vcm/predict.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "vcm/errors.hpp"
#include "vcm/linalg.hpp"

namespace vcm {

namespace {

double kernel_value(KernelKind kind, double a, double b) {
  switch (kind) {
    case KernelKind::exchangeable: return 1.0 + (a == b ? 1.0 : 0.0);
    case KernelKind::brownian: return -std::abs(a - b);
    case KernelKind::cubic: return std::pow(std::abs(a - b), 3);
    case KernelKind::random_slope: return a * b;
  }
  return 0.0;
}

bool mentions_new(const NewUnit& unit) {
  return std::any_of(unit.levels.begin(), unit.levels.end(),
                     [](const auto& kv) { return kv.second == kNewLevel; });
}

// Polynomial fit through a handful of grid samples in the scaled variable
// s = (t - knot)/h; returns value and first two derivatives at the knot.
struct SideFit {
  double value = 0.0, d1 = 0.0, d2 = 0.0;
};

SideFit polynomial_extrapolation(const std::vector<double>& s,
                                 const std::vector<double>& f, int degree,
                                 double h) {
  const int terms = degree + 1;
  Eigen::MatrixXd vander(s.size(), terms);
  Eigen::VectorXd rhs(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) {
    double power = 1.0;
    for (int d = 0; d < terms; ++d) {
      vander(static_cast<Eigen::Index>(i), d) = power;
      power *= s[i];
    }
    rhs[static_cast<Eigen::Index>(i)] = f[i];
  }
  const Eigen::VectorXd coef = vander.fullPivLu().solve(rhs);
  SideFit fit;
  fit.value = coef[0];
  fit.d1 = terms > 1 ? coef[1] / h : 0.0;
  fit.d2 = terms > 2 ? 2.0 * coef[2] / (h * h) : 0.0;
  return fit;
}

}  // namespace

Predictor::Predictor(const FittedModel& model) : model_(model) {
  const auto& cov = model_.cov;
  const int n = cov.n_units();
  if (model_.fit.components.size() != cov.n_terms()) {
    throw ModelError("fit result does not match the covariance model");
  }
  v_ = Eigen::MatrixXd::Zero(n, n);
  for (int k = 0; k < cov.n_terms(); ++k) {
    v_ += model_.fit.components[k] * cov.terms[k].generator;
  }
  l_ = contrast_basis(model_.mean.matrix);
  Eigen::MatrixXd m = l_.transpose() * v_ * l_;
  m_llt_.compute(m);
  if (m_llt_.info() != Eigen::Success) {
    throw ModelError("contrast covariance LᵀVL is not positive definite at the "
                     "fitted components");
  }
  py_ = l_ * m_llt_.solve(l_.transpose() * model_.y);
  x_cod_.setThreshold(linalg::kRankRtol);
  x_cod_.compute(model_.mean.matrix);
}

void Predictor::validate(const NewUnit& unit) const {
  std::set<std::string> mean_factors;
  std::set<std::string> factors;
  std::set<std::string> covariates;
  for (const auto& block : model_.mean.blocks) {
    switch (block.term.kind) {
      case MeanTerm::Kind::intercept: break;
      case MeanTerm::Kind::name:
        if (block.is_covariate) {
          covariates.insert(block.term.left);
        } else {
          mean_factors.insert(block.term.left);
          factors.insert(block.term.left);
        }
        break;
      case MeanTerm::Kind::cross:
        mean_factors.insert(block.term.left);
        mean_factors.insert(block.term.right);
        factors.insert(block.term.left);
        factors.insert(block.term.right);
        break;
    }
  }
  for (const auto& entry : model_.cov.terms) {
    if (entry.term.kind == CovarianceTerm::Kind::block) {
      factors.insert(entry.term.factor_left);
      if (!entry.term.factor_right.empty()) factors.insert(entry.term.factor_right);
    } else if (entry.term.kind == CovarianceTerm::Kind::kernel) {
      covariates.insert(entry.term.covariate);
    }
  }

  for (const auto& name : factors) {
    auto it = unit.levels.find(name);
    if (it == unit.levels.end()) {
      throw ModelError("new unit is missing a level for factor '" + name + "'");
    }
    if (it->second == kNewLevel) {
      if (mean_factors.count(name) > 0) {
        throw ModelError("factor '" + name + "' appears in the mean model; a " +
                         std::string(kNewLevel) + " level is not estimable");
      }
      continue;
    }
    // The level must be observed somewhere in the fitted model's data.
    bool observed = false;
    for (const auto& block : model_.mean.blocks) {
      if (block.term.kind == MeanTerm::Kind::name && !block.is_covariate &&
          block.term.left == name && block.factor.level_index(it->second) >= 0) {
        observed = true;
      }
      if (block.term.kind == MeanTerm::Kind::cross &&
          (block.term.left == name || block.term.right == name)) {
        for (int i = 0; i < model_.mean.n_units() && !observed; ++i) {
          const auto& labels =
              block.term.left == name ? block.left_labels : block.right_labels;
          observed = labels[i] == it->second;
        }
      }
    }
    for (const auto& entry : model_.cov.terms) {
      if (entry.term.kind != CovarianceTerm::Kind::block) continue;
      const bool left = entry.term.factor_left == name;
      const bool right = entry.term.factor_right == name;
      if (!left && !right) continue;
      const auto& labels = left ? entry.left_labels : entry.right_labels;
      if (std::find(labels.begin(), labels.end(), it->second) != labels.end()) {
        observed = true;
      }
    }
    if (!observed) {
      throw ModelError("level '" + it->second + "' of factor '" + name +
                       "' was not observed (use " + std::string(kNewLevel) +
                       " for an unobserved level)");
    }
  }
  for (const auto& name : covariates) {
    auto it = unit.covariates.find(name);
    if (it == unit.covariates.end()) {
      throw ModelError("new unit is missing a value for covariate '" + name + "'");
    }
    if (!std::isfinite(it->second)) {
      throw ModelError("non-finite value for covariate '" + name + "'");
    }
  }
  for (const auto& [name, value] : unit.levels) {
    if (factors.count(name) == 0) {
      throw ModelError("factor '" + name + "' is not referenced by the fitted model");
    }
  }
  for (const auto& [name, value] : unit.covariates) {
    if (covariates.count(name) == 0) {
      throw ModelError("covariate '" + name +
                       "' is not referenced by the fitted model");
    }
  }
}

Predictor::Cross Predictor::cross_covariances(const NewUnit& unit) const {
  const int n = model_.cov.n_units();
  Cross cr;
  cr.has_new = mentions_new(unit);
  cr.x_row = Eigen::VectorXd::Zero(model_.mean.matrix.cols());
  cr.c = Eigen::VectorXd::Zero(n);

  for (const auto& block : model_.mean.blocks) {
    switch (block.term.kind) {
      case MeanTerm::Kind::intercept:
        cr.x_row[block.col_start] = 1.0;
        break;
      case MeanTerm::Kind::name:
        if (block.is_covariate) {
          cr.x_row[block.col_start] = unit.covariates.at(block.term.left);
        } else {
          const int idx = block.factor.level_index(unit.levels.at(block.term.left));
          cr.x_row[block.col_start + idx] = 1.0;
        }
        break;
      case MeanTerm::Kind::cross: {
        const std::string& la = unit.levels.at(block.term.left);
        const std::string& lb = unit.levels.at(block.term.right);
        int idx = -1;
        for (int i = 0; i < n; ++i) {
          if (block.left_labels[i] == la && block.right_labels[i] == lb) {
            idx = block.factor.assignment[i];
            break;
          }
        }
        if (idx < 0) {
          throw ModelError("cell (" + la + ", " + lb + ") of '" +
                           block.term.label() + "' was not observed; its mean is "
                           "not estimable");
        }
        cr.x_row[block.col_start + idx] = 1.0;
        break;
      }
    }
  }

  for (int k = 0; k < model_.cov.n_terms(); ++k) {
    const auto& entry = model_.cov.terms[k];
    const double sigma = model_.fit.components[k];
    switch (entry.term.kind) {
      case CovarianceTerm::Kind::identity:
        cr.k_self += sigma;  // the new unit's own exchangeable effect
        break;
      case CovarianceTerm::Kind::block: {
        cr.k_self += sigma;
        const std::string& la = unit.levels.at(entry.term.factor_left);
        if (la == kNewLevel) break;
        if (entry.term.factor_right.empty()) {
          for (int i = 0; i < n; ++i) {
            if (entry.left_labels[i] == la) cr.c[i] += sigma;
          }
        } else {
          const std::string& lb = unit.levels.at(entry.term.factor_right);
          if (lb == kNewLevel) break;
          for (int i = 0; i < n; ++i) {
            if (entry.left_labels[i] == la && entry.right_labels[i] == lb) {
              cr.c[i] += sigma;
            }
          }
        }
        break;
      }
      case CovarianceTerm::Kind::kernel: {
        const double x = unit.covariates.at(entry.term.covariate);
        cr.k_self += sigma * kernel_value(entry.term.kernel, x, x);
        for (int i = 0; i < n; ++i) {
          cr.c[i] += sigma * kernel_value(entry.term.kernel, x,
                                          entry.covariate_values[i]);
        }
        break;
      }
    }
  }
  return cr;
}

double Predictor::k_between(const NewUnit& a, const NewUnit& b, const Cross& ca,
                            const Cross& cb) const {
  double k = 0.0;
  for (int t = 0; t < model_.cov.n_terms(); ++t) {
    const auto& entry = model_.cov.terms[t];
    const double sigma = model_.fit.components[t];
    switch (entry.term.kind) {
      case CovarianceTerm::Kind::identity:
        break;  // distinct units never share the unit effect
      case CovarianceTerm::Kind::block: {
        const std::string& la = a.levels.at(entry.term.factor_left);
        const std::string& lb = b.levels.at(entry.term.factor_left);
        if (la == kNewLevel || lb == kNewLevel || la != lb) break;
        if (!entry.term.factor_right.empty()) {
          const std::string& ra = a.levels.at(entry.term.factor_right);
          const std::string& rb = b.levels.at(entry.term.factor_right);
          if (ra == kNewLevel || rb == kNewLevel || ra != rb) break;
        }
        k += sigma;
        break;
      }
      case CovarianceTerm::Kind::kernel:
        k += sigma * kernel_value(entry.term.kernel,
                                  a.covariates.at(entry.term.covariate),
                                  b.covariates.at(entry.term.covariate));
        break;
    }
  }
  (void)ca;
  (void)cb;
  return k;
}

Prediction Predictor::point(const NewUnit& unit) const {
  validate(unit);
  const Cross cr = cross_covariances(unit);
  const Eigen::VectorXd pc = l_ * m_llt_.solve(l_.transpose() * cr.c);
  const Eigen::VectorXd gc = x_cod_.solve(cr.c - v_ * pc);

  Prediction pred;
  pred.fixed_part = cr.x_row.dot(model_.fit.beta);
  pred.residual_part = cr.c.dot(py_);
  pred.value = pred.fixed_part + pred.residual_part;
  const double variance = cr.k_self - cr.c.dot(pc) - 2.0 * cr.x_row.dot(gc) +
                          cr.x_row.dot(model_.fit.beta_cov * cr.x_row);
  pred.std_error = std::sqrt(std::max(0.0, variance));
  return pred;
}

Prediction Predictor::contrast(const NewUnit& unit_a, const NewUnit& unit_b) const {
  validate(unit_a);
  validate(unit_b);
  // Identical fully observed specifications describe the same unit.
  if (unit_a == unit_b && !mentions_new(unit_a)) return Prediction{};

  const Cross ca = cross_covariances(unit_a);
  const Cross cb = cross_covariances(unit_b);
  const Eigen::VectorXd pca = l_ * m_llt_.solve(l_.transpose() * ca.c);
  const Eigen::VectorXd pcb = l_ * m_llt_.solve(l_.transpose() * cb.c);
  const Eigen::VectorXd gca = x_cod_.solve(ca.c - v_ * pca);
  const Eigen::VectorXd gcb = x_cod_.solve(cb.c - v_ * pcb);
  const Eigen::MatrixXd& cbeta = model_.fit.beta_cov;

  const double var_a = ca.k_self - ca.c.dot(pca) - 2.0 * ca.x_row.dot(gca) +
                       ca.x_row.dot(cbeta * ca.x_row);
  const double var_b = cb.k_self - cb.c.dot(pcb) - 2.0 * cb.x_row.dot(gcb) +
                       cb.x_row.dot(cbeta * cb.x_row);
  const double k_ab = k_between(unit_a, unit_b, ca, cb);
  const double cov_ab = k_ab - ca.x_row.dot(gcb) - cb.x_row.dot(gca) -
                        ca.c.dot(pcb) + ca.x_row.dot(cbeta * cb.x_row);

  Prediction pred;
  pred.fixed_part = (ca.x_row - cb.x_row).dot(model_.fit.beta);
  pred.residual_part = (ca.c - cb.c).dot(py_);
  pred.value = pred.fixed_part + pred.residual_part;
  pred.std_error = std::sqrt(std::max(0.0, var_a + var_b - 2.0 * cov_ab));
  return pred;
}

std::vector<LevelEffect> Predictor::effects(const std::string& factor_name) const {
  int term_idx = -1;
  for (int k = 0; k < model_.cov.n_terms(); ++k) {
    const auto& term = model_.cov.terms[k].term;
    if (term.kind == CovarianceTerm::Kind::block && term.factor_right.empty() &&
        term.factor_left == factor_name) {
      term_idx = k;
      break;
    }
  }
  if (term_idx < 0) {
    throw ModelError("factor '" + factor_name +
                     "' is not a block term of the fitted covariance model");
  }
  const auto& entry = model_.cov.terms[term_idx];
  const double sigma = model_.fit.components[term_idx];
  const int n = model_.cov.n_units();

  // Observed levels in first-occurrence order.
  std::vector<std::string> levels;
  for (const auto& label : entry.left_labels) {
    if (std::find(levels.begin(), levels.end(), label) == levels.end()) {
      levels.push_back(label);
    }
  }

  // The effect for level j is the contrast between a unit at level j and
  // one at a NEW level with everything else shared: the covariance with
  // the data differs by sigma on the level's units only.
  std::vector<LevelEffect> out;
  out.reserve(levels.size());
  for (const auto& level : levels) {
    Eigen::VectorXd z = Eigen::VectorXd::Zero(n);
    for (int i = 0; i < n; ++i) {
      if (entry.left_labels[i] == level) z[i] = 1.0;
    }
    LevelEffect effect;
    effect.level = level;
    effect.effect = sigma * z.dot(py_);
    const Eigen::VectorXd pz = l_ * m_llt_.solve(l_.transpose() * z);
    const double variance = 2.0 * sigma - sigma * sigma * z.dot(pz);
    effect.std_error = std::sqrt(std::max(0.0, variance));
    out.push_back(std::move(effect));
  }
  return out;
}

double Predictor::curve_value(const std::string& covariate_name, double x) const {
  for (const auto& block : model_.mean.blocks) {
    if (block.term.kind == MeanTerm::Kind::cross ||
        (block.term.kind == MeanTerm::Kind::name && !block.is_covariate)) {
      throw ModelError("the prediction curve is undefined when the mean model "
                       "contains factors");
    }
    if (block.is_covariate && block.term.left != covariate_name) {
      throw ModelError("the prediction curve is undefined with additional "
                       "covariates in the mean model");
    }
  }
  NewUnit unit;
  unit.covariates[covariate_name] = x;
  for (const auto& entry : model_.cov.terms) {
    if (entry.term.kind == CovarianceTerm::Kind::block) {
      unit.levels[entry.term.factor_left] = kNewLevel;
      if (!entry.term.factor_right.empty()) {
        unit.levels[entry.term.factor_right] = kNewLevel;
      }
    } else if (entry.term.kind == CovarianceTerm::Kind::kernel &&
               entry.term.covariate != covariate_name) {
      throw ModelError("the prediction curve is undefined with additional "
                       "kernel covariates");
    }
  }
  const Cross cr = cross_covariances(unit);
  return cr.x_row.dot(model_.fit.beta) + cr.c.dot(py_);
}

CurveDiagnostics Predictor::curve_diagnostics(const std::string& covariate_name,
                                              const Eigen::VectorXd& grid) const {
  // Exactly one diagnosable kernel may act on the covariate.
  int kernel_idx = -1;
  for (int k = 0; k < model_.cov.n_terms(); ++k) {
    const auto& term = model_.cov.terms[k].term;
    if (term.kind != CovarianceTerm::Kind::kernel || term.covariate != covariate_name) {
      continue;
    }
    if (term.kernel != KernelKind::cubic && term.kernel != KernelKind::brownian) {
      throw ModelError("curve diagnostics need a cubic or brownian kernel; '" +
                       term.label() + "' is neither");
    }
    if (kernel_idx >= 0) {
      throw ModelError("curve diagnostics need a single kernel on '" +
                       covariate_name + "'");
    }
    kernel_idx = k;
  }
  if (kernel_idx < 0) {
    throw ModelError("no cubic or brownian kernel on covariate '" + covariate_name +
                     "' in the fitted model");
  }
  const bool cubic = model_.cov.terms[kernel_idx].term.kernel == KernelKind::cubic;

  const Eigen::Index g = grid.size();
  if (g < 9) throw ModelError("grid too coarse for the derivative stencils");
  const double h = grid[1] - grid[0];
  if (h <= 0.0) throw ModelError("grid must be strictly increasing");
  for (Eigen::Index i = 1; i < g; ++i) {
    const double step = grid[i] - grid[i - 1];
    if (std::abs(step - h) > 1e-8 * std::max(1.0, std::abs(h))) {
      throw ModelError("grid must be uniform for the derivative stencils");
    }
  }

  // Knots: distinct data values of the covariate.
  const Eigen::VectorXd& xv = model_.cov.terms[kernel_idx].covariate_values;
  std::vector<double> knots(xv.data(), xv.data() + xv.size());
  std::sort(knots.begin(), knots.end());
  knots.erase(std::unique(knots.begin(), knots.end()), knots.end());
  if (knots.size() < 2) throw ModelError("need at least two distinct knots");

  for (std::size_t j = 0; j + 1 < knots.size(); ++j) {
    int inside = 0;
    for (Eigen::Index i = 0; i < g; ++i) {
      if (grid[i] > knots[j] && grid[i] < knots[j + 1]) ++inside;
    }
    if (inside < 8) {
      throw ModelError("grid too coarse: fewer than 8 points in the interval [" +
                       std::to_string(knots[j]) + ", " + std::to_string(knots[j + 1]) +
                       "]");
    }
  }

  Eigen::VectorXd f(g);
  for (Eigen::Index i = 0; i < g; ++i) f[i] = curve_value(covariate_name, grid[i]);

  const double eps = 1e-9 * h;
  auto knot_strictly_inside = [&](double lo, double hi) {
    return std::any_of(knots.begin(), knots.end(), [&](double k) {
      return k > lo + eps && k < hi - eps;
    });
  };
  // Interval index of a strictly interior point, -1 left of all knots,
  // n_intervals right of all knots, -2 when sitting on a knot.
  auto region_of = [&](double t) -> int {
    for (double k : knots) {
      if (std::abs(t - k) <= eps) return -2;
    }
    if (t < knots.front()) return -1;
    for (std::size_t j = 0; j + 1 < knots.size(); ++j) {
      if (t > knots[j] && t < knots[j + 1]) return static_cast<int>(j);
    }
    return static_cast<int>(knots.size()) - 1;
  };

  CurveDiagnostics diag;
  diag.piecewise_degree = cubic ? 3 : 1;
  diag.n_knots = knots.size();
  diag.grid_step = h;
  diag.value_scale = f.cwiseAbs().maxCoeff();

  // Fourth-order central stencils for the first three derivatives.
  std::vector<double> d1(g, 0.0), d2(g, 0.0), d3(g, 0.0);
  std::vector<bool> d2_clean(g, false), d3_clean(g, false);
  for (Eigen::Index i = 2; i + 2 < g; ++i) {
    d1[i] = (f[i - 2] - 8.0 * f[i - 1] + 8.0 * f[i + 1] - f[i + 2]) / (12.0 * h);
    d2[i] = (-f[i - 2] + 16.0 * f[i - 1] - 30.0 * f[i] + 16.0 * f[i + 1] -
             f[i + 2]) / (12.0 * h * h);
    d2_clean[i] = !knot_strictly_inside(grid[i] - 2.0 * h, grid[i] + 2.0 * h);
    diag.d1_scale = std::max(diag.d1_scale, std::abs(d1[i]));
  }
  for (Eigen::Index i = 3; i + 3 < g; ++i) {
    d3[i] = (0.125 * f[i - 3] - f[i - 2] + 1.625 * f[i - 1] - 1.625 * f[i + 1] +
             f[i + 2] - 0.125 * f[i + 3]) / (h * h * h);
    d3_clean[i] = !knot_strictly_inside(grid[i] - 3.0 * h, grid[i] + 3.0 * h);
  }

  const int n_intervals = static_cast<int>(knots.size()) - 1;
  std::vector<std::vector<double>> interval_d3(n_intervals);
  for (Eigen::Index i = 2; i + 2 < g; ++i) {
    const int region = region_of(grid[i]);
    if (region >= 0 && region < n_intervals && d2_clean[i]) {
      diag.second_deriv_interior_max =
          std::max(diag.second_deriv_interior_max, std::abs(d2[i]));
    }
    if ((region == -1 || region == n_intervals) && d2_clean[i]) {
      diag.second_deriv_exterior_max =
          std::max(diag.second_deriv_exterior_max, std::abs(d2[i]));
    }
    diag.second_deriv_knot_scale = std::max(diag.second_deriv_knot_scale,
                                            std::abs(d2[i]));
  }
  for (Eigen::Index i = 3; i + 3 < g; ++i) {
    const int region = region_of(grid[i]);
    if (region >= 0 && region < n_intervals && d3_clean[i]) {
      interval_d3[region].push_back(d3[i]);
    }
  }
  if (cubic) {
    for (const auto& values : interval_d3) {
      if (values.size() < 2) continue;
      const auto [lo, hi] = std::minmax_element(values.begin(), values.end());
      double mean = 0.0;
      for (double v : values) mean += v;
      mean /= static_cast<double>(values.size());
      const double spread = *hi - *lo;
      const double rel = spread == 0.0 ? 0.0 : spread / std::abs(mean);
      diag.third_deriv_rel_variation =
          std::max(diag.third_deriv_rel_variation, rel);
    }
    diag.d2_scale = diag.second_deriv_interior_max;
  }

  // Knot continuity: extrapolate to each knot from the nearest grid samples
  // on either side and compare. The curve is polynomial between knots, so
  // the extrapolations are exact up to rounding.
  const int fit_points = cubic ? 4 : 2;
  const int fit_degree = cubic ? 3 : 1;
  for (double knot : knots) {
    std::vector<double> s_left, f_left, s_right, f_right;
    for (Eigen::Index i = g - 1; i >= 0 && static_cast<int>(s_left.size()) < fit_points; --i) {
      if (grid[i] < knot - eps) {
        s_left.push_back((grid[i] - knot) / h);
        f_left.push_back(f[i]);
      }
    }
    for (Eigen::Index i = 0; i < g && static_cast<int>(s_right.size()) < fit_points; ++i) {
      if (grid[i] > knot + eps) {
        s_right.push_back((grid[i] - knot) / h);
        f_right.push_back(f[i]);
      }
    }
    if (static_cast<int>(s_left.size()) < fit_points ||
        static_cast<int>(s_right.size()) < fit_points) {
      continue;  // knot at the grid boundary: nothing to compare
    }
    const SideFit left = polynomial_extrapolation(s_left, f_left, fit_degree, h);
    const SideFit right = polynomial_extrapolation(s_right, f_right, fit_degree, h);
    diag.value_gap_max = std::max(diag.value_gap_max, std::abs(left.value - right.value));
    if (cubic) {
      diag.d1_gap_max = std::max(diag.d1_gap_max, std::abs(left.d1 - right.d1));
      diag.d2_gap_max = std::max(diag.d2_gap_max, std::abs(left.d2 - right.d2));
    }
  }
  return diag;
}

Prediction blup_point(const FittedModel& model, const NewUnit& unit) {
  return Predictor(model).point(unit);
}

Prediction blup_contrast(const FittedModel& model, const NewUnit& a, const NewUnit& b) {
  return Predictor(model).contrast(a, b);
}

std::vector<LevelEffect> effect_predict(const FittedModel& model,
                                        const std::string& factor_name) {
  return Predictor(model).effects(factor_name);
}

CurveDiagnostics spline_property_check(const FittedModel& model,
                                       const std::string& covariate_name,
                                       const Eigen::VectorXd& grid) {
  return Predictor(model).curve_diagnostics(covariate_name, grid);
}

}  // namespace vcm
