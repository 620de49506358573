#include "vcm/estimate.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <optional>

#include "vcm/errors.hpp"
#include "vcm/identify.hpp"
#include "vcm/linalg.hpp"

namespace vcm {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// Contrast-space view of the model: G̃_k = LᵀG_kL and u = Lᵀy.
struct ContrastModel {
  std::vector<Eigen::MatrixXd> gens;
  Eigen::VectorXd u;
  Eigen::Index m = 0;
};

ContrastModel to_contrasts(const Eigen::MatrixXd& l, const Eigen::VectorXd& y,
                           const CovarianceModel& cov) {
  ContrastModel cm;
  cm.m = l.cols();
  cm.u = l.transpose() * y;
  cm.gens.reserve(cov.terms.size());
  for (const auto& term : cov.terms) {
    cm.gens.push_back(l.transpose() * term.generator * l);
  }
  return cm;
}

std::optional<Eigen::LLT<Eigen::MatrixXd>> factor_contrast_cov(
    const ContrastModel& cm, const Eigen::VectorXd& coefficients) {
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(cm.m, cm.m);
  for (std::size_t k = 0; k < cm.gens.size(); ++k) {
    m += coefficients[static_cast<Eigen::Index>(k)] * cm.gens[k];
  }
  Eigen::LLT<Eigen::MatrixXd> llt(m);
  if (llt.info() != Eigen::Success) return std::nullopt;
  return llt;
}

double loglik_from_factor(const ContrastModel& cm,
                          const Eigen::LLT<Eigen::MatrixXd>& llt) {
  const double log_det =
      2.0 * llt.matrixLLT().diagonal().array().log().sum();
  const double quad = cm.u.dot(llt.solve(cm.u));
  return -0.5 * (log_det + quad +
                 static_cast<double>(cm.m) * std::log(2.0 * std::numbers::pi));
}

double loglik_or_neg_inf(const ContrastModel& cm, const Eigen::VectorXd& theta) {
  auto llt = factor_contrast_cov(cm, theta);
  if (!llt) return kNegInf;
  const double value = loglik_from_factor(cm, *llt);
  return std::isfinite(value) ? value : kNegInf;
}

ScoreInfo score_info_impl(const ContrastModel& cm, const Eigen::VectorXd& theta) {
  auto llt = factor_contrast_cov(cm, theta);
  if (!llt) {
    throw ModelError("contrast covariance LᵀVL is not positive definite at the "
                     "given coefficients");
  }
  const Eigen::Index k_terms = theta.size();
  const Eigen::MatrixXd w = llt->solve(Eigen::MatrixXd::Identity(cm.m, cm.m));
  const Eigen::VectorXd wu = llt->solve(cm.u);

  std::vector<Eigen::MatrixXd> wg(k_terms);
  ScoreInfo result;
  result.score.resize(k_terms);
  result.information.resize(k_terms, k_terms);
  for (Eigen::Index k = 0; k < k_terms; ++k) {
    const Eigen::MatrixXd& g = cm.gens[static_cast<std::size_t>(k)];
    wg[k] = w * g;
    result.score[k] = -0.5 * (wg[k].trace() - wu.dot(g * wu));
  }
  for (Eigen::Index k = 0; k < k_terms; ++k) {
    for (Eigen::Index l = k; l < k_terms; ++l) {
      const double value = 0.5 * wg[k].cwiseProduct(wg[l].transpose()).sum();
      result.information(k, l) = value;
      result.information(l, k) = value;
    }
  }
  return result;
}

// Polynomials 1, x, ..., x^{order-1} must lie in the mean span for each
// generalized-covariance term; this is what makes LᵀVL positive definite.
void check_kernel_polynomials(const MeanModel& mean, const CovarianceModel& cov) {
  for (const auto& entry : cov.terms) {
    const int order = entry.term.cpd_order();
    if (order <= 0) continue;
    for (int d = 0; d < order; ++d) {
      const Eigen::VectorXd poly =
          entry.covariate_values.array().pow(d).matrix();
      if (!linalg::in_span(mean.matrix, poly)) {
        throw ModelError(
            "term '" + entry.term.label() + "' requires the mean model to span " +
            "polynomials in '" + entry.term.covariate + "' up to degree " +
            std::to_string(order - 1) + " (add the missing terms, e.g. '1'" +
            (order > 1 ? " and '" + entry.term.covariate + "'" : "") + ")");
      }
    }
  }
}

}  // namespace

Eigen::MatrixXd contrast_basis(const Eigen::MatrixXd& x) {
  const Eigen::Index n = x.rows();
  const Eigen::MatrixXd l = linalg::orthonormal_complement(x);
  if (l.cols() < 1) {
    throw ModelError("saturated mean model: no residual contrasts remain");
  }
  (void)n;
  return l;
}

double reml_loglik(const Eigen::VectorXd& coefficients, const Eigen::MatrixXd& l,
                   const Eigen::VectorXd& y, const CovarianceModel& cov) {
  if (coefficients.size() != cov.n_terms()) {
    throw ModelError("coefficient count does not match covariance term count");
  }
  const ContrastModel cm = to_contrasts(l, y, cov);
  auto llt = factor_contrast_cov(cm, coefficients);
  if (!llt) {
    throw ModelError("contrast covariance LᵀVL is not positive definite at the "
                     "given coefficients");
  }
  return loglik_from_factor(cm, *llt);
}

ScoreInfo reml_score_info(const Eigen::VectorXd& coefficients, const Eigen::MatrixXd& l,
                          const Eigen::VectorXd& y, const CovarianceModel& cov) {
  if (coefficients.size() != cov.n_terms()) {
    throw ModelError("coefficient count does not match covariance term count");
  }
  return score_info_impl(to_contrasts(l, y, cov), coefficients);
}

FitResult fit_reml(const MeanModel& mean, const CovarianceModel& cov,
                   const Eigen::VectorXd& y, const FitConfig& config) {
  const int n = mean.n_units();
  if (y.size() != n) throw DataError("response length does not match the design");
  if (!y.allFinite()) throw DataError("response contains non-finite values");

  const double y_mean = y.mean();
  const double sample_var =
      n > 1 ? (y.array() - y_mean).square().sum() / (n - 1) : 0.0;
  if (sample_var <= 0.0) {
    throw DataError("response is degenerate: zero sample variance");
  }

  check_kernel_polynomials(mean, cov);
  const IdentifiabilityReport report = identifiability_report(mean, cov);
  if (!report.all_identifiable) {
    std::string bad;
    for (const auto& t : report.terms) {
      if (t.status != TermStatus::identifiable) {
        if (!bad.empty()) bad += ", ";
        bad += t.term + " (" + term_status_name(t.status) + ")";
      }
    }
    throw ModelError("variance components are not identifiable: " + bad +
                     "; see the identifiability report");
  }

  const Eigen::MatrixXd l = contrast_basis(mean.matrix);
  const ContrastModel cm = to_contrasts(l, y, cov);
  const Eigen::Index k_terms = cov.n_terms();

  // Start from the OLS residual mean square: half on the identity term,
  // the other half split across the remaining components.
  const double rms = cm.u.squaredNorm() / static_cast<double>(cm.m);
  Eigen::VectorXd theta = Eigen::VectorXd::Zero(k_terms);
  theta[0] = 0.5 * rms;
  if (k_terms > 1) {
    // Keep generator scale in mind: block generators have unit diagonal but
    // kernels need not; split evenly on the sigma^2 scale regardless.
    theta.tail(k_terms - 1).setConstant(0.5 * rms / static_cast<double>(k_terms - 1));
  }

  double ll = loglik_or_neg_inf(cm, theta);
  if (!std::isfinite(ll)) {
    throw ModelError("restricted likelihood undefined at the starting values");
  }

  FitResult result;
  bool converged = false;
  double last_rel_change = std::numeric_limits<double>::infinity();
  int iterations = 0;

  for (int it = 0; it < config.max_iterations; ++it) {
    iterations = it + 1;
    const ScoreInfo si = score_info_impl(cm, theta);

    // Components pinned at zero with nonpositive score stay out of the
    // Newton system; the projected score ignores them.
    std::vector<Eigen::Index> free_idx;
    Eigen::VectorXd projected = si.score;
    for (Eigen::Index k = 0; k < k_terms; ++k) {
      if (theta[k] <= 0.0 && si.score[k] <= 0.0) {
        projected[k] = 0.0;
      } else {
        free_idx.push_back(k);
      }
    }

    if (projected.cwiseAbs().maxCoeff() <= config.score_tolerance &&
        last_rel_change <= config.loglik_rel_tolerance) {
      converged = true;
      break;
    }
    if (free_idx.empty()) {
      converged = projected.cwiseAbs().maxCoeff() <= config.score_tolerance;
      break;
    }

    const Eigen::Index f = static_cast<Eigen::Index>(free_idx.size());
    Eigen::MatrixXd info_ff(f, f);
    Eigen::VectorXd score_f(f);
    for (Eigen::Index a = 0; a < f; ++a) {
      score_f[a] = si.score[free_idx[a]];
      for (Eigen::Index b = 0; b < f; ++b) {
        info_ff(a, b) = si.information(free_idx[a], free_idx[b]);
      }
    }
    // Tiny ridge keeps the scoring direction well defined when the
    // information is near-singular away from the optimum.
    info_ff.diagonal().array() += 1e-12 * (1.0 + info_ff.diagonal().maxCoeff());
    const Eigen::VectorXd delta_f = info_ff.ldlt().solve(score_f);

    Eigen::VectorXd delta = Eigen::VectorXd::Zero(k_terms);
    for (Eigen::Index a = 0; a < f; ++a) delta[free_idx[a]] = delta_f[a];

    double step = 1.0;
    bool accepted = false;
    for (int half = 0; half <= config.step_halving_limit; ++half) {
      const Eigen::VectorXd candidate =
          (theta + step * delta).cwiseMax(0.0);
      const double cand_ll = loglik_or_neg_inf(cm, candidate);
      if (cand_ll >= ll) {
        last_rel_change = std::abs(cand_ll - ll) / (1.0 + std::abs(cand_ll));
        theta = candidate;
        ll = cand_ll;
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) {
      // Cannot improve along the scoring direction: report convergence by
      // the score criterion alone.
      converged = projected.cwiseAbs().maxCoeff() <= config.score_tolerance;
      break;
    }
  }

  result.components = theta;
  result.reml_loglik = ll;
  result.converged = converged;
  result.iterations = iterations;
  result.boundary_flags.resize(static_cast<std::size_t>(k_terms));
  for (Eigen::Index k = 0; k < k_terms; ++k) {
    result.boundary_flags[static_cast<std::size_t>(k)] =
        theta[k] <= config.boundary_tolerance * sample_var;
  }

  const GlsResult beta = gls(mean, cov, theta, y);
  result.beta = beta.beta;
  result.beta_cov = beta.beta_cov;
  return result;
}

GlsResult gls(const MeanModel& mean, const CovarianceModel& cov,
              const Eigen::VectorXd& coefficients, const Eigen::VectorXd& y) {
  if (coefficients.size() != cov.n_terms()) {
    throw ModelError("coefficient count does not match covariance term count");
  }
  check_kernel_polynomials(mean, cov);

  const int n = mean.n_units();
  Eigen::MatrixXd v = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index k = 0; k < coefficients.size(); ++k) {
    if (coefficients[k] < 0.0) {
      throw ModelError("negative coefficient for term '" +
                       cov.terms[static_cast<std::size_t>(k)].term.label() + "'");
    }
    v += coefficients[k] * cov.terms[static_cast<std::size_t>(k)].generator;
  }

  const Eigen::MatrixXd l = contrast_basis(mean.matrix);
  const ContrastModel cm = to_contrasts(l, y, cov);
  auto llt = factor_contrast_cov(cm, coefficients);
  if (!llt) {
    throw ModelError("contrast covariance LᵀVL is not positive definite; "
                     "the covariance model is unusable at these coefficients");
  }

  // With P = L (LᵀVL)⁻¹ Lᵀ the GLS fitted values are Xβ̂ = y - V P y and
  // cov(Xβ̂) = V - V P V, identities that hold for generalized covariances
  // as well, so V is never inverted on the full space.
  const Eigen::VectorXd py = l * llt->solve(cm.u);
  const Eigen::MatrixXd vl = v * l;
  const Eigen::MatrixXd vpv = vl * llt->solve(vl.transpose());

  Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(mean.matrix);
  cod.setThreshold(linalg::kRankRtol);

  GlsResult result;
  result.beta = cod.solve(y - v * py);
  const Eigen::MatrixXd s = v - vpv;
  const Eigen::MatrixXd xs = cod.solve(s);  // X⁺ S
  result.beta_cov = cod.solve(xs.transpose()).transpose();
  result.beta_cov = 0.5 * (result.beta_cov + result.beta_cov.transpose().eval());
  return result;
}

}  // namespace vcm
