#include "vcm/covariance.hpp"

#include <cmath>
#include <utility>

#include "vcm/errors.hpp"

namespace vcm {

namespace {

const Eigen::VectorXd& kernel_covariate(const CovarianceTerm& term, const Design& design) {
  if (!design.has_covariate(term.covariate)) {
    if (design.has_factor(term.covariate)) {
      throw ModelError("'" + term.label() + "': '" + term.covariate +
                       "' is a factor; kernels need a quantitative covariate");
    }
    throw ModelError("unknown covariate '" + term.covariate + "' in term '" +
                     term.label() + "'");
  }
  const Eigen::VectorXd& x = design.covariate(term.covariate);
  if (!x.allFinite()) {
    throw DataError("covariate '" + term.covariate + "' contains non-finite values");
  }
  return x;
}

TreatmentFactor block_factor(const CovarianceTerm& term, const Design& design) {
  auto check = [&](const std::string& name) {
    if (!design.has_factor(name)) {
      if (design.has_covariate(name)) {
        throw ModelError("'" + term.label() + "': '" + name +
                         "' is a covariate; block terms need factors");
      }
      throw ModelError("unknown factor '" + name + "' in term '" + term.label() + "'");
    }
  };
  check(term.factor_left);
  if (term.factor_right.empty()) return design.factor(term.factor_left);
  check(term.factor_right);
  return cross(design.factor(term.factor_left), design.factor(term.factor_right));
}

}  // namespace

std::vector<std::string> CovarianceModel::term_labels() const {
  std::vector<std::string> labels;
  labels.reserve(terms.size());
  for (const auto& t : terms) labels.push_back(t.term.label());
  return labels;
}

Eigen::MatrixXd generator_matrix(const CovarianceTerm& term, const Design& design) {
  const int n = design.n_units();
  switch (term.kind) {
    case CovarianceTerm::Kind::identity:
      return Eigen::MatrixXd::Identity(n, n);
    case CovarianceTerm::Kind::block:
      return forget(indicator(block_factor(term, design))).matrix;
    case CovarianceTerm::Kind::kernel: {
      const Eigen::VectorXd& x = kernel_covariate(term, design);
      Eigen::MatrixXd g(n, n);
      switch (term.kernel) {
        case KernelKind::exchangeable:
          for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) g(i, j) = 1.0 + (x[i] == x[j] ? 1.0 : 0.0);
          break;
        case KernelKind::brownian:
          for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) g(i, j) = -std::abs(x[i] - x[j]);
          break;
        case KernelKind::cubic:
          for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) g(i, j) = std::pow(std::abs(x[i] - x[j]), 3);
          break;
        case KernelKind::random_slope:
          g = x * x.transpose();
          break;
      }
      return g;
    }
  }
  throw ModelError("unreachable covariance term kind");
}

CovarianceModel make_covariance_model(const std::vector<CovarianceTerm>& terms,
                                      const Design& design) {
  if (terms.empty() || terms.front().kind != CovarianceTerm::Kind::identity) {
    throw ModelError("covariance model must start with the identity term");
  }
  CovarianceModel model;
  for (std::size_t k = 0; k < terms.size(); ++k) {
    const auto& term = terms[k];
    if (k > 0 && term.kind == CovarianceTerm::Kind::identity) {
      throw ModelError("covariance model has more than one identity term");
    }
    CovarianceModelTerm entry;
    entry.term = term;
    entry.generator = generator_matrix(term, design);
    if (term.kind == CovarianceTerm::Kind::block) {
      const TreatmentFactor& left = design.factor(term.factor_left);
      entry.left_labels.reserve(design.n_units());
      for (int i = 0; i < design.n_units(); ++i) entry.left_labels.push_back(left.level_of(i));
      if (!term.factor_right.empty()) {
        const TreatmentFactor& right = design.factor(term.factor_right);
        entry.right_labels.reserve(design.n_units());
        for (int i = 0; i < design.n_units(); ++i) {
          entry.right_labels.push_back(right.level_of(i));
        }
      }
    } else if (term.kind == CovarianceTerm::Kind::kernel) {
      entry.covariate_values = kernel_covariate(term, design);
    }
    model.terms.push_back(std::move(entry));
  }
  return model;
}

Eigen::MatrixXd assemble(const CovarianceModel& model, const Eigen::VectorXd& coefficients) {
  if (coefficients.size() != model.n_terms()) {
    throw ModelError("coefficient count " + std::to_string(coefficients.size()) +
                     " does not match term count " + std::to_string(model.n_terms()));
  }
  for (Eigen::Index k = 0; k < coefficients.size(); ++k) {
    if (coefficients[k] < 0.0) {
      throw ModelError("negative coefficient for term '" +
                       model.terms[k].term.label() + "'");
    }
  }
  if (coefficients[0] <= 0.0) {
    throw ModelError("identity coefficient must be strictly positive");
  }
  const int n = model.n_units();
  Eigen::MatrixXd v = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index k = 0; k < coefficients.size(); ++k) {
    v += coefficients[k] * model.terms[k].generator;
  }
  return v;
}

bool span_equal(const std::vector<Eigen::MatrixXd>& gens_a,
                const std::vector<Eigen::MatrixXd>& gens_b, double rtol) {
  if (gens_a.empty() && gens_b.empty()) return true;
  const Eigen::Index n = gens_a.empty() ? gens_b.front().rows() : gens_a.front().rows();
  auto vectorize = [&](const std::vector<Eigen::MatrixXd>& gens) {
    Eigen::MatrixXd stacked(n * n, static_cast<Eigen::Index>(gens.size()));
    for (std::size_t k = 0; k < gens.size(); ++k) {
      if (gens[k].rows() != n || gens[k].cols() != n) {
        throw ModelError("span_equal: matrices must share one shape");
      }
      stacked.col(static_cast<Eigen::Index>(k)) = gens[k].reshaped();
    }
    return stacked;
  };
  return linalg::same_span(vectorize(gens_a), vectorize(gens_b), rtol);
}

bool conditional_pd_check(const Eigen::MatrixXd& g, int cpd_order,
                          const Eigen::VectorXd& x) {
  const Eigen::Index n = g.rows();
  if (cpd_order < 0) throw ModelError("cpd_order must be nonnegative");
  if (cpd_order > 0 && x.size() != n) {
    throw ModelError("conditional_pd_check needs covariate values matching the matrix");
  }
  if (n < cpd_order + 1) {
    throw ModelError("fewer units than cpd_order + 1");
  }

  Eigen::MatrixXd projected;
  if (cpd_order == 0) {
    projected = g;
  } else {
    Eigen::MatrixXd poly(n, cpd_order);
    for (int d = 0; d < cpd_order; ++d) poly.col(d) = x.array().pow(d).matrix();
    const Eigen::MatrixXd q = linalg::residual_projector(poly);
    projected = q * g * q;
  }
  projected = 0.5 * (projected + projected.transpose().eval());

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(projected,
                                                     Eigen::EigenvaluesOnly);
  const double largest = eig.eigenvalues().cwiseAbs().maxCoeff();
  const double tolerance = 1e-9 * largest;
  return eig.eigenvalues().minCoeff() >= -tolerance;
}

}  // namespace vcm
