#include "vcm/identify.hpp"

#include <algorithm>

#include "vcm/errors.hpp"
#include "vcm/linalg.hpp"

namespace vcm {

namespace {

constexpr double kAliasRtol = 1e-10;

Eigen::MatrixXd stack_columns(const std::vector<Eigen::VectorXd>& vectors,
                              const std::vector<int>& which) {
  const Eigen::Index rows = vectors.empty() ? 0 : vectors.front().size();
  Eigen::MatrixXd m(rows, static_cast<Eigen::Index>(which.size()));
  for (std::size_t j = 0; j < which.size(); ++j) {
    m.col(static_cast<Eigen::Index>(j)) = vectors[which[j]];
  }
  return m;
}

}  // namespace

std::string term_status_name(TermStatus status) {
  switch (status) {
    case TermStatus::identifiable: return "identifiable";
    case TermStatus::aliased_with_mean: return "aliased_with_mean";
    case TermStatus::confounded: return "confounded";
  }
  return {};
}

IdentifiabilityReport identifiability_report(const MeanModel& mean,
                                             const CovarianceModel& cov) {
  const int n = mean.n_units();
  if (cov.n_units() != n) {
    throw ModelError("mean model and covariance model unit counts differ");
  }
  if (n - mean.rank < 1) {
    throw ModelError("zero residual degrees of freedom: identifiability undefined");
  }

  const Eigen::MatrixXd q = linalg::residual_projector(mean.matrix);
  const int n_terms = cov.n_terms();

  IdentifiabilityReport report;
  report.terms.resize(n_terms);
  std::vector<Eigen::VectorXd> projected(n_terms);
  std::vector<int> candidates;

  for (int k = 0; k < n_terms; ++k) {
    const Eigen::MatrixXd& g = cov.terms[k].generator;
    const Eigen::MatrixXd qgq = q * g * q;
    report.terms[k].term = cov.terms[k].term.label();
    projected[k] = qgq.reshaped();
    if (qgq.norm() <= kAliasRtol * g.norm()) {
      report.terms[k].status = TermStatus::aliased_with_mean;
    } else {
      candidates.push_back(k);
    }
  }

  // Leave-one-out dependence among the surviving projected generators.
  for (int k : candidates) {
    std::vector<int> others;
    for (int j : candidates) {
      if (j != k) others.push_back(j);
    }
    if (others.empty() || !linalg::in_span(stack_columns(projected, others),
                                           projected[k], kAliasRtol)) {
      report.terms[k].status = TermStatus::identifiable;
      continue;
    }
    report.terms[k].status = TermStatus::confounded;
    // Greedy minimal dependent set, elimination in listed order.
    std::vector<int> survivors = others;
    for (int j : others) {
      std::vector<int> trimmed;
      for (int s : survivors) {
        if (s != j) trimmed.push_back(s);
      }
      if (linalg::in_span(stack_columns(projected, trimmed), projected[k],
                          kAliasRtol)) {
        survivors = std::move(trimmed);
      }
    }
    for (int s : survivors) {
      report.terms[k].confounded_with.push_back(cov.terms[s].term.label());
    }
  }

  report.all_identifiable =
      std::all_of(report.terms.begin(), report.terms.end(), [](const auto& t) {
        return t.status == TermStatus::identifiable;
      });
  return report;
}

}  // namespace vcm
