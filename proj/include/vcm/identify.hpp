#pragma once

#include <string>
#include <vector>

#include "vcm/covariance.hpp"
#include "vcm/mean_model.hpp"

namespace vcm {

enum class TermStatus { identifiable, aliased_with_mean, confounded };

std::string term_status_name(TermStatus status);

struct TermIdentifiability {
  std::string term;
  TermStatus status = TermStatus::identifiable;
  // For confounded terms: one minimal dependent set, found by greedy
  // leave-one-out elimination in listed order. The true minimal set need
  // not be unique.
  std::vector<std::string> confounded_with;
};

struct IdentifiabilityReport {
  std::vector<TermIdentifiability> terms;
  bool all_identifiable = false;
};

// Projects each generator onto the residual space of the mean model
// (Q = I - X X⁺) and classifies it:
//  - aliased_with_mean when Q G Q vanishes,
//  - confounded when its projected image is linearly dependent on the
//    other projected generators,
//  - identifiable otherwise.
// Requires at least one residual degree of freedom.
IdentifiabilityReport identifiability_report(const MeanModel& mean,
                                             const CovarianceModel& cov);

}  // namespace vcm
