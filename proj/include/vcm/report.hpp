#pragma once

#include <json.hpp>

#include <optional>
#include <string>
#include <vector>

#include "vcm/dataset.hpp"
#include "vcm/estimate.hpp"
#include "vcm/identify.hpp"
#include "vcm/predict.hpp"
#include "vcm/spectral.hpp"

namespace vcm {

using Json = nlohmann::ordered_json;

inline constexpr const char* kSchemaVersion = "1.0";

// Thrown when a model fails the identifiability gate; the report is carried
// along so callers can still emit it.
class IdentifiabilityFailure : public std::runtime_error {
 public:
  explicit IdentifiabilityFailure(Json report)
      : std::runtime_error("variance components are not identifiable"),
        report_(std::move(report)) {}

  const Json& report() const { return report_; }

 private:
  Json report_;
};

struct RunOptions {
  std::string mean_formula;
  std::string cov_formula;
  FitConfig fit_config;
  bool identify_only = false;
  std::vector<std::string> new_units;  // "A=a1,x=1.5" specs, NEW allowed
  std::vector<std::string> contrasts;  // "spec | spec"
  std::optional<std::string> effects_factor;
  std::optional<std::string> spline_covariate;
  std::string grid_spec;               // "start:stop:step"
};

// Parses a repeatable new-unit specification of the form "A=a1,x=1.5".
NewUnit parse_new_unit(const std::string& spec, const Design& design);

// Parses "start:stop:step" into a uniform grid.
Eigen::VectorXd parse_grid(const std::string& spec);

// Identifiability gate, REML fit, GLS, and any requested predictions.
// Throws IdentifiabilityFailure (with the partial report) when the gate
// fails; other errors propagate as their exception types.
Json run_fit(const Dataset& dataset, const RunOptions& options);

Json run_spectrum(const Dataset& dataset);

Json run_yates(const Dataset& dataset, YatesDivisor divisor);

// Serialization used by both the CLI and the tests.
Json identifiability_to_json(const IdentifiabilityReport& report);
Json fit_to_json(const FitResult& fit, const MeanModel& mean,
                 const CovarianceModel& cov);
Json prediction_to_json(const Prediction& prediction);

// Plain-text rendering of a report for --format text.
std::string render_text(const Json& report);

}  // namespace vcm
