#include "vcm/report.hpp"

#include <charconv>
#include <cmath>
#include <sstream>

#include "vcm/errors.hpp"
#include "vcm/formula.hpp"

namespace vcm {

namespace {

double parse_real(const std::string& text, const std::string& what) {
  double value;
  const char* begin = text.data();
  const char* end = begin + text.size();
  auto [ptr, ec] = std::from_chars(begin, end, value);
  if (ec != std::errc() || ptr != end || text.empty()) {
    throw ModelError("cannot parse '" + text + "' as a number in " + what);
  }
  return value;
}

Json dataset_to_json(const Dataset& dataset) {
  Json columns = Json::array();
  for (const auto& column : dataset.columns) {
    Json entry;
    entry["name"] = column.name;
    switch (column.kind) {
      case ColumnKind::factor: entry["kind"] = "factor"; break;
      case ColumnKind::covariate: entry["kind"] = "covariate"; break;
      case ColumnKind::response: entry["kind"] = "response"; break;
    }
    columns.push_back(std::move(entry));
  }
  Json data;
  data["n_units"] = dataset.n_rows;
  data["response"] = dataset.response().name;
  data["columns"] = std::move(columns);
  return data;
}

Json new_report(const std::string& command) {
  Json report;
  report["schema_version"] = kSchemaVersion;
  report["command"] = command;
  return report;
}

}  // namespace

NewUnit parse_new_unit(const std::string& spec, const Design& design) {
  NewUnit unit;
  std::istringstream stream(spec);
  std::string field;
  while (std::getline(stream, field, ',')) {
    const auto eq = field.find('=');
    if (eq == std::string::npos) {
      throw ModelError("new-unit field '" + field + "' is not name=value");
    }
    auto strip = [](std::string s) {
      const auto b = s.find_first_not_of(" \t");
      const auto e = s.find_last_not_of(" \t");
      return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
    };
    const std::string name = strip(field.substr(0, eq));
    const std::string value = strip(field.substr(eq + 1));
    if (name.empty()) throw ModelError("empty name in new-unit spec '" + spec + "'");
    if (design.has_factor(name)) {
      unit.levels[name] = value;
    } else if (design.has_covariate(name)) {
      unit.covariates[name] = parse_real(value, "new-unit spec for '" + name + "'");
    } else {
      throw ModelError("new-unit name '" + name + "' is not in the dataset");
    }
  }
  if (unit.levels.empty() && unit.covariates.empty()) {
    throw ModelError("empty new-unit spec");
  }
  return unit;
}

Eigen::VectorXd parse_grid(const std::string& spec) {
  const auto first = spec.find(':');
  const auto second = spec.find(':', first == std::string::npos ? first : first + 1);
  if (first == std::string::npos || second == std::string::npos) {
    throw ModelError("grid spec must be start:stop:step");
  }
  const double start = parse_real(spec.substr(0, first), "grid spec");
  const double stop = parse_real(spec.substr(first + 1, second - first - 1), "grid spec");
  const double step = parse_real(spec.substr(second + 1), "grid spec");
  if (step <= 0.0 || stop <= start) {
    throw ModelError("grid spec needs stop > start and step > 0");
  }
  const auto count = static_cast<Eigen::Index>(std::floor((stop - start) / step + 1e-9)) + 1;
  Eigen::VectorXd grid(count);
  for (Eigen::Index i = 0; i < count; ++i) grid[i] = start + static_cast<double>(i) * step;
  return grid;
}

Json identifiability_to_json(const IdentifiabilityReport& report) {
  Json terms = Json::array();
  for (const auto& term : report.terms) {
    Json entry;
    entry["term"] = term.term;
    entry["status"] = term_status_name(term.status);
    entry["confounded_with"] = term.confounded_with;
    terms.push_back(std::move(entry));
  }
  Json out;
  out["all_identifiable"] = report.all_identifiable;
  out["terms"] = std::move(terms);
  return out;
}

Json fit_to_json(const FitResult& fit, const MeanModel& mean,
                 const CovarianceModel& cov) {
  Json components = Json::array();
  for (int k = 0; k < cov.n_terms(); ++k) {
    Json entry;
    entry["term"] = cov.terms[k].term.label();
    entry["estimate"] = fit.components[k];
    entry["boundary"] = static_cast<bool>(fit.boundary_flags[k]);
    components.push_back(std::move(entry));
  }
  Json coefficients = Json::array();
  for (Eigen::Index j = 0; j < fit.beta.size(); ++j) {
    Json entry;
    entry["name"] = mean.column_names[static_cast<std::size_t>(j)];
    entry["estimate"] = fit.beta[j];
    entry["std_error"] = std::sqrt(std::max(0.0, fit.beta_cov(j, j)));
    coefficients.push_back(std::move(entry));
  }
  Json out;
  out["converged"] = fit.converged;
  out["iterations"] = fit.iterations;
  out["reml_loglik"] = fit.reml_loglik;
  out["components"] = std::move(components);
  out["coefficients"] = std::move(coefficients);
  return out;
}

Json prediction_to_json(const Prediction& prediction) {
  Json out;
  out["value"] = prediction.value;
  out["std_error"] = prediction.std_error;
  out["fixed_part"] = prediction.fixed_part;
  out["residual_part"] = prediction.residual_part;
  return out;
}

Json run_fit(const Dataset& dataset, const RunOptions& options) {
  const Design design = to_design(dataset);
  const Eigen::VectorXd y = dataset.response().numeric;

  const std::vector<MeanTerm> mean_terms = parse_mean(options.mean_formula);
  const std::vector<CovarianceTerm> cov_terms = parse_cov(options.cov_formula);
  const MeanModel mean = mean_model_matrix(mean_terms, design);
  const CovarianceModel cov = make_covariance_model(cov_terms, design);

  Json report = new_report(options.identify_only ? "identify" : "fit");
  Json model;
  model["mean"] = format_mean(mean_terms);
  model["cov"] = format_cov(cov_terms);
  model["mean_rank"] = mean.rank;
  report["model"] = std::move(model);
  report["data"] = dataset_to_json(dataset);

  const IdentifiabilityReport ident = identifiability_report(mean, cov);
  report["identifiability"] = identifiability_to_json(ident);

  if (options.identify_only) return report;
  if (!ident.all_identifiable) throw IdentifiabilityFailure(std::move(report));

  const FitResult fit = fit_reml(mean, cov, y, options.fit_config);
  report["fit"] = fit_to_json(fit, mean, cov);

  Json warnings = Json::array();
  if (!fit.converged) warnings.push_back("fit did not converge");
  for (int k = 0; k < cov.n_terms(); ++k) {
    if (fit.boundary_flags[static_cast<std::size_t>(k)]) {
      warnings.push_back("component '" + cov.terms[k].term.label() +
                         "' estimated at the boundary");
    }
  }

  const bool wants_predictions =
      !options.new_units.empty() || !options.contrasts.empty() ||
      options.effects_factor.has_value() || options.spline_covariate.has_value();
  if (wants_predictions) {
    const FittedModel fitted{mean, cov, y, fit};
    const Predictor predictor(fitted);

    if (!options.new_units.empty()) {
      Json predictions = Json::array();
      for (const auto& spec : options.new_units) {
        const NewUnit unit = parse_new_unit(spec, design);
        Json entry = prediction_to_json(predictor.point(unit));
        entry["spec"] = spec;
        predictions.push_back(std::move(entry));
      }
      report["predictions"] = std::move(predictions);
    }
    if (!options.contrasts.empty()) {
      Json contrasts = Json::array();
      for (const auto& spec : options.contrasts) {
        const auto bar = spec.find('|');
        if (bar == std::string::npos) {
          throw ModelError("contrast spec must be 'unit | unit'");
        }
        const NewUnit a = parse_new_unit(spec.substr(0, bar), design);
        const NewUnit b = parse_new_unit(spec.substr(bar + 1), design);
        Json entry = prediction_to_json(predictor.contrast(a, b));
        entry["spec"] = spec;
        contrasts.push_back(std::move(entry));
      }
      report["contrasts"] = std::move(contrasts);
    }
    if (options.effects_factor) {
      const auto effects = predictor.effects(*options.effects_factor);
      double mean_effect = 0.0;
      for (const auto& e : effects) mean_effect += e.effect;
      mean_effect /= effects.empty() ? 1.0 : static_cast<double>(effects.size());
      Json entries = Json::array();
      for (const auto& e : effects) {
        Json entry;
        entry["level"] = e.level;
        entry["effect"] = e.effect;
        entry["std_error"] = e.std_error;
        entry["centered"] = e.effect - mean_effect;
        entries.push_back(std::move(entry));
      }
      Json block;
      block["factor"] = *options.effects_factor;
      block["levels"] = std::move(entries);
      report["effects"] = std::move(block);
    }
    if (options.spline_covariate) {
      const Eigen::VectorXd grid = parse_grid(options.grid_spec);
      const CurveDiagnostics diag =
          predictor.curve_diagnostics(*options.spline_covariate, grid);
      Json block;
      block["covariate"] = *options.spline_covariate;
      block["piecewise_degree"] = diag.piecewise_degree;
      block["n_knots"] = diag.n_knots;
      block["grid_step"] = diag.grid_step;
      block["third_deriv_rel_variation"] = diag.third_deriv_rel_variation;
      block["value_gap_max"] = diag.value_gap_max;
      block["d1_gap_max"] = diag.d1_gap_max;
      block["d2_gap_max"] = diag.d2_gap_max;
      block["value_scale"] = diag.value_scale;
      block["d1_scale"] = diag.d1_scale;
      block["d2_scale"] = diag.d2_scale;
      block["second_deriv_interior_max"] = diag.second_deriv_interior_max;
      block["second_deriv_exterior_max"] = diag.second_deriv_exterior_max;
      block["second_deriv_knot_scale"] = diag.second_deriv_knot_scale;
      report["spline_check"] = std::move(block);
    }
  }

  report["warnings"] = std::move(warnings);
  return report;
}

Json run_spectrum(const Dataset& dataset) {
  const SpectralTable table = periodogram_anova(dataset.response().numeric);
  Json rows = Json::array();
  int df_total = 0;
  for (const auto& row : table.rows) {
    Json entry;
    entry["index"] = row.index;
    entry["frequency"] = row.frequency;
    entry["sum_squares"] = row.sum_squares;
    entry["df"] = row.df;
    rows.push_back(std::move(entry));
    df_total += row.df;
  }
  Json spectrum;
  spectrum["n"] = table.n;
  spectrum["total_ss"] = table.total_ss;
  spectrum["df_total"] = df_total;
  spectrum["rows"] = std::move(rows);

  Json report = new_report("spectrum");
  report["data"] = dataset_to_json(dataset);
  report["spectrum"] = std::move(spectrum);
  return report;
}

Json run_yates(const Dataset& dataset, YatesDivisor divisor) {
  const Eigen::VectorXd y = dataset.response().numeric;
  int n_factors = 0;
  while ((Eigen::Index{1} << n_factors) < y.size()) ++n_factors;
  const YatesResult result = yates_transform(y, n_factors, divisor);

  Json rows = Json::array();
  for (Eigen::Index k = 0; k < result.values.size(); ++k) {
    Json entry;
    entry["contrast"] = result.labels[static_cast<std::size_t>(k)];
    entry["value"] = result.values[k];
    rows.push_back(std::move(entry));
  }
  Json yates;
  yates["n_factors"] = result.n_factors;
  yates["divisor"] = divisor == YatesDivisor::totals ? "totals" : "effects";
  yates["rows"] = std::move(rows);

  Json report = new_report("yates");
  report["data"] = dataset_to_json(dataset);
  report["yates"] = std::move(yates);
  return report;
}

namespace {

void render_table(std::ostream& out, const Json& rows,
                  const std::vector<std::string>& fields,
                  const std::vector<std::string>& headings) {
  std::vector<std::size_t> widths;
  std::vector<std::vector<std::string>> cells;
  for (const auto& heading : headings) widths.push_back(heading.size());
  for (const auto& row : rows) {
    std::vector<std::string> line;
    for (std::size_t i = 0; i < fields.size(); ++i) {
      const auto& value = row.at(fields[i]);
      std::string text;
      if (value.is_string()) {
        text = value.get<std::string>();
      } else if (value.is_boolean()) {
        text = value.get<bool>() ? "yes" : "";
      } else if (value.is_number_integer()) {
        text = std::to_string(value.get<long long>());
      } else if (value.is_number()) {
        std::ostringstream format;
        format.precision(6);
        format << value.get<double>();
        text = format.str();
      } else {
        text = value.dump();
      }
      widths[i] = std::max(widths[i], text.size());
      line.push_back(std::move(text));
    }
    cells.push_back(std::move(line));
  }
  auto emit = [&](const std::vector<std::string>& line) {
    out << " ";
    for (std::size_t i = 0; i < line.size(); ++i) {
      out << " " << line[i] << std::string(widths[i] - line[i].size() + 1, ' ');
    }
    out << "\n";
  };
  emit(headings);
  for (const auto& line : cells) emit(line);
}

}  // namespace

std::string render_text(const Json& report) {
  std::ostringstream out;
  const std::string command = report.at("command").get<std::string>();
  if (report.contains("model")) {
    out << "model: mean = " << report["model"]["mean"].get<std::string>()
        << "   cov = " << report["model"]["cov"].get<std::string>() << "\n";
  }
  if (report.contains("data")) {
    out << "data: " << report["data"]["n_units"].get<int>() << " units, response '"
        << report["data"]["response"].get<std::string>() << "'\n";
  }
  if (report.contains("identifiability")) {
    const auto& ident = report["identifiability"];
    out << "identifiability: "
        << (ident["all_identifiable"].get<bool>() ? "all terms identifiable"
                                                  : "NOT identifiable")
        << "\n";
    for (const auto& term : ident["terms"]) {
      out << "  " << term["term"].get<std::string>() << ": "
          << term["status"].get<std::string>();
      if (!term["confounded_with"].empty()) {
        out << " (with";
        for (const auto& other : term["confounded_with"]) {
          out << " " << other.get<std::string>();
        }
        out << ")";
      }
      out << "\n";
    }
  }
  if (report.contains("fit")) {
    const auto& fit = report["fit"];
    out << "fit: " << (fit["converged"].get<bool>() ? "converged" : "NOT converged")
        << " in " << fit["iterations"].get<int>() << " iterations, REML loglik "
        << fit["reml_loglik"].get<double>() << "\n";
    out << "variance components:\n";
    render_table(out, fit["components"], {"term", "estimate", "boundary"},
                 {"term", "estimate", "boundary"});
    out << "coefficients:\n";
    render_table(out, fit["coefficients"], {"name", "estimate", "std_error"},
                 {"name", "estimate", "std.error"});
  }
  if (report.contains("predictions")) {
    out << "predictions:\n";
    render_table(out, report["predictions"],
                 {"spec", "value", "std_error", "fixed_part", "residual_part"},
                 {"spec", "value", "std.error", "fixed", "residual"});
  }
  if (report.contains("contrasts")) {
    out << "contrasts:\n";
    render_table(out, report["contrasts"], {"spec", "value", "std_error"},
                 {"spec", "value", "std.error"});
  }
  if (report.contains("effects")) {
    out << "predicted effects for " << report["effects"]["factor"].get<std::string>()
        << ":\n";
    render_table(out, report["effects"]["levels"],
                 {"level", "effect", "std_error", "centered"},
                 {"level", "effect", "std.error", "centered"});
  }
  if (report.contains("spline_check")) {
    const auto& spline = report["spline_check"];
    out << "curve diagnostics on '" << spline["covariate"].get<std::string>()
        << "' (piecewise degree " << spline["piecewise_degree"].get<int>() << "):\n"
        << "  third-derivative relative variation: "
        << spline["third_deriv_rel_variation"].get<double>() << "\n"
        << "  knot gaps (value, d1, d2): " << spline["value_gap_max"].get<double>()
        << ", " << spline["d1_gap_max"].get<double>() << ", "
        << spline["d2_gap_max"].get<double>() << "\n"
        << "  exterior / interior second derivative: "
        << spline["second_deriv_exterior_max"].get<double>() << " / "
        << spline["second_deriv_interior_max"].get<double>() << "\n";
  }
  if (command == "spectrum" && report.contains("spectrum")) {
    const auto& spectrum = report["spectrum"];
    out << "spectral decomposition (n = " << spectrum["n"].get<int>()
        << ", total SS = " << spectrum["total_ss"].get<double>() << "):\n";
    render_table(out, spectrum["rows"], {"index", "frequency", "sum_squares", "df"},
                 {"j", "frequency", "SS", "df"});
  }
  if (command == "yates" && report.contains("yates")) {
    const auto& yates = report["yates"];
    out << "yates transform (" << yates["n_factors"].get<int>() << " factors, "
        << yates["divisor"].get<std::string>() << "):\n";
    render_table(out, yates["rows"], {"contrast", "value"}, {"contrast", "value"});
  }
  if (report.contains("warnings") && !report["warnings"].empty()) {
    out << "warnings:\n";
    for (const auto& warning : report["warnings"]) {
      out << "  - " << warning.get<std::string>() << "\n";
    }
  }
  return out.str();
}

}  // namespace vcm
