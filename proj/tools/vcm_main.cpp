#include <CLI11.hpp>

#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "vcm/errors.hpp"
#include "vcm/report.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitIdentifiability = 3;
constexpr int kExitNotConverged = 4;

struct CommonOptions {
  std::string data_path;
  std::string response;
  std::vector<std::string> factors;
  std::vector<std::string> covariates;
  std::string format = "json";
  int seed = 0;  // reserved: no stochastic paths yet
};

void add_common(CLI::App* cmd, CommonOptions& opts, bool needs_response = true) {
  cmd->add_option("--data", opts.data_path, "input CSV file")->required();
  auto* response = cmd->add_option("--response", opts.response, "response column");
  if (needs_response) response->required();
  cmd->add_option("--factors", opts.factors, "columns to read as factors")
      ->delimiter(',');
  cmd->add_option("--covariates", opts.covariates, "columns to read as covariates")
      ->delimiter(',');
  cmd->add_option("--format", opts.format, "output format")
      ->check(CLI::IsMember({"json", "text"}));
  cmd->add_option("--seed", opts.seed, "reserved for future stochastic features");
}

vcm::Dataset load(const CommonOptions& opts) {
  std::map<std::string, vcm::ColumnKind> declared;
  for (const auto& name : opts.factors) declared[name] = vcm::ColumnKind::factor;
  for (const auto& name : opts.covariates) {
    declared[name] = vcm::ColumnKind::covariate;
  }
  if (!opts.response.empty()) declared[opts.response] = vcm::ColumnKind::response;
  return vcm::load_csv(opts.data_path, declared);
}

void emit(const vcm::Json& report, const CommonOptions& opts) {
  if (opts.format == "text") {
    std::cout << vcm::render_text(report);
  } else {
    std::cout << report.dump(2) << "\n";
  }
}

int run(int argc, char** argv) {
  CLI::App app{"linear mean / linear covariance factorial models: REML, GLS, "
               "BLUP prediction, identifiability, and ANOVA decompositions"};
  app.require_subcommand(1);

  CommonOptions opts;
  vcm::RunOptions run_opts;
  std::string divisor = "totals";

  auto* fit = app.add_subcommand("fit", "estimate variance components and GLS "
                                        "coefficients by REML");
  auto* identify = app.add_subcommand("identify", "report which variance "
                                                  "components are identifiable");
  auto* predict = app.add_subcommand("predict", "fit, then predict new units, "
                                                "contrasts, or factor effects");
  auto* spectrum = app.add_subcommand("spectrum", "Fourier decomposition of the "
                                                  "total sum of squares");
  auto* yates = app.add_subcommand("yates", "Yates contrast transform of a 2^n "
                                            "factorial response");

  for (CLI::App* cmd : {fit, identify, predict}) {
    add_common(cmd, opts);
    cmd->add_option("--mean", run_opts.mean_formula, "mean formula, e.g. '1 + A + x'")
        ->required();
    cmd->add_option("--cov", run_opts.cov_formula,
                    "covariance formula, e.g. 'I + E(A) + spl3(x)'")
        ->required();
  }
  for (CLI::App* cmd : {fit, predict}) {
    cmd->add_option("--max-iter", run_opts.fit_config.max_iterations,
                    "Fisher scoring iteration limit");
    cmd->add_option("--new", run_opts.new_units,
                    "new-unit spec 'A=a1,x=1.5' (repeatable; level NEW allowed)");
    cmd->add_option("--contrast", run_opts.contrasts,
                    "contrast spec 'A=a1 | A=a2' (repeatable)");
    cmd->add_option("--effects", run_opts.effects_factor,
                    "predict per-level effects of a block factor");
    cmd->add_option("--spline-check", run_opts.spline_covariate,
                    "smoothness diagnostics for the prediction curve");
    cmd->add_option("--grid", run_opts.grid_spec,
                    "grid start:stop:step for --spline-check");
  }
  add_common(spectrum, opts);
  add_common(yates, opts);
  yates->add_option("--divisor", divisor, "contrast scaling")
      ->check(CLI::IsMember({"totals", "effects"}));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help
    std::cerr << "vcm: error[usage]: " << e.what() << "\n";
    return kExitUsage;
  }

  try {
    const vcm::Dataset dataset = load(opts);
    if (spectrum->parsed()) {
      emit(vcm::run_spectrum(dataset), opts);
      return kExitOk;
    }
    if (yates->parsed()) {
      const auto kind = divisor == "effects" ? vcm::YatesDivisor::effects
                                             : vcm::YatesDivisor::totals;
      emit(vcm::run_yates(dataset, kind), opts);
      return kExitOk;
    }
    if (predict->parsed() && run_opts.new_units.empty() &&
        run_opts.contrasts.empty() && !run_opts.effects_factor &&
        !run_opts.spline_covariate) {
      std::cerr << "vcm: error[usage]: predict needs --new, --contrast, "
                   "--effects, or --spline-check\n";
      return kExitUsage;
    }
    run_opts.identify_only = identify->parsed();
    const vcm::Json report = vcm::run_fit(dataset, run_opts);
    emit(report, opts);
    if (run_opts.identify_only &&
        !report.at("identifiability").at("all_identifiable").get<bool>()) {
      return kExitIdentifiability;
    }
    if (report.contains("fit") && !report["fit"]["converged"].get<bool>()) {
      std::cerr << "vcm: error[convergence]: fit did not converge\n";
      return kExitNotConverged;
    }
    return kExitOk;
  } catch (const vcm::IdentifiabilityFailure& e) {
    emit(e.report(), opts);
    std::cerr << "vcm: error[identifiability]: " << e.what() << "\n";
    return kExitIdentifiability;
  } catch (const vcm::FormulaError& e) {
    std::cerr << "vcm: error[formula]: " << e.what() << "\n";
    return kExitUsage;
  } catch (const vcm::DataError& e) {
    std::cerr << "vcm: error[data]: " << e.what() << "\n";
    return kExitData;
  } catch (const vcm::ModelError& e) {
    std::cerr << "vcm: error[model]: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "vcm: error[internal]: " << e.what() << "\n";
    return kExitData;
  }
}

}  // namespace

int main(int argc, char** argv) { return run(argc, argv); }
