#include <CLI11.hpp>
#include <filesystem>
#include <iostream>
#include <sstream>

#include "mnar/config.hpp"
#include "mnar/errors.hpp"
#include "mnar/estimate.hpp"
#include "mnar/identify.hpp"
#include "mnar/reports.hpp"
#include "mnar/simulate.hpp"

namespace fs = std::filesystem;
using namespace mnar;

namespace {

struct CommonFlags {
  std::string out_dir = ".";
  std::uint64_t seed = 1;
  std::string method = "quadrature";
  int fi_draws = 1000;
  int B = 200;
  bool hajek = false;
  bool percentile = false;  // percentile CIs instead of normal approximation
};

S0Method parse_method(const std::string& m) {
  if (m == "quadrature") return S0Method::Quadrature;
  if (m == "fi") return S0Method::FractionalImputation;
  throw ConfigError("method must be quadrature|fi");
}

void ensure_out_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir))
    throw ConfigError("output directory not writable: " + dir);
}

OutcomeSpec outcome_spec_from_config(const KeyValueConfig& cfg, int p_u,
                                     int p_z) {
  OutcomeSpec spec;
  const std::string fam = cfg.get("outcome.family");
  if (fam == "normal") {
    spec.family = OutcomeFamily::Normal;
  } else if (fam == "bernoulli") {
    spec.family = OutcomeFamily::Bernoulli;
  } else {
    throw ConfigError("outcome.family: expected normal|bernoulli");
  }
  if (cfg.get_or("outcome.mean.structure", "linear") == "spline") {
    spec.spline = true;
    spec.spline_u_col = cfg.has("outcome.spline.u")
                            ? cfg.get_int("outcome.spline.u")
                            : 0;
    spec.spline_z_col = cfg.has("outcome.spline.z")
                            ? cfg.get_int("outcome.spline.z")
                            : (p_z > 0 ? 0 : -1);
    spec.criterion = cfg.get_or("outcome.spline.criterion", "aic") == "gcv"
                         ? KnotCriterion::GCV
                         : KnotCriterion::AIC;
  } else {
    // reuse the model parser for the basis shape; parameters are fitted
    const OutcomeModel skeleton = outcome_model_from_config(cfg, p_u, p_z);
    spec.linear = skeleton.mean_structure().linear;
  }
  return spec;
}

int cmd_simulate(const std::string& scenario, const std::string& config_path,
                 double kappa2, const std::string& s4_link, int n, int R,
                 int threads, const CommonFlags& flags) {
  ScenarioSpec spec =
      config_path.empty()
          ? scenario_by_name(scenario, kappa2, s4_link)
          : scenario_from_config(KeyValueConfig::parse_file(config_path));
  McConfig cfg;
  cfg.n = n;
  cfg.R = R;
  cfg.B = flags.B;
  cfg.seed = flags.seed;
  cfg.method = parse_method(flags.method);
  cfg.fi_draws = flags.fi_draws;
  cfg.hajek = flags.hajek;
  cfg.threads = threads;

  const McReport rep = run_monte_carlo(spec, cfg);
  ensure_out_dir(flags.out_dir);
  const std::string base = flags.out_dir + "/mc_" + rep.scenario;
  write_text_file(base + ".csv", mc_report_to_csv(rep));
  write_text_file(base + ".md", mc_report_to_markdown(rep));
  std::cout << mc_report_to_markdown(rep);
  if (rep.high_failure_rate)
    std::cout << "warning: replicate failure rate "
              << format_double(100.0 * rep.failure_rate, 3) << "%\n";
  return 0;
}

IdentifiabilityVerdict diagnose_from_config(const KeyValueConfig& cfg,
                                            const std::string& csv_path) {
  if (cfg.has("categorical.table")) {
    CategoricalRespondentTable table;
    table.p1 = cfg.get_matrix("categorical.table");
    return check_categorical(table);
  }
  if (cfg.has("scenario.name") || !cfg.has("data.outcome")) {
    // scenario mode: models and data both come from the DGP description
    ScenarioSpec spec =
        cfg.has("scenario.name") &&
                cfg.get("scenario.name").size() == 2 &&
                (cfg.get("scenario.name")[0] == 'S' ||
                 cfg.get("scenario.name")[0] == 's')
            ? scenario_by_name(cfg.get("scenario.name"),
                               cfg.has("scenario.kappa2")
                                   ? cfg.get_double("scenario.kappa2")
                                   : 1.0,
                               cfg.get_or("scenario.s4_link", "logistic"))
            : scenario_from_config(cfg);
    // a C7 violation means the scenario cannot even be generated; report it
    // without a probe sample
    if (spec.family == OutcomeFamily::Normal &&
        !check_tail_condition(spec.link).holds) {
      IdentifiabilityVerdict v;
      v.status = IdentifyStatus::ConditionFailed;
      v.failed_condition = IdCondition::C7;
      v.notes.push_back("C7: link tail decays too fast (liminf condition)");
      v.notes.push_back(
          "scenario is not integrable; no probe data was generated");
      return v;
    }
    const Dataset probe = generate(spec, 2000, 1);
    LinearBasis b = LinearBasis::intercept_and_all(1, 1);
    Eigen::VectorXd kappa = spec.kappa_true.size()
                                ? spec.kappa_true
                                : Eigen::VectorXd::Zero(3);
    OutcomeModel outcome(spec.family, MeanStructure::from_linear(b), kappa,
                         spec.family == OutcomeFamily::Normal ? spec.sigma2
                                                              : 1.0);
    return check_conditions(spec.response_truth(), outcome, probe);
  }
  if (csv_path.empty())
    throw ConfigError("diagnose: model config with data roles needs --data");
  const ColumnRoles roles = roles_from_config(cfg);
  Dataset data = read_dataset_csv(csv_path, roles);
  data.validate(true);
  const ResponseModel response = response_model_from_config(cfg, data.p_u());
  OutcomeModel outcome = outcome_model_from_config(cfg, data.p_u(), data.p_z());
  if (!cfg.has("outcome.kappa")) {
    OutcomeSpec ospec = outcome_spec_from_config(cfg, data.p_u(), data.p_z());
    outcome = fit_outcome_mle(data, ospec);
  }
  return check_conditions(response, outcome, data);
}

int cmd_diagnose(const std::string& config_path, const std::string& csv_path,
                 const std::string& out_dir) {
  const KeyValueConfig cfg = KeyValueConfig::parse_file(config_path);
  const IdentifiabilityVerdict verdict = diagnose_from_config(cfg, csv_path);
  ensure_out_dir(out_dir);
  write_text_file(out_dir + "/verdict.txt", verdict.to_report());
  if (verdict.witness_mechanism)
    write_text_file(out_dir + "/witness.csv", witness_to_csv(verdict));
  std::cout << verdict.to_report();
  return 0;
}

int cmd_fit(const std::string& csv_path, const std::string& config_path,
            bool override_identifiability, const CommonFlags& flags) {
  const KeyValueConfig cfg = KeyValueConfig::parse_file(config_path);
  const ColumnRoles roles = roles_from_config(cfg);
  Dataset data = read_dataset_csv(csv_path, roles);
  data.validate(true);

  const ResponseModel skeleton = response_model_from_config(cfg, data.p_u());
  const OutcomeSpec ospec =
      outcome_spec_from_config(cfg, data.p_u(), data.p_z());

  if (data.n_obs() == data.n())
    throw FitError(
        "all rows observed: no missingness, beta is not identified");

  // diagnose before fitting
  OutcomeFitDiagnostics odiag;
  const OutcomeModel outcome_cc = fit_outcome_mle(data, ospec, &odiag);
  const IdentifiabilityVerdict verdict =
      check_conditions(skeleton, outcome_cc, data);
  if (verdict.status != IdentifyStatus::Identifiable) {
    if (!override_identifiability) {
      std::cerr << "refusing to fit: identifiability verdict is "
                << to_string(verdict.status) << "\n"
                << verdict.to_report()
                << "(use --override-identifiability to proceed)\n";
      return 1;
    }
    std::cout << "warning: fitting despite verdict "
              << to_string(verdict.status) << "\n";
  }

  PipelineOptions popts;
  popts.method = parse_method(flags.method);
  popts.fi_draws = flags.fi_draws;
  popts.hajek = flags.hajek;

  const bool std_y = ospec.family == OutcomeFamily::Normal;
  const bool keep_gamma = !ospec.spline;

  // pipeline over any (re)sample: standardize, fit, map back
  PipelineFn pipeline = [&](const Dataset& sample,
                            RngStream& rng) -> Eigen::VectorXd {
    const Dataset std_data = sample.standardized(std_y);
    const PipelineEstimate est =
        run_pipeline(std_data, ospec, skeleton, popts, rng);
    const Eigen::VectorXd phi =
        backtransform_phi(est.phi, std_data.standardization, skeleton);
    const double ey =
        ipw_mean(sample, skeleton.with_phi(phi), flags.hajek).mean;
    Eigen::VectorXd row((keep_gamma ? est.gamma.size() : 0) + phi.size() + 1);
    if (keep_gamma) {
      const Eigen::VectorXd gamma = backtransform_gamma(
          est.gamma, std_data.standardization, ospec);
      row << gamma, phi, ey;
    } else {
      row << phi, ey;
    }
    return row;
  };

  RngStream center_rng(flags.seed, 0);
  const Eigen::VectorXd center = pipeline(data, center_rng);
  const BootstrapResult boot =
      bootstrap_pipeline(data, pipeline, flags.B, flags.seed);

  FitResult fit;
  const int p_h = skeleton.h_basis().dim();
  if (keep_gamma) {
    const int pk = ospec.linear.dim();
    for (int k = 0; k < pk; ++k)
      fit.parameter_names.push_back("kappa" + std::to_string(k));
    if (ospec.family == OutcomeFamily::Normal)
      fit.parameter_names.push_back("sigma2");
  }
  for (int k = 0; k < p_h; ++k)
    fit.parameter_names.push_back("alpha" + std::to_string(k));
  fit.parameter_names.push_back("beta");
  fit.parameter_names.push_back("E[y]");
  fit.estimates = center;
  fit.standard_errors = boot.se;
  fit.normal_ci.resize(center.size(), 2);
  if (flags.percentile) {
    fit.normal_ci = boot.percentile_ci;
  } else {
    fit.normal_ci.col(0) = center - 1.96 * boot.se;
    fit.normal_ci.col(1) = center + 1.96 * boot.se;
  }
  fit.percentile_ci = boot.percentile_ci;
  fit.method_tag = flags.method == "fi"
                       ? "fi(" + std::to_string(flags.fi_draws) + ")"
                       : "quadrature";
  fit.converged = true;
  fit.bootstrap_B = boot.B;
  fit.bootstrap_failures = boot.failures;
  fit.bootstrap_unstable = boot.unstable;

  ensure_out_dir(flags.out_dir);
  write_text_file(flags.out_dir + "/estimates.csv", fit_result_to_csv(fit));
  write_text_file(flags.out_dir + "/estimates.md",
                  fit_result_to_markdown(fit));

  // respondents'-model residuals on the original scale
  {
    std::ostringstream ss;
    ss << "row,fitted_mean,residual\n";
    const Dataset std_data = data.standardized(std_y);
    OutcomeFitDiagnostics d2;
    const OutcomeModel fitted = fit_outcome_mle(std_data, ospec, &d2);
    const Standardization& rec = std_data.standardization;
    for (int i = 0; i < data.n(); ++i) {
      if (!data.delta[i]) continue;
      const Eigen::VectorXd ui = std_data.u.row(i);
      const Eigen::VectorXd zi = std_data.z.cols()
                                     ? Eigen::VectorXd(std_data.z.row(i))
                                     : Eigen::VectorXd();
      const double mu_std = fitted.mean(ui, zi);
      const double mu = std_y ? rec.y_mean + rec.y_sd * mu_std : mu_std;
      ss << i << "," << format_double(mu) << ","
         << format_double(data.y(i) - mu) << "\n";
    }
    write_text_file(flags.out_dir + "/residuals.csv", ss.str());
    std::cout << "respondents' model R^2 = " << format_double(odiag.r_squared, 4)
              << "\n";
  }

  std::cout << fit_result_to_markdown(fit);
  if (boot.unstable)
    std::cout << "warning: unstable bootstrap (" << boot.failures << "/"
              << boot.B << " replicate failures)\n";
  return 0;
}

int cmd_report(const std::string& csv_path, const std::string& out_path) {
  const std::string md = mc_report_csv_to_markdown(read_text_file(csv_path));
  if (out_path.empty()) {
    std::cout << md;
  } else {
    write_text_file(out_path, md);
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"MNAR response-model estimation with instrumental variables"};
  app.require_subcommand(1);

  CommonFlags flags;
  std::string scenario = "S1", config_path, csv_path, s4_link = "logistic";
  std::string report_out;
  double kappa2 = 1.0;
  int n = 2000, R = 500, threads = 0;
  bool override_identifiability = false;

  auto* sim = app.add_subcommand("simulate", "Monte Carlo study of a scenario");
  sim->add_option("scenario", scenario, "S1|S2|S3|S4 (ignored with --config)");
  sim->add_option("--config", config_path, "custom DGP config file");
  sim->add_option("--kappa2", kappa2, "instrument strength (S1, S2)");
  sim->add_option("--s4-link", s4_link, "S4 response link: logistic|cauchy");
  sim->add_option("--n", n, "sample size per replicate");
  sim->add_option("--R", R, "number of replicates");
  sim->add_option("--B", flags.B, "bootstrap size per replicate (0: no CIs)");
  sim->add_option("--M", flags.fi_draws, "fractional-imputation draws");
  sim->add_option("--method", flags.method, "quadrature|fi");
  sim->add_option("--seed", flags.seed, "RNG seed")->required();
  sim->add_option("--threads", threads, "worker threads (0: auto)");
  sim->add_option("--out", flags.out_dir, "output directory");
  sim->add_flag("--hajek", flags.hajek, "weight-normalized IPW mean");

  auto* fit = app.add_subcommand("fit", "fit models to a CSV dataset");
  fit->add_option("csv", csv_path, "input CSV")->required();
  fit->add_option("--config", config_path, "model/roles config")->required();
  fit->add_option("--B", flags.B, "bootstrap samples for SEs");
  fit->add_option("--M", flags.fi_draws, "fractional-imputation draws");
  fit->add_option("--method", flags.method, "quadrature|fi");
  fit->add_option("--seed", flags.seed, "RNG seed")->required();
  fit->add_option("--out", flags.out_dir, "output directory");
  fit->add_flag("--hajek", flags.hajek, "weight-normalized IPW mean");
  fit->add_flag("--percentile", flags.percentile,
                "report bootstrap percentile intervals");
  fit->add_flag("--override-identifiability", override_identifiability,
                "fit even when the diagnosis is not Identifiable");

  auto* diag = app.add_subcommand("diagnose", "identifiability diagnostics");
  diag->add_option("--config", config_path, "model or table config")
      ->required();
  diag->add_option("--data", csv_path, "optional CSV dataset");
  diag->add_option("--out", flags.out_dir, "output directory");

  auto* rep = app.add_subcommand("report", "re-render a report CSV as Markdown");
  rep->add_option("csv", csv_path, "mc report CSV")->required();
  rep->add_option("--out", report_out, "output Markdown path");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);  // prints help/usage
    return code == 0 ? 0 : 1;     // any parse failure is a user error
  }

  try {
    if (sim->parsed())
      return cmd_simulate(scenario, config_path, kappa2, s4_link, n, R,
                          threads, flags);
    if (fit->parsed())
      return cmd_fit(csv_path, config_path, override_identifiability, flags);
    if (diag->parsed())
      return cmd_diagnose(config_path, csv_path, flags.out_dir);
    if (rep->parsed()) return cmd_report(csv_path, report_out);
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const SchemaError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const Error& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
