#pragma once

#include <Eigen/Core>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "mnar/dataset.hpp"
#include "mnar/estimate.hpp"
#include "mnar/models.hpp"

namespace mnar {

class KeyValueConfig;

/// A named data-generating process: covariate laws, the respondents' outcome
/// truth (possibly a nonlinear mean), and the response-mechanism truth.
/// Degenerate laws pin a covariate at a point, useful for conditional checks.
struct ScenarioSpec {
  enum class ULaw { Normal01, UniformM11, Degenerate };
  enum class ZLaw { Bernoulli, Normal01, Degenerate };

  std::string name = "custom";
  ULaw u_law = ULaw::Normal01;
  ZLaw z_law = ZLaw::Bernoulli;
  double z_p = 0.5;      // Bernoulli z only
  double u_value = 0.0;  // Degenerate laws
  double z_value = 0.0;

  OutcomeFamily family = OutcomeFamily::Normal;
  /// Mean of y | (u, z, delta=1); success probability for Bernoulli.
  std::function<double(double, double)> mean_fn;
  Eigen::VectorXd kappa_true;  // coefficients behind mean_fn when linear
  double sigma2 = 1.0;

  LinkFunction link = LinkFunction::logistic();
  Eigen::Vector2d alpha{0.0, 0.0};  // intercept, u coefficient
  double beta = 0.0;
  double kappa2 = 1.0;

  /// Estimation-side respondents' model (correctly specified for S1-S3,
  /// spline for S4).
  OutcomeSpec estimation_spec;

  ResponseModel response_truth() const;
  ResponseModel response_skeleton() const;  // same shape, parameters free
};

ScenarioSpec scenario_s1(double kappa2 = 1.0);
ScenarioSpec scenario_s2(double kappa2 = 1.0);
ScenarioSpec scenario_s3();
ScenarioSpec scenario_s4(const LinkFunction& link);
ScenarioSpec scenario_by_name(const std::string& name, double kappa2,
                              const std::string& s4_link = "logistic");
/// Custom DGP from the same declarative model config (linear means only).
ScenarioSpec scenario_from_config(const KeyValueConfig& cfg);

/// Draws (x, delta, delta*y): x from its law, delta from
/// P(delta=1 | x) = 1 / int p1(y|x)/pi(x,y) dy, and y from p1 when delta=1.
/// Nonrespondents' y stays missing; this reproduces the observable joint law
/// exactly. Throws IntegrationError for non-integrable custom specs.
Dataset generate(const ScenarioSpec& spec, int n, std::uint64_t seed,
                 std::uint64_t stream_id = 0);

/// Population quantities by quadrature over (u, z, y).
double true_mean(const ScenarioSpec& spec);           // E[y]
double true_cc_bias(const ScenarioSpec& spec);        // E[y | delta=1] - E[y]
double true_response_rate(const ScenarioSpec& spec);  // E[P(delta=1 | x)]
/// P(delta=1 | x) at one covariate point.
double true_response_prob_at(const ScenarioSpec& spec, double u, double z);

struct McConfig {
  int n = 2000;
  int R = 500;
  int B = 200;  // bootstrap size per replicate; 0 disables CIs
  std::uint64_t seed = 1;
  S0Method method = S0Method::Quadrature;
  int fi_draws = 1000;
  bool hajek = false;
  int threads = 0;  // 0: hardware concurrency
};

struct McCell {
  std::string estimand;  // "E[y]" or "beta"
  std::string method;    // "CC" or "FI"
  double bias = 0.0;
  double rmse = 0.0;
  double bias_mcse = 0.0;
  double rmse_mcse = 0.0;
  std::optional<double> coverage;       // percent, absent when B = 0 or R < 2
  std::optional<double> coverage_mcse;  // percent
  int n_replicates = 0;
};

struct McReport {
  std::string scenario;
  double kappa2 = 0.0;
  int n = 0, R = 0, B = 0;
  std::string method;
  double truth_mean = 0.0;
  double truth_beta = 0.0;
  std::vector<McCell> cells;
  int failures = 0;   // replicates with no converged fit
  int unstable = 0;   // converged but wildly diverged response estimates
  double failure_rate = 0.0;
  bool high_failure_rate = false;  // failure rate above 5%

  // per-replicate records (NaN on failure), kept for aggregate identities
  Eigen::VectorXd cc_means, fi_means, fi_betas;
  Eigen::VectorXd cc_covered, fi_mean_covered, fi_beta_covered;

  const McCell* cell(const std::string& estimand,
                     const std::string& method_name) const;
};

/// R independent replicates of generate -> CC mean -> two-stage pipeline ->
/// bootstrap CIs, aggregated to per-estimand bias / RMSE / coverage with
/// Monte Carlo standard errors. Replicate failures are counted, not fatal.
/// Deterministic given (spec, cfg): replicate r always uses stream (seed, r)
/// and aggregation is ordered by replicate index regardless of worker count.
McReport run_monte_carlo(const ScenarioSpec& spec, const McConfig& cfg);

}  // namespace mnar
