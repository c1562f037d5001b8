#pragma once

#include <Eigen/Core>
#include <optional>
#include <string>
#include <vector>

#include "mnar/dataset.hpp"
#include "mnar/models.hpp"
#include "mnar/rng.hpp"
#include "mnar/solver.hpp"
#include "mnar/splines.hpp"

namespace mnar {

enum class S0Method { Quadrature, FractionalImputation };

/// Respondents'-model specification for the MLE stage: either a linear form
/// in raw covariates or an automatically selected tensor spline (Normal
/// family only).
struct OutcomeSpec {
  OutcomeFamily family = OutcomeFamily::Normal;
  bool spline = false;
  LinearBasis linear;
  int spline_u_col = 0;
  int spline_z_col = 0;  // -1: no categorical interaction
  KnotCriterion criterion = KnotCriterion::AIC;
};

struct OutcomeFitDiagnostics {
  bool degenerate_sigma = false;
  double r_squared = 0.0;
  int iterations = 0;
};

/// Complete-case MLE of gamma. Normal: least squares with residual variance
/// divisor n_obs; Bernoulli: Newton on the logistic likelihood with a
/// separation guard.
OutcomeModel fit_outcome_mle(const Dataset& data, const OutcomeSpec& spec,
                             OutcomeFitDiagnostics* diag = nullptr);

/// s1(x, y; phi) = d log pi / d phi, the complete-case response score.
Eigen::VectorXd score_s1(const ResponseModel& response, const Eigen::VectorXd& u,
                         double y);

/// Fractional-imputation draws for the nonrespondents: M values per row from
/// p(y | x_i, delta=1; gamma_hat), reproducible under the caller's stream.
struct ImputationSet {
  Eigen::MatrixXd draws;             // n_mis x M
  Eigen::MatrixXd response_probs;    // pi(x_i, y*_ij) at a given phi
  std::vector<int> rows;             // dataset row of each imputation row

  void fill_response_probs(const ResponseModel& response, const Dataset& data);
};

ImputationSet draw_imputations(const Dataset& data, const OutcomeModel& outcome,
                               int M, RngStream& rng);

/// Mean-score system: precomputes the design blocks and the per-row
/// y-node/mass table (quadrature nodes or FI draws), then evaluates
/// sum_i { delta_i s1 + (1-delta_i) s0 } and single-row s0 values.
class MeanScoreSystem {
 public:
  MeanScoreSystem(const Dataset& data, const OutcomeModel& outcome,
                  const ResponseModel& skeleton, S0Method method,
                  int fi_draws = 1000, RngStream* rng = nullptr,
                  int gh_nodes = 60);

  int n_params() const { return n_params_; }

  /// Sum over the sample of the mean-score contributions at phi.
  /// Throws DomainError when an s0 denominator degenerates (< 1e-12 after
  /// averaging), the symptom of vanishing missingness.
  Eigen::VectorXd operator()(const Eigen::VectorXd& phi) const;

  /// s0 for one nonrespondent (index into missing_rows order).
  Eigen::VectorXd s0_row(int mis_index, const Eigen::VectorXd& phi) const;

  const std::vector<int>& missing_rows() const { return mis_rows_; }

 private:
  LinkFunction link_;
  MTransform m_;
  int n_params_, p_h_, p_g_;
  Eigen::MatrixXd bh_obs_, bg_obs_;
  Eigen::ArrayXd my_obs_;
  Eigen::MatrixXd bh_mis_, bg_mis_;
  Eigen::MatrixXd y_nodes_;  // n_mis x K
  Eigen::MatrixXd masses_;   // n_mis x K, rows sum to 1
  std::vector<int> mis_rows_;
  // factorized-exponential path: logistic link, scalar constant g, shared
  // Gauss-Hermite nodes y_ij = mu_i + c_j
  bool fast_logistic_ = false;
  Eigen::ArrayXd mu_mis_;       // per-row means
  Eigen::ArrayXd node_offset_;  // c_j
  Eigen::ArrayXd node_mass_;    // shared masses w_j
  mutable Eigen::ArrayXXd work_e_, work_f_;  // single-solve scratch
};

/// Conditional nonrespondent score s0(x; phi), evaluated by quadrature or by
/// fractional-imputation averages.
Eigen::VectorXd score_s0(const ResponseModel& response,
                         const OutcomeModel& outcome, const Eigen::VectorXd& u,
                         const Eigen::VectorXd& z, S0Method method,
                         int fi_draws = 1000, RngStream* rng = nullptr);

struct PhiFit {
  Eigen::VectorXd phi;
  bool converged = false;
  double residual_inf = 0.0;
  int iterations = 0;
  int restarts = 0;
  bool degenerate_missingness = false;  // all rows observed: beta not identified
};

struct MeanScoreOptions {
  S0Method method = S0Method::Quadrature;
  int fi_draws = 1000;
  double tol_per_n = 1e-8;  // scaled by n
  int max_iter = 100;
  int jitter_restarts = 5;
  std::optional<Eigen::VectorXd> start;
};

/// Solves the mean score equation for phi. Default start: regression of
/// delta on u under the model link with beta = 0; on nonconvergence, retries
/// from jittered starts before giving up.
PhiFit solve_mean_score(const Dataset& data, const OutcomeModel& outcome,
                        const ResponseModel& skeleton,
                        const MeanScoreOptions& opts, RngStream& rng);

struct IpwResult {
  double mean = 0.0;
  double min_prob = 1.0;
  bool extreme_weights = false;
  std::vector<int> flagged_rows;
};

/// Inverse-probability-weighted mean of y: Horvitz-Thompson by default,
/// weight-normalized (Hajek) behind the flag.
IpwResult ipw_mean(const Dataset& data, const ResponseModel& response,
                   bool hajek = false);

struct PipelineOptions {
  S0Method method = S0Method::Quadrature;
  int fi_draws = 1000;
  bool hajek = false;
  std::uint64_t seed = 1;
  double tol_per_n = 1e-8;
};

struct PipelineEstimate {
  Eigen::VectorXd gamma;
  Eigen::VectorXd phi;
  double y_mean = 0.0;
  bool converged = false;
  double residual_inf = 0.0;
  int iterations = 0;
};

/// One pass of the two-stage estimator: gamma MLE -> phi mean-score root ->
/// IPW mean. The unit the bootstrap and the Monte Carlo harness re-run.
PipelineEstimate run_pipeline(const Dataset& data, const OutcomeSpec& ospec,
                              const ResponseModel& response_skeleton,
                              const PipelineOptions& opts, RngStream& rng,
                              const Eigen::VectorXd* warm_start = nullptr);

struct BootstrapResult {
  Eigen::VectorXd se;          // per entry of the pipeline's estimate vector
  Eigen::MatrixXd percentile_ci;  // rows = parameters, cols = {lo, hi}
  int B = 0;
  int failures = 0;
  bool unstable = false;  // > 20% replicate failures
};

/// Estimate vector produced by one pipeline pass over a (re)sample; the
/// bootstrap requires a fixed length across resamples.
using PipelineFn =
    std::function<Eigen::VectorXd(const Dataset& resampled, RngStream& rng)>;

/// Nonparametric row-resampling bootstrap of an arbitrary pipeline.
/// Replicate b always draws with stream (seed, b+1); failed replicates are
/// counted and more than 20% of them flags the result unstable.
BootstrapResult bootstrap_pipeline(const Dataset& data, const PipelineFn& fn,
                                   int B, std::uint64_t seed);

/// Bootstrap of run_pipeline, collecting (gamma, phi, y_mean) rows
/// (gamma omitted for spline specs, whose coefficient count varies with the
/// selected knots).
BootstrapResult bootstrap(const Dataset& data, const OutcomeSpec& ospec,
                          const ResponseModel& response_skeleton,
                          const PipelineOptions& opts, int B,
                          std::uint64_t seed,
                          const PipelineEstimate* center = nullptr);

/// Maps response parameters fitted on standardized data back to the
/// original scale. Requires the standard shape (h with intercept, constant
/// g, identity m).
Eigen::VectorXd backtransform_phi(const Eigen::VectorXd& phi_std,
                                  const Standardization& rec,
                                  const ResponseModel& skeleton);

/// Same for a linear outcome model's gamma.
Eigen::VectorXd backtransform_gamma(const Eigen::VectorXd& gamma_std,
                                    const Standardization& rec,
                                    const OutcomeSpec& ospec);

struct FitResult {
  std::vector<std::string> parameter_names;
  Eigen::VectorXd estimates;  // (gamma, phi, E[y]) in report order
  Eigen::VectorXd standard_errors;
  Eigen::MatrixXd normal_ci;      // estimate +- 1.96 se
  Eigen::MatrixXd percentile_ci;
  std::string method_tag;  // "quadrature" or "fi(M)"
  bool converged = false;
  double residual_inf = 0.0;
  int iterations = 0;
  int bootstrap_B = 0;
  int bootstrap_failures = 0;
  bool bootstrap_unstable = false;
};

}  // namespace mnar
