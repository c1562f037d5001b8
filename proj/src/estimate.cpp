#include "mnar/estimate.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>

#include "mnar/errors.hpp"
#include "mnar/quadrature.hpp"

namespace mnar {

namespace {

constexpr double kSqrtPi = 1.77245385090551602730;

Eigen::MatrixXd empty_z(Eigen::Index n) { return Eigen::MatrixXd(n, 0); }

// Binary regression of delta on the h-basis under the model's link: the
// beta = 0 profile of the response model, used as the mean-score start.
Eigen::VectorXd fit_delta_regression(const Dataset& data,
                                     const ResponseModel& skeleton) {
  const Eigen::MatrixXd bh =
      skeleton.h_basis().design(data.u, empty_z(data.n()));
  Eigen::VectorXd d(data.n());
  for (int i = 0; i < data.n(); ++i) d(i) = data.delta[i];
  const LinkFunction link = skeleton.link();

  auto score = [&](const Eigen::VectorXd& alpha) {
    Eigen::ArrayXd t = (bh * alpha).array();
    Eigen::ArrayXd w(t.size());
    for (Eigen::Index i = 0; i < t.size(); ++i) {
      // psi/(1-Psi) at t is psi/Psi at -t for these symmetric links
      w(i) = d(i) > 0.5 ? link.score_factor(t(i))
                        : -link.score_factor(-t(i));
    }
    return Eigen::VectorXd(bh.transpose() * w.matrix() / data.n());
  };
  SolveOptions opts;
  opts.tol = 1e-9;
  opts.max_iter = 60;
  SolveResult res = solve_nonlinear_system(
      score, Eigen::VectorXd::Zero(bh.cols()), opts);
  return res.x;  // a usable start even if not fully converged
}

}  // namespace

OutcomeModel fit_outcome_mle(const Dataset& data, const OutcomeSpec& spec,
                             OutcomeFitDiagnostics* diag) {
  const auto obs = data.observed_rows();
  const Dataset sub = data.subset(obs);
  const int n_obs = sub.n();

  if (spec.spline) {
    if (spec.family != OutcomeFamily::Normal)
      throw FitError("spline mean structure requires a Normal outcome");
    Eigen::ArrayXd ucol = sub.u.col(spec.spline_u_col).array();
    Eigen::ArrayXd zcol;
    if (spec.spline_z_col >= 0) zcol = sub.z.col(spec.spline_z_col).array();
    const SplineFit sf =
        fit_spline_mean(ucol, zcol, sub.y.array(), spec.criterion);
    if (diag) {
      diag->r_squared = sf.r_squared;
      diag->degenerate_sigma = sf.sigma2 < 1e-12;
    }
    return OutcomeModel(OutcomeFamily::Normal,
                        MeanStructure::from_spline(sf.basis), sf.coefficients,
                        std::max(sf.sigma2, 1e-15));
  }

  const Eigen::MatrixXd design = spec.linear.design(sub.u, sub.z);
  const int p = static_cast<int>(design.cols());
  if (n_obs < p + 1)
    throw FitError("outcome MLE: need at least " + std::to_string(p + 1) +
                   " complete cases, have " + std::to_string(n_obs));

  if (spec.family == OutcomeFamily::Normal) {
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(design);
    qr.setThreshold(1e-10);
    if (qr.rank() < p) throw FitError("outcome MLE: design is rank-deficient");
    const Eigen::VectorXd kappa = qr.solve(sub.y);
    const double rss = (sub.y - design * kappa).squaredNorm();
    const double sigma2 = rss / n_obs;  // MLE divisor
    if (diag) {
      diag->degenerate_sigma = sigma2 < 1e-12;
      const double tss = (sub.y.array() - sub.y.mean()).square().sum();
      diag->r_squared = tss > 0.0 ? 1.0 - rss / tss : 0.0;
    }
    return OutcomeModel(spec.family, MeanStructure::from_linear(spec.linear),
                        kappa, std::max(sigma2, 1e-15));
  }

  // Bernoulli: Newton on the logistic log-likelihood
  const double ymin = sub.y.minCoeff(), ymax = sub.y.maxCoeff();
  if (ymin == ymax)
    throw FitError("logistic MLE: separation (all observed y identical)");
  Eigen::VectorXd kappa = Eigen::VectorXd::Zero(p);
  int it = 0;
  for (; it < 100; ++it) {
    Eigen::ArrayXd eta = (design * kappa).array();
    if (eta.abs().maxCoeff() > 30.0)
      throw FitError("logistic MLE: separation (diverging linear predictor)");
    Eigen::ArrayXd prob = 1.0 / (1.0 + (-eta).exp());
    Eigen::VectorXd grad =
        design.transpose() * (sub.y.array() - prob).matrix();
    Eigen::MatrixXd hess = design.transpose() *
                           (prob * (1.0 - prob)).matrix().asDiagonal() *
                           design;
    Eigen::VectorXd step = hess.ldlt().solve(grad);
    kappa += step;
    if (grad.lpNorm<Eigen::Infinity>() < 1e-10 &&
        step.lpNorm<Eigen::Infinity>() < 1e-10)
      break;
  }
  if (it >= 100) throw FitError("logistic MLE: no convergence");
  if (diag) diag->iterations = it;
  return OutcomeModel(spec.family, MeanStructure::from_linear(spec.linear),
                      kappa, 1.0);
}

Eigen::VectorXd score_s1(const ResponseModel& response,
                         const Eigen::VectorXd& u, double y) {
  const double my = apply_m(response.m_transform(), y);
  const double t = response.h_value(u) + response.g_value(u) * my;
  const double factor = response.link().score_factor(t);
  const Eigen::RowVectorXd bh = response.h_basis().row(u, Eigen::VectorXd());
  const Eigen::RowVectorXd bg = response.g_basis().row(u, Eigen::VectorXd());
  Eigen::VectorXd out(response.n_params());
  out.head(bh.size()) = factor * bh.transpose();
  out.tail(bg.size()) = factor * my * bg.transpose();
  return out;
}

void ImputationSet::fill_response_probs(const ResponseModel& response,
                                        const Dataset& data) {
  response_probs.resize(draws.rows(), draws.cols());
  for (Eigen::Index k = 0; k < draws.rows(); ++k) {
    const Eigen::VectorXd ui = data.u.row(rows[k]);
    for (Eigen::Index j = 0; j < draws.cols(); ++j)
      response_probs(k, j) = response.response_prob(ui, draws(k, j));
  }
}

ImputationSet draw_imputations(const Dataset& data, const OutcomeModel& outcome,
                               int M, RngStream& rng) {
  if (M < 1) throw DomainError("fractional imputation needs M >= 1");
  ImputationSet set;
  set.rows = data.missing_rows();
  const auto n_mis = static_cast<int>(set.rows.size());
  set.draws.resize(n_mis, M);
  for (int k = 0; k < n_mis; ++k) {
    const int i = set.rows[k];
    const Eigen::VectorXd ui = data.u.row(i);
    const Eigen::VectorXd zi = data.z.cols() ? Eigen::VectorXd(data.z.row(i))
                                             : Eigen::VectorXd();
    for (int j = 0; j < M; ++j) set.draws(k, j) = outcome.draw(ui, zi, rng);
  }
  return set;
}

MeanScoreSystem::MeanScoreSystem(const Dataset& data,
                                 const OutcomeModel& outcome,
                                 const ResponseModel& skeleton, S0Method method,
                                 int fi_draws, RngStream* rng, int gh_nodes)
    : link_(skeleton.link()),
      m_(skeleton.m_transform()),
      n_params_(skeleton.n_params()),
      p_h_(static_cast<int>(skeleton.alpha().size())),
      p_g_(static_cast<int>(skeleton.beta().size())) {
  const auto obs = data.observed_rows();
  mis_rows_ = data.missing_rows();
  const auto n_obs = static_cast<int>(obs.size());
  const auto n_mis = static_cast<int>(mis_rows_.size());

  const Eigen::MatrixXd bh_all =
      skeleton.h_basis().design(data.u, empty_z(data.n()));
  const Eigen::MatrixXd bg_all =
      skeleton.g_basis().design(data.u, empty_z(data.n()));

  bh_obs_.resize(n_obs, p_h_);
  bg_obs_.resize(n_obs, p_g_);
  my_obs_.resize(n_obs);
  for (int k = 0; k < n_obs; ++k) {
    bh_obs_.row(k) = bh_all.row(obs[k]);
    bg_obs_.row(k) = bg_all.row(obs[k]);
    my_obs_(k) = apply_m(m_, data.y(obs[k]));
  }

  bh_mis_.resize(n_mis, p_h_);
  bg_mis_.resize(n_mis, p_g_);
  for (int k = 0; k < n_mis; ++k) {
    bh_mis_.row(k) = bh_all.row(mis_rows_[k]);
    bg_mis_.row(k) = bg_all.row(mis_rows_[k]);
  }
  if (n_mis == 0) return;

  if (method == S0Method::FractionalImputation) {
    if (!rng)
      throw DomainError("fractional imputation requires an RNG stream");
    const ImputationSet set = draw_imputations(data, outcome, fi_draws, *rng);
    y_nodes_ = set.draws;
    masses_ = Eigen::MatrixXd::Constant(n_mis, fi_draws, 1.0 / fi_draws);
    return;
  }

  if (outcome.family() == OutcomeFamily::Bernoulli) {
    y_nodes_.resize(n_mis, 2);
    masses_.resize(n_mis, 2);
    for (int k = 0; k < n_mis; ++k) {
      const int i = mis_rows_[k];
      const Eigen::VectorXd ui = data.u.row(i);
      const Eigen::VectorXd zi = data.z.cols()
                                     ? Eigen::VectorXd(data.z.row(i))
                                     : Eigen::VectorXd();
      const double p = outcome.mean(ui, zi);
      y_nodes_(k, 0) = 0.0;
      y_nodes_(k, 1) = 1.0;
      masses_(k, 0) = 1.0 - p;
      masses_(k, 1) = p;
    }
    return;
  }

  // Normal outcome: shared Gauss-Hermite nodes shifted per-row by the
  // fitted mean; probability masses are the normalized GH weights.
  const GaussRule& rule = gauss_hermite(gh_nodes);
  const double scale = std::sqrt(2.0 * outcome.sigma2());
  Eigen::MatrixXd u_mis(n_mis, data.p_u()), z_mis(n_mis, data.p_z());
  for (int k = 0; k < n_mis; ++k) {
    u_mis.row(k) = data.u.row(mis_rows_[k]);
    if (data.p_z()) z_mis.row(k) = data.z.row(mis_rows_[k]);
  }
  const Eigen::ArrayXd mu = outcome.means(u_mis, z_mis);
  y_nodes_.resize(n_mis, gh_nodes);
  masses_.resize(n_mis, gh_nodes);
  const Eigen::ArrayXd w = rule.weights / kSqrtPi;
  for (int j = 0; j < gh_nodes; ++j) {
    y_nodes_.col(j) = (mu + scale * rule.nodes(j)).matrix();
    masses_.col(j).setConstant(w(j));
  }

  // t_ij = (h_i + beta mu_i) + beta c_j factorizes exp(-t) into an outer
  // product when g is the constant beta, skipping the per-entry exp
  const LinearBasis& g = skeleton.g_basis();
  if (link_.kind() == LinkKind::Logistic && p_g_ == 1 && g.intercept &&
      g.u_cols.empty()) {
    fast_logistic_ = true;
    mu_mis_ = mu;
    node_offset_ = scale * rule.nodes;
    node_mass_ = w;
  }
}

Eigen::VectorXd MeanScoreSystem::operator()(const Eigen::VectorXd& phi) const {
  const Eigen::VectorXd alpha = phi.head(p_h_);
  const Eigen::VectorXd beta = phi.tail(p_g_);
  Eigen::VectorXd out = Eigen::VectorXd::Zero(n_params_);

  const Eigen::ArrayXd t_obs =
      (bh_obs_ * alpha).array() + (bg_obs_ * beta).array() * my_obs_;
  const Eigen::ArrayXd f_obs = link_.score_factor(t_obs);
  out.head(p_h_) = bh_obs_.transpose() * f_obs.matrix();
  out.tail(p_g_) = bg_obs_.transpose() * (f_obs * my_obs_).matrix();

  const auto n_mis = static_cast<int>(mis_rows_.size());
  if (n_mis == 0) return out;

  Eigen::ArrayXd den(n_mis), num_h(n_mis), num_g(n_mis);
  if (fast_logistic_) {
    const double b = beta(0);
    const Eigen::ArrayXd row_exp =
        (-(bh_mis_ * alpha).array() - b * mu_mis_).exp();
    const Eigen::ArrayXd col_exp = (-b * node_offset_).exp();
    // E_ij = exp(-t_ij); 1/Psi - 1 = E, score factor = E/(1+E)
    work_e_ = (row_exp.matrix() * col_exp.matrix().transpose()).array();
    work_f_ = work_e_ / (1.0 + work_e_);
    den = row_exp * (node_mass_ * col_exp).sum();
    num_h = (work_f_.rowwise() * node_mass_.transpose()).rowwise().sum();
    num_g = ((work_f_ * y_nodes_.array()).rowwise() *
             node_mass_.transpose())
                .rowwise()
                .sum();
  } else {
    const Eigen::ArrayXd h_mis = (bh_mis_ * alpha).array();
    const Eigen::ArrayXd g_mis = (bg_mis_ * beta).array();
    // t_ij = h_i + g_i * y_ij  (m is the identity on y nodes)
    Eigen::ArrayXXd t =
        (y_nodes_.array().colwise() * g_mis).colwise() + h_mis;
    const Eigen::ArrayXXd prob = link_.cdf(t);
    const Eigen::ArrayXXd factor = link_.score_factor(t);
    den = ((1.0 / prob - 1.0) * masses_.array()).rowwise().sum();
    num_h = (factor * masses_.array()).rowwise().sum();
    num_g = (factor * y_nodes_.array() * masses_.array()).rowwise().sum();
  }
  if ((den < 1e-12).any())
    throw DomainError(
        "mean score: degenerate missingness denominator (response "
        "probability ~ 1 for a nonrespondent)");

  out.head(p_h_) -= bh_mis_.transpose() * (num_h / den).matrix();
  out.tail(p_g_) -= bg_mis_.transpose() * (num_g / den).matrix();
  return out;
}

Eigen::VectorXd MeanScoreSystem::s0_row(int mis_index,
                                        const Eigen::VectorXd& phi) const {
  const Eigen::VectorXd alpha = phi.head(p_h_);
  const Eigen::VectorXd beta = phi.tail(p_g_);
  const double h = bh_mis_.row(mis_index).dot(alpha);
  const double g = bg_mis_.row(mis_index).dot(beta);
  const Eigen::ArrayXd t = g * y_nodes_.row(mis_index).array() + h;
  const Eigen::ArrayXd prob = link_.cdf(t);
  const Eigen::ArrayXd factor = link_.score_factor(t);
  const Eigen::ArrayXd mass = masses_.row(mis_index).array();
  const double den = ((1.0 / prob - 1.0) * mass).sum();
  if (den < 1e-12)
    throw DomainError("s0: degenerate missingness denominator");
  Eigen::VectorXd out(n_params_);
  out.head(p_h_) =
      -((factor * mass).sum() / den) * bh_mis_.row(mis_index).transpose();
  out.tail(p_g_) =
      -((factor * y_nodes_.row(mis_index).array().transpose() * mass).sum() /
        den) *
      bg_mis_.row(mis_index).transpose();
  return out;
}

Eigen::VectorXd score_s0(const ResponseModel& response,
                         const OutcomeModel& outcome, const Eigen::VectorXd& u,
                         const Eigen::VectorXd& z, S0Method method,
                         int fi_draws, RngStream* rng) {
  const int p = response.n_params();
  Eigen::VectorXd num = Eigen::VectorXd::Zero(p);
  double den = 0.0;

  if (method == S0Method::FractionalImputation) {
    if (!rng) throw DomainError("fractional imputation requires an RNG stream");
    for (int j = 0; j < fi_draws; ++j) {
      const double y = outcome.draw(u, z, *rng);
      num += score_s1(response, u, y);
      den += 1.0 / response.response_prob(u, y) - 1.0;
    }
    num /= fi_draws;
    den /= fi_draws;
  } else {
    const QuadratureRule rule = default_rule_for(
        outcome,
        response.link().kind() == LinkKind::Cauchy ||
            response.link().kind() == LinkKind::StudentT,
        u, z);
    for (int c = 0; c < p; ++c) {
      num(c) = integrate_over_y(
          [&](double y) { return score_s1(response, u, y)(c); }, outcome, u, z,
          rule);
    }
    den = integrate_over_y(
        [&](double y) { return 1.0 / response.response_prob(u, y) - 1.0; },
        outcome, u, z, rule);
  }
  if (den < 1e-12)
    throw DomainError("s0: degenerate missingness denominator");
  return -num / den;
}

PhiFit solve_mean_score(const Dataset& data, const OutcomeModel& outcome,
                        const ResponseModel& skeleton,
                        const MeanScoreOptions& opts, RngStream& rng) {
  PhiFit fit;
  if (data.n_obs() == data.n()) {
    // no nonrespondents: the mean score carries no information about beta
    fit.phi = opts.start ? *opts.start
                         : Eigen::VectorXd::Zero(skeleton.n_params());
    fit.degenerate_missingness = true;
    return fit;
  }

  Eigen::VectorXd start;
  if (opts.start) {
    start = *opts.start;
  } else {
    start = Eigen::VectorXd::Zero(skeleton.n_params());
    start.head(skeleton.alpha().size()) = fit_delta_regression(data, skeleton);
  }

  MeanScoreSystem sys(data, outcome, skeleton, opts.method, opts.fi_draws,
                      &rng);
  const double n = data.n();
  VectorFn F = [&](const Eigen::VectorXd& phi) {
    return Eigen::VectorXd(sys(phi) / n);
  };

  SolveOptions sopts;
  sopts.tol = opts.tol_per_n;
  sopts.max_iter = opts.max_iter;

  SolveResult best;
  best.residual_inf = std::numeric_limits<double>::infinity();
  Eigen::VectorXd x0 = start;
  for (int attempt = 0; attempt <= opts.jitter_restarts; ++attempt) {
    SolveResult res;
    try {
      res = solve_nonlinear_system(F, x0, sopts);
    } catch (const std::exception&) {
      res.converged = false;
      res.residual_inf = std::numeric_limits<double>::infinity();
      res.x = x0;
    }
    if (res.converged || res.residual_inf < best.residual_inf) best = res;
    if (best.converged) break;
    fit.restarts = attempt + 1;
    x0 = start;
    for (Eigen::Index j = 0; j < x0.size(); ++j) x0(j) += 0.5 * rng.normal();
  }

  fit.phi = best.x;
  fit.converged = best.converged;
  fit.residual_inf = best.residual_inf;
  fit.iterations = best.iterations;
  return fit;
}

IpwResult ipw_mean(const Dataset& data, const ResponseModel& response,
                   bool hajek) {
  IpwResult res;
  double sum = 0.0, wsum = 0.0;
  for (int i = 0; i < data.n(); ++i) {
    if (!data.delta[i]) continue;
    const Eigen::VectorXd ui = data.u.row(i);
    const double prob = response.response_prob(ui, data.y(i));
    res.min_prob = std::min(res.min_prob, prob);
    if (prob < 1e-12) {
      res.extreme_weights = true;
      res.flagged_rows.push_back(i);
      continue;  // excluded from the sums, reported to the caller
    }
    sum += data.y(i) / prob;
    wsum += 1.0 / prob;
  }
  res.mean = hajek ? sum / wsum : sum / data.n();
  return res;
}

PipelineEstimate run_pipeline(const Dataset& data, const OutcomeSpec& ospec,
                              const ResponseModel& response_skeleton,
                              const PipelineOptions& opts, RngStream& rng,
                              const Eigen::VectorXd* warm_start) {
  PipelineEstimate est;
  const OutcomeModel outcome = fit_outcome_mle(data, ospec);
  est.gamma = outcome.gamma();

  MeanScoreOptions mopts;
  mopts.method = opts.method;
  mopts.fi_draws = opts.fi_draws;
  mopts.tol_per_n = opts.tol_per_n;
  if (warm_start) mopts.start = *warm_start;
  const PhiFit pfit =
      solve_mean_score(data, outcome, response_skeleton, mopts, rng);
  if (pfit.degenerate_missingness)
    throw FitError("pipeline: no nonrespondents, beta is not identified");
  if (!pfit.converged)
    throw NonConvergenceError("mean score did not converge",
                              pfit.residual_inf);
  est.phi = pfit.phi;
  est.converged = true;
  est.residual_inf = pfit.residual_inf;
  est.iterations = pfit.iterations;

  const ResponseModel fitted = response_skeleton.with_phi(pfit.phi);
  est.y_mean = ipw_mean(data, fitted, opts.hajek).mean;
  return est;
}

BootstrapResult bootstrap_pipeline(const Dataset& data, const PipelineFn& fn,
                                   int B, std::uint64_t seed) {
  if (B < 2) throw DomainError("bootstrap needs B >= 2");
  BootstrapResult out;
  out.B = B;
  std::vector<Eigen::VectorXd> rows;
  rows.reserve(B);

  for (int b = 0; b < B; ++b) {
    RngStream rng(seed, static_cast<std::uint64_t>(b) + 1);
    const Dataset resampled = data.subset(rng.resample_indices(data.n()));
    try {
      Eigen::VectorXd row = fn(resampled, rng);
      if (!rows.empty() && row.size() != rows.front().size())
        throw DomainError("bootstrap pipeline returned ragged estimates");
      rows.push_back(std::move(row));
    } catch (const std::exception&) {
      ++out.failures;
    }
  }
  if (rows.size() < 2)
    throw NonConvergenceError("bootstrap: fewer than 2 replicates succeeded",
                              0.0);
  out.unstable = out.failures > B / 5;

  const auto m = static_cast<int>(rows.size());
  const auto dim = static_cast<int>(rows.front().size());
  Eigen::MatrixXd all(m, dim);
  for (int i = 0; i < m; ++i) all.row(i) = rows[i];

  out.se.resize(dim);
  out.percentile_ci.resize(dim, 2);
  for (int j = 0; j < dim; ++j) {
    const double mean = all.col(j).mean();
    out.se(j) =
        std::sqrt((all.col(j).array() - mean).square().sum() / (m - 1));
    std::vector<double> sorted(all.col(j).data(), all.col(j).data() + m);
    std::sort(sorted.begin(), sorted.end());
    auto quantile = [&](double q) {
      const double pos = q * (m - 1);
      const auto lo = static_cast<int>(pos);
      const double frac = pos - lo;
      return lo + 1 < m ? sorted[lo] + frac * (sorted[lo + 1] - sorted[lo])
                        : sorted[lo];
    };
    out.percentile_ci(j, 0) = quantile(0.025);
    out.percentile_ci(j, 1) = quantile(0.975);
  }
  return out;
}

Eigen::VectorXd backtransform_phi(const Eigen::VectorXd& phi_std,
                                  const Standardization& rec,
                                  const ResponseModel& skeleton) {
  const LinearBasis& h = skeleton.h_basis();
  const LinearBasis& g = skeleton.g_basis();
  if (!h.intercept || !g.intercept || !g.u_cols.empty())
    throw DomainError(
        "back-transform requires intercepted h and constant g");
  const auto p_h = h.dim();
  Eigen::VectorXd out = phi_std;
  const double beta_std = phi_std(p_h);
  double shift = 0.0;
  for (std::size_t k = 0; k < h.u_cols.size(); ++k) {
    const int j = h.u_cols[k];
    const double a = phi_std(1 + static_cast<int>(k));
    out(1 + static_cast<int>(k)) = a / rec.u_sd(j);
    shift += a * rec.u_mean(j) / rec.u_sd(j);
  }
  out(0) = phi_std(0) - shift - beta_std * rec.y_mean / rec.y_sd;
  out(p_h) = beta_std / rec.y_sd;
  return out;
}

Eigen::VectorXd backtransform_gamma(const Eigen::VectorXd& gamma_std,
                                    const Standardization& rec,
                                    const OutcomeSpec& ospec) {
  if (ospec.spline)
    throw DomainError("back-transform applies to linear outcome models only");
  const LinearBasis& b = ospec.linear;
  if (!b.intercept)
    throw DomainError("back-transform requires an intercepted outcome basis");
  const bool normal = ospec.family == OutcomeFamily::Normal;
  const double ys = normal ? rec.y_sd : 1.0;
  const double ym = normal ? rec.y_mean : 0.0;
  Eigen::VectorXd out = gamma_std;
  double shift = 0.0;
  int k = 1;
  for (int j : b.u_cols) {
    out(k) = ys * gamma_std(k) / rec.u_sd(j);
    shift += gamma_std(k) * rec.u_mean(j) / rec.u_sd(j);
    ++k;
  }
  for (int j : b.z_cols) {
    out(k) = ys * gamma_std(k) / rec.z_sd(j);
    shift += gamma_std(k) * rec.z_mean(j) / rec.z_sd(j);
    ++k;
  }
  out(0) = ym + ys * (gamma_std(0) - shift);
  if (normal) out(out.size() - 1) = ys * ys * gamma_std(gamma_std.size() - 1);
  return out;
}

BootstrapResult bootstrap(const Dataset& data, const OutcomeSpec& ospec,
                          const ResponseModel& response_skeleton,
                          const PipelineOptions& opts, int B,
                          std::uint64_t seed, const PipelineEstimate* center) {
  const bool keep_gamma = !ospec.spline;
  PipelineFn fn = [&](const Dataset& resampled, RngStream& rng) {
    const PipelineEstimate est =
        run_pipeline(resampled, ospec, response_skeleton, opts, rng,
                     center ? &center->phi : nullptr);
    Eigen::VectorXd row((keep_gamma ? est.gamma.size() : 0) + est.phi.size() +
                        1);
    if (keep_gamma) {
      row << est.gamma, est.phi, est.y_mean;
    } else {
      row << est.phi, est.y_mean;
    }
    return row;
  };
  return bootstrap_pipeline(data, fn, B, seed);
}

}  // namespace mnar
