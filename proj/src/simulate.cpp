#include "mnar/simulate.hpp"

#include <atomic>
#include <cmath>
#include <limits>
#include <mutex>
#include <thread>

#include "mnar/config.hpp"
#include "mnar/errors.hpp"
#include "mnar/identify.hpp"
#include "mnar/quadrature.hpp"

namespace mnar {

namespace {

constexpr double kSqrtPi = 1.77245385090551602730;
constexpr double kTwoPi = 6.28318530717958647692;

bool heavy_link(const LinkFunction& link) {
  return link.kind() == LinkKind::Cauchy || link.kind() == LinkKind::StudentT;
}

// Outer quadrature over one covariate law: points and probability weights.
struct LawGrid {
  Eigen::ArrayXd points;
  Eigen::ArrayXd weights;
};

LawGrid u_grid(const ScenarioSpec& spec, int n_nodes = 80) {
  LawGrid g;
  switch (spec.u_law) {
    case ScenarioSpec::ULaw::Normal01: {
      const GaussRule& r = gauss_hermite(n_nodes);
      g.points = std::sqrt(2.0) * r.nodes;
      g.weights = r.weights / kSqrtPi;
      break;
    }
    case ScenarioSpec::ULaw::UniformM11: {
      const GaussRule& r = gauss_legendre(n_nodes);
      g.points = r.nodes;
      g.weights = 0.5 * r.weights;  // density 1/2 on [-1, 1]
      break;
    }
    case ScenarioSpec::ULaw::Degenerate:
      g.points = Eigen::ArrayXd::Constant(1, spec.u_value);
      g.weights = Eigen::ArrayXd::Ones(1);
      break;
  }
  return g;
}

LawGrid z_grid(const ScenarioSpec& spec, int n_nodes = 80) {
  LawGrid g;
  switch (spec.z_law) {
    case ScenarioSpec::ZLaw::Bernoulli:
      g.points = Eigen::ArrayXd(2);
      g.weights = Eigen::ArrayXd(2);
      g.points << 0.0, 1.0;
      g.weights << 1.0 - spec.z_p, spec.z_p;
      break;
    case ScenarioSpec::ZLaw::Normal01: {
      const GaussRule& r = gauss_hermite(n_nodes);
      g.points = std::sqrt(2.0) * r.nodes;
      g.weights = r.weights / kSqrtPi;
      break;
    }
    case ScenarioSpec::ZLaw::Degenerate:
      g.points = Eigen::ArrayXd::Constant(1, spec.z_value);
      g.weights = Eigen::ArrayXd::Ones(1);
      break;
  }
  return g;
}

// Inner moments at one covariate point: D = int p1/pi dy and
// Dy = int y p1/pi dy, with the rule choice following the link tails.
// need_dy = false skips the second integral (the generator only needs D).
struct InnerMoments {
  double d = 0.0;
  double dy = 0.0;
};

InnerMoments inner_moments(const ScenarioSpec& spec, double u, double z,
                           bool need_dy = true, double tol = 1e-12) {
  InnerMoments m;
  const double h = spec.alpha(0) + spec.alpha(1) * u;
  auto inv_pi = [&](double y) {
    return 1.0 / spec.link.cdf(h + spec.beta * y);
  };
  if (spec.family == OutcomeFamily::Bernoulli) {
    const double p = spec.mean_fn(u, z);
    const double w0 = (1.0 - p) * inv_pi(0.0);
    const double w1 = p * inv_pi(1.0);
    m.d = w0 + w1;
    m.dy = w1;
    return m;
  }
  const double mu = spec.mean_fn(u, z);
  const double sd = std::sqrt(spec.sigma2);
  if (heavy_link(spec.link)) {
    auto dens = [&](double y) {
      const double r = (y - mu) / sd;
      return std::exp(-0.5 * r * r) / (sd * std::sqrt(kTwoPi));
    };
    m.d = integrate_adaptive([&](double y) { return dens(y) * inv_pi(y); },
                             mu - 12.0 * sd, mu + 12.0 * sd, tol);
    if (need_dy)
      m.dy = integrate_adaptive(
          [&](double y) { return dens(y) * y * inv_pi(y); }, mu - 12.0 * sd,
          mu + 12.0 * sd, tol);
  } else {
    m.d = integrate_normal(inv_pi, mu, spec.sigma2, 100);
    if (need_dy)
      m.dy = integrate_normal([&](double y) { return y * inv_pi(y); }, mu,
                              spec.sigma2, 100);
  }
  if (!std::isfinite(m.d) || !std::isfinite(m.dy) || m.d <= 0.0)
    throw IntegrationError("non-integrable scenario denominator", u);
  return m;
}

struct PopulationSummary {
  double mean_y = 0.0;         // E[y]
  double response_rate = 0.0;  // E[P(delta=1|x)]
  double cc_mean = 0.0;        // E[y | delta=1]
};

PopulationSummary population_summary(const ScenarioSpec& spec) {
  const LawGrid gu = u_grid(spec);
  const LawGrid gz = z_grid(spec);
  PopulationSummary s;
  double cc_num = 0.0;
  for (Eigen::Index a = 0; a < gu.points.size(); ++a) {
    for (Eigen::Index b = 0; b < gz.points.size(); ++b) {
      const double u = gu.points(a), z = gz.points(b);
      const double w = gu.weights(a) * gz.weights(b);
      const InnerMoments m = inner_moments(spec, u, z);
      const double p_respond = 1.0 / m.d;
      const double mu1 = spec.mean_fn(u, z);  // E[y | x, delta=1]
      s.mean_y += w * (m.dy / m.d);
      s.response_rate += w * p_respond;
      cc_num += w * p_respond * mu1;
    }
  }
  s.cc_mean = cc_num / s.response_rate;
  return s;
}

}  // namespace

ResponseModel ScenarioSpec::response_truth() const {
  return ResponseModel::standard(link, alpha, beta, 1);
}

ResponseModel ScenarioSpec::response_skeleton() const {
  return ResponseModel::standard(link, Eigen::Vector2d::Zero(), 0.0, 1);
}

ScenarioSpec scenario_s1(double kappa2) {
  ScenarioSpec s;
  s.name = "S1";
  s.u_law = ScenarioSpec::ULaw::Normal01;
  s.z_law = ScenarioSpec::ZLaw::Bernoulli;
  s.z_p = 0.5;
  s.family = OutcomeFamily::Normal;
  s.kappa2 = kappa2;
  s.kappa_true.resize(3);
  s.kappa_true << 0.3, 0.4, kappa2;
  s.mean_fn = [kappa2](double u, double z) {
    return 0.3 + 0.4 * u + kappa2 * z;
  };
  s.sigma2 = 0.5;
  s.link = LinkFunction::logistic();
  s.alpha << 0.7, -0.2;
  s.beta = 0.29;
  s.estimation_spec.family = OutcomeFamily::Normal;
  s.estimation_spec.linear = LinearBasis::intercept_and_all(1, 1);
  return s;
}

ScenarioSpec scenario_s2(double kappa2) {
  ScenarioSpec s;
  s.name = "S2";
  s.u_law = ScenarioSpec::ULaw::UniformM11;
  s.z_law = ScenarioSpec::ZLaw::Bernoulli;
  s.z_p = 0.7;
  s.family = OutcomeFamily::Normal;
  s.kappa2 = kappa2;
  s.kappa_true.resize(3);
  s.kappa_true << -0.36, 0.59, kappa2;
  s.mean_fn = [kappa2](double u, double z) {
    return -0.36 + 0.59 * u + kappa2 * z;
  };
  s.sigma2 = 0.5;
  s.link = LinkFunction::cauchy();
  s.alpha << 0.24, -0.1;
  s.beta = 0.42;
  s.estimation_spec.family = OutcomeFamily::Normal;
  s.estimation_spec.linear = LinearBasis::intercept_and_all(1, 1);
  return s;
}

ScenarioSpec scenario_s3() {
  ScenarioSpec s;
  s.name = "S3";
  s.u_law = ScenarioSpec::ULaw::Normal01;
  s.z_law = ScenarioSpec::ZLaw::Normal01;
  s.family = OutcomeFamily::Bernoulli;
  s.kappa_true.resize(3);
  s.kappa_true << -0.21, 3.8, 1.0;
  s.mean_fn = [](double u, double z) {
    return 1.0 / (1.0 + std::exp(0.21 - 3.8 * u - 1.0 * z));
  };
  s.link = LinkFunction::probit();
  s.alpha << 0.4, 0.39;
  s.beta = 0.3;
  s.estimation_spec.family = OutcomeFamily::Bernoulli;
  s.estimation_spec.linear = LinearBasis::intercept_and_all(1, 1);
  return s;
}

ScenarioSpec scenario_s4(const LinkFunction& link) {
  ScenarioSpec s;
  s.name = "S4";
  s.u_law = ScenarioSpec::ULaw::UniformM11;
  s.z_law = ScenarioSpec::ZLaw::Bernoulli;
  s.z_p = 0.5;
  s.family = OutcomeFamily::Normal;
  s.mean_fn = [](double u, double z) {
    return z + std::cos(kTwoPi * u) + std::exp(z + u);
  };
  s.sigma2 = 0.25;
  s.link = link;
  s.alpha << 0.1, -0.2;
  s.beta = 0.3;
  s.estimation_spec.family = OutcomeFamily::Normal;
  s.estimation_spec.spline = true;
  s.estimation_spec.spline_u_col = 0;
  s.estimation_spec.spline_z_col = 0;
  return s;
}

ScenarioSpec scenario_by_name(const std::string& name, double kappa2,
                              const std::string& s4_link) {
  if (name == "S1" || name == "s1") return scenario_s1(kappa2);
  if (name == "S2" || name == "s2") return scenario_s2(kappa2);
  if (name == "S3" || name == "s3") return scenario_s3();
  if (name == "S4" || name == "s4")
    return scenario_s4(LinkFunction::parse(s4_link));
  throw ConfigError("unknown scenario: " + name);
}

ScenarioSpec scenario_from_config(const KeyValueConfig& cfg) {
  ScenarioSpec s;
  s.name = cfg.get_or("scenario.name", "custom");
  const std::string ulaw = cfg.get_or("scenario.u", "normal");
  if (ulaw == "normal") {
    s.u_law = ScenarioSpec::ULaw::Normal01;
  } else if (ulaw == "uniform") {
    s.u_law = ScenarioSpec::ULaw::UniformM11;
  } else {
    throw ConfigError("scenario.u: expected normal|uniform");
  }
  const std::string zlaw = cfg.get_or("scenario.z", "bernoulli");
  if (zlaw == "bernoulli") {
    s.z_law = ScenarioSpec::ZLaw::Bernoulli;
    s.z_p = cfg.has("scenario.z.p") ? cfg.get_double("scenario.z.p") : 0.5;
  } else if (zlaw == "normal") {
    s.z_law = ScenarioSpec::ZLaw::Normal01;
  } else {
    throw ConfigError("scenario.z: expected bernoulli|normal");
  }

  const OutcomeModel outcome = outcome_model_from_config(cfg, 1, 1);
  const Eigen::VectorXd kappa = outcome.kappa();
  if (outcome.mean_structure().kind != MeanStructure::Kind::Linear ||
      kappa.size() != 3)
    throw ConfigError(
        "custom scenarios use a linear intercept,u0,z0 outcome mean");
  s.family = outcome.family();
  s.kappa_true = kappa;
  if (s.family == OutcomeFamily::Normal) {
    s.mean_fn = [kappa](double u, double z) {
      return kappa(0) + kappa(1) * u + kappa(2) * z;
    };
    s.sigma2 = outcome.sigma2();
  } else {
    s.mean_fn = [kappa](double u, double z) {
      return 1.0 / (1.0 + std::exp(-kappa(0) - kappa(1) * u - kappa(2) * z));
    };
  }
  s.kappa2 = kappa(2);

  const ResponseModel response = response_model_from_config(cfg, 1);
  if (response.alpha().size() != 2 || response.beta().size() != 1)
    throw ConfigError("custom scenarios use response index alpha0 + alpha1 u");
  s.link = response.link();
  s.alpha << response.alpha()(0), response.alpha()(1);
  s.beta = response.beta()(0);
  s.estimation_spec.family = s.family;
  s.estimation_spec.linear = LinearBasis::intercept_and_all(1, 1);
  return s;
}

Dataset generate(const ScenarioSpec& spec, int n, std::uint64_t seed,
                 std::uint64_t stream_id) {
  if (n < 1) throw DomainError("generate: n must be >= 1");
  if (spec.family == OutcomeFamily::Normal &&
      !check_tail_condition(spec.link).holds)
    throw IntegrationError(
        "scenario is not integrable: the link violates the tail condition "
        "for a Normal outcome",
        0.0);
  RngStream rng(seed, stream_id);
  Dataset data;
  data.u.resize(n, 1);
  data.z.resize(n, 1);
  data.y.resize(n);
  data.delta.assign(n, 0);
  data.u_names = {"u"};
  data.z_names = {"z"};

  const double sd = std::sqrt(spec.sigma2);
  for (int i = 0; i < n; ++i) {
    double u = 0.0, z = 0.0;
    switch (spec.u_law) {
      case ScenarioSpec::ULaw::Normal01: u = rng.normal(); break;
      case ScenarioSpec::ULaw::UniformM11: u = rng.uniform(-1.0, 1.0); break;
      case ScenarioSpec::ULaw::Degenerate: u = spec.u_value; break;
    }
    switch (spec.z_law) {
      case ScenarioSpec::ZLaw::Bernoulli:
        z = rng.bernoulli(spec.z_p) ? 1.0 : 0.0;
        break;
      case ScenarioSpec::ZLaw::Normal01: z = rng.normal(); break;
      case ScenarioSpec::ZLaw::Degenerate: z = spec.z_value; break;
    }
    data.u(i, 0) = u;
    data.z(i, 0) = z;
    const double p_respond =
        1.0 / inner_moments(spec, u, z, false, 1e-10).d;
    if (rng.bernoulli(p_respond)) {
      data.delta[i] = 1;
      if (spec.family == OutcomeFamily::Normal) {
        data.y(i) = rng.normal(spec.mean_fn(u, z), sd);
      } else {
        data.y(i) = rng.bernoulli(spec.mean_fn(u, z)) ? 1.0 : 0.0;
      }
    } else {
      data.y(i) = std::numeric_limits<double>::quiet_NaN();
    }
  }
  return data;
}

double true_mean(const ScenarioSpec& spec) {
  return population_summary(spec).mean_y;
}

double true_cc_bias(const ScenarioSpec& spec) {
  const PopulationSummary s = population_summary(spec);
  return s.cc_mean - s.mean_y;
}

double true_response_rate(const ScenarioSpec& spec) {
  return population_summary(spec).response_rate;
}

double true_response_prob_at(const ScenarioSpec& spec, double u, double z) {
  return 1.0 / inner_moments(spec, u, z).d;
}

const McCell* McReport::cell(const std::string& estimand,
                             const std::string& method_name) const {
  for (const auto& c : cells)
    if (c.estimand == estimand && c.method == method_name) return &c;
  return nullptr;
}

namespace {

struct ReplicateRecord {
  bool ok = false;
  bool wild = false;
  double cc_mean = 0.0, cc_se = 0.0;
  double fi_mean = 0.0, fi_mean_se = 0.0;
  double fi_beta = 0.0, fi_beta_se = 0.0;
  bool has_se = false;
};

ReplicateRecord run_replicate(const ScenarioSpec& spec, const McConfig& cfg,
                              int r) {
  ReplicateRecord rec;
  const Dataset data =
      generate(spec, cfg.n, cfg.seed, 3 * static_cast<std::uint64_t>(r) + 1);

  const auto obs = data.observed_rows();
  Eigen::VectorXd yo(obs.size());
  for (std::size_t k = 0; k < obs.size(); ++k) yo(k) = data.y(obs[k]);
  rec.cc_mean = yo.mean();
  rec.cc_se = std::sqrt((yo.array() - rec.cc_mean).square().sum() /
                        (yo.size() - 1.0) / yo.size());

  PipelineOptions popts;
  popts.method = cfg.method;
  popts.fi_draws = cfg.fi_draws;
  popts.hajek = cfg.hajek;
  RngStream rng(cfg.seed, 3 * static_cast<std::uint64_t>(r) + 2);
  PipelineEstimate est;
  try {
    est = run_pipeline(data, spec.estimation_spec, spec.response_skeleton(),
                       popts, rng);
  } catch (const std::exception&) {
    return rec;  // counted as a failure
  }
  rec.ok = true;
  rec.fi_mean = est.y_mean;
  rec.fi_beta = est.phi(est.phi.size() - 1);
  rec.wild = std::abs(rec.fi_beta) > 3.0;  // far outside any plausible scale

  if (cfg.B >= 2) {
    const std::uint64_t boot_seed =
        cfg.seed ^ (0x517cc1b727220a95ULL * (static_cast<std::uint64_t>(r) + 1));
    try {
      const BootstrapResult boot =
          bootstrap(data, spec.estimation_spec, spec.response_skeleton(),
                    popts, cfg.B, boot_seed, &est);
      const auto dim = boot.se.size();
      rec.fi_mean_se = boot.se(dim - 1);
      rec.fi_beta_se = boot.se(dim - 2);
      rec.has_se = true;
    } catch (const std::exception&) {
      rec.has_se = false;
    }
  }
  return rec;
}

McCell aggregate_cell(const std::string& estimand, const std::string& method,
                      const Eigen::VectorXd& estimates,
                      const Eigen::VectorXd& covered, double truth) {
  McCell cell;
  cell.estimand = estimand;
  cell.method = method;
  std::vector<double> vals, cov;
  for (Eigen::Index i = 0; i < estimates.size(); ++i) {
    if (std::isfinite(estimates(i))) {
      vals.push_back(estimates(i));
      if (covered.size() == estimates.size() && std::isfinite(covered(i)))
        cov.push_back(covered(i));
    }
  }
  const auto m = static_cast<int>(vals.size());
  cell.n_replicates = m;
  if (m == 0) return cell;
  double mean = 0.0, msq = 0.0;
  for (double v : vals) mean += v;
  mean /= m;
  for (double v : vals) msq += (v - truth) * (v - truth);
  msq /= m;
  cell.bias = mean - truth;
  cell.rmse = std::sqrt(msq);
  double var = 0.0, var_sq = 0.0;
  for (double v : vals) {
    var += (v - mean) * (v - mean);
    const double sq = (v - truth) * (v - truth);
    var_sq += (sq - msq) * (sq - msq);
  }
  var /= std::max(1, m - 1);
  var_sq /= std::max(1, m - 1);
  cell.bias_mcse = std::sqrt(var / m);
  cell.rmse_mcse =
      cell.rmse > 0.0 ? std::sqrt(var_sq / m) / (2.0 * cell.rmse) : 0.0;
  if (!cov.empty() && m >= 2) {
    double c = 0.0;
    for (double v : cov) c += v;
    c /= cov.size();
    cell.coverage = 100.0 * c;
    cell.coverage_mcse = 100.0 * std::sqrt(c * (1.0 - c) / cov.size());
  }
  return cell;
}

}  // namespace

McReport run_monte_carlo(const ScenarioSpec& spec, const McConfig& cfg) {
  if (cfg.R < 1) throw DomainError("run_monte_carlo: R must be >= 1");
  McReport rep;
  rep.scenario = spec.name;
  rep.kappa2 = spec.kappa2;
  rep.n = cfg.n;
  rep.R = cfg.R;
  rep.B = cfg.B;
  rep.method =
      cfg.method == S0Method::Quadrature
          ? "quadrature"
          : "fi(" + std::to_string(cfg.fi_draws) + ")";
  rep.truth_mean = true_mean(spec);
  rep.truth_beta = spec.beta;

  std::vector<ReplicateRecord> records(cfg.R);
  std::atomic<int> next{0};
  const int n_threads =
      std::max(1, std::min(cfg.R, cfg.threads > 0
                                      ? cfg.threads
                                      : static_cast<int>(
                                            std::thread::hardware_concurrency())));
  std::exception_ptr worker_error;
  std::mutex error_mu;
  auto worker = [&]() {
    for (;;) {
      const int r = next.fetch_add(1);
      if (r >= cfg.R) return;
      try {
        records[r] = run_replicate(spec, cfg, r);
      } catch (...) {
        // structural failures (e.g. a non-integrable spec) abort the study;
        // per-replicate numerical failures were already absorbed upstream
        std::lock_guard<std::mutex> lock(error_mu);
        if (!worker_error) worker_error = std::current_exception();
        next.store(cfg.R);
        return;
      }
    }
  };
  if (n_threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(n_threads);
    for (int t = 0; t < n_threads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  if (worker_error) std::rethrow_exception(worker_error);

  const double nan = std::numeric_limits<double>::quiet_NaN();
  rep.cc_means.setConstant(cfg.R, nan);
  rep.fi_means.setConstant(cfg.R, nan);
  rep.fi_betas.setConstant(cfg.R, nan);
  rep.cc_covered.setConstant(cfg.R, nan);
  rep.fi_mean_covered.setConstant(cfg.R, nan);
  rep.fi_beta_covered.setConstant(cfg.R, nan);

  for (int r = 0; r < cfg.R; ++r) {
    const ReplicateRecord& rec = records[r];
    rep.cc_means(r) = rec.cc_mean;
    rep.cc_covered(r) =
        std::abs(rec.cc_mean - rep.truth_mean) <= 1.96 * rec.cc_se ? 1.0 : 0.0;
    if (!rec.ok) {
      ++rep.failures;
      continue;
    }
    if (rec.wild) ++rep.unstable;
    rep.fi_means(r) = rec.fi_mean;
    rep.fi_betas(r) = rec.fi_beta;
    if (rec.has_se) {
      rep.fi_mean_covered(r) =
          std::abs(rec.fi_mean - rep.truth_mean) <= 1.96 * rec.fi_mean_se
              ? 1.0
              : 0.0;
      rep.fi_beta_covered(r) =
          std::abs(rec.fi_beta - rep.truth_beta) <= 1.96 * rec.fi_beta_se
              ? 1.0
              : 0.0;
    }
  }
  rep.failure_rate = static_cast<double>(rep.failures) / cfg.R;
  rep.high_failure_rate = rep.failure_rate > 0.05;

  rep.cells.push_back(aggregate_cell(
      "E[y]", "CC", rep.cc_means,
      cfg.R >= 2 ? rep.cc_covered : Eigen::VectorXd(), rep.truth_mean));
  rep.cells.push_back(aggregate_cell(
      "E[y]", "FI", rep.fi_means,
      cfg.B >= 2 && cfg.R >= 2 ? rep.fi_mean_covered : Eigen::VectorXd(),
      rep.truth_mean));
  rep.cells.push_back(aggregate_cell(
      "beta", "FI", rep.fi_betas,
      cfg.B >= 2 && cfg.R >= 2 ? rep.fi_beta_covered : Eigen::VectorXd(),
      rep.truth_beta));
  return rep;
}

}  // namespace mnar
