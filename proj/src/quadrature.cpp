#include "mnar/quadrature.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>
#include <map>
#include <mutex>

#include "mnar/errors.hpp"
#include "mnar/models.hpp"

namespace mnar {

namespace {

constexpr double kSqrtPi = 1.77245385090551602730;

// Golub-Welsch: eigen-decomposition of the symmetric Jacobi matrix of the
// orthogonal-polynomial recurrence. Weights are mu0 * (first eigenvector
// component)^2.
GaussRule golub_welsch(const Eigen::VectorXd& offdiag, double mu0) {
  const int n = static_cast<int>(offdiag.size()) + 1;
  Eigen::MatrixXd jacobi = Eigen::MatrixXd::Zero(n, n);
  for (int k = 0; k < n - 1; ++k) {
    jacobi(k, k + 1) = offdiag(k);
    jacobi(k + 1, k) = offdiag(k);
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(jacobi);
  GaussRule rule;
  rule.nodes = es.eigenvalues().array();
  rule.weights = mu0 * es.eigenvectors().row(0).array().square();
  return rule;
}

GaussRule make_gauss_hermite(int n) {
  Eigen::VectorXd offdiag(n - 1);
  for (int k = 1; k < n; ++k) offdiag(k - 1) = std::sqrt(0.5 * k);
  return golub_welsch(offdiag, kSqrtPi);
}

GaussRule make_gauss_legendre(int n) {
  Eigen::VectorXd offdiag(n - 1);
  for (int k = 1; k < n; ++k)
    offdiag(k - 1) = k / std::sqrt(4.0 * k * k - 1.0);
  return golub_welsch(offdiag, 2.0);
}

const GaussRule& cached_rule(int n, bool hermite) {
  static std::mutex mu;
  static std::map<std::pair<int, bool>, GaussRule> cache;
  std::lock_guard<std::mutex> lock(mu);
  auto key = std::make_pair(n, hermite);
  auto it = cache.find(key);
  if (it == cache.end())
    it = cache.emplace(key, hermite ? make_gauss_hermite(n)
                                    : make_gauss_legendre(n))
             .first;
  return it->second;
}

double adaptive_simpson_rec(const std::function<double(double)>& g, double a,
                            double b, double fa, double fm, double fb,
                            double whole, double tol, int depth) {
  const double m = 0.5 * (a + b);
  const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
  const double flm = g(lm), frm = g(rm);
  if (!std::isfinite(flm)) throw IntegrationError("non-finite integrand", lm);
  if (!std::isfinite(frm)) throw IntegrationError("non-finite integrand", rm);
  const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
  const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
  const double delta = left + right - whole;
  if (depth <= 0 || std::abs(delta) <= 15.0 * tol)
    return left + right + delta / 15.0;
  return adaptive_simpson_rec(g, a, m, fa, flm, fm, left, 0.5 * tol,
                              depth - 1) +
         adaptive_simpson_rec(g, m, b, fm, frm, fb, right, 0.5 * tol,
                              depth - 1);
}

}  // namespace

const GaussRule& gauss_hermite(int n) { return cached_rule(n, true); }
const GaussRule& gauss_legendre(int n) { return cached_rule(n, false); }

double integrate_normal(const std::function<double(double)>& f, double mu,
                        double sigma2, int n_nodes) {
  const GaussRule& rule = gauss_hermite(n_nodes);
  const double scale = std::sqrt(2.0 * sigma2);
  double acc = 0.0;
  for (Eigen::Index i = 0; i < rule.nodes.size(); ++i) {
    const double y = mu + scale * rule.nodes(i);
    const double v = f(y);
    if (!std::isfinite(v)) throw IntegrationError("non-finite integrand", y);
    acc += rule.weights(i) * v;
  }
  return acc / kSqrtPi;
}

double integrate_adaptive(const std::function<double(double)>& g, double lo,
                          double hi, double tol) {
  // split at the midpoint so a kink at the centre does not stall refinement
  const double fa = g(lo), fb = g(hi), fm = g(0.5 * (lo + hi));
  if (!std::isfinite(fa)) throw IntegrationError("non-finite integrand", lo);
  if (!std::isfinite(fb)) throw IntegrationError("non-finite integrand", hi);
  if (!std::isfinite(fm))
    throw IntegrationError("non-finite integrand", 0.5 * (lo + hi));
  const double whole = (hi - lo) / 6.0 * (fa + 4.0 * fm + fb);
  return adaptive_simpson_rec(g, lo, hi, fa, fm, fb, whole, tol, 48);
}

double integrate_over_y(const std::function<double(double)>& f,
                        const OutcomeModel& outcome,
                        const Eigen::VectorXd& x_u, const Eigen::VectorXd& x_z,
                        const QuadratureRule& rule) {
  switch (rule.kind) {
    case QuadKind::ExactDiscrete: {
      double acc = 0.0;
      for (double y : rule.support) acc += outcome.density(x_u, x_z, y) * f(y);
      return acc;
    }
    case QuadKind::GaussHermite: {
      if (outcome.family() != OutcomeFamily::Normal)
        throw DomainError("Gauss-Hermite rule requires a Normal outcome");
      return integrate_normal(f, outcome.mean(x_u, x_z), outcome.sigma2(),
                              rule.n_nodes);
    }
    case QuadKind::AdaptiveTruncated: {
      auto g = [&](double y) { return outcome.density(x_u, x_z, y) * f(y); };
      return integrate_adaptive(g, rule.lo, rule.hi, rule.tol);
    }
  }
  throw DomainError("unknown quadrature rule");
}

QuadratureRule default_rule_for(const OutcomeModel& outcome,
                                bool heavy_reciprocal_tail,
                                const Eigen::VectorXd& x_u,
                                const Eigen::VectorXd& x_z) {
  if (outcome.family() == OutcomeFamily::Bernoulli)
    return QuadratureRule::exact_discrete({0.0, 1.0});
  if (heavy_reciprocal_tail) {
    const double mu = outcome.mean(x_u, x_z);
    const double sd = std::sqrt(outcome.sigma2());
    return QuadratureRule::adaptive_truncated(mu - 12.0 * sd, mu + 12.0 * sd,
                                              1e-12);
  }
  return QuadratureRule::gauss_hermite_rule(60);
}

}  // namespace mnar
