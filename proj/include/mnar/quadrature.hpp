#pragma once

#include <Eigen/Core>
#include <functional>
#include <vector>

namespace mnar {

class OutcomeModel;

/// Nodes and weights for integration of f against a weight function.
struct GaussRule {
  Eigen::ArrayXd nodes;
  Eigen::ArrayXd weights;
};

/// Gauss-Hermite rule for weight exp(-x^2) on R (Golub-Welsch).
/// sum w_i f(x_i) integrates polynomials of degree <= 2n-1 exactly;
/// int f(y) N(y; mu, s2) dy = sum w_i f(mu + sqrt(2 s2) x_i) / sqrt(pi).
const GaussRule& gauss_hermite(int n);

/// Gauss-Legendre rule on [-1, 1].
const GaussRule& gauss_legendre(int n);

enum class QuadKind { GaussHermite, AdaptiveTruncated, ExactDiscrete };

struct QuadratureRule {
  QuadKind kind = QuadKind::GaussHermite;
  int n_nodes = 60;
  double lo = 0.0, hi = 0.0, tol = 1e-10;  // AdaptiveTruncated
  std::vector<double> support;             // ExactDiscrete

  static QuadratureRule gauss_hermite_rule(int n = 60) {
    QuadratureRule r;
    r.kind = QuadKind::GaussHermite;
    r.n_nodes = n;
    return r;
  }
  static QuadratureRule adaptive_truncated(double lo, double hi,
                                           double tol = 1e-10) {
    QuadratureRule r;
    r.kind = QuadKind::AdaptiveTruncated;
    r.lo = lo;
    r.hi = hi;
    r.tol = tol;
    return r;
  }
  static QuadratureRule exact_discrete(std::vector<double> support) {
    QuadratureRule r;
    r.kind = QuadKind::ExactDiscrete;
    r.support = std::move(support);
    return r;
  }
};

/// int f(y) N(y; mu, sigma2) dy by Gauss-Hermite.
double integrate_normal(const std::function<double(double)>& f, double mu,
                        double sigma2, int n_nodes = 60);

/// Adaptive Simpson of g on [lo, hi] to absolute tolerance tol.
/// Throws IntegrationError on a non-finite evaluation.
double integrate_adaptive(const std::function<double(double)>& g, double lo,
                          double hi, double tol = 1e-10);

/// E[f(y)] under the respondents' outcome law at covariate row x.
/// Gauss-Hermite and AdaptiveTruncated apply to Normal outcomes;
/// ExactDiscrete sums the outcome mass over the rule's support.
double integrate_over_y(const std::function<double(double)>& f,
                        const OutcomeModel& outcome,
                        const Eigen::VectorXd& x_u, const Eigen::VectorXd& x_z,
                        const QuadratureRule& rule);

/// Default rule for an outcome/link pairing: exact two-point sums for
/// Bernoulli outcomes, GH(60) for Normal ones, and a wide truncated adaptive
/// rule when the reciprocal link has polynomial tail growth (Student-t
/// family links), where the truncation error at mu +- 12 sigma is below
/// any tolerance used here.
QuadratureRule default_rule_for(const OutcomeModel& outcome,
                                bool heavy_reciprocal_tail,
                                const Eigen::VectorXd& x_u,
                                const Eigen::VectorXd& x_z);

}  // namespace mnar
