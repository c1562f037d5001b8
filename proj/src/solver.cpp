#include "mnar/solver.hpp"

#include <Eigen/Dense>
#include <cmath>

namespace mnar {

namespace {

// Forward-difference Jacobian; falls back to a backward difference when the
// perturbed point is outside F's domain.
Eigen::MatrixXd fd_jacobian(const VectorFn& F, const Eigen::VectorXd& x,
                            const Eigen::VectorXd& fx) {
  const auto n = static_cast<int>(x.size());
  const auto m = static_cast<int>(fx.size());
  Eigen::MatrixXd jac(m, n);
  Eigen::VectorXd xp = x;
  for (int j = 0; j < n; ++j) {
    const double h = 1e-7 * (1.0 + std::abs(x(j)));
    xp(j) = x(j) + h;
    bool ok = false;
    try {
      Eigen::VectorXd fp = F(xp);
      if (fp.allFinite()) {
        jac.col(j) = (fp - fx) / h;
        ok = true;
      }
    } catch (const std::exception&) {
    }
    if (!ok) {
      xp(j) = x(j) - h;
      jac.col(j) = (fx - F(xp)) / h;
    }
    xp(j) = x(j);
  }
  return jac;
}

double inf_norm(const Eigen::VectorXd& v) {
  return v.size() ? v.cwiseAbs().maxCoeff() : 0.0;
}

}  // namespace

SolveResult solve_nonlinear_system(const VectorFn& F, const Eigen::VectorXd& x0,
                                   const SolveOptions& opts,
                                   const JacobianFn& jac) {
  SolveResult res;
  Eigen::VectorXd x = x0;
  Eigen::VectorXd fx = F(x);
  double fnorm = inf_norm(fx);
  double lm_lambda = 0.0;  // > 0 once the damped-Newton phase stagnates

  // the Jacobian is reused across iterations while full Newton steps keep
  // making good progress (chord economy); any stall forces a refresh
  Eigen::MatrixXd J;
  bool have_j = false;   // J usable for the next step
  bool j_at_x = false;   // J was computed at the current iterate

  for (int it = 0; it < opts.max_iter; ++it) {
    if (fnorm <= opts.tol) {
      res.x = x;
      res.residual_inf = fnorm;
      res.iterations = it;
      res.converged = true;
      return res;
    }
    if (!have_j || lm_lambda > 0.0) {
      J = (opts.use_jacobian && jac) ? jac(x) : fd_jacobian(F, x, fx);
      have_j = true;
      j_at_x = true;
    }

    Eigen::VectorXd step;
    if (lm_lambda == 0.0) {
      step = J.fullPivLu().solve(-fx);
      if (!step.allFinite() || !(inf_norm(step) > 0.0)) lm_lambda = 1e-3;
    }
    if (lm_lambda > 0.0) {
      // Levenberg-Marquardt on the least-squares merit 0.5 ||F||^2
      Eigen::MatrixXd jtj = J.transpose() * J;
      jtj.diagonal().array() += lm_lambda * (1.0 + jtj.diagonal().maxCoeff());
      step = jtj.ldlt().solve(-J.transpose() * fx);
      if (!step.allFinite()) {
        res.x = x;
        res.residual_inf = fnorm;
        res.iterations = it;
        res.message = "singular system";
        return res;
      }
    }

    // backtracking on ||F||_inf
    double scale = 1.0;
    bool accepted = false;
    const double fnorm_before = fnorm;
    for (int bt = 0; bt < opts.max_backtrack; ++bt) {
      Eigen::VectorXd xt = x + scale * step;
      Eigen::VectorXd ft;
      try {
        ft = F(xt);
      } catch (const std::exception&) {
        scale *= 0.5;  // trial point outside the domain
        continue;
      }
      const double fnt = inf_norm(ft);
      if (std::isfinite(fnt) && fnt < fnorm) {
        x = xt;
        fx = ft;
        fnorm = fnt;
        accepted = true;
        break;
      }
      scale *= 0.5;
    }

    if (accepted) {
      // keep the chord Jacobian only after an undamped, well-contracting step
      have_j = scale == 1.0 && fnorm <= 0.5 * fnorm_before;
      j_at_x = false;
      if (lm_lambda > 0.0) lm_lambda = std::max(lm_lambda * 0.25, 1e-12);
    } else if (!j_at_x && lm_lambda == 0.0) {
      have_j = false;  // stale direction may be the problem: refresh first
    } else if (lm_lambda == 0.0) {
      lm_lambda = 1e-3;  // Newton stagnated: switch to trust-region damping
    } else if (lm_lambda < 1e8) {
      lm_lambda *= 10.0;
    } else {
      res.x = x;
      res.residual_inf = fnorm;
      res.iterations = it + 1;
      res.message = "stagnated";
      return res;
    }
  }

  res.x = x;
  res.residual_inf = fnorm;
  res.iterations = opts.max_iter;
  res.converged = fnorm <= opts.tol;
  if (!res.converged) res.message = "max iterations reached";
  return res;
}

}  // namespace mnar
