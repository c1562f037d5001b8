#pragma once

#include <Eigen/Core>
#include <functional>
#include <string>

namespace mnar {

struct SolveOptions {
  double tol = 1e-10;       // convergence: ||F(x)||_inf <= tol
  int max_iter = 100;
  int max_backtrack = 30;
  bool use_jacobian = false;  // caller supplies analytic Jacobian
};

struct SolveResult {
  Eigen::VectorXd x;
  double residual_inf = 0.0;
  int iterations = 0;
  bool converged = false;
  std::string message;
};

using VectorFn = std::function<Eigen::VectorXd(const Eigen::VectorXd&)>;
using JacobianFn = std::function<Eigen::MatrixXd(const Eigen::VectorXd&)>;

/// Root of F(x) = 0 by damped Newton with a forward-difference Jacobian,
/// falling back to Levenberg-Marquardt on the least-squares merit when the
/// Newton direction stagnates. Deterministic given (F, x0, options).
SolveResult solve_nonlinear_system(const VectorFn& F, const Eigen::VectorXd& x0,
                                   const SolveOptions& opts = {},
                                   const JacobianFn& jac = nullptr);

}  // namespace mnar
