#pragma once

#include <Eigen/Core>
#include <memory>
#include <vector>

namespace mnar {

/// Clamped B-spline basis on [lo, hi] with the given interior knots.
/// Basis functions form a partition of unity on the knot span.
class BSplineBasis {
 public:
  BSplineBasis(double lo, double hi, std::vector<double> interior_knots,
               int degree = 3);

  /// Interior knots at sample quantiles.
  static BSplineBasis from_quantiles(const Eigen::ArrayXd& u, int n_interior,
                                     int degree = 3);

  int degree() const { return degree_; }
  int dim() const { return static_cast<int>(interior_.size()) + degree_ + 1; }
  const std::vector<double>& interior_knots() const { return interior_; }
  double lo() const { return lo_; }
  double hi() const { return hi_; }

  /// All basis values at u (Cox-de Boor); u is clamped to [lo, hi].
  Eigen::RowVectorXd eval(double u) const;
  Eigen::MatrixXd design(const Eigen::ArrayXd& u) const;

 private:
  double lo_, hi_;
  std::vector<double> interior_;
  int degree_;
  std::vector<double> knots_;  // full clamped knot vector
};

/// B-spline in one continuous covariate, fully interacted with the levels of
/// one categorical covariate (tensor expansion): one smooth per level.
class TensorSplineBasis {
 public:
  TensorSplineBasis(BSplineBasis base, std::vector<double> z_levels);
  explicit TensorSplineBasis(BSplineBasis base);  // no categorical part

  int dim() const;
  const BSplineBasis& base() const { return base_; }
  const std::vector<double>& z_levels() const { return z_levels_; }

  Eigen::RowVectorXd row(double u, double z) const;
  Eigen::MatrixXd design(const Eigen::ArrayXd& u, const Eigen::ArrayXd& z) const;

 private:
  BSplineBasis base_;
  std::vector<double> z_levels_;  // empty: pure spline in u
};

enum class KnotCriterion { AIC, GCV };

struct SplineFit {
  std::shared_ptr<const TensorSplineBasis> basis;
  Eigen::VectorXd coefficients;
  double sigma2 = 0.0;     // residual variance, divisor n
  double r_squared = 0.0;
  double criterion_value = 0.0;
  int interior_knots = 0;
};

/// Least-squares spline regression of y on (u, z) with the interior-knot
/// count selected over knot_grid by AIC (default) or GCV. z may be empty
/// (no categorical interaction). Throws FitError if every candidate design
/// is rank-deficient.
SplineFit fit_spline_mean(const Eigen::ArrayXd& u, const Eigen::ArrayXd& z,
                          const Eigen::ArrayXd& y,
                          KnotCriterion criterion = KnotCriterion::AIC,
                          const std::vector<int>& knot_grid = {0, 1, 2, 3, 4},
                          int degree = 3);

}  // namespace mnar
