#include "mnar/splines.hpp"

#include <Eigen/QR>
#include <algorithm>
#include <cmath>

#include "mnar/errors.hpp"

namespace mnar {

BSplineBasis::BSplineBasis(double lo, double hi,
                           std::vector<double> interior_knots, int degree)
    : lo_(lo), hi_(hi), interior_(std::move(interior_knots)), degree_(degree) {
  if (!(hi_ > lo_)) throw DomainError("spline basis: empty domain");
  if (degree_ < 1) throw DomainError("spline basis: degree must be >= 1");
  std::sort(interior_.begin(), interior_.end());
  for (double k : interior_)
    if (k <= lo_ || k >= hi_)
      throw DomainError("spline basis: interior knot outside domain");
  knots_.assign(degree_ + 1, lo_);
  knots_.insert(knots_.end(), interior_.begin(), interior_.end());
  knots_.insert(knots_.end(), degree_ + 1, hi_);
}

BSplineBasis BSplineBasis::from_quantiles(const Eigen::ArrayXd& u,
                                          int n_interior, int degree) {
  std::vector<double> sorted(u.data(), u.data() + u.size());
  std::sort(sorted.begin(), sorted.end());
  const double lo = sorted.front(), hi = sorted.back();
  std::vector<double> knots;
  for (int k = 1; k <= n_interior; ++k) {
    const double q = static_cast<double>(k) / (n_interior + 1);
    const double pos = q * (sorted.size() - 1);
    const auto i = static_cast<std::size_t>(pos);
    const double frac = pos - static_cast<double>(i);
    double v = sorted[i];
    if (i + 1 < sorted.size()) v += frac * (sorted[i + 1] - sorted[i]);
    if (v > lo && v < hi && (knots.empty() || v > knots.back() + 1e-12))
      knots.push_back(v);
  }
  return BSplineBasis(lo, hi, std::move(knots), degree);
}

Eigen::RowVectorXd BSplineBasis::eval(double u) const {
  u = std::min(std::max(u, lo_), hi_);
  const int d = degree_;
  const int nb = dim();
  // span i: knots_[i] <= u < knots_[i+1], clamped to the last span at u = hi
  int span;
  if (u >= knots_[nb]) {
    span = nb - 1;
  } else {
    span = d;
    while (span < nb - 1 && u >= knots_[span + 1]) ++span;
  }
  std::vector<double> left(d + 1), right(d + 1), val(d + 1);
  val[0] = 1.0;
  for (int j = 1; j <= d; ++j) {
    left[j] = u - knots_[span + 1 - j];
    right[j] = knots_[span + j] - u;
    double saved = 0.0;
    for (int r = 0; r < j; ++r) {
      const double tmp = val[r] / (right[r + 1] + left[j - r]);
      val[r] = saved + right[r + 1] * tmp;
      saved = left[j - r] * tmp;
    }
    val[j] = saved;
  }
  Eigen::RowVectorXd out = Eigen::RowVectorXd::Zero(nb);
  for (int r = 0; r <= d; ++r) out(span - d + r) = val[r];
  return out;
}

Eigen::MatrixXd BSplineBasis::design(const Eigen::ArrayXd& u) const {
  Eigen::MatrixXd out(u.size(), dim());
  for (Eigen::Index i = 0; i < u.size(); ++i) out.row(i) = eval(u(i));
  return out;
}

TensorSplineBasis::TensorSplineBasis(BSplineBasis base,
                                     std::vector<double> z_levels)
    : base_(std::move(base)), z_levels_(std::move(z_levels)) {
  std::sort(z_levels_.begin(), z_levels_.end());
}

TensorSplineBasis::TensorSplineBasis(BSplineBasis base)
    : base_(std::move(base)) {}

int TensorSplineBasis::dim() const {
  return base_.dim() * std::max<int>(1, static_cast<int>(z_levels_.size()));
}

Eigen::RowVectorXd TensorSplineBasis::row(double u, double z) const {
  const Eigen::RowVectorXd b = base_.eval(u);
  if (z_levels_.empty()) return b;
  int level = -1;
  for (std::size_t l = 0; l < z_levels_.size(); ++l)
    if (std::abs(z - z_levels_[l]) < 1e-9) level = static_cast<int>(l);
  if (level < 0)
    throw DomainError("tensor spline: unseen categorical level " +
                      std::to_string(z));
  Eigen::RowVectorXd out = Eigen::RowVectorXd::Zero(dim());
  out.segment(level * base_.dim(), base_.dim()) = b;
  return out;
}

Eigen::MatrixXd TensorSplineBasis::design(const Eigen::ArrayXd& u,
                                          const Eigen::ArrayXd& z) const {
  Eigen::MatrixXd out(u.size(), dim());
  for (Eigen::Index i = 0; i < u.size(); ++i)
    out.row(i) = row(u(i), z.size() ? z(i) : 0.0);
  return out;
}

SplineFit fit_spline_mean(const Eigen::ArrayXd& u, const Eigen::ArrayXd& z,
                          const Eigen::ArrayXd& y, KnotCriterion criterion,
                          const std::vector<int>& knot_grid, int degree) {
  const auto n = static_cast<double>(y.size());
  std::vector<double> levels;
  if (z.size()) {
    std::vector<double> vals(z.data(), z.data() + z.size());
    std::sort(vals.begin(), vals.end());
    for (double v : vals)
      if (levels.empty() || v > levels.back() + 1e-9) levels.push_back(v);
    if (levels.size() > 12)
      throw FitError("tensor spline: categorical covariate has " +
                     std::to_string(levels.size()) + " levels");
  }

  SplineFit best;
  bool found = false;
  for (int m : knot_grid) {
    auto base = BSplineBasis::from_quantiles(u, m, degree);
    auto basis = levels.empty()
                     ? std::make_shared<TensorSplineBasis>(base)
                     : std::make_shared<TensorSplineBasis>(base, levels);
    if (static_cast<double>(basis->dim()) + 1.0 > n) continue;
    Eigen::MatrixXd design = basis->design(u, z);
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(design);
    qr.setThreshold(1e-10);
    if (qr.rank() < design.cols()) continue;  // reduce knots
    Eigen::VectorXd coef = qr.solve(y.matrix());
    const double rss = (y.matrix() - design * coef).squaredNorm();
    const double p = static_cast<double>(design.cols());
    const double value =
        criterion == KnotCriterion::AIC
            ? n * std::log(std::max(rss, 1e-300) / n) + 2.0 * (p + 1.0)
            : n * rss / ((n - p) * (n - p));
    if (!found || value < best.criterion_value) {
      found = true;
      best.basis = basis;
      best.coefficients = coef;
      best.criterion_value = value;
      best.sigma2 = rss / n;
      best.interior_knots = m;
      const double tss = (y - y.mean()).matrix().squaredNorm();
      best.r_squared = tss > 0.0 ? 1.0 - rss / tss : 0.0;
    }
  }
  if (!found)
    throw FitError("spline fit: design rank-deficient for every knot count");
  return best;
}

}  // namespace mnar
