#include "mnar/models.hpp"

#include <cmath>

#include "mnar/errors.hpp"
#include "mnar/splines.hpp"

namespace mnar {

namespace {
constexpr double kLogSqrt2Pi = 0.91893853320467274178;

double logit_inv(double t) { return 1.0 / (1.0 + std::exp(-t)); }
}  // namespace

Eigen::RowVectorXd LinearBasis::row(const Eigen::VectorXd& u,
                                    const Eigen::VectorXd& z) const {
  Eigen::RowVectorXd out(dim());
  int k = 0;
  if (intercept) out(k++) = 1.0;
  for (int j : u_cols) out(k++) = u(j);
  for (int j : z_cols) out(k++) = z(j);
  return out;
}

Eigen::MatrixXd LinearBasis::design(const Eigen::MatrixXd& u,
                                    const Eigen::MatrixXd& z) const {
  const Eigen::Index n = u.rows();
  Eigen::MatrixXd out(n, dim());
  int k = 0;
  if (intercept) out.col(k++).setOnes();
  for (int j : u_cols) out.col(k++) = u.col(j);
  for (int j : z_cols) out.col(k++) = z.col(j);
  return out;
}

LinearBasis LinearBasis::intercept_and_all(int p_u, int p_z) {
  LinearBasis b;
  b.intercept = true;
  for (int j = 0; j < p_u; ++j) b.u_cols.push_back(j);
  for (int j = 0; j < p_z; ++j) b.z_cols.push_back(j);
  return b;
}

ResponseModel::ResponseModel(LinkFunction link, LinearBasis h_basis,
                             Eigen::VectorXd alpha, LinearBasis g_basis,
                             Eigen::VectorXd beta, MTransform m)
    : link_(link),
      h_basis_(std::move(h_basis)),
      g_basis_(std::move(g_basis)),
      alpha_(std::move(alpha)),
      beta_(std::move(beta)),
      m_(m) {
  if (!h_basis_.z_cols.empty() || !g_basis_.z_cols.empty())
    throw DomainError(
        "response-model index may not reference instrument columns");
  if (alpha_.size() != h_basis_.dim() || beta_.size() != g_basis_.dim())
    throw DomainError("response-model parameter/basis dimension mismatch");
  if (!alpha_.allFinite() || !beta_.allFinite())
    throw DomainError("response-model parameters must be finite");
}

ResponseModel ResponseModel::standard(LinkFunction link, Eigen::VectorXd alpha,
                                      double beta, int p_u) {
  LinearBasis h;
  h.intercept = true;
  for (int j = 0; j < p_u; ++j) h.u_cols.push_back(j);
  LinearBasis g;
  g.intercept = true;  // g(u; beta) = beta, constant in u
  Eigen::VectorXd bv(1);
  bv << beta;
  return ResponseModel(link, std::move(h), std::move(alpha), std::move(g), bv);
}

Eigen::VectorXd ResponseModel::phi() const {
  Eigen::VectorXd out(n_params());
  out.head(alpha_.size()) = alpha_;
  out.tail(beta_.size()) = beta_;
  return out;
}

ResponseModel ResponseModel::with_phi(const Eigen::VectorXd& phi) const {
  if (phi.size() != n_params())
    throw DomainError("with_phi: dimension mismatch");
  ResponseModel out = *this;
  out.alpha_ = phi.head(alpha_.size());
  out.beta_ = phi.tail(beta_.size());
  return out;
}

double ResponseModel::h_value(const Eigen::VectorXd& u) const {
  return h_basis_.row(u, Eigen::VectorXd()).dot(alpha_);
}

double ResponseModel::g_value(const Eigen::VectorXd& u) const {
  return g_basis_.row(u, Eigen::VectorXd()).dot(beta_);
}

double ResponseModel::predictor(const Eigen::VectorXd& u, double y) const {
  return h_value(u) + g_value(u) * apply_m(m_, y);
}

double ResponseModel::response_prob(const Eigen::VectorXd& u, double y) const {
  const double t = predictor(u, y);
  if (!std::isfinite(t))
    throw DomainError("response_prob: non-finite linear predictor at u=(" +
                      std::to_string(u.size() ? u(0) : 0.0) + ", ...), y=" +
                      std::to_string(y));
  return link_.cdf(t);
}

Eigen::ArrayXd ResponseModel::h_values(const Eigen::MatrixXd& u) const {
  return (h_basis_.design(u, Eigen::MatrixXd(u.rows(), 0)) * alpha_).array();
}

Eigen::ArrayXd ResponseModel::g_values(const Eigen::MatrixXd& u) const {
  return (g_basis_.design(u, Eigen::MatrixXd(u.rows(), 0)) * beta_).array();
}

MeanStructure MeanStructure::from_spline(
    std::shared_ptr<const TensorSplineBasis> s) {
  MeanStructure m;
  m.kind = Kind::SplineTensor;
  m.spline = std::move(s);
  return m;
}

int MeanStructure::dim() const {
  return kind == Kind::Linear ? linear.dim() : spline->dim();
}

Eigen::RowVectorXd MeanStructure::row(const Eigen::VectorXd& u,
                                      const Eigen::VectorXd& z) const {
  if (kind == Kind::Linear) return linear.row(u, z);
  return spline->row(u(0), z.size() ? z(0) : 0.0);
}

Eigen::MatrixXd MeanStructure::design(const Eigen::MatrixXd& u,
                                      const Eigen::MatrixXd& z) const {
  if (kind == Kind::Linear) return linear.design(u, z);
  Eigen::ArrayXd zcol = z.cols() ? Eigen::ArrayXd(z.col(0).array())
                                 : Eigen::ArrayXd::Zero(u.rows());
  return spline->design(u.col(0).array(), zcol);
}

OutcomeModel::OutcomeModel(OutcomeFamily family, MeanStructure mean,
                           Eigen::VectorXd kappa, double sigma2)
    : family_(family),
      mean_(std::move(mean)),
      kappa_(std::move(kappa)),
      sigma2_(sigma2) {
  if (kappa_.size() != mean_.dim())
    throw DomainError("outcome-model coefficient/basis dimension mismatch");
  if (family_ == OutcomeFamily::Normal && !(sigma2_ > 0.0))
    throw DomainError("Normal outcome requires sigma2 > 0");
}

int OutcomeModel::n_params() const {
  return static_cast<int>(kappa_.size()) +
         (family_ == OutcomeFamily::Normal ? 1 : 0);
}

Eigen::VectorXd OutcomeModel::gamma() const {
  Eigen::VectorXd out(n_params());
  out.head(kappa_.size()) = kappa_;
  if (family_ == OutcomeFamily::Normal) out(out.size() - 1) = sigma2_;
  return out;
}

OutcomeModel OutcomeModel::with_gamma(const Eigen::VectorXd& gamma) const {
  if (gamma.size() != n_params())
    throw DomainError("with_gamma: dimension mismatch");
  OutcomeModel out = *this;
  out.kappa_ = gamma.head(kappa_.size());
  if (family_ == OutcomeFamily::Normal) out.sigma2_ = gamma(gamma.size() - 1);
  return out;
}

double OutcomeModel::mean(const Eigen::VectorXd& u,
                          const Eigen::VectorXd& z) const {
  const double eta = mean_.row(u, z).dot(kappa_);
  return family_ == OutcomeFamily::Normal ? eta : logit_inv(eta);
}

Eigen::ArrayXd OutcomeModel::means(const Eigen::MatrixXd& u,
                                   const Eigen::MatrixXd& z) const {
  Eigen::ArrayXd eta = (mean_.design(u, z) * kappa_).array();
  if (family_ == OutcomeFamily::Normal) return eta;
  return 1.0 / (1.0 + (-eta).exp());
}

double OutcomeModel::log_density(const Eigen::VectorXd& u,
                                 const Eigen::VectorXd& z, double y) const {
  if (family_ == OutcomeFamily::Normal) {
    const double r = y - mean(u, z);
    return -0.5 * r * r / sigma2_ - 0.5 * std::log(sigma2_) - kLogSqrt2Pi;
  }
  if (y != 0.0 && y != 1.0)
    throw DomainError("Bernoulli outcome: y must be 0 or 1, got " +
                      std::to_string(y));
  const double p = mean(u, z);
  return y == 1.0 ? std::log(p) : std::log1p(-p);
}

double OutcomeModel::density(const Eigen::VectorXd& u, const Eigen::VectorXd& z,
                             double y) const {
  return std::exp(log_density(u, z, y));
}

Eigen::VectorXd OutcomeModel::score(const Eigen::VectorXd& u,
                                    const Eigen::VectorXd& z, double y) const {
  const Eigen::RowVectorXd b = mean_.row(u, z);
  Eigen::VectorXd out(n_params());
  if (family_ == OutcomeFamily::Normal) {
    const double r = y - b.dot(kappa_);
    out.head(kappa_.size()) = (r / sigma2_) * b.transpose();
    out(out.size() - 1) =
        -0.5 / sigma2_ + 0.5 * r * r / (sigma2_ * sigma2_);
  } else {
    if (y != 0.0 && y != 1.0)
      throw DomainError("Bernoulli outcome: y must be 0 or 1");
    const double p = logit_inv(b.dot(kappa_));
    out = (y - p) * b.transpose();
  }
  return out;
}

double OutcomeModel::draw(const Eigen::VectorXd& u, const Eigen::VectorXd& z,
                          RngStream& rng) const {
  const double m = mean(u, z);
  if (family_ == OutcomeFamily::Normal)
    return rng.normal(m, std::sqrt(sigma2_));
  return rng.bernoulli(m) ? 1.0 : 0.0;
}

double OutcomeModel::natural_parameter(const Eigen::VectorXd& u,
                                       const Eigen::VectorXd& z) const {
  // Normal: theta = mu; Bernoulli: theta = logit p, the basis linear form.
  const double eta = mean_.row(u, z).dot(kappa_);
  return eta;
}

}  // namespace mnar
