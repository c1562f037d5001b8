#include "mnar/links.hpp"

#include <cmath>
#include <limits>

namespace mnar {

namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr double kSqrt2 = 1.41421356237309504880;
constexpr double kLogSqrt2Pi = 0.91893853320467274178;

double logistic_cdf(double t) { return 1.0 / (1.0 + std::exp(-t)); }

double logistic_log_cdf(double t) {
  // -log(1+e^{-t}), written to avoid overflow of e^{-t}
  return t >= 0 ? -std::log1p(std::exp(-t)) : t - std::log1p(std::exp(t));
}

double normal_pdf(double t) { return std::exp(-0.5 * t * t - kLogSqrt2Pi); }

double normal_cdf(double t) { return 0.5 * std::erfc(-t / kSqrt2); }

// Cauchy cdf; the atan(-1/t) form keeps full relative precision in the tails.
double cauchy_cdf(double t) {
  if (t < -1.0) return std::atan(-1.0 / t) / kPi;
  if (t > 1.0) return 1.0 - std::atan(1.0 / t) / kPi;
  return 0.5 + std::atan(t) / kPi;
}

double cauchy_pdf(double t) { return 1.0 / (kPi * (1.0 + t * t)); }

// Continued fraction for the incomplete beta (Lentz's method).
double beta_cont_frac(double a, double b, double x) {
  const double tiny = 1e-300;
  const int max_it = 300;
  double qab = a + b, qap = a + 1.0, qam = a - 1.0;
  double c = 1.0, d = 1.0 - qab * x / qap;
  if (std::abs(d) < tiny) d = tiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= max_it; ++m) {
    int m2 = 2 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < tiny) d = tiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < tiny) c = tiny;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < tiny) d = tiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < tiny) c = tiny;
    d = 1.0 / d;
    double del = d * c;
    h *= del;
    if (std::abs(del - 1.0) < 1e-15) break;
  }
  return h;
}

double student_t_cdf(double t, int df) {
  if (df == 1) return cauchy_cdf(t);
  const double nu = static_cast<double>(df);
  const double x = nu / (nu + t * t);
  const double tail = 0.5 * incomplete_beta(0.5 * nu, 0.5, x);
  return t <= 0 ? tail : 1.0 - tail;
}

double student_t_pdf(double t, int df) {
  const double nu = static_cast<double>(df);
  const double lognorm = std::lgamma(0.5 * (nu + 1.0)) - std::lgamma(0.5 * nu) -
                         0.5 * std::log(nu * kPi);
  return std::exp(lognorm - 0.5 * (nu + 1.0) * std::log1p(t * t / nu));
}

}  // namespace

double incomplete_beta(double a, double b, double x) {
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;
  // the x <= 0.5 clause guarantees the symmetric recursion terminates
  if (x < (a + 1.0) / (a + b + 2.0) || x <= 0.5) {
    const double lbeta = std::lgamma(a) + std::lgamma(b) - std::lgamma(a + b);
    const double front =
        std::exp(a * std::log(x) + b * std::log1p(-x) - lbeta);
    return front * beta_cont_frac(a, b, x) / a;
  }
  return 1.0 - incomplete_beta(b, a, 1.0 - x);
}

double log_normal_cdf(double z) {
  if (z > -8.0) return std::log(normal_cdf(z));
  // Phi(z) ~ phi(z)/|z| * (1 - 1/z^2 + 3/z^4 - 15/z^6 + 105/z^8)
  const double z2 = z * z;
  double series = 1.0 - 1.0 / z2 + 3.0 / (z2 * z2) - 15.0 / (z2 * z2 * z2) +
                  105.0 / (z2 * z2 * z2 * z2);
  return -0.5 * z2 - kLogSqrt2Pi - std::log(-z) + std::log(series);
}

LinkFunction LinkFunction::student_t(int df) {
  if (df < 1) throw std::invalid_argument("student_t link: df must be >= 1");
  return df == 1 ? cauchy() : LinkFunction(LinkKind::StudentT, df);
}

double LinkFunction::cdf(double t) const {
  if (!std::isfinite(t))
    throw std::domain_error("link cdf: non-finite argument");
  switch (kind_) {
    case LinkKind::Logistic: return logistic_cdf(t);
    case LinkKind::Probit: {
      double v = normal_cdf(t);
      return v > 0.0 ? v : std::exp(log_normal_cdf(t));
    }
    case LinkKind::Cauchy: return cauchy_cdf(t);
    case LinkKind::StudentT: return student_t_cdf(t, df_);
  }
  return 0.0;
}

double LinkFunction::log_cdf(double t) const {
  switch (kind_) {
    case LinkKind::Logistic: return logistic_log_cdf(t);
    case LinkKind::Probit: return log_normal_cdf(t);
    case LinkKind::Cauchy: return std::log(cauchy_cdf(t));
    case LinkKind::StudentT: return std::log(student_t_cdf(t, df_));
  }
  return 0.0;
}

double LinkFunction::pdf(double t) const {
  switch (kind_) {
    case LinkKind::Logistic: {
      double p = logistic_cdf(t);
      return p * (1.0 - p);
    }
    case LinkKind::Probit: return normal_pdf(t);
    case LinkKind::Cauchy: return cauchy_pdf(t);
    case LinkKind::StudentT: return student_t_pdf(t, df_);
  }
  return 0.0;
}

double LinkFunction::score_factor(double t) const {
  if (kind_ == LinkKind::Logistic) return 1.0 - logistic_cdf(t);
  if (kind_ == LinkKind::Probit) {
    // exp(log pdf - log cdf) stays finite where both factors underflow
    return std::exp(-0.5 * t * t - kLogSqrt2Pi - log_normal_cdf(t));
  }
  return pdf(t) / cdf(t);
}

Eigen::ArrayXXd LinkFunction::cdf(const Eigen::ArrayXXd& t) const {
  if (kind_ == LinkKind::Logistic) return 1.0 / (1.0 + (-t).exp());
  Eigen::ArrayXXd out(t.rows(), t.cols());
  for (Eigen::Index j = 0; j < t.cols(); ++j)
    for (Eigen::Index i = 0; i < t.rows(); ++i) out(i, j) = cdf(t(i, j));
  return out;
}

Eigen::ArrayXd LinkFunction::cdf(const Eigen::ArrayXd& t) const {
  if (kind_ == LinkKind::Logistic) return 1.0 / (1.0 + (-t).exp());
  Eigen::ArrayXd out(t.size());
  for (Eigen::Index i = 0; i < t.size(); ++i) out(i) = cdf(t(i));
  return out;
}

Eigen::ArrayXd LinkFunction::score_factor(const Eigen::ArrayXd& t) const {
  if (kind_ == LinkKind::Logistic) return 1.0 / (1.0 + t.exp());
  Eigen::ArrayXd out(t.size());
  for (Eigen::Index i = 0; i < t.size(); ++i) out(i) = score_factor(t(i));
  return out;
}

Eigen::ArrayXXd LinkFunction::score_factor(const Eigen::ArrayXXd& t) const {
  if (kind_ == LinkKind::Logistic) return 1.0 / (1.0 + t.exp());
  Eigen::ArrayXXd out(t.rows(), t.cols());
  for (Eigen::Index j = 0; j < t.cols(); ++j)
    for (Eigen::Index i = 0; i < t.rows(); ++i)
      out(i, j) = score_factor(t(i, j));
  return out;
}

std::string LinkFunction::name() const {
  switch (kind_) {
    case LinkKind::Logistic: return "logistic";
    case LinkKind::Probit: return "probit";
    case LinkKind::Cauchy: return "cauchy";
    case LinkKind::StudentT: return "studentt(" + std::to_string(df_) + ")";
  }
  return "";
}

LinkFunction LinkFunction::parse(const std::string& name) {
  if (name == "logistic") return logistic();
  if (name == "probit") return probit();
  if (name == "cauchy") return cauchy();
  if (name.rfind("studentt(", 0) == 0 && name.back() == ')') {
    int df = std::stoi(name.substr(9, name.size() - 10));
    return student_t(df);
  }
  throw std::invalid_argument("unknown link: " + name);
}

}  // namespace mnar
