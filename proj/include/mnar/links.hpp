#pragma once

#include <Eigen/Core>
#include <stdexcept>
#include <string>

namespace mnar {

enum class LinkKind { Logistic, Probit, Cauchy, StudentT };

/// Response-mechanism link: a strictly increasing cdf mapping R -> (0,1).
/// Cauchy is kept as a named alias of StudentT(1).
class LinkFunction {
 public:
  static LinkFunction logistic() { return LinkFunction(LinkKind::Logistic, 0); }
  static LinkFunction probit() { return LinkFunction(LinkKind::Probit, 0); }
  static LinkFunction cauchy() { return LinkFunction(LinkKind::Cauchy, 1); }
  static LinkFunction student_t(int df);

  LinkKind kind() const { return kind_; }
  int df() const { return df_; }

  double cdf(double t) const;
  double log_cdf(double t) const;   // stable far into the left tail
  double pdf(double t) const;       // derivative of cdf
  double score_factor(double t) const;  // pdf/cdf = d log cdf / dt

  Eigen::ArrayXXd cdf(const Eigen::ArrayXXd& t) const;
  Eigen::ArrayXd cdf(const Eigen::ArrayXd& t) const;
  Eigen::ArrayXd score_factor(const Eigen::ArrayXd& t) const;
  Eigen::ArrayXXd score_factor(const Eigen::ArrayXXd& t) const;

  std::string name() const;
  static LinkFunction parse(const std::string& name);

  bool operator==(const LinkFunction& o) const {
    return kind_ == o.kind_ && df_ == o.df_;
  }

 private:
  LinkFunction(LinkKind kind, int df) : kind_(kind), df_(df) {}
  LinkKind kind_;
  int df_;  // StudentT / Cauchy only
};

// Regularized incomplete beta I_x(a, b), continued-fraction evaluation.
double incomplete_beta(double a, double b, double x);

// log of the standard normal cdf, using an asymptotic expansion below z = -8
// where the cdf itself underflows.
double log_normal_cdf(double z);

}  // namespace mnar
