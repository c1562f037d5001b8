#pragma once

#include <Eigen/Core>
#include <memory>
#include <string>
#include <vector>

#include "mnar/links.hpp"
#include "mnar/rng.hpp"

namespace mnar {

class TensorSplineBasis;

/// Linear form over selected covariate columns, with optional intercept.
/// Column indices refer to the u block and the z block separately so that
/// instrument exclusion is visible in the type: a response-model basis must
/// have an empty z_cols.
struct LinearBasis {
  bool intercept = true;
  std::vector<int> u_cols;
  std::vector<int> z_cols;

  int dim() const {
    return (intercept ? 1 : 0) + static_cast<int>(u_cols.size() + z_cols.size());
  }

  Eigen::RowVectorXd row(const Eigen::VectorXd& u,
                         const Eigen::VectorXd& z) const;
  Eigen::MatrixXd design(const Eigen::MatrixXd& u,
                         const Eigen::MatrixXd& z) const;

  static LinearBasis intercept_and_all(int p_u, int p_z);
};

/// Known transform m(y) in the response index. Only the identity appears in
/// any supported configuration; the enum keeps the config format explicit.
enum class MTransform { Identity };

inline double apply_m(MTransform, double y) { return y; }

/// Response mechanism P(delta=1 | u, y) = Psi{ h(u; alpha) + g(u; beta) m(y) }.
/// Immutable after construction; safe for concurrent reads.
class ResponseModel {
 public:
  ResponseModel(LinkFunction link, LinearBasis h_basis, Eigen::VectorXd alpha,
                LinearBasis g_basis, Eigen::VectorXd beta,
                MTransform m = MTransform::Identity);

  /// Default shape used throughout: h = intercept + all u columns,
  /// g = scalar constant beta.
  static ResponseModel standard(LinkFunction link, Eigen::VectorXd alpha,
                                double beta, int p_u);

  const LinkFunction& link() const { return link_; }
  const LinearBasis& h_basis() const { return h_basis_; }
  const LinearBasis& g_basis() const { return g_basis_; }
  const Eigen::VectorXd& alpha() const { return alpha_; }
  const Eigen::VectorXd& beta() const { return beta_; }
  MTransform m_transform() const { return m_; }
  int n_params() const { return static_cast<int>(alpha_.size() + beta_.size()); }

  /// Packed parameter vector phi = (alpha, beta).
  Eigen::VectorXd phi() const;
  ResponseModel with_phi(const Eigen::VectorXd& phi) const;

  double h_value(const Eigen::VectorXd& u) const;
  double g_value(const Eigen::VectorXd& u) const;
  double predictor(const Eigen::VectorXd& u, double y) const;
  double response_prob(const Eigen::VectorXd& u, double y) const;

  /// Row-wise h and g over a sample (n x p_u).
  Eigen::ArrayXd h_values(const Eigen::MatrixXd& u) const;
  Eigen::ArrayXd g_values(const Eigen::MatrixXd& u) const;

 private:
  LinkFunction link_;
  LinearBasis h_basis_;
  LinearBasis g_basis_;
  Eigen::VectorXd alpha_;
  Eigen::VectorXd beta_;
  MTransform m_;
};

enum class OutcomeFamily { Normal, Bernoulli };

/// Mean structure of the respondents' outcome: a linear form in raw
/// covariates or a tensor-product spline basis (per categorical z level).
struct MeanStructure {
  enum class Kind { Linear, SplineTensor };
  Kind kind = Kind::Linear;
  LinearBasis linear;
  std::shared_ptr<const TensorSplineBasis> spline;

  static MeanStructure from_linear(LinearBasis b) {
    MeanStructure m;
    m.kind = Kind::Linear;
    m.linear = std::move(b);
    return m;
  }
  static MeanStructure from_spline(std::shared_ptr<const TensorSplineBasis> s);

  int dim() const;
  Eigen::RowVectorXd row(const Eigen::VectorXd& u,
                         const Eigen::VectorXd& z) const;
  Eigen::MatrixXd design(const Eigen::MatrixXd& u,
                         const Eigen::MatrixXd& z) const;
};

/// Respondents' outcome model p(y | x, delta=1; gamma). Normal outcomes carry
/// gamma = (kappa, sigma2); Bernoulli outcomes model the mean on the logit
/// scale with gamma = kappa. Support never depends on x.
class OutcomeModel {
 public:
  OutcomeModel(OutcomeFamily family, MeanStructure mean, Eigen::VectorXd kappa,
               double sigma2 = 1.0);

  OutcomeFamily family() const { return family_; }
  const MeanStructure& mean_structure() const { return mean_; }
  const Eigen::VectorXd& kappa() const { return kappa_; }
  double sigma2() const { return sigma2_; }
  bool is_discrete() const { return family_ == OutcomeFamily::Bernoulli; }

  int n_params() const;
  Eigen::VectorXd gamma() const;  // (kappa, sigma2) or kappa
  OutcomeModel with_gamma(const Eigen::VectorXd& gamma) const;

  /// Linear predictor / mean of y given covariates. For Bernoulli this is
  /// the success probability (logit-linear in the basis).
  double mean(const Eigen::VectorXd& u, const Eigen::VectorXd& z) const;
  Eigen::ArrayXd means(const Eigen::MatrixXd& u, const Eigen::MatrixXd& z) const;

  double density(const Eigen::VectorXd& u, const Eigen::VectorXd& z,
                 double y) const;
  double log_density(const Eigen::VectorXd& u, const Eigen::VectorXd& z,
                     double y) const;

  /// Gradient of log density w.r.t. gamma.
  Eigen::VectorXd score(const Eigen::VectorXd& u, const Eigen::VectorXd& z,
                        double y) const;

  double draw(const Eigen::VectorXd& u, const Eigen::VectorXd& z,
              RngStream& rng) const;

  /// Natural exponential-family parameter theta at x; used by the
  /// monotone-likelihood-ratio check.
  double natural_parameter(const Eigen::VectorXd& u,
                           const Eigen::VectorXd& z) const;

 private:
  OutcomeFamily family_;
  MeanStructure mean_;
  Eigen::VectorXd kappa_;
  double sigma2_;
};

}  // namespace mnar
