#include <doctest.h>

#include <cmath>

#include "mnar/errors.hpp"
#include "mnar/models.hpp"
#include "mnar/quadrature.hpp"
#include "mnar/rng.hpp"

using namespace mnar;

namespace {

Eigen::VectorXd vec1(double v) {
  Eigen::VectorXd out(1);
  out << v;
  return out;
}

OutcomeModel s1_outcome(double kappa2 = 1.0) {
  LinearBasis b = LinearBasis::intercept_and_all(1, 1);
  Eigen::VectorXd kappa(3);
  kappa << 0.3, 0.4, kappa2;
  return OutcomeModel(OutcomeFamily::Normal, MeanStructure::from_linear(b),
                      kappa, 0.5);
}

}  // namespace

TEST_CASE("response_prob evaluates Psi(h + g m(y))") {
  // S1 truth at u = 0, y = 0: Psi(0.7)
  Eigen::Vector2d alpha(0.7, -0.2);
  const ResponseModel s1 =
      ResponseModel::standard(LinkFunction::logistic(), alpha, 0.29, 1);
  CHECK(s1.response_prob(vec1(0.0), 0.0) ==
        doctest::Approx(0.66818777).epsilon(1e-6));

  // symmetric link at the origin
  const ResponseModel flat = ResponseModel::standard(
      LinkFunction::probit(), Eigen::Vector2d::Zero(), 0.0, 1);
  CHECK(flat.response_prob(vec1(3.7), -11.0) ==
        doctest::Approx(0.5).epsilon(1e-12));

  // Cauchy link at predictor 1: 1/2 + arctan(1)/pi = 0.75
  LinearBasis h;
  h.intercept = true;
  LinearBasis g;
  g.intercept = true;
  const ResponseModel cauchy(LinkFunction::cauchy(), h, vec1(1.0), g,
                             vec1(0.0));
  CHECK(cauchy.response_prob(Eigen::VectorXd(), 123.0) ==
        doctest::Approx(0.75).epsilon(1e-12));
}

TEST_CASE("response_prob with beta = 0 is constant in y") {
  Eigen::Vector2d alpha(0.4, 1.1);
  const ResponseModel m =
      ResponseModel::standard(LinkFunction::cauchy(), alpha, 0.0, 1);
  RngStream rng(3, 1);
  const double ref = m.response_prob(vec1(0.8), 0.0);
  for (int i = 0; i < 50; ++i)
    CHECK(m.response_prob(vec1(0.8), rng.normal(0, 10)) ==
          doctest::Approx(ref).epsilon(1e-14));
}

TEST_CASE("non-finite predictors and bad construction are rejected") {
  Eigen::Vector2d alpha(0.7, -0.2);
  const ResponseModel s1 =
      ResponseModel::standard(LinkFunction::logistic(), alpha, 0.29, 1);
  CHECK_THROWS_AS(
      s1.response_prob(vec1(std::numeric_limits<double>::infinity()), 0.0),
      DomainError);
  // instrument exclusion is structural
  LinearBasis h;
  h.intercept = true;
  h.z_cols.push_back(0);
  LinearBasis g;
  g.intercept = true;
  CHECK_THROWS_AS(ResponseModel(LinkFunction::logistic(), h,
                                Eigen::Vector2d::Zero(), g, vec1(0.0)),
                  DomainError);
}

TEST_CASE("outcome density values") {
  // standard normal at its mode
  LinearBasis b0;
  b0.intercept = true;
  OutcomeModel std_normal(OutcomeFamily::Normal,
                          MeanStructure::from_linear(b0), vec1(0.0), 1.0);
  CHECK(std_normal.density(Eigen::VectorXd(), Eigen::VectorXd(), 0.0) ==
        doctest::Approx(0.3989422804).epsilon(1e-9));

  // S1 at u=0, z=1: N(1.3; 1.3, 0.5) = 1/sqrt(pi)
  const OutcomeModel s1 = s1_outcome();
  CHECK(s1.density(vec1(0.0), vec1(1.0), 1.3) ==
        doctest::Approx(0.5641895835).epsilon(1e-9));

  // Bernoulli mass
  LinearBasis b = LinearBasis::intercept_and_all(1, 1);
  Eigen::VectorXd kappa(3);
  kappa << -0.21, 3.8, 1.0;
  OutcomeModel bern(OutcomeFamily::Bernoulli, MeanStructure::from_linear(b),
                    kappa);
  const double p = bern.mean(vec1(0.2), vec1(-0.5));
  CHECK(bern.density(vec1(0.2), vec1(-0.5), 1.0) ==
        doctest::Approx(p).epsilon(1e-12));
  CHECK_THROWS_AS(bern.density(vec1(0.2), vec1(-0.5), 0.5), DomainError);
}

TEST_CASE("densities are normalized") {
  const OutcomeModel s1 = s1_outcome();
  const double total = integrate_over_y(
      [](double) { return 1.0; }, s1, vec1(0.4), vec1(1.0),
      QuadratureRule::gauss_hermite_rule(60));
  CHECK(std::abs(total - 1.0) < 1e-8);

  LinearBasis b = LinearBasis::intercept_and_all(1, 0);
  Eigen::VectorXd kappa(2);
  kappa << 0.3, -1.0;
  OutcomeModel bern(OutcomeFamily::Bernoulli, MeanStructure::from_linear(b),
                    kappa);
  const double mass = integrate_over_y(
      [](double) { return 1.0; }, bern, vec1(0.7), Eigen::VectorXd(),
      QuadratureRule::exact_discrete({0.0, 1.0}));
  CHECK(std::abs(mass - 1.0) < 1e-14);
}

TEST_CASE("outcome scores match finite differences") {
  RngStream rng(17, 0);
  const double h = 1e-5;
  for (int rep = 0; rep < 50; ++rep) {
    const bool normal = rep % 2 == 0;
    LinearBasis b = LinearBasis::intercept_and_all(1, 1);
    Eigen::VectorXd kappa(3);
    kappa << rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1);
    const double s2 = rng.uniform(0.3, 2.0);
    OutcomeModel model(normal ? OutcomeFamily::Normal
                              : OutcomeFamily::Bernoulli,
                       MeanStructure::from_linear(b), kappa, normal ? s2 : 1.0);
    Eigen::VectorXd u = vec1(rng.normal());
    Eigen::VectorXd z = vec1(rng.bernoulli(0.5) ? 1.0 : 0.0);
    const double y =
        normal ? model.mean(u, z) + rng.normal() : (rng.bernoulli(0.6) ? 1 : 0);

    const Eigen::VectorXd score = model.score(u, z, y);
    const Eigen::VectorXd gamma = model.gamma();
    for (Eigen::Index j = 0; j < gamma.size(); ++j) {
      Eigen::VectorXd gp = gamma, gm = gamma;
      gp(j) += h;
      gm(j) -= h;
      const double fd = (model.with_gamma(gp).log_density(u, z, y) -
                         model.with_gamma(gm).log_density(u, z, y)) /
                        (2.0 * h);
      CHECK(std::abs(score(j) - fd) <=
            1e-6 * std::max(1.0, std::abs(score(j))));
    }
  }

  // score w.r.t. a mean coefficient vanishes at zero residual
  const OutcomeModel s1 = s1_outcome();
  const Eigen::VectorXd sc =
      s1.score(vec1(0.5), vec1(1.0), s1.mean(vec1(0.5), vec1(1.0)));
  CHECK(std::abs(sc(0)) < 1e-14);
  CHECK(std::abs(sc(1)) < 1e-14);
}

TEST_CASE("parameter packing round-trips") {
  Eigen::Vector2d alpha(0.7, -0.2);
  const ResponseModel s1 =
      ResponseModel::standard(LinkFunction::logistic(), alpha, 0.29, 1);
  const Eigen::VectorXd phi = s1.phi();
  CHECK(phi.size() == 3);
  CHECK(phi(2) == 0.29);
  Eigen::VectorXd phi2 = phi;
  phi2(2) = -0.5;
  CHECK(s1.with_phi(phi2).beta()(0) == -0.5);

  const OutcomeModel out = s1_outcome();
  Eigen::VectorXd gamma = out.gamma();
  CHECK(gamma.size() == 4);
  CHECK(gamma(3) == 0.5);
  gamma(3) = 0.25;
  CHECK(out.with_gamma(gamma).sigma2() == 0.25);
}
