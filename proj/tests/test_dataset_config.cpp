#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>

#include "mnar/config.hpp"
#include "mnar/dataset.hpp"
#include "mnar/errors.hpp"
#include "mnar/estimate.hpp"
#include "mnar/rng.hpp"

using namespace mnar;

namespace {

Dataset toy_dataset(int n, std::uint64_t seed) {
  Dataset data;
  data.u.resize(n, 1);
  data.z.resize(n, 1);
  data.y.resize(n);
  data.delta.assign(n, 0);
  data.u_names = {"u"};
  data.z_names = {"z"};
  RngStream rng(seed, 0);
  for (int i = 0; i < n; ++i) {
    data.u(i, 0) = rng.normal();
    data.z(i, 0) = rng.bernoulli(0.5);
    if (rng.bernoulli(0.7)) {
      data.delta[i] = 1;
      data.y(i) = 1.0 + data.u(i, 0) + rng.normal();
    } else {
      data.y(i) = std::numeric_limits<double>::quiet_NaN();
    }
  }
  return data;
}

std::string temp_path(const std::string& name) {
  return std::string("/tmp/mnar_test_") + name;
}

}  // namespace

TEST_CASE("CSV write/read round-trip") {
  const Dataset data = toy_dataset(40, 1);
  const std::string path = temp_path("roundtrip.csv");
  write_dataset_csv(path, data);
  ColumnRoles roles{"y", "delta", {"u"}, {"z"}};
  const Dataset back = read_dataset_csv(path, roles);
  REQUIRE(back.n() == data.n());
  for (int i = 0; i < data.n(); ++i) {
    CHECK(back.u(i, 0) == doctest::Approx(data.u(i, 0)).epsilon(1e-14));
    CHECK(back.delta[i] == data.delta[i]);
    if (data.delta[i])
      CHECK(back.y(i) == doctest::Approx(data.y(i)).epsilon(1e-14));
  }
  std::remove(path.c_str());
}

TEST_CASE("schema violations name the offending row") {
  const std::string path = temp_path("bad.csv");
  {
    std::ofstream out(path);
    out << "u,z,y,delta\n";
    out << "0.1,1,2.5,1\n";
    out << "0.2,0,3.5,0\n";  // y present with delta = 0
  }
  ColumnRoles roles{"y", "delta", {"u"}, {"z"}};
  try {
    read_dataset_csv(path, roles);
    FAIL("expected SchemaError");
  } catch (const SchemaError& e) {
    CHECK(std::string(e.what()).find("row 2") != std::string::npos);
  }
  {
    std::ofstream out(path);
    out << "u,z,y,delta\n";
    out << "0.1,1,,1\n";  // y missing with delta = 1
  }
  CHECK_THROWS_AS(read_dataset_csv(path, roles), SchemaError);
  {
    std::ofstream out(path);
    out << "u,z,y,delta\n";
    out << "abc,1,2.0,1\n";
  }
  CHECK_THROWS_AS(read_dataset_csv(path, roles), SchemaError);
  std::remove(path.c_str());
}

TEST_CASE("dataset invariants") {
  Dataset data = toy_dataset(10, 2);
  CHECK_NOTHROW(data.validate(true));
  Dataset no_instrument = data;
  no_instrument.z.resize(10, 0);
  no_instrument.z_names.clear();
  CHECK_THROWS_AS(no_instrument.validate(true), SchemaError);
  CHECK_NOTHROW(no_instrument.validate(false));
  Dataset broken = data;
  broken.delta[0] = !broken.delta[0];
  CHECK_THROWS_AS(broken.validate(false), SchemaError);
}

TEST_CASE("standardization records the transform and zeroes the moments") {
  const Dataset data = toy_dataset(500, 3);
  const Dataset std_data = data.standardized();
  const Standardization& rec = std_data.standardization;
  CHECK(rec.applied);
  CHECK(std::abs(std_data.u.col(0).mean()) < 1e-12);
  const double sd = std::sqrt(
      (std_data.u.col(0).array() - std_data.u.col(0).mean()).square().sum() /
      (data.n() - 1));
  CHECK(sd == doctest::Approx(1.0).epsilon(1e-12));
  // y standardized over respondents
  double sum = 0.0;
  int m = 0;
  for (int i = 0; i < data.n(); ++i)
    if (data.delta[i]) {
      sum += std_data.y(i);
      ++m;
    }
  CHECK(std::abs(sum / m) < 1e-12);
  CHECK(rec.y_sd > 0.0);
}

TEST_CASE("back-transformed response parameters reproduce the predictor") {
  const Dataset data = toy_dataset(300, 4);
  const Dataset std_data = data.standardized();
  const ResponseModel skeleton = ResponseModel::standard(
      LinkFunction::logistic(), Eigen::Vector2d::Zero(), 0.0, 1);
  Eigen::VectorXd phi_std(3);
  phi_std << 0.3, -0.8, 0.45;
  const Eigen::VectorXd phi =
      backtransform_phi(phi_std, std_data.standardization, skeleton);
  const ResponseModel m_std = skeleton.with_phi(phi_std);
  const ResponseModel m_orig = skeleton.with_phi(phi);
  for (int i = 0; i < data.n(); ++i) {
    if (!data.delta[i]) continue;
    const double t_std = m_std.predictor(std_data.u.row(i), std_data.y(i));
    const double t_orig = m_orig.predictor(data.u.row(i), data.y(i));
    CHECK(t_std == doctest::Approx(t_orig).epsilon(1e-10));
  }
}

TEST_CASE("back-transformed outcome parameters reproduce the mean") {
  const Dataset data = toy_dataset(300, 5);
  const Dataset std_data = data.standardized();
  OutcomeSpec spec;
  spec.family = OutcomeFamily::Normal;
  spec.linear = LinearBasis::intercept_and_all(1, 1);
  Eigen::VectorXd gamma_std(4);
  gamma_std << 0.2, 0.9, -0.4, 1.7;
  const Eigen::VectorXd gamma =
      backtransform_gamma(gamma_std, std_data.standardization, spec);
  OutcomeModel m_std(OutcomeFamily::Normal,
                     MeanStructure::from_linear(spec.linear),
                     gamma_std.head(3), gamma_std(3));
  OutcomeModel m_orig(OutcomeFamily::Normal,
                      MeanStructure::from_linear(spec.linear), gamma.head(3),
                      gamma(3));
  const Standardization& rec = std_data.standardization;
  for (int i = 0; i < 20; ++i) {
    const double mu_std = m_std.mean(std_data.u.row(i), std_data.z.row(i));
    const double mu_orig = m_orig.mean(data.u.row(i), data.z.row(i));
    CHECK(rec.y_mean + rec.y_sd * mu_std ==
          doctest::Approx(mu_orig).epsilon(1e-10));
  }
  CHECK(gamma(3) == doctest::Approx(rec.y_sd * rec.y_sd * 1.7).epsilon(1e-12));
}

TEST_CASE("key-value config parsing, types and errors") {
  const KeyValueConfig cfg = KeyValueConfig::parse_string(
      "# comment\n"
      "response.link = logistic\n"
      "response.alpha = 0.7, -0.2\n"
      "outcome.sigma2 = 0.5\n"
      "flag = true\n"
      "table = 1,2;3,4\n");
  CHECK(cfg.get("response.link") == "logistic");
  CHECK(cfg.get_vector("response.alpha")(1) == doctest::Approx(-0.2));
  CHECK(cfg.get_double("outcome.sigma2") == 0.5);
  CHECK(cfg.get_bool("flag", false));
  CHECK(cfg.get_matrix("table")(1, 0) == 3.0);
  CHECK_THROWS_AS(cfg.get("missing.key"), ConfigError);
  CHECK_THROWS_AS(cfg.get_double("response.link"), ConfigError);
  CHECK_THROWS_AS(KeyValueConfig::parse_string("no equals sign"),
                  ConfigError);
}

TEST_CASE("model config round-trip") {
  Eigen::Vector2d alpha(0.7, -0.2);
  const ResponseModel response =
      ResponseModel::standard(LinkFunction::student_t(4), alpha, 0.29, 1);
  LinearBasis b = LinearBasis::intercept_and_all(1, 1);
  Eigen::VectorXd kappa(3);
  kappa << 0.3, 0.4, 1.0;
  const OutcomeModel outcome(OutcomeFamily::Normal,
                             MeanStructure::from_linear(b), kappa, 0.5);

  KeyValueConfig cfg;
  response_model_to_config(response, cfg);
  outcome_model_to_config(outcome, cfg);
  const std::string text = cfg.serialize();

  const KeyValueConfig parsed = KeyValueConfig::parse_string(text);
  const ResponseModel r2 = response_model_from_config(parsed, 1);
  const OutcomeModel o2 = outcome_model_from_config(parsed, 1, 1);
  CHECK(r2.link() == response.link());
  CHECK((r2.alpha() - response.alpha()).cwiseAbs().maxCoeff() < 1e-15);
  CHECK(r2.beta()(0) == doctest::Approx(0.29));
  CHECK((o2.kappa() - outcome.kappa()).cwiseAbs().maxCoeff() < 1e-15);
  CHECK(o2.sigma2() == doctest::Approx(0.5));
}
