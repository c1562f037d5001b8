#include <doctest.h>

#include <cmath>
#include <vector>

#include "mnar/links.hpp"
#include "mnar/quadrature.hpp"

using namespace mnar;

namespace {

std::vector<LinkFunction> all_links() {
  return {LinkFunction::logistic(), LinkFunction::probit(),
          LinkFunction::cauchy(), LinkFunction::student_t(4)};
}

}  // namespace

TEST_CASE("links are strictly increasing cdfs into (0,1]") {
  // near 1 the cdf values saturate in double precision, so the right tail is
  // compared through the mirrored representation 1 - Psi(t) = Psi(-t)
  for (const auto& link : all_links()) {
    double prev_left = -1.0;
    double prev_right = 2.0;
    for (double t = -10.0; t <= 10.0 + 1e-9; t += 0.25) {
      const double v = link.cdf(t);
      CHECK(v > 0.0);
      CHECK(v <= 1.0);
      const double mirrored = link.cdf(-t);
      if (t <= 0.0) {
        CHECK(v > prev_left);
        prev_left = v;
      } else {
        CHECK(mirrored < prev_right);
        prev_right = mirrored;
      }
    }
    CHECK(link.cdf(0.0) == doctest::Approx(0.5).epsilon(1e-12));
  }
}

TEST_CASE("pdf matches central finite differences of the cdf") {
  const double h = 1e-5;
  for (const auto& link : all_links()) {
    for (double t = -10.0; t <= 10.0 + 1e-9; t += 0.5) {
      // in the far right tail the cdf differences fall below double
      // resolution; symmetric links let us check the mirrored point instead
      const double tt = link.cdf(t) > 1.0 - 1e-5 ? -t : t;
      const double fd = (link.cdf(tt + h) - link.cdf(tt - h)) / (2.0 * h);
      const double pd = link.pdf(tt);
      CHECK(std::abs(pd - fd) <= 1e-6 * std::max(std::abs(pd), 1e-12));
    }
  }
}

TEST_CASE("log_cdf stays accurate far into the left tail") {
  // moderate range: log of the direct cdf
  for (const auto& link : all_links()) {
    for (double t : {-5.0, -1.0, 0.0, 2.0}) {
      CHECK(link.log_cdf(t) ==
            doctest::Approx(std::log(link.cdf(t))).epsilon(1e-10));
    }
  }
  // probit deep tail against the asymptotic expansion value
  CHECK(log_normal_cdf(-40.0) == doctest::Approx(-804.608442).epsilon(1e-6));
  CHECK(log_normal_cdf(-20.0) == doctest::Approx(-203.917155).epsilon(1e-6));
  // logistic deep tail: log Psi(t) ~ t
  CHECK(LinkFunction::logistic().log_cdf(-40.0) ==
        doctest::Approx(-40.0).epsilon(1e-12));
}

TEST_CASE("score factor = pdf/cdf with stable tails") {
  for (const auto& link : all_links()) {
    for (double t : {-6.0, -2.0, 0.0, 1.5, 8.0}) {
      CHECK(link.score_factor(t) ==
            doctest::Approx(link.pdf(t) / link.cdf(t)).epsilon(1e-9));
    }
  }
  // probit far tail: psi/Psi ~ -t (inverse Mills ratio)
  const double r = LinkFunction::probit().score_factor(-30.0);
  CHECK(r == doctest::Approx(30.0332590).epsilon(1e-6));
  // logistic: 1 - Psi
  const LinkFunction lg = LinkFunction::logistic();
  CHECK(lg.score_factor(1.3) ==
        doctest::Approx(1.0 - lg.cdf(1.3)).epsilon(1e-12));
}

TEST_CASE("cauchy closed form and student-t alias") {
  const LinkFunction c = LinkFunction::cauchy();
  CHECK(c.cdf(1.0) == doctest::Approx(0.75).epsilon(1e-12));
  CHECK(c.cdf(-1.0) == doctest::Approx(0.25).epsilon(1e-12));
  CHECK(LinkFunction::student_t(1).kind() == LinkKind::Cauchy);
  CHECK(LinkFunction::student_t(1).cdf(2.5) ==
        doctest::Approx(c.cdf(2.5)).epsilon(1e-14));
}

TEST_CASE("student-t cdf agrees with quadrature of its own pdf") {
  // anchored at cdf(0) = 1/2, avoiding the slowly decaying tails
  const LinkFunction st = LinkFunction::student_t(4);
  for (double t : {-3.0, -0.7, 0.9, 2.0}) {
    const double inc = integrate_adaptive(
        [&](double x) { return st.pdf(x); }, 0.0, t, 1e-13);
    CHECK(st.cdf(t) == doctest::Approx(0.5 + inc).epsilon(1e-9));
  }
  CHECK(st.cdf(2.0) + st.cdf(-2.0) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("incomplete beta handles the symmetric branch boundary") {
  // a = b at x = 0.5 sits exactly on the continued-fraction switchover
  CHECK(incomplete_beta(0.5, 0.5, 0.5) == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(incomplete_beta(2.0, 2.0, 0.5) == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(incomplete_beta(2.0, 0.5, 0.8) ==
        doctest::Approx(1.0 - incomplete_beta(0.5, 2.0, 0.2)).epsilon(1e-12));
  CHECK(LinkFunction::student_t(4).cdf(2.0) ==
        doctest::Approx(0.9419417382415922).epsilon(1e-12));
}

TEST_CASE("link parsing round-trips") {
  for (const auto& link : all_links()) {
    CHECK(LinkFunction::parse(link.name()) == link);
  }
  CHECK_THROWS(LinkFunction::parse("loglog"));
  CHECK_THROWS(LinkFunction::student_t(0));
}
