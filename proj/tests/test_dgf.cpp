#include "mpgm/dgf.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <vector>

using namespace mpgm;

namespace {

std::vector<Dgf> all_kinds() {
  return {Dgf::power(2.0), Dgf::power(1.5), Dgf::power(1.2), Dgf::entropy(), Dgf::hyperbolic(), Dgf::hyperbolic(0.1)};
}

}  // namespace

TEST(Dgf, PointValues) {
  EXPECT_DOUBLE_EQ(Dgf::entropy().eta(1.0), 0.0);
  EXPECT_DOUBLE_EQ(Dgf::power(2.0).eta(3.0), 4.5);
  EXPECT_DOUBLE_EQ(Dgf::hyperbolic(0.1).eta(0.0), 0.0);
  EXPECT_DOUBLE_EQ(Dgf::hyperbolic(7.0).prime(0.0), 0.0);
  EXPECT_THROW(Dgf::entropy().eta(-1.0), std::domain_error);
}

TEST(Dgf, ParseAndToken) {
  EXPECT_TRUE(Dgf::parse("ent").is_entropy());
  EXPECT_DOUBLE_EQ(Dgf::parse("hyp").sc_offset(), 1e-3);
  EXPECT_DOUBLE_EQ(Dgf::parse("hyp:0.25").sc_offset(), 0.25);
  EXPECT_DOUBLE_EQ(Dgf::parse("p:1.5").sc_exponent(), 1.5);
  EXPECT_EQ(Dgf::parse("p:1.5").token(), "p:1.5");
  EXPECT_THROW(Dgf::parse("p:1"), std::invalid_argument);
  EXPECT_THROW(Dgf::parse("p:abc"), std::invalid_argument);
  EXPECT_THROW(Dgf::parse("hyp:-1"), std::invalid_argument);
  EXPECT_THROW(Dgf::parse("kl"), std::invalid_argument);
}

TEST(Dgf, MirrorMapRoundTrip) {
  for (const auto& dgf : all_kinds()) {
    for (double s : {0.01, 0.3, 1.0, 2.5, 40.0}) {
      EXPECT_NEAR(dgf.prime_inv(dgf.prime(s)), s, 1e-12 * s) << dgf.token() << " s=" << s;
      if (!dgf.nonnegative_domain()) {
        EXPECT_NEAR(dgf.prime_inv(dgf.prime(-s)), -s, 1e-12 * s) << dgf.token();
      }
    }
  }
}

TEST(Dgf, DerivativesMatchFiniteDifferences) {
  const double h = 1e-6;
  for (const auto& dgf : all_kinds()) {
    for (double s : {0.2, 1.0, 3.0}) {
      double fd1 = (dgf.eta(s + h) - dgf.eta(s - h)) / (2 * h);
      EXPECT_NEAR(fd1, dgf.prime(s), 1e-7 * std::max(1.0, std::abs(dgf.prime(s)))) << dgf.token();
      double fd2 = (dgf.prime(s + h) - dgf.prime(s - h)) / (2 * h);
      EXPECT_NEAR(fd2, dgf.second(s), 1e-6 * std::max(1.0, dgf.second(s))) << dgf.token();
      double u = dgf.prime(s);
      EXPECT_NEAR(dgf.prime_inv_derivative(u), 1.0 / dgf.second(s), 1e-10 / dgf.second(s)) << dgf.token();
    }
  }
}

TEST(Dgf, DivergenceOfConstants) {
  Grid g = Grid::torus(1, 8);
  Density f = Density::Constant(8, 2.0);
  Density one = Density::Constant(8, 1.0);
  EXPECT_NEAR(bregman_div(Dgf::entropy(), g, f, one), 2.0 * std::log(2.0) - 1.0, 1e-15);
  EXPECT_NEAR(bregman_div(Dgf::entropy(), g, f, f), 0.0, 1e-15);
  EXPECT_NEAR(bregman_div(Dgf::power(2.0), g, f, one), 0.5, 1e-15);
  EXPECT_NEAR(bregman_div_mirror(Dgf::entropy(), g, f, to_mirror(Dgf::entropy(), one)), 2.0 * std::log(2.0) - 1.0,
              1e-15);
}

TEST(Dgf, EntropyDivergenceAtZero) {
  Dgf ent = Dgf::entropy();
  EXPECT_DOUBLE_EQ(ent.pointwise_div(0.0, 3.0), 3.0);
  EXPECT_TRUE(std::isinf(ent.pointwise_div(1.0, 0.0)));
  EXPECT_DOUBLE_EQ(ent.pointwise_div(0.0, 0.0), 0.0);
  EXPECT_DOUBLE_EQ(ent.pointwise_div_mirror(0.0, std::log(3.0)), 3.0);
}

TEST(Dgf, LocalMetricExpansion) {
  // D(a, b) / ((a - b)^2 / 2) tends to eta''(b)
  for (const auto& dgf : all_kinds()) {
    for (double b : {0.5, 2.0}) {
      double a = b + 1e-4;
      double ratio = dgf.pointwise_div(a, b) / (0.5 * (a - b) * (a - b));
      EXPECT_NEAR(ratio, dgf.second(b), 1e-3 * dgf.second(b)) << dgf.token();
    }
  }
}

TEST(Dgf, StrongConvexityConstants) {
  for (double K : {0.3, 1.0, 7.0}) EXPECT_DOUBLE_EQ(Dgf::power(2.0).sc_constant(K), 0.5);
  EXPECT_DOUBLE_EQ(Dgf::entropy().sc_constant(1.0), 0.5);
  EXPECT_NEAR(Dgf::hyperbolic(0.1).sc_constant(1.0), 1.0 / 2.2, 1e-15);
  EXPECT_NEAR(Dgf::power(1.5).sc_constant(4.0), 0.25, 1e-15);
  EXPECT_THROW(Dgf::power(3.0).sc_constant(1.0), std::invalid_argument);
  EXPECT_THROW(Dgf::entropy().sc_constant(0.0), std::invalid_argument);
}

TEST(Dgf, StepSize) {
  EXPECT_DOUBLE_EQ(Dgf::power(2.0).step_size(1.0, 1.0, 2.0), 0.5);
  EXPECT_DOUBLE_EQ(Dgf::entropy().step_size(1.0, 1.0, 1.0), 1.0);
  EXPECT_NEAR(Dgf::entropy().step_size(4.0, 1.0, 1.0), 0.25, 1e-15);
  EXPECT_TRUE(std::isinf(Dgf::entropy().step_size(1.0, 1.0, 0.0)));
  EXPECT_THROW(Dgf::power(2.5).step_size(1.0, 1.0, 1.0), std::invalid_argument);
}
