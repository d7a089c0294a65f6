#include "mpgm/objective.hpp"

#include <gtest/gtest.h>

#include <array>
#include <cmath>

using namespace mpgm;

TEST(Regularizer, ParseTokens) {
  EXPECT_EQ(Regularizer::parse("nonneg").kind(), RegKind::nonneg_plus_tv);
  EXPECT_DOUBLE_EQ(Regularizer::parse("nonneg:0.5").lambda(), 0.5);
  EXPECT_EQ(Regularizer::parse("simplex").kind(), RegKind::simplex);
  EXPECT_DOUBLE_EQ(Regularizer::parse("tv:0.05").lambda(), 0.05);
  EXPECT_DOUBLE_EQ(Regularizer::parse("ball:2").radius(), 2.0);
  EXPECT_THROW(Regularizer::parse("tv:-1"), std::invalid_argument);
  EXPECT_THROW(Regularizer::parse("tv_ball:0"), std::invalid_argument);
  EXPECT_THROW(Regularizer::parse("box"), std::invalid_argument);
}

TEST(Regularizer, ValuesAndIndicators) {
  Grid g = Grid::torus(1, 4);
  Density f(4);
  f << 1.0, -1.0, 2.0, 2.0;
  EXPECT_DOUBLE_EQ(Regularizer::tv(0.5).value(g, f), 0.75);
  EXPECT_TRUE(std::isinf(Regularizer::nonneg(0.5).value(g, f)));
  EXPECT_TRUE(std::isinf(Regularizer::simplex().value(g, f)));
  EXPECT_TRUE(std::isinf(Regularizer::tv_ball(1.0).value(g, f)));
  EXPECT_DOUBLE_EQ(Regularizer::tv_ball(2.0).value(g, f), 0.0);
  Density p = Density::Ones(4);
  EXPECT_DOUBLE_EQ(Regularizer::simplex().value(g, p), 0.0);
  EXPECT_DOUBLE_EQ(Regularizer::nonneg(0.1).value(g, p), 0.1);
}

TEST(Objective, LinearValueAtMinimizer) {
  Problem pb = lb_problem(Grid::torus(1, 100), Setting::I);
  Density f = discrete_mu_star(pb);
  EXPECT_DOUBLE_EQ(eval_F(pb, f), 0.0);
  EXPECT_DOUBLE_EQ(*pb.inf_value, 0.0);
}

TEST(Objective, LowerBoundMassAwayFromMinimizer) {
  // mass 1/2 outside B_eps(0) costs at least eps / 2
  Grid g = Grid::torus(1, 200);
  Problem pb = lb_problem(g, Setting::I);
  const double eps = 0.1;
  Density f = Density::Zero(200);
  std::array<double, 1> far{0.3};
  f += discrete_dirac(g, far, 0.5);
  std::array<double, 1> origin{0.0};
  f += discrete_dirac(g, origin, 0.5);
  EXPECT_GE(eval_F(pb, f) - *pb.inf_value, eps / 2);
}

TEST(Objective, StarredSettingsHaveVanishingPotential) {
  for (auto s : {Setting::I_star, Setting::II_star}) {
    Problem pb = lb_problem(Grid::torus(1, 100), s);
    EXPECT_EQ(grad_potential(pb, discrete_mu_star(pb)).cwiseAbs().maxCoeff(), 0.0) << to_string(s);
  }
  Problem plain = lb_problem(Grid::torus(1, 100), Setting::II);
  EXPECT_GT(grad_potential(plain, discrete_mu_star(plain)).cwiseAbs().maxCoeff(), 0.1);
}

TEST(Objective, SmoothProfileIsC1) {
  EXPECT_DOUBLE_EQ(smooth_sq_profile(0.2), 0.04);
  EXPECT_DOUBLE_EQ(smooth_sq_profile(0.5), 0.26);
  const double h = 1e-7;
  for (double r : {0.4, 0.45, 0.5}) {
    double left = (smooth_sq_profile(r) - smooth_sq_profile(r - h)) / h;
    double right = (smooth_sq_profile(r + h) - smooth_sq_profile(r)) / h;
    EXPECT_NEAR(left, right, 1e-5) << r;
  }
}

TEST(Objective, DeconvolutionResidualNonnegative) {
  Grid g = Grid::torus(1, 300);
  Problem pb = deconv_problem(g, Regularizer::nonneg());
  Density exact = discrete_mu_star(pb);
  EXPECT_GE(eval_G(pb, exact), 0.0);
  EXPECT_NEAR(eval_G(pb, exact), 0.0, 1e-12);
  EXPECT_NEAR(eval_F(pb, exact), *pb.inf_value, 1e-12);
  EXPECT_EQ(*pb.setting, Setting::II_star);
}

TEST(Objective, DeconvolutionClosedFormInfimum) {
  // G'[c delta_0] = 2 (c - 1) phi with phi(0) = 5; optimality at the origin
  // gives c = 1 - lambda / 10 and inf = lambda - lambda^2 / 20.
  Grid g = Grid::torus(1, 300);
  const double lambda = 0.5;
  Problem pb = deconv_problem(g, Regularizer::tv(lambda));
  const double c = 1.0 - lambda / 10.0;
  EXPECT_NEAR(*pb.inf_value, lambda - lambda * lambda / 20.0, 1e-15);
  Density f = discrete_mu_star(pb);
  EXPECT_NEAR(f.dot(g.weights()), c, 1e-14);
  EXPECT_NEAR(eval_F(pb, f), *pb.inf_value, 1e-12);
  // first-order optimality: |G'| <= lambda everywhere, = lambda on the support
  Vector pot = grad_potential(pb, f);
  EXPECT_NEAR(pot[0], -lambda, 1e-12);
  EXPECT_LE(pot.cwiseAbs().maxCoeff(), lambda + 1e-12);

  Problem ball = deconv_problem(g, Regularizer::tv_ball(0.5));
  EXPECT_NEAR(*ball.inf_value, 0.25 * 5.0, 1e-14);
}

TEST(Objective, ReluDataIsSeeded) {
  Problem a = relu_problem(Grid::circle(50), 10, Regularizer::tv(0.05));
  Problem b = relu_problem(Grid::circle(50), 10, Regularizer::tv(0.05));
  Problem c = relu_problem(Grid::circle(50), 10, Regularizer::tv(0.05), 7);
  EXPECT_TRUE(a.smooth.outer.center == b.smooth.outer.center);
  EXPECT_FALSE(a.smooth.outer.center == c.smooth.outer.center);
  EXPECT_FALSE(a.inf_value.has_value());
  EXPECT_EQ(*a.setting, Setting::I);
}
