#include "mpgm/grid.hpp"

#include <gtest/gtest.h>

#include <array>
#include <cmath>
#include <numbers>

using namespace mpgm;

TEST(Grid, TorusLatticeSizesAndWeights) {
  Grid g1 = Grid::torus(1, 300);
  EXPECT_EQ(g1.size(), 300u);
  EXPECT_DOUBLE_EQ(g1.weights()[0], 1.0 / 300);
  EXPECT_NEAR(g1.weights().sum(), 1.0, 1e-12);

  Grid g2 = Grid::torus(2, 60);
  EXPECT_EQ(g2.size(), 3600u);
  EXPECT_NEAR(g2.weights().sum(), 1.0, 1e-12);

  Grid one = Grid::torus(1, 1);
  ASSERT_EQ(one.size(), 1u);
  EXPECT_EQ(one.point(0)[0], 0.0);
  EXPECT_EQ(one.weights()[0], 1.0);
}

TEST(Grid, TorusRejectsBadShape) {
  EXPECT_THROW(Grid::torus(0, 10), std::invalid_argument);
  EXPECT_THROW(Grid::torus(1, 0), std::invalid_argument);
  EXPECT_THROW(Grid::torus(4, 2), std::invalid_argument);
}

TEST(Grid, CircleAngles) {
  Grid c = Grid::circle(2000);
  EXPECT_EQ(c.size(), 2000u);
  EXPECT_DOUBLE_EQ(c.weights()[7], 1.0 / 2000);

  Grid four = Grid::circle(4);
  const double pi = std::numbers::pi;
  EXPECT_DOUBLE_EQ(four.point(0)[0], 0.0);
  EXPECT_DOUBLE_EQ(four.point(1)[0], pi / 2);
  EXPECT_DOUBLE_EQ(four.point(2)[0], pi);
  EXPECT_DOUBLE_EQ(four.point(3)[0], 3 * pi / 2);

  Grid single = Grid::circle(1);
  EXPECT_EQ(single.point(0)[0], 0.0);
  EXPECT_EQ(single.weights()[0], 1.0);
  EXPECT_THROW(Grid::circle(0), std::invalid_argument);
}

TEST(Grid, GeodesicDistance) {
  std::array<double, 1> a{0.1}, b{0.9};
  EXPECT_NEAR(geodesic_dist(DomainKind::torus, a, b), 0.2, 1e-15);

  std::array<double, 2> o{0.0, 0.0}, c{0.5, 0.5};
  EXPECT_NEAR(geodesic_dist(DomainKind::torus, o, c), std::sqrt(0.5), 1e-15);
  EXPECT_EQ(geodesic_dist(DomainKind::torus, c, c), 0.0);

  std::array<double, 1> t0{0.1}, t1{2.0 * std::numbers::pi - 0.1};
  EXPECT_NEAR(geodesic_dist(DomainKind::circle, t0, t1), 0.2, 1e-14);
  EXPECT_EQ(geodesic_dist(DomainKind::circle, t0, t0), 0.0);
}

TEST(Grid, BallMass) {
  Grid g = Grid::torus(1, 300);
  std::array<double, 1> center{0.0};
  // 30 lattice points on each side plus the center, all within 0.1 inclusive
  EXPECT_NEAR(ball_mass(g, center, 0.1), 61.0 / 300, 1e-15);
  EXPECT_NEAR(ball_mass(g, center, g.diameter()), 1.0, 1e-12);
  EXPECT_NEAR(ball_mass(g, center, 0.4 * g.spacing()), 1.0 / 300, 1e-15);

  // off-lattice center with a small radius only catches the nearest point
  std::array<double, 1> off{0.3 * g.spacing()};
  EXPECT_NEAR(ball_mass(g, off, 0.45 * g.spacing()), 1.0 / 300, 1e-15);
  EXPECT_THROW(ball_mass(g, center, 0.0), std::invalid_argument);
}

TEST(Grid, NormsAndDirac) {
  Grid g = Grid::torus(1, 10);
  Density f = Density::Constant(10, -2.0);
  EXPECT_NEAR(l1_norm(g, f), 2.0, 1e-15);
  EXPECT_NEAR(total_mass(g, f), -2.0, 1e-15);

  std::array<double, 1> at{0.52};
  Density d = discrete_dirac(g, at);
  EXPECT_NEAR(total_mass(g, d), 1.0, 1e-15);
  EXPECT_EQ(d[5], 10.0);

  Density wrong = Density::Zero(3);
  EXPECT_THROW(l1_norm(g, wrong), std::invalid_argument);
}
