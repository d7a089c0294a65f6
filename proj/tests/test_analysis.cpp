#include "mpgm/analysis.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace mpgm;

TEST(Mollify, ConservesMass) {
  for (const auto& pb : {lb_problem(Grid::torus(1, 300), Setting::I), deconv_problem(Grid::torus(2, 30),
                                                                                      Regularizer::tv(0.5))}) {
    const double mass = [&] {
      double m = 0.0;
      for (const auto& a : pb.mu_star) m += a.weight;
      return m;
    }();
    for (double eps : {0.02, 0.1, 0.3}) EXPECT_NEAR(total_mass(pb.grid, mollify(pb, eps)), mass, 1e-12) << eps;
  }
}

TEST(Mollify, WholeDomainIsUniform) {
  Problem pb = lb_problem(Grid::torus(1, 101), Setting::II);
  Density f = mollify(pb, pb.grid.diameter());
  EXPECT_NEAR(f.maxCoeff(), 1.0, 1e-12);
  EXPECT_NEAR(f.minCoeff(), 1.0, 1e-12);
  EXPECT_THROW(mollify(pb, 0.0), std::invalid_argument);
}

TEST(Psi, ShapeAndBounds) {
  Problem pb = lb_problem(Grid::torus(1, 2000), Setting::II_star);
  Density f0 = uniform_density(pb.grid);
  const double bound = eval_F(pb, f0) - *pb.inf_value;
  std::vector<double> alphas{0.0};
  for (int i = 0; i <= 40; ++i) alphas.push_back(1e-3 * i / 40.0 + 1e-6);
  for (const auto& dgf : {Dgf::power(2.0), Dgf::entropy()}) {
    auto eps = default_eps_grid(pb.grid);
    auto curve = psi_envelope(pb, dgf, f0, alphas, eps);
    auto family = mollified_family(pb, dgf, f0, eps, *pb.inf_value);
    double min_gap = family.front().gap;
    for (const auto& c : family) min_gap = std::min(min_gap, c.gap);
    EXPECT_EQ(curve.front().psi, min_gap);
    for (const auto& p : curve) {
      EXPECT_GE(p.psi, 0.0);
      EXPECT_LE(p.psi, bound);
    }
    // concave in alpha: second differences on the uniform part of the grid
    for (std::size_t i = 2; i + 1 < curve.size(); ++i) {
      double second = curve[i + 1].psi - 2.0 * curve[i].psi + curve[i - 1].psi;
      EXPECT_LE(second, 1e-15) << dgf.token() << " i=" << i;
    }
  }
}

TEST(Psi, AlphaExponentsOnSmallGrids) {
  // the mollified candidates give psi ~ alpha^{q/(d+q)} for the L2 geometry
  {
    Problem pb = lb_problem(Grid::torus(1, 2000), Setting::II_star);
    auto curve = psi_envelope(pb, Dgf::power(2.0), uniform_density(pb.grid), log_space(1e-6, 1e-2, 41),
                              default_eps_grid(pb.grid));
    EXPECT_NEAR(fit_psi(curve, 1e-6, 1e-2).slope, 0.8, 0.1);
  }
  {
    Problem pb = lb_problem(Grid::torus(1, 20000), Setting::I);
    auto curve = psi_envelope(pb, Dgf::power(2.0), uniform_density(pb.grid), log_space(1e-6, 1e-2, 41),
                              default_eps_grid(pb.grid));
    EXPECT_NEAR(fit_psi(curve, 1e-6, 1e-2).slope, 0.5, 0.1);
  }
}

TEST(Psi, NeedsInfimum) {
  Problem pb = lb_problem(Grid::torus(1, 50), Setting::I);
  pb.inf_value.reset();
  EXPECT_THROW(psi_envelope(pb, Dgf::power(2.0), uniform_density(pb.grid), {0.1}, {0.2}), std::invalid_argument);
}

TEST(Rates, TheoreticalExponents) {
  EXPECT_DOUBLE_EQ(theoretical_exponent(Method::pgm, Dgf::power(2.0), 4, 1).exponent, -0.8);
  auto ent = theoretical_exponent(Method::apgm, Dgf::entropy(), 2, 3);
  EXPECT_DOUBLE_EQ(ent.exponent, -2.0);
  EXPECT_TRUE(ent.log_factor);
  EXPECT_NEAR(theoretical_exponent(Method::pgm, Dgf::power(1.5), 2, 2).exponent, -2.0 / 3.0, 1e-15);
  EXPECT_DOUBLE_EQ(theoretical_exponent(Method::apgm, Dgf::power(2.0), 1, 1).exponent, -1.0);
  EXPECT_DOUBLE_EQ(theoretical_exponent(Method::pgm, Dgf::hyperbolic(), 1, 1).exponent, -1.0);
  EXPECT_THROW(theoretical_exponent(Method::pgm, Dgf::power(2.0), 3, 1), std::invalid_argument);
}

TEST(Rates, Classification) {
  EXPECT_EQ(classify_setting(relu_problem(Grid::circle(40), 10, Regularizer::tv(0.05))).q, 1);
  EXPECT_EQ(classify_setting(deconv_problem(Grid::torus(1, 50), Regularizer::nonneg())).q, 4);
  EXPECT_EQ(classify_setting(lb_problem(Grid::torus(1, 50), Setting::II)).q, 2);

  // untagged problems are classified from G'[mu*] and the regularity of Phi
  for (auto s : {Setting::I, Setting::I_star, Setting::II, Setting::II_star}) {
    Problem pb = lb_problem(Grid::torus(1, 50), s);
    pb.setting.reset();
    EXPECT_EQ(classify_setting(pb).setting, s) << to_string(s);
  }
  Problem faint = lb_problem(Grid::torus(1, 50), Setting::I);
  faint.setting.reset();
  faint.smooth.outer.linear *= 1e-6;
  try {
    classify_setting(faint);
    FAIL() << "expected an ambiguous classification";
  } catch (const AmbiguousSetting& e) {
    EXPECT_EQ(e.first, Setting::I);
    EXPECT_EQ(e.second, Setting::I_star);
  }
}

TEST(Rates, FitsSyntheticTraces) {
  std::vector<double> ks, power, loglin, flat;
  for (long k : geometric_schedule(100000)) {
    ks.push_back(static_cast<double>(k));
    double x = std::max<double>(k, 1);
    power.push_back(std::pow(x, -0.8));
    loglin.push_back(std::log(x) / x);
    flat.push_back(3.0);
  }
  FitOptions opt;
  EXPECT_NEAR(fit_rate(ks, power, opt).slope, -0.8, 1e-6);
  EXPECT_NEAR(fit_rate(ks, flat, opt).slope, 0.0, 1e-12);
  opt.strip_log = true;
  EXPECT_NEAR(fit_rate(ks, loglin, opt).slope, -1.0, 0.01);

  FitOptions empty;
  empty.k_lo = 2e5;
  empty.k_hi = 3e5;
  EXPECT_THROW(fit_rate(ks, power, empty), FitError);
}

TEST(Rates, TruncatesAtPrecision) {
  std::vector<double> ks, gaps;
  for (long k : geometric_schedule(100000)) {
    ks.push_back(static_cast<double>(k));
    gaps.push_back(std::max(std::pow(std::max<double>(k, 1), -1.0), 1e-30));
  }
  FitOptions opt;
  opt.precision = 2e-5;
  opt.precision_factor = 1.0;
  RateFit fit = fit_rate(ks, gaps, opt);
  EXPECT_TRUE(fit.truncated);
  EXPECT_LE(fit.k_hi, 1e5);
  EXPECT_NEAR(fit.slope, -1.0, 1e-9);
}

TEST(Rates, DiscretizationFloor) {
  Problem pb = deconv_problem(Grid::torus(1, 300), Regularizer::nonneg());
  const double floor = discretization_floor(pb);
  EXPECT_GT(floor, 0.0);
  EXPECT_LT(floor, 1e-5);
  // a finer grid resolves the minimizer better
  EXPECT_LT(discretization_floor(deconv_problem(Grid::torus(1, 600), Regularizer::nonneg())), floor);
}
