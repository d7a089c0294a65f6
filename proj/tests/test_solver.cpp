#include "mpgm/analysis.hpp"
#include "mpgm/solver.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

using namespace mpgm;

TEST(Gamma, Recursion) {
  EXPECT_NEAR(gamma_next(1.0), (std::sqrt(5.0) - 1.0) / 2.0, 1e-15);
  EXPECT_NEAR(gamma_next(0.5), 0.5 * (std::sqrt(0.0625 + 1.0) - 0.25), 1e-15);
  EXPECT_THROW(gamma_next(0.0), std::invalid_argument);
  EXPECT_THROW(gamma_next(1.5), std::invalid_argument);
  double g = 1.0;
  for (long k = 0; k <= 100000; ++k) {
    ASSERT_GT(g, 0.0);
    ASSERT_LE(g, 1.0);
    ASSERT_LE(g, 2.0 / (k + 2.0)) << k;
    // the recursion solves gamma_{k+1}^2 = (1 - gamma_{k+1}) gamma_k^2
    double next = gamma_next(g);
    ASSERT_NEAR(next * next, (1.0 - next) * g * g, 1e-15 * g * g);
    g = next;
  }
}

TEST(Schedule, Geometric) {
  auto ks = geometric_schedule(100000);
  EXPECT_EQ(ks.front(), 0);
  EXPECT_EQ(ks.back(), 100000);
  for (std::size_t i = 1; i < ks.size(); ++i) EXPECT_LT(ks[i - 1], ks[i]);
  EXPECT_GT(ks.size(), 300u);
  EXPECT_EQ(geometric_schedule(7).back(), 7);
  EXPECT_THROW(geometric_schedule(0), std::invalid_argument);
}

TEST(Solver, KBoundDefaults) {
  Grid g = Grid::torus(1, 50);
  Density f0 = uniform_density(g);
  EXPECT_EQ(default_k_bound(lb_problem(g, Setting::I), f0), 1.0);
  EXPECT_EQ(default_k_bound(deconv_problem(g, Regularizer::tv_ball(3.0)), f0), 3.0);
  Problem tv = deconv_problem(g, Regularizer::tv(0.5));
  EXPECT_DOUBLE_EQ(default_k_bound(tv, f0), eval_F(tv, f0) / 0.5);
  EXPECT_DOUBLE_EQ(default_k_bound(deconv_problem(g, Regularizer::nonneg()), f0), 2.0);
}

TEST(Solver, AffineObjectiveUsesUnitStep) {
  Problem pb = lb_problem(Grid::torus(1, 50), Setting::I);
  EXPECT_EQ(default_step(pb, Dgf::entropy(), 1.0), 1.0);
}

TEST(Solver, PgmDescends) {
  Problem pb = deconv_problem(Grid::torus(1, 100), Regularizer::nonneg());
  for (const auto& dgf : {Dgf::power(2.0), Dgf::power(1.5), Dgf::entropy()}) {
    SolverConfig cfg;
    cfg.iters = 500;
    Trace t = run_pgm(pb, dgf, uniform_density(pb.grid), cfg);
    ASSERT_FALSE(t.aborted);
    for (std::size_t i = 1; i < t.rows.size(); ++i) EXPECT_LE(t.rows[i].F, t.rows[i - 1].F + 1e-14) << dgf.token();
    EXPECT_LT(t.rows.back().gap, 0.01 * t.rows.front().gap) << dgf.token();
  }
}

TEST(Solver, TinyStepBarelyMoves) {
  for (const auto& pb : {deconv_problem(Grid::torus(1, 60), Regularizer::tv(0.05)),
                         lb_problem(Grid::torus(1, 60), Setting::II_star),
                         relu_problem(Grid::circle(60), 10, Regularizer::tv(0.05))}) {
    for (const auto& dgf : {Dgf::power(2.0), Dgf::hyperbolic(), Dgf::entropy()}) {
      SolverConfig cfg;
      cfg.iters = 1;
      cfg.step = 1e-12;
      Density f0 = uniform_density(pb.grid);
      Trace t = run_pgm(pb, dgf, f0, cfg);
      EXPECT_LE(std::abs(t.rows.back().F - t.rows.front().F), 1e-8) << pb.token << " " << dgf.token();
    }
  }
}

TEST(Solver, ClassicalGuarantees) {
  // F(f_k) - F(f) <= D(f, f0) / (s k) for PGM and 4 D(f, f0) / (s (k+1)^2) for APGM
  Grid g = Grid::torus(1, 400);
  for (auto setting : {Setting::I, Setting::II_star}) {
    Problem pb = lb_problem(g, setting);
    Density comparator = mollify(pb, 0.05);
    const double Fc = eval_F(pb, comparator);
    for (const auto& dgf : {Dgf::power(2.0), Dgf::entropy(), Dgf::hyperbolic()}) {
      const double D = bregman_div(dgf, g, comparator, uniform_density(g));
      for (Method m : {Method::pgm, Method::apgm}) {
        SolverConfig cfg;
        cfg.method = m;
        cfg.iters = 2000;
        Trace t = run_solver(pb, dgf, uniform_density(g), cfg);
        EXPECT_TRUE(t.warnings.empty()) << to_string(m) << " " << dgf.token();
        const double s = std::stod(*t.get_meta("step"));
        for (const auto& r : t.rows) {
          if (r.k < 1) continue;
          const double k = static_cast<double>(r.k);
          const double bound = m == Method::pgm ? D / (s * k) : 4.0 * D / (s * (k + 1) * (k + 1));
          EXPECT_LE(r.F - Fc, bound + 1e-12) << to_string(setting) << " " << to_string(m) << " " << dgf.token()
                                            << " k=" << r.k;
        }
      }
    }
  }
}

TEST(Solver, ApgmWarnsWhenBoundIsExceeded) {
  Problem pb = deconv_problem(Grid::torus(1, 100), Regularizer::nonneg());
  SolverConfig cfg;
  cfg.method = Method::apgm;
  cfg.iters = 200;
  cfg.k_bound = 0.5;  // below ||f0|| = 1, so h_k must leave the ball
  Trace t = run_apgm(pb, Dgf::power(2.0), uniform_density(pb.grid), cfg);
  ASSERT_FALSE(t.warnings.empty());
  EXPECT_TRUE(t.get_meta("k_bound_exceeded").has_value());
}

TEST(Solver, RejectsBadStarts) {
  Problem pb = lb_problem(Grid::torus(1, 20), Setting::I);
  SolverConfig cfg;
  EXPECT_THROW(run_pgm(pb, Dgf::power(2.0), Density::Constant(20, 2.0), cfg), std::invalid_argument);
  Density spike = Density::Zero(20);
  spike[0] = 20.0;
  EXPECT_THROW(run_pgm(pb, Dgf::entropy(), spike, cfg), std::invalid_argument);
  cfg.iters = 0;
  EXPECT_THROW(run_pgm(pb, Dgf::power(2.0), uniform_density(pb.grid), cfg), std::invalid_argument);
}

TEST(Solver, AbortsOnNonFiniteObjective) {
  Problem pb = deconv_problem(Grid::torus(1, 50), Regularizer::tv(0.0));
  SolverConfig cfg;
  cfg.iters = 5000;
  cfg.step = 1e3;  // far beyond the stable step
  Trace t = run_pgm(pb, Dgf::power(2.0), uniform_density(pb.grid), cfg);
  EXPECT_TRUE(t.aborted);
  EXPECT_FALSE(std::isfinite(t.rows.back().F));
}

TEST(Trace, CsvRoundTrip) {
  Problem pb = lb_problem(Grid::torus(1, 50), Setting::II);
  SolverConfig cfg;
  cfg.iters = 100;
  Trace t = run_pgm(pb, Dgf::power(1.5), uniform_density(pb.grid), cfg);
  std::stringstream buf;
  write_trace(buf, t);
  Trace back = read_trace(buf);
  ASSERT_EQ(back.rows.size(), t.rows.size());
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    EXPECT_EQ(back.rows[i].k, t.rows[i].k);
    EXPECT_EQ(back.rows[i].F, t.rows[i].F);
    EXPECT_EQ(back.rows[i].gap, t.rows[i].gap);
    EXPECT_EQ(back.rows[i].linf_mirror, t.rows[i].linf_mirror);
  }
  EXPECT_EQ(back.meta, t.meta);
  EXPECT_EQ(*back.get_meta("dgf"), "p:1.5");
  for (const auto& r : t.rows) EXPECT_EQ(r.time_s, 0.0);

  std::stringstream bad("k,F\n1,2\n");
  EXPECT_THROW(read_trace(bad), std::runtime_error);
}

TEST(Trace, Deterministic) {
  Problem pb = relu_problem(Grid::circle(100), 10, Regularizer::tv(0.05));
  SolverConfig cfg;
  cfg.iters = 300;
  cfg.method = Method::apgm;
  std::stringstream a, b;
  write_trace(a, run_solver(pb, Dgf::hyperbolic(), uniform_density(pb.grid), cfg));
  write_trace(b, run_solver(pb, Dgf::hyperbolic(), uniform_density(pb.grid), cfg));
  EXPECT_EQ(a.str(), b.str());
}
