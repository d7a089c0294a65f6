#pragma once

// Independent oracles: finite-difference gradients, closed-form entropic
// iterates, strong-convexity sampling, KKT sweeps and the reparameterized
// gradient flow / mirror flow comparison.

#include "mpgm/analysis.hpp"
#include "mpgm/dgf.hpp"
#include "mpgm/objective.hpp"
#include "mpgm/prox.hpp"
#include "mpgm/solver.hpp"

#include <algorithm>
#include <cstdint>
#include <iterator>
#include <cmath>
#include <functional>
#include <limits>
#include <numbers>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace mpgm {

using PotentialFn = std::function<Vector(const Problem&, const Density&)>;

struct FdReport {
  double max_rel_error = 0.0;
  int directions = 0;
};

/// Central differences of G along random directions delta against
/// sum_j w_j delta_j G'[f]_j. The error is relative to the larger of the
/// analytic derivative and 1e-3 sum_j w_j |delta_j G'_j|.
inline FdReport fd_gradient_check(const Problem& problem, const Density& f, int n_dirs = 10, double t = 1e-5,
                                  std::uint64_t seed = 1, const PotentialFn& potential = {}) {
  if (!(t >= 1e-7 && t <= 1e-3)) throw std::invalid_argument("fd_gradient_check: probe t must be in [1e-7, 1e-3]");
  if (n_dirs < 1) throw std::invalid_argument("fd_gradient_check: need at least one direction");
  const Vector& w = problem.grid.weights();
  Vector grad = potential ? potential(problem, f) : grad_potential(problem, f);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  FdReport rep{0.0, n_dirs};
  for (int i = 0; i < n_dirs; ++i) {
    Vector delta = Vector::NullaryExpr(f.size(), [&] { return normal(rng); });
    double fd = (eval_G(problem, f + t * delta) - eval_G(problem, f - t * delta)) / (2.0 * t);
    double an = w.dot(delta.cwiseProduct(grad));
    double scale = w.dot(delta.cwiseProduct(grad).cwiseAbs());
    double denom = std::max(std::abs(an), 1e-3 * scale);
    double err = denom == 0.0 ? std::abs(fd - an) : std::abs(fd - an) / denom;
    rep.max_rel_error = std::max(rep.max_rel_error, err);
  }
  return rep;
}

// ---------------------------------------------------------------------------

struct ClosedFormReport {
  double max_rel_deviation = 0.0;
  /// Iteration where the largest deviation occurred.
  long worst_k = 0;
  /// Gap slope over the fit window.
  RateFit fit;
  Trace trace;
};

/// Entropic PGM on the lb:I problem from f0 = 1 against
/// f_k = exp(-k s Phi) / Z_k, with Z_k computed in extended precision.
/// Deviations are measured where the oracle value is a normal double.
inline ClosedFormReport entropy_closed_form_check(const Grid& grid, double s, long k_max,
                                                  const std::vector<long>& checkpoints, double fit_lo = 1e2,
                                                  double fit_hi = 1e4) {
  Problem pb = lb_problem(grid, Setting::I);
  const Vector phi = pb.smooth.features.row(0).transpose();
  const Vector& w = grid.weights();
  ClosedFormReport rep;
  SolverConfig cfg;
  cfg.iters = k_max;
  cfg.step = s;
  auto sched = geometric_schedule(k_max);
  std::vector<long> record;
  std::merge(sched.begin(), sched.end(), checkpoints.begin(), checkpoints.end(), std::back_inserter(record));
  record.erase(std::unique(record.begin(), record.end()), record.end());
  cfg.record = record;
  std::vector<long> wanted = checkpoints;
  cfg.observer = [&](long k, const Density& f) {
    if (std::find(wanted.begin(), wanted.end(), k) == wanted.end()) return;
    const long double ks = static_cast<long double>(k) * static_cast<long double>(s);
    long double top = -std::numeric_limits<long double>::infinity();
    for (Eigen::Index j = 0; j < phi.size(); ++j) top = std::max(top, -ks * phi[j]);
    long double acc = 0.0L;
    for (Eigen::Index j = 0; j < phi.size(); ++j) acc += w[j] * std::exp(-ks * phi[j] - top);
    const long double log_z = top + std::log(acc);
    for (Eigen::Index j = 0; j < phi.size(); ++j) {
      auto oracle = static_cast<double>(std::exp(-ks * phi[j] - log_z));
      if (!std::isnormal(oracle)) continue;
      double dev = std::abs(f[j] - oracle) / oracle;
      if (dev > rep.max_rel_deviation) {
        rep.max_rel_deviation = dev;
        rep.worst_k = k;
      }
    }
  };
  rep.trace = run_pgm(pb, Dgf::entropy(), uniform_density(grid), cfg);
  FitOptions opt;
  opt.k_lo = fit_lo;
  opt.k_hi = fit_hi;
  opt.precision = pb.inf_precision;
  rep.fit = fit_trace(rep.trace, opt);
  return rep;
}

// ---------------------------------------------------------------------------

struct FlowGap {
  double gap_step = 0.0;
  double gap_half = 0.0;
  double ratio() const { return gap_half == 0.0 ? (gap_step == 0.0 ? 2.0 : 0.0) : gap_step / gap_half; }
};

struct FlowReport {
  FlowGap square;
  FlowGap difference;
};

namespace detail {

inline void require_finite(const Vector& x, const char* what) {
  if (!x.allFinite()) throw std::runtime_error(std::string("mirror_flow_equivalence: blow-up in ") + what);
}

/// sup |a_T^2 - h_T| with a' = -2 a G'[a^2] and (log h)' = -4 G'[h].
inline double square_gap(const Problem& pb, const Density& a0, double dt, long steps) {
  Vector a = a0;
  Vector u = a0.cwiseProduct(a0).array().log();
  for (long i = 0; i < steps; ++i) {
    Vector ga = grad_potential(pb, a.cwiseProduct(a));
    Vector gh = grad_potential(pb, u.array().exp().matrix());
    a -= dt * 2.0 * a.cwiseProduct(ga);
    u -= dt * 4.0 * gh;
    require_finite(a, "square parameterization");
    require_finite(u, "entropy mirror flow");
  }
  return (a.cwiseProduct(a) - Vector(u.array().exp())).cwiseAbs().maxCoeff();
}

/// sup |a_T^2 - b_T^2 - h_T| with (a, b)' = (-2 a G', 2 b G') at f = a^2 - b^2
/// and asinh(h / beta)' = -4 G'[h], beta = 2 a0 b0.
inline double difference_gap(const Problem& pb, const Density& a0, const Density& b0, double dt, long steps) {
  Vector a = a0;
  Vector b = b0;
  const Vector beta = 2.0 * a0.cwiseProduct(b0);
  const Vector h0 = a0.cwiseProduct(a0) - b0.cwiseProduct(b0);
  Vector u = h0.cwiseQuotient(beta).array().asinh();
  auto primal = [&](const Vector& mirror) { return Vector(beta.array() * mirror.array().sinh()); };
  for (long i = 0; i < steps; ++i) {
    Vector g = grad_potential(pb, a.cwiseProduct(a) - b.cwiseProduct(b));
    Vector gh = grad_potential(pb, primal(u));
    a -= dt * 2.0 * a.cwiseProduct(g);
    b += dt * 2.0 * b.cwiseProduct(g);
    u -= dt * 4.0 * gh;
    require_finite(a, "difference of squares");
    require_finite(u, "hyperbolic mirror flow");
  }
  return (a.cwiseProduct(a) - b.cwiseProduct(b) - primal(u)).cwiseAbs().maxCoeff();
}

}  // namespace detail

/// Explicit Euler for both sides of each equivalence, at dt and dt/2. The
/// regularizer of `pb` is ignored (flows of G alone).
inline FlowReport mirror_flow_equivalence(const Problem& pb, const Density& a0, const Density& b0, double dt,
                                          double horizon) {
  if (!(dt > 0.0) || !(horizon > 0.0)) throw std::invalid_argument("mirror_flow_equivalence: bad step or horizon");
  if (!(a0.minCoeff() > 0.0) || !(b0.minCoeff() > 0.0)) {
    throw std::invalid_argument("mirror_flow_equivalence: initial factors must be positive");
  }
  const auto steps = static_cast<long>(std::llround(horizon / dt));
  FlowReport rep;
  rep.square.gap_step = detail::square_gap(pb, a0, dt, steps);
  rep.square.gap_half = detail::square_gap(pb, a0, dt / 2.0, 2 * steps);
  rep.difference.gap_step = detail::difference_gap(pb, a0, b0, dt, steps);
  rep.difference.gap_half = detail::difference_gap(pb, a0, b0, dt / 2.0, 2 * steps);
  return rep;
}

/// Flow check on the unconstrained lb:II* objective with smooth positive
/// initial factors a0 = 1 + 0.3 cos(2 pi x), b0 = 0.5 + 0.2 sin(2 pi x).
inline FlowReport default_flow_check(int grid_points = 128, double dt = 1e-2, double horizon = 10.0) {
  const Grid grid = Grid::torus(1, grid_points);
  Problem pb = lb_problem(grid, Setting::II_star);
  const auto m = static_cast<Eigen::Index>(grid.size());
  Density a0(m), b0(m);
  for (Eigen::Index j = 0; j < m; ++j) {
    double x = grid.point(static_cast<std::size_t>(j))[0];
    a0[j] = 1.0 + 0.3 * std::cos(2.0 * std::numbers::pi * x);
    b0[j] = 0.5 + 0.2 * std::sin(2.0 * std::numbers::pi * x);
  }
  return mirror_flow_equivalence(pb, a0, b0, dt, horizon);
}

// ---------------------------------------------------------------------------

struct PinskerReport {
  double worst_margin = std::numeric_limits<double>::infinity();
  int violations = 0;
  int samples = 0;
};

/// min over random pairs (f, g) in the L1 ball of radius K of
/// D(f, g) - c(K) ||f - g||_{L1}^2.
inline PinskerReport pinsker_sample(const Dgf& dgf, const Grid& grid, double K, int n_samples, std::uint64_t seed,
                                    double slack = 1e-12) {
  const double c = dgf.sc_constant(K);
  const auto m = static_cast<Eigen::Index>(grid.size());
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  std::exponential_distribution<double> expo(1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  auto draw = [&](bool keep_positive) {
    Vector x(m);
    const double sparsity = unit(rng);
    for (Eigen::Index j = 0; j < m; ++j) {
      double mag = dgf.nonnegative_domain() ? expo(rng) : normal(rng);
      if (!keep_positive && unit(rng) < sparsity) mag = 0.0;
      x[j] = mag;
    }
    if (keep_positive) x.array() += 1e-3;
    double norm = l1_norm(grid, x);
    if (norm == 0.0) {
      x[0] = 1.0 / grid.weights()[0];
      norm = 1.0;
    }
    return Vector(x * (K * unit(rng) / norm));
  };
  PinskerReport rep;
  for (int i = 0; i < n_samples; ++i) {
    Vector f = draw(false);
    // every tenth pair is a near-duplicate to probe the small-distance regime
    Vector g = i % 10 == 9 ? Vector(f + 1e-3 * draw(true)) : draw(true);
    if (l1_norm(grid, g) > K) g *= K / l1_norm(grid, g);
    if (i % 25 == 0) g = f;
    double dist = l1_norm(grid, f - g);
    double margin = bregman_div(dgf, grid, f, g) - c * dist * dist;
    rep.worst_margin = std::min(rep.worst_margin, margin);
    if (margin < -slack) ++rep.violations;
    ++rep.samples;
  }
  return rep;
}

// ---------------------------------------------------------------------------

struct KktSweepOptions {
  int grid_points = 300;
  long steps = 1000;
  double lambda = 0.05;
  double radius = 0.5;
  KappaOptions kappa;
};

struct KktSweepRow {
  std::string dgf;
  std::string reg;
  double step = 0.0;
  KktReport worst;
};

/// PGM on deconv1d for every (dgf, regularizer) pair, checking the optimality
/// system of each prox step.
inline std::vector<KktSweepRow> kkt_sweep(const KktSweepOptions& opt = {}) {
  const Grid grid = Grid::torus(1, opt.grid_points);
  const std::vector<Dgf> dgfs{Dgf::power(2.0), Dgf::entropy(), Dgf::hyperbolic()};
  const std::vector<Regularizer> regs{Regularizer::nonneg(opt.lambda), Regularizer::simplex(),
                                      Regularizer::tv(opt.lambda), Regularizer::tv_ball(opt.radius)};
  std::vector<KktSweepRow> rows;
  for (const auto& dgf : dgfs) {
    for (const auto& reg : regs) {
      Problem pb = deconv_problem(grid, reg);
      Density f = uniform_density(grid);
      if (reg.kind() == RegKind::tv_ball) f *= std::min(1.0, reg.radius());
      const double s = default_step(pb, dgf, default_k_bound(pb, f));
      MirrorState state = MirrorState::from_primal(dgf, f);
      KktSweepRow row{dgf.token(), reg.token(), s, {}};
      for (long k = 0; k < opt.steps; ++k) {
        Vector grad = grad_potential(pb, f);
        MirrorState next = bregman_step(dgf, reg, grid, state, grad, s, opt.kappa).next;
        KktReport r = kkt_residual(dgf, reg, grid, state, next, grad, s);
        row.worst.stationarity = std::max(row.worst.stationarity, r.stationarity);
        row.worst.slackness = std::max(row.worst.slackness, r.slackness);
        row.worst.feasibility = std::max(row.worst.feasibility, r.feasibility);
        state = std::move(next);
        f = state.primal(dgf);
      }
      rows.push_back(row);
    }
  }
  return rows;
}

// ---------------------------------------------------------------------------

/// Reference optimal value from a long APGM run in the hyperbolic geometry;
/// the minimum recorded objective.
inline double reference_inf(const Problem& problem, long iters, double beta = 1e-3) {
  SolverConfig cfg;
  cfg.iters = iters;
  Problem pb = problem;
  pb.inf_value.reset();
  Trace t = run_apgm(pb, Dgf::hyperbolic(beta), uniform_density(pb.grid), cfg);
  double best = std::numeric_limits<double>::infinity();
  for (const auto& r : t.rows) best = std::min(best, r.F);
  return std::min(best, eval_F(pb, t.last));
}

}  // namespace mpgm
