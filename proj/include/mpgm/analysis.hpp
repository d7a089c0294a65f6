#pragma once

// Box-kernel mollification of atomic minimizers, the psi envelope
//   psi(alpha) = min_eps F(f_eps) - inf F + alpha D(f_eps, f0),
// theoretical rate exponents and log-log slope fitting.

#include "mpgm/dgf.hpp"
#include "mpgm/objective.hpp"
#include "mpgm/solver.hpp"

#include <cmath>
#include <limits>
#include <optional>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace mpgm {

/// f_eps = sum_a weight_a 1[dist(., theta_a) <= eps] / tau(B_eps(theta_a)).
inline Density mollify(const Problem& problem, double eps) {
  if (problem.mu_star.empty()) throw std::invalid_argument("mollify: problem has no known minimizer");
  if (!(eps > 0.0)) throw std::invalid_argument("mollify: eps must be positive");
  const Grid& grid = problem.grid;
  const double radius = eps * (1.0 + kClosedBallSlack);
  Density f = Density::Zero(static_cast<Eigen::Index>(grid.size()));
  for (const auto& atom : problem.mu_star) {
    std::span<const double> center(atom.position.data(), static_cast<std::size_t>(grid.dim()));
    double mass = ball_mass(grid, center, eps);
    if (mass == 0.0) throw std::invalid_argument("mollify: eps is below the grid resolution");
    for (std::size_t j = 0; j < grid.size(); ++j) {
      if (grid.dist(grid.point(j), center) <= radius) f[static_cast<Eigen::Index>(j)] += atom.weight / mass;
    }
  }
  return f;
}

inline std::vector<double> log_space(double lo, double hi, int count) {
  if (!(lo > 0.0) || !(hi >= lo) || count < 1) throw std::invalid_argument("log_space: bad range");
  std::vector<double> xs(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i) {
    double t = count == 1 ? 0.0 : static_cast<double>(i) / (count - 1);
    xs[static_cast<std::size_t>(i)] = std::exp(std::log(lo) + t * (std::log(hi) - std::log(lo)));
  }
  return xs;
}

/// 30 radii log-spaced in [3 h, diam / 4], plus the diameter itself (whose
/// mollification is the uniform density, so psi never exceeds F(f0) - inf F
/// when f0 is uniform).
inline std::vector<double> default_eps_grid(const Grid& grid) {
  auto eps = log_space(3.0 * grid.spacing(), grid.diameter() / 4.0, 30);
  eps.push_back(grid.diameter());
  return eps;
}

/// Gap of the finest mollification the grid can represent (one cell). A
/// density-space method cannot be expected to follow its continuum rate
/// much below this level.
inline double discretization_floor(const Problem& problem) {
  if (!problem.inf_value) throw std::invalid_argument("discretization_floor: inf F is unknown");
  return eval_F(problem, mollify(problem, problem.grid.spacing())) - *problem.inf_value;
}

struct PsiPoint {
  double alpha = 0.0;
  double psi = 0.0;
  double eps_star = 0.0;
};

struct MollifiedCandidate {
  double eps = 0.0;
  double gap = 0.0;
  double divergence = 0.0;
};

inline std::vector<MollifiedCandidate> mollified_family(const Problem& problem, const Dgf& dgf, const Density& f0,
                                                        const std::vector<double>& eps_grid, double inf_value) {
  std::vector<MollifiedCandidate> out;
  out.reserve(eps_grid.size());
  for (double eps : eps_grid) {
    Density f = mollify(problem, eps);
    out.push_back({eps, eval_F(problem, f) - inf_value, bregman_div(dgf, problem.grid, f, f0)});
  }
  return out;
}

/// psi over the mollified family; ties keep the smaller eps.
inline std::vector<PsiPoint> psi_envelope(const Problem& problem, const Dgf& dgf, const Density& f0,
                                          const std::vector<double>& alphas, const std::vector<double>& eps_grid,
                                          std::optional<double> inf_value = std::nullopt) {
  double inf = inf_value ? *inf_value : problem.inf_value.value_or(std::numeric_limits<double>::quiet_NaN());
  if (!std::isfinite(inf)) throw std::invalid_argument("psi_envelope: inf F is unknown");
  if (eps_grid.empty()) throw std::invalid_argument("psi_envelope: empty eps grid");
  auto family = mollified_family(problem, dgf, f0, eps_grid, inf);
  std::vector<PsiPoint> curve;
  curve.reserve(alphas.size());
  for (double alpha : alphas) {
    if (!(alpha >= 0.0)) throw std::invalid_argument("psi_envelope: alpha must be nonnegative");
    PsiPoint best{alpha, std::numeric_limits<double>::infinity(), 0.0};
    for (const auto& c : family) {
      double value = c.gap + alpha * c.divergence;
      if (value < best.psi) {
        best.psi = value;
        best.eps_star = c.eps;
      }
    }
    curve.push_back(best);
  }
  return curve;
}

inline void write_psi_csv(std::ostream& out, const std::vector<PsiPoint>& curve) {
  out << "alpha,psi_hat,eps_star\n";
  for (const auto& p : curve) {
    out << format_double(p.alpha) << ',' << format_double(p.psi) << ',' << format_double(p.eps_star) << '\n';
  }
}

// ---------------------------------------------------------------------------

struct RateModel {
  Method method = Method::pgm;
  std::string dgf;
  double p = 0.0;
  int q = 1;
  int d = 1;
  double exponent = 0.0;
  bool log_factor = false;
};

inline RateModel theoretical_exponent(Method method, const Dgf& dgf, int q, int d) {
  if (q != 1 && q != 2 && q != 4) throw std::invalid_argument("q must be 1, 2 or 4");
  if (d < 1) throw std::invalid_argument("d must be positive");
  RateModel m{method, dgf.token(), 0.0, q, d, 0.0, false};
  const double factor = method == Method::apgm ? 2.0 : 1.0;
  if (dgf.is_power()) {
    m.p = dgf.sc_exponent();
    if (m.p > 2.0) throw std::invalid_argument("no rate for power dgf with p > 2");
    m.exponent = -factor * q / ((m.p - 1.0) * d + q);
  } else {
    m.p = 1.0;
    m.exponent = -factor;
    m.log_factor = true;
  }
  return m;
}

inline int structure_exponent(Setting s) {
  switch (s) {
    case Setting::I: return 1;
    case Setting::I_star:
    case Setting::II: return 2;
    case Setting::II_star: return 4;
  }
  return 1;
}

class AmbiguousSetting : public std::runtime_error {
 public:
  AmbiguousSetting(const std::string& what, Setting a, Setting b) : std::runtime_error(what), first(a), second(b) {}
  Setting first;
  Setting second;
};

struct Classification {
  Setting setting = Setting::I;
  int q = 1;
  /// ||G'[mu*]||_inf when it had to be computed.
  std::optional<double> potential_sup;
};

/// Uses the problem's tag when present; otherwise checks whether G'[mu*]
/// vanishes (starred classes) against the regularity of Phi.
inline Classification classify_setting(const Problem& problem, double zero_tol = 1e-8, double nonzero_tol = 1e-4) {
  if (problem.setting) return {*problem.setting, structure_exponent(*problem.setting), std::nullopt};
  if (problem.mu_star.empty()) throw std::invalid_argument("classify_setting: no tag and no known minimizer");
  const bool smooth = problem.smooth.regularity == PhiRegularity::gradient_lipschitz;
  const Setting plain = smooth ? Setting::II : Setting::I;
  const Setting starred = smooth ? Setting::II_star : Setting::I_star;
  double sup = grad_potential(problem, discrete_mu_star(problem)).cwiseAbs().maxCoeff();
  if (sup <= zero_tol) return {starred, structure_exponent(starred), sup};
  if (sup >= nonzero_tol) return {plain, structure_exponent(plain), sup};
  std::ostringstream msg;
  msg << "ambiguous setting: ||G'[mu*]||_inf = " << sup << " is neither zero nor clearly nonzero; candidates "
      << to_string(plain) << " (q=" << structure_exponent(plain) << ") and " << to_string(starred)
      << " (q=" << structure_exponent(starred) << ")";
  throw AmbiguousSetting(msg.str(), plain, starred);
}

// ---------------------------------------------------------------------------

struct RateFit {
  double slope = std::numeric_limits<double>::quiet_NaN();
  double intercept = 0.0;
  double r2 = 0.0;
  double k_lo = 0.0;
  double k_hi = 0.0;
  std::size_t points = 0;
  bool truncated = false;
  std::string note;
};

struct FitOptions {
  double k_lo = 1e3;
  double k_hi = std::numeric_limits<double>::infinity();
  bool strip_log = false;
  /// Rows whose gap falls below precision_factor * precision end the window.
  double precision = 0.0;
  double precision_factor = 10.0;
  std::size_t min_points = 10;
};

class FitError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline RateFit fit_rate(const std::vector<double>& ks, const std::vector<double>& gaps, const FitOptions& opt = {}) {
  if (ks.size() != gaps.size()) throw std::invalid_argument("fit_rate: size mismatch");
  RateFit fit;
  std::vector<double> xs;
  std::vector<double> ys;
  const double floor = opt.precision_factor * opt.precision;
  for (std::size_t i = 0; i < ks.size(); ++i) {
    double k = ks[i];
    if (k < opt.k_lo || k > opt.k_hi || k <= 0.0) continue;
    double gap = gaps[i];
    if (!(gap > 0.0) || !(gap >= floor) || !std::isfinite(gap)) {
      fit.truncated = true;
      std::ostringstream note;
      note << "window truncated at k=" << k << " (gap " << gap << " at or below " << floor << ")";
      fit.note = note.str();
      break;
    }
    double y = std::log(gap);
    if (opt.strip_log) {
      if (!(k > 1.0)) continue;
      y -= std::log(std::log(k));
    }
    xs.push_back(std::log(k));
    ys.push_back(y);
  }
  fit.points = xs.size();
  if (xs.size() < opt.min_points) {
    std::ostringstream msg;
    msg << "fit_rate: only " << xs.size() << " usable rows in window [" << opt.k_lo << ", " << opt.k_hi << "]";
    if (!fit.note.empty()) msg << "; " << fit.note;
    throw FitError(msg.str());
  }
  fit.k_lo = std::exp(xs.front());
  fit.k_hi = std::exp(xs.back());
  const double n = static_cast<double>(xs.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    mx += xs[i];
    my += ys[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxx += (xs[i] - mx) * (xs[i] - mx);
    sxy += (xs[i] - mx) * (ys[i] - my);
    syy += (ys[i] - my) * (ys[i] - my);
  }
  if (sxx == 0.0) throw FitError("fit_rate: window spans a single k");
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  fit.r2 = syy == 0.0 ? 1.0 : (sxy * sxy) / (sxx * syy);
  return fit;
}

/// Fit on the gap column of a trace; the precision defaults to the
/// trace's inf_precision metadata.
inline RateFit fit_trace(const Trace& trace, FitOptions opt = {}) {
  std::vector<double> ks, gaps;
  for (const auto& r : trace.rows) {
    ks.push_back(static_cast<double>(r.k));
    gaps.push_back(r.gap);
  }
  if (opt.precision == 0.0) {
    if (auto p = trace.get_meta("inf_precision")) opt.precision = std::strtod(p->c_str(), nullptr);
  }
  return fit_rate(ks, gaps, opt);
}

/// Slope of log psi against log alpha over [lo, hi].
inline RateFit fit_psi(const std::vector<PsiPoint>& curve, double lo, double hi) {
  std::vector<double> as, ps;
  for (const auto& p : curve) {
    as.push_back(p.alpha);
    ps.push_back(p.psi);
  }
  FitOptions opt;
  opt.k_lo = lo;
  opt.k_hi = hi;
  opt.min_points = 3;
  return fit_rate(as, ps, opt);
}

}  // namespace mpgm
