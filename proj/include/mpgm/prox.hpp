#pragma once

// Closed-form Bregman proximal updates
//   h+ = argmin_f  <g, f> + H(f) + (1/s) D(f, h)
// expressed in mirror coordinates u = eta'(h). With v = u - s g the update is
// an explicit map of v, up to one scalar kappa for the constrained cases.

#include "mpgm/dgf.hpp"
#include "mpgm/objective.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <type_traits>
#include <utility>
#include <variant>
#include <vector>

namespace mpgm {

/// Mirror point of an iterate; finite entries everywhere.
struct MirrorState {
  Vector u;

  static MirrorState from_primal(const Dgf& dgf, const Density& f) {
    MirrorState s{to_mirror(dgf, f)};
    if (!s.u.allFinite()) throw std::invalid_argument("initial density has infinite mirror values");
    return s;
  }

  Density primal(const Dgf& dgf) const { return to_primal(dgf, u); }
};

/// sign(a) (|a| - kappa)_+
inline double soft_threshold(double a, double kappa) {
  if (a > kappa) return a - kappa;
  if (a < -kappa) return a + kappa;
  return 0.0;
}

enum class KappaTarget { mass_eq_1, l1_le_K };

struct KappaOptions {
  /// Termination tolerance, relative to the target and to the bracket scale.
  double tol = 1e-12;
  int max_iter = 200;
};

class KappaError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace detail {

/// Constraint functional of the shifted point and its derivative in kappa.
/// Both are nonincreasing in kappa.
struct KappaMap {
  const Dgf& dgf;
  const Vector& weights;
  const Vector& v;
  KappaTarget target;

  /// (value, slope) in one pass; the dgf is dispatched once per pass.
  std::pair<double, double> eval(double kappa) const {
    const bool ball = target == KappaTarget::l1_le_K;
    return std::visit(
        [&](const auto& k) -> std::pair<double, double> {
          using Kind = std::decay_t<decltype(k)>;
          double total = 0.0;
          double slope = 0.0;
          for (Eigen::Index j = 0; j < v.size(); ++j) {
            double x = (ball && !std::is_same_v<Kind, EntropyDgf> ? std::abs(v[j]) : v[j]) - kappa;
            if constexpr (std::is_same_v<Kind, EntropyDgf>) {
              double e = std::exp(x);
              total += weights[j] * e;
              slope -= weights[j] * e;
            } else {
              if (x <= 0.0) continue;
              if constexpr (std::is_same_v<Kind, PowerDgf>) {
                if (k.p == 2.0) {
                  total += weights[j] * x;
                  slope -= weights[j];
                } else {
                  double y = (k.p - 1.0) * x;
                  double dy = std::pow(y, (2.0 - k.p) / (k.p - 1.0));
                  total += weights[j] * y * dy;
                  slope -= weights[j] * dy;
                }
              } else {
                total += weights[j] * k.beta * std::sinh(x);
                slope -= weights[j] * k.beta * std::cosh(x);
              }
            }
          }
          return {total, slope};
        },
        dgf.kind());
  }

  double value(double kappa) const { return eval(kappa).first; }
};

inline double log_sum_exp(const Vector& weights, const Vector& v) {
  double top = v.maxCoeff();
  double acc = 0.0;
  for (Eigen::Index j = 0; j < v.size(); ++j) acc += weights[j] * std::exp(v[j] - top);
  return top + std::log(acc);
}

}  // namespace detail

/// Bracketing root finder for kappa: Newton steps safeguarded by bisection.
inline double solve_kappa_bracketed(const Dgf& dgf, const Vector& weights, const Vector& v, KappaTarget target,
                                    double K, const KappaOptions& opts = {}) {
  const double goal = target == KappaTarget::mass_eq_1 ? 1.0 : K;
  if (!(goal > 0.0)) throw std::invalid_argument("solve_kappa: target must be positive");
  detail::KappaMap map{dgf, weights, v, target};
  auto residual = [&](double kappa) { return map.value(kappa) - goal; };

  double lo = 0.0;
  double hi = 0.0;
  if (target == KappaTarget::l1_le_K) {
    if (residual(0.0) <= 0.0) return 0.0;
    lo = 0.0;
    hi = dgf.nonnegative_domain() ? 1.0 : v.cwiseAbs().maxCoeff();
  } else {
    // Jensen: mass(kappa) >= [eta']^{-1}(mean(v) - kappa), and a single point
    // carries mass w_j [eta']^{-1}(v_j - kappa).
    Eigen::Index top = 0;
    hi = v.maxCoeff(&top);
    lo = std::max(weights.dot(v) / weights.sum() - dgf.prime(1.0), hi - dgf.prime(1.0 / weights[top]));
    if (dgf.nonnegative_domain()) hi = std::max(hi, lo + 1.0);
  }
  // Expand until the residual changes sign: r(lo) >= 0 >= r(hi).
  double width = std::max(1.0, hi - lo);
  int expansions = 0;
  while (residual(hi) > 0.0) {
    lo = hi;
    hi += width;
    width *= 2.0;
    if (++expansions > 200) throw KappaError("solve_kappa: failed to bracket the root from above");
  }
  width = std::max(1.0, hi - lo);
  while (residual(lo) < 0.0) {
    hi = lo;
    lo -= width;
    width *= 2.0;
    if (++expansions > 400) throw KappaError("solve_kappa: failed to bracket the root from below");
  }

  // The constraint map is convex and decreasing in kappa, so Newton steps
  // started from the left end approach the root monotonically; the bracket
  // only guards against rounding.
  const double scale = std::max({1.0, std::abs(lo), std::abs(hi)});
  double kappa = lo;
  for (int it = 0; it < opts.max_iter; ++it) {
    auto [value, d] = map.eval(kappa);
    double r = value - goal;
    if (std::abs(r) <= opts.tol * goal || hi - lo <= opts.tol * scale) return kappa;
    if (r > 0.0) {
      lo = kappa;
    } else {
      hi = kappa;
    }
    double next = d < 0.0 ? kappa - r / d : 0.5 * (lo + hi);
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    kappa = next;
  }
  double r = residual(kappa);
  if (std::abs(r) <= std::sqrt(opts.tol) * goal) return kappa;
  std::ostringstream msg;
  msg << "solve_kappa: no convergence after " << opts.max_iter << " iterations (bracket [" << lo << ", " << hi
      << "], residual " << r << ")";
  throw KappaError(msg.str());
}

/// kappa such that the shifted update meets the constraint: unit mass for
/// mass_eq_1, smallest kappa >= 0 with L1 norm <= K for l1_le_K. The entropy
/// cases use the closed forms log sum w e^v and max(0, log(sum w e^v / K)).
inline double solve_kappa(const Dgf& dgf, const Vector& weights, const Vector& v, KappaTarget target, double K = 1.0,
                          const KappaOptions& opts = {}) {
  if (!v.allFinite()) throw std::invalid_argument("solve_kappa: non-finite input");
  if (dgf.is_entropy()) {
    double lse = detail::log_sum_exp(weights, v);
    if (target == KappaTarget::mass_eq_1) return lse;
    if (!(K > 0.0)) throw std::invalid_argument("solve_kappa: K must be positive");
    return std::max(0.0, lse - std::log(K));
  }
  return solve_kappa_bracketed(dgf, weights, v, target, K, opts);
}

struct StepResult {
  MirrorState next;
  /// Multiplier of the constraint (0 where the update has none).
  double kappa = 0.0;
};

/// One Bregman proximal step with gradient potential `grad` and effective
/// step `step` (s for PGM, s / gamma_k for APGM).
inline StepResult bregman_step(const Dgf& dgf, const Regularizer& reg, const Grid& grid, const MirrorState& state,
                               const Vector& grad, double step, const KappaOptions& opts = {}) {
  if (!(step > 0.0)) throw std::invalid_argument("bregman_step: step must be positive");
  check_same_size(grid, state.u, "bregman_step");
  check_same_size(grid, grad, "bregman_step");
  const Vector v = state.u - step * grad;
  const bool signed_domain = !dgf.nonnegative_domain();
  // u - (s g + c): the scalar joins the small gradient term before the single
  // subtraction from u, which keeps rounding from piling up in long runs.
  auto shifted = [&](double c) -> Vector {
    Vector out(grad.size());
    for (Eigen::Index j = 0; j < out.size(); ++j) out[j] = state.u[j] - (step * grad[j] + c);
    return signed_domain ? Vector(out.cwiseMax(0.0)) : out;
  };
  StepResult out;
  switch (reg.kind()) {
    case RegKind::nonneg_plus_tv: out.next.u = shifted(step * reg.lambda()); break;
    case RegKind::tv: {
      const double shift = step * reg.lambda();
      if (signed_domain) {
        out.next.u = v.unaryExpr([shift](double x) { return soft_threshold(x, shift); });
      } else {
        out.next.u = shifted(shift);
      }
      break;
    }
    case RegKind::simplex:
      out.kappa = solve_kappa(dgf, grid.weights(), v, KappaTarget::mass_eq_1, 1.0, opts);
      out.next.u = shifted(out.kappa);
      break;
    case RegKind::tv_ball: {
      out.kappa = solve_kappa(dgf, grid.weights(), v, KappaTarget::l1_le_K, reg.radius(), opts);
      const double kappa = out.kappa;
      if (signed_domain) {
        out.next.u = v.unaryExpr([kappa](double x) { return soft_threshold(x, kappa); });
      } else {
        out.next.u = shifted(kappa);
      }
      break;
    }
  }
  return out;
}

/// Residuals of the optimality system  G' + (u+ - u)/s + phi = 0,
/// phi in dH(h+), with phi rebuilt from (u, G') and one scalar estimate.
struct KktReport {
  double stationarity = 0.0;
  double slackness = 0.0;
  double feasibility = 0.0;
  double worst() const { return std::max({stationarity, slackness, feasibility}); }
};

namespace detail {

inline double median(std::vector<double> xs) {
  if (xs.empty()) return 0.0;
  auto mid = xs.begin() + static_cast<std::ptrdiff_t>(xs.size() / 2);
  std::nth_element(xs.begin(), mid, xs.end());
  return *mid;
}

}  // namespace detail

inline KktReport kkt_residual(const Dgf& dgf, const Regularizer& reg, const Grid& grid, const MirrorState& prev,
                              const MirrorState& next, const Vector& grad, double step) {
  const Vector& w = grid.weights();
  const Vector v = prev.u - step * grad;
  const Density h = next.primal(dgf);
  const Eigen::Index m = v.size();
  const bool signed_domain = !dgf.nonnegative_domain();
  Vector phi(m);
  KktReport rep;

  auto support_median = [&](auto&& term, auto&& in_support) {
    std::vector<double> xs;
    for (Eigen::Index j = 0; j < m; ++j) {
      if (in_support(j)) xs.push_back(term(j));
    }
    return detail::median(std::move(xs));
  };

  switch (reg.kind()) {
    case RegKind::nonneg_plus_tv:
    case RegKind::tv: {
      const double lambda = reg.lambda();
      if (!signed_domain) {
        phi.setConstant(lambda);
      } else if (reg.kind() == RegKind::nonneg_plus_tv) {
        // phi = lambda + nu with nu <= 0 and nu h = 0
        for (Eigen::Index j = 0; j < m; ++j) phi[j] = std::min(lambda, v[j] / step);
        for (Eigen::Index j = 0; j < m; ++j) rep.slackness += w[j] * std::abs((phi[j] - lambda) * h[j]);
        rep.feasibility = std::max(0.0, -h.minCoeff());
      } else {
        // phi in lambda * sign(h)
        for (Eigen::Index j = 0; j < m; ++j) phi[j] = std::clamp(v[j] / step, -lambda, lambda);
        for (Eigen::Index j = 0; j < m; ++j) rep.slackness += w[j] * std::abs(phi[j] * h[j] - lambda * std::abs(h[j]));
      }
      break;
    }
    case RegKind::simplex: {
      double kappa = 0.0;
      if (signed_domain) {
        kappa = support_median([&](Eigen::Index j) { return v[j] - next.u[j]; },
                               [&](Eigen::Index j) { return h[j] > 0.0; });
        for (Eigen::Index j = 0; j < m; ++j) phi[j] = std::min(kappa, v[j]) / step;
        for (Eigen::Index j = 0; j < m; ++j) rep.slackness += w[j] * std::abs((phi[j] - kappa / step) * h[j]);
      } else {
        kappa = support_median([&](Eigen::Index j) { return v[j] - next.u[j]; }, [](Eigen::Index) { return true; });
        phi.setConstant(kappa / step);
      }
      rep.feasibility = std::max(std::abs(w.dot(h) - 1.0), std::max(0.0, -h.minCoeff()));
      break;
    }
    case RegKind::tv_ball: {
      const double K = reg.radius();
      double kappa = 0.0;
      if (signed_domain) {
        kappa = std::max(0.0, support_median([&](Eigen::Index j) { return std::abs(v[j]) - std::abs(next.u[j]); },
                                             [&](Eigen::Index j) { return h[j] != 0.0; }));
        for (Eigen::Index j = 0; j < m; ++j) phi[j] = std::clamp(v[j], -kappa, kappa) / step;
        for (Eigen::Index j = 0; j < m; ++j) {
          rep.slackness += w[j] * std::abs(phi[j] * h[j] - kappa / step * std::abs(h[j]));
        }
      } else {
        kappa = std::max(0.0, support_median([&](Eigen::Index j) { return v[j] - next.u[j]; },
                                             [](Eigen::Index) { return true; }));
        phi.setConstant(kappa / step);
      }
      const double norm = w.dot(h.cwiseAbs());
      rep.feasibility = std::max(0.0, norm - K) / K;
      // complementary slackness kappa (||h|| - K) = 0, in mirror units
      rep.slackness += kappa * std::abs(norm - K) / K;
      break;
    }
  }
  rep.stationarity = (grad + (next.u - prev.u) / step + phi).cwiseAbs().maxCoeff();
  return rep;
}

/// Value of the prox subproblem  <g, f> + H(f) + (1/s)(sum w eta(f) - <u, f>).
inline double prox_objective(const Dgf& dgf, const Regularizer& reg, const Grid& grid, const MirrorState& prev,
                             const Vector& grad, double step, const Density& f) {
  const Vector& w = grid.weights();
  double H = reg.value(grid, f);
  if (!std::isfinite(H)) return H;
  double eta_sum = 0.0;
  for (Eigen::Index j = 0; j < f.size(); ++j) {
    if (dgf.nonnegative_domain() && f[j] < 0.0) return std::numeric_limits<double>::infinity();
    eta_sum += w[j] * dgf.eta(f[j]);
  }
  return w.dot(grad.cwiseProduct(f)) + H + (eta_sum - w.dot(prev.u.cwiseProduct(f))) / step;
}

}  // namespace mpgm
