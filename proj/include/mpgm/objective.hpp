#pragma once

// Composite objectives F(f) = R(int Phi f dtau) + H(f) on a grid, together
// with the problem library: sparse deconvolution, the four lower-bound
// constructions and a two-layer ReLU network on the circle.

#include "mpgm/grid.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <limits>
#include <numbers>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace mpgm {

/// Regularity classes (I), (I*), (II), (II*) of the rate analysis.
enum class Setting { I, I_star, II, II_star };

inline std::string to_string(Setting s) {
  switch (s) {
    case Setting::I: return "I";
    case Setting::I_star: return "I*";
    case Setting::II: return "II";
    case Setting::II_star: return "II*";
  }
  return "?";
}

inline Setting parse_setting(const std::string& token) {
  if (token == "I") return Setting::I;
  if (token == "I*") return Setting::I_star;
  if (token == "II") return Setting::II;
  if (token == "II*") return Setting::II_star;
  throw std::invalid_argument("unknown setting: " + token);
}

enum class PhiRegularity { lipschitz, gradient_lipschitz };

/// R(z) = 1/2 (z - c)^T A (z - c) + b^T z + r0 with A symmetric PSD.
/// Keeping the center c explicit avoids cancellation near R's minimum.
struct QuadraticOuter {
  Eigen::MatrixXd curvature;
  Vector center;
  Vector linear;
  double constant = 0.0;

  static QuadraticOuter affine(Vector slope) {
    auto M = slope.size();
    return {Eigen::MatrixXd::Zero(M, M), Vector::Zero(M), std::move(slope), 0.0};
  }

  static QuadraticOuter centered(Eigen::MatrixXd A, Vector center) {
    auto M = center.size();
    return {std::move(A), std::move(center), Vector::Zero(M), 0.0};
  }

  Eigen::Index dim() const { return center.size(); }

  double value(const Vector& z) const {
    Vector r = z - center;
    return 0.5 * r.dot(curvature * r) + linear.dot(z) + constant;
  }

  Vector gradient(const Vector& z) const { return curvature * (z - center) + linear; }

  /// Lip(grad R) = largest eigenvalue of A.
  double gradient_lipschitz() const {
    if (curvature.size() == 0) return 0.0;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(curvature, Eigen::EigenvaluesOnly);
    return std::max(0.0, eig.eigenvalues().maxCoeff());
  }
};

/// G(f) = R(sum_j w_j f_j Phi(theta_j)); column j of `features` is Phi(theta_j)
/// expressed in an orthonormal basis of the feature space.
struct SmoothObjective {
  Eigen::MatrixXd features;
  QuadraticOuter outer;
  double phi_sup = 0.0;
  double lip_R = 0.0;
  PhiRegularity regularity = PhiRegularity::lipschitz;

  static SmoothObjective make(Eigen::MatrixXd features, QuadraticOuter outer, PhiRegularity reg) {
    if (features.rows() != outer.dim()) {
      throw std::invalid_argument("feature dimension does not match the outer function");
    }
    SmoothObjective s{std::move(features), std::move(outer), 0.0, 0.0, reg};
    s.phi_sup = s.features.colwise().norm().maxCoeff();
    s.lip_R = s.outer.gradient_lipschitz();
    return s;
  }

  Vector embed(const Density& f, const Vector& weights) const {
    return features * weights.cwiseProduct(f);
  }

  double value(const Density& f, const Vector& weights) const { return outer.value(embed(f, weights)); }

  /// G'[f](theta_j) = <grad R(z), Phi(theta_j)>.
  Vector potential(const Density& f, const Vector& weights) const {
    return features.transpose() * outer.gradient(embed(f, weights));
  }

  /// Lipschitz constant of G' w.r.t. the L1 norm: ||Phi||_inf^2 Lip(grad R).
  double smoothness() const { return phi_sup * phi_sup * lip_R; }
};

enum class RegKind { nonneg_plus_tv, simplex, tv, tv_ball };

// Indicator constraints are accepted up to this violation (root-finder tolerance).
inline constexpr double kFeasibilityTol = 1e-9;

class Regularizer {
 public:
  /// iota_{M+} + lambda ||.||
  static Regularizer nonneg(double lambda = 0.0) { return {RegKind::nonneg_plus_tv, check_lambda(lambda)}; }
  /// iota of probability measures.
  static Regularizer simplex() { return {RegKind::simplex, 0.0}; }
  /// lambda ||.||
  static Regularizer tv(double lambda) { return {RegKind::tv, check_lambda(lambda)}; }
  /// iota_{||.|| <= K}
  static Regularizer tv_ball(double K) {
    if (!(K > 0.0)) throw std::invalid_argument("tv_ball radius must be positive");
    return {RegKind::tv_ball, K};
  }

  /// "nonneg", "nonneg:<lambda>", "simplex", "tv:<lambda>", "ball:<K>".
  static Regularizer parse(const std::string& token) {
    if (token == "nonneg") return nonneg();
    if (token == "simplex") return simplex();
    auto colon = token.find(':');
    if (colon == std::string::npos) throw std::invalid_argument("unknown regularizer token: " + token);
    std::string head = token.substr(0, colon);
    double value = 0.0;
    try {
      value = std::stod(token.substr(colon + 1));
    } catch (const std::exception&) {
      throw std::invalid_argument("bad numeric value in regularizer token: " + token);
    }
    if (head == "nonneg") return nonneg(value);
    if (head == "tv") return tv(value);
    if (head == "ball") return tv_ball(value);
    throw std::invalid_argument("unknown regularizer token: " + token);
  }

  RegKind kind() const { return kind_; }
  double lambda() const { return kind_ == RegKind::nonneg_plus_tv || kind_ == RegKind::tv ? param_ : 0.0; }
  double radius() const { return kind_ == RegKind::tv_ball ? param_ : std::numeric_limits<double>::infinity(); }
  bool forces_nonnegative() const { return kind_ == RegKind::nonneg_plus_tv || kind_ == RegKind::simplex; }

  std::string token() const {
    char buf[64];
    switch (kind_) {
      case RegKind::nonneg_plus_tv:
        if (param_ == 0.0) return "nonneg";
        std::snprintf(buf, sizeof buf, "nonneg:%.10g", param_);
        return buf;
      case RegKind::simplex: return "simplex";
      case RegKind::tv: std::snprintf(buf, sizeof buf, "tv:%.10g", param_); return buf;
      case RegKind::tv_ball: std::snprintf(buf, sizeof buf, "ball:%.10g", param_); return buf;
    }
    return "?";
  }

  /// Size of the constraint violation of f (0 when feasible).
  double violation(const Grid& grid, const Density& f) const {
    switch (kind_) {
      case RegKind::nonneg_plus_tv: return std::max(0.0, -f.minCoeff());
      case RegKind::simplex:
        return std::max(std::abs(total_mass(grid, f) - 1.0), std::max(0.0, -f.minCoeff()));
      case RegKind::tv: return 0.0;
      case RegKind::tv_ball: return std::max(0.0, l1_norm(grid, f) - param_) / param_;
    }
    return 0.0;
  }

  /// H(f); +inf outside the constraint set.
  double value(const Grid& grid, const Density& f) const {
    if (violation(grid, f) > kFeasibilityTol) return std::numeric_limits<double>::infinity();
    switch (kind_) {
      case RegKind::nonneg_plus_tv:
      case RegKind::tv: return param_ == 0.0 ? 0.0 : param_ * l1_norm(grid, f);
      case RegKind::simplex:
      case RegKind::tv_ball: return 0.0;
    }
    return 0.0;
  }

 private:
  Regularizer(RegKind kind, double param) : kind_(kind), param_(param) {}

  static double check_lambda(double lambda) {
    if (!(lambda >= 0.0)) throw std::invalid_argument("lambda must be nonnegative");
    return lambda;
  }

  RegKind kind_;
  double param_;
};

struct Atom {
  Coords position{};
  double weight = 1.0;
};

struct Problem {
  std::string token;
  Grid grid;
  SmoothObjective smooth;
  Regularizer reg;
  /// Known optimal value on the grid, when available in closed form.
  std::optional<double> inf_value;
  /// Absolute accuracy of inf_value.
  double inf_precision = 0.0;
  /// Minimizer of the continuum problem as a sum of atoms (empty if unknown).
  std::vector<Atom> mu_star;
  std::optional<Setting> setting;
};

struct Evaluation {
  double G = 0.0;
  double H = 0.0;
  double F = 0.0;
  /// Constraint violation of the indicator part of H (0 when feasible).
  double violation = 0.0;
};

inline double eval_G(const Problem& problem, const Density& f) {
  check_same_size(problem.grid, f, "eval_G");
  return problem.smooth.value(f, problem.grid.weights());
}

inline Evaluation evaluate(const Problem& problem, const Density& f) {
  Evaluation e;
  e.G = eval_G(problem, f);
  e.violation = problem.reg.violation(problem.grid, f);
  e.H = problem.reg.value(problem.grid, f);
  e.F = e.G + e.H;
  return e;
}

inline double eval_F(const Problem& problem, const Density& f) { return evaluate(problem, f).F; }

inline Vector grad_potential(const Problem& problem, const Density& f) {
  check_same_size(problem.grid, f, "grad_potential");
  return problem.smooth.potential(f, problem.grid.weights());
}

/// Grid density of the atomic minimizer (each atom at its nearest point).
inline Density discrete_mu_star(const Problem& problem) {
  if (problem.mu_star.empty()) throw std::invalid_argument("problem has no known minimizer");
  Density f = Density::Zero(static_cast<Eigen::Index>(problem.grid.size()));
  for (const auto& atom : problem.mu_star) {
    std::span<const double> pos(atom.position.data(), static_cast<std::size_t>(problem.grid.dim()));
    f += discrete_dirac(problem.grid, pos, atom.weight);
  }
  return f;
}

// ---------------------------------------------------------------------------
// Sparse deconvolution on T^d with the real Dirichlet kernel of order 2.

/// phi(theta) = prod_i (1 + 2 cos(2 pi theta_i) + 2 cos(4 pi theta_i)).
inline double dirichlet_kernel(std::span<const double> theta) {
  double value = 1.0;
  for (double x : theta) {
    value *= 1.0 + 2.0 * std::cos(2.0 * std::numbers::pi * x) + 2.0 * std::cos(4.0 * std::numbers::pi * x);
  }
  return value;
}

namespace detail {

/// Orthonormal real trigonometric basis of frequencies |k| <= 2 along one axis:
/// (1, sqrt2 cos 2pi x, sqrt2 sin 2pi x, sqrt2 cos 4pi x, sqrt2 sin 4pi x).
inline std::array<double, 5> trig_basis(double x) {
  const double r2 = std::numbers::sqrt2;
  const double a = 2.0 * std::numbers::pi * x;
  return {1.0, r2 * std::cos(a), r2 * std::sin(a), r2 * std::cos(2.0 * a), r2 * std::sin(2.0 * a)};
}

/// Tensor-product features psi with <psi(x), psi(y)> = phi(x - y).
inline Vector dirichlet_features(std::span<const double> theta) {
  Vector psi = Vector::Ones(1);
  for (double x : theta) {
    auto b = trig_basis(x);
    Vector next(psi.size() * 5);
    for (Eigen::Index i = 0; i < psi.size(); ++i) {
      for (int r = 0; r < 5; ++r) next[i * 5 + r] = psi[i] * b[static_cast<std::size_t>(r)];
    }
    psi = std::move(next);
  }
  return psi;
}

}  // namespace detail

/// R(z) = ||z - y*||^2_{L2(tau_m)} with y* = phi(. - 0), i.e. mu* = delta_0.
/// The circulant operator f -> phi * (f tau) is applied through the exact
/// rank-5^d factorization phi(x - y) = <psi(x), psi(y)>, so the feature space
/// coordinates are the 5^d trigonometric coefficients of z.
inline Problem deconv_problem(const Grid& grid, const Regularizer& reg) {
  if (grid.kind() != DomainKind::torus) throw std::invalid_argument("deconvolution needs a torus grid");
  if (grid.dim() > 2) throw std::invalid_argument("deconvolution supports d = 1 or 2");
  const auto m = static_cast<Eigen::Index>(grid.size());
  const int d = grid.dim();
  const Coords origin{};
  const Vector target = detail::dirichlet_features(std::span<const double>(origin.data(), d));
  Eigen::MatrixXd features(target.size(), m);
  for (Eigen::Index j = 0; j < m; ++j) features.col(j) = detail::dirichlet_features(grid.point(j));
  // Gram matrix of the features in L2(tau_m); the identity when n >= 5.
  Eigen::MatrixXd gram = features * grid.weights().asDiagonal() * features.transpose();
  auto outer = QuadraticOuter::centered(2.0 * gram, target);

  Problem pb{"deconv" + std::to_string(d) + "d",
             grid,
             SmoothObjective::make(std::move(features), std::move(outer), PhiRegularity::gradient_lipschitz),
             reg,
             std::nullopt,
             0.0,
             {},
             std::nullopt};

  // mu* = c delta_0 with G'[c delta_0] = 2 (c - 1) phi; the scale c follows
  // from the optimality condition at the origin where |phi| peaks at P = 5^d.
  const double P = std::pow(5.0, d);
  const bool orthonormal = grid.per_axis() >= 5;
  const double lambda = reg.lambda();
  double c = 1.0;
  double inf = 0.0;
  switch (reg.kind()) {
    case RegKind::simplex: break;
    case RegKind::nonneg_plus_tv:
    case RegKind::tv:
      if (lambda >= 2.0 * P) {
        c = 0.0;
        inf = P;
      } else {
        c = 1.0 - lambda / (2.0 * P);
        inf = lambda - lambda * lambda / (4.0 * P);
      }
      break;
    case RegKind::tv_ball:
      c = std::min(1.0, reg.radius());
      inf = (1.0 - c) * (1.0 - c) * P;
      break;
  }
  if (c > 0.0) pb.mu_star.push_back({origin, c});
  if (orthonormal) {
    pb.inf_value = inf;
    pb.inf_precision = 1e-14 * std::max(1.0, std::abs(inf));
  }
  pb.setting = (c == 1.0) ? Setting::II_star : Setting::II;
  return pb;
}

// ---------------------------------------------------------------------------
// Lower-bound constructions on T^d with H = iota_P and theta_0 = 0.

/// C^2 radial profile equal to r^2 on [0, 0.4], blended by a quintic
/// smootherstep on [0.4, 0.5] into the constant 0.26.
inline double smooth_sq_profile(double r) {
  constexpr double inner = 0.4;
  constexpr double outer = 0.5;
  constexpr double plateau = 0.26;
  if (r <= inner) return r * r;
  if (r >= outer) return plateau;
  double t = (r - inner) / (outer - inner);
  double blend = t * t * t * (t * (6.0 * t - 15.0) + 10.0);
  return (1.0 - blend) * r * r + blend * plateau;
}

inline Problem lb_problem(const Grid& grid, Setting setting) {
  if (grid.kind() != DomainKind::torus) throw std::invalid_argument("lower-bound problems need a torus grid");
  const auto m = static_cast<Eigen::Index>(grid.size());
  const Coords origin{};
  std::span<const double> theta0(origin.data(), static_cast<std::size_t>(grid.dim()));
  const bool smooth = setting == Setting::II || setting == Setting::II_star;
  const bool squared = setting == Setting::I_star || setting == Setting::II_star;

  Eigen::MatrixXd features(1, m);
  for (Eigen::Index j = 0; j < m; ++j) {
    double r = grid.dist(grid.point(j), theta0);
    features(0, j) = smooth ? smooth_sq_profile(r) : r;
  }
  QuadraticOuter outer = squared ? QuadraticOuter::centered(Eigen::MatrixXd::Ones(1, 1), Vector::Zero(1))
                                 : QuadraticOuter::affine(Vector::Ones(1));
  double at_nearest = features(0, static_cast<Eigen::Index>(grid.nearest(theta0)));
  double inf = squared ? 0.5 * at_nearest * at_nearest : at_nearest;

  return Problem{"lb:" + to_string(setting),
                 grid,
                 SmoothObjective::make(std::move(features), std::move(outer),
                                       smooth ? PhiRegularity::gradient_lipschitz : PhiRegularity::lipschitz),
                 Regularizer::simplex(),
                 inf,
                 1e-15,
                 {Atom{origin, 1.0}},
                 setting};
}

// ---------------------------------------------------------------------------
// Two-layer ReLU network on S^1 with square loss.

struct ReluData {
  Vector x;
  Vector y;
};

/// x_i equispaced on [-1, 1]; y_i = |x_i| - 1/2 + Z_i with Z_i ~ U[-1, 1].
inline ReluData relu_samples(int n, std::uint64_t seed) {
  if (n < 2) throw std::invalid_argument("relu problem needs at least 2 samples");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> noise(-1.0, 1.0);
  ReluData data{Vector(n), Vector(n)};
  for (int i = 0; i < n; ++i) {
    data.x[i] = -1.0 + 2.0 * i / (n - 1);
    data.y[i] = std::abs(data.x[i]) - 0.5 + noise(rng);
  }
  return data;
}

inline constexpr std::uint64_t kDefaultReluSeed = 2021;

/// Phi(theta)_i = (x_i cos theta + sin theta)_+; R(z) = (1/n) sum_i (y_i - z_i)^2 / 2.
inline Problem relu_problem(const Grid& grid, int n_samples, const Regularizer& reg,
                            std::uint64_t seed = kDefaultReluSeed) {
  if (grid.kind() != DomainKind::circle) throw std::invalid_argument("relu problem needs a circle grid");
  ReluData data = relu_samples(n_samples, seed);
  const auto m = static_cast<Eigen::Index>(grid.size());
  Eigen::MatrixXd features(n_samples, m);
  for (Eigen::Index j = 0; j < m; ++j) {
    double angle = grid.point(static_cast<std::size_t>(j))[0];
    double c = std::cos(angle), s = std::sin(angle);
    for (int i = 0; i < n_samples; ++i) features(i, j) = std::max(0.0, data.x[i] * c + s);
  }
  auto outer = QuadraticOuter::centered(Eigen::MatrixXd::Identity(n_samples, n_samples) / n_samples, data.y);
  return Problem{"relu",
                 grid,
                 SmoothObjective::make(std::move(features), std::move(outer), PhiRegularity::lipschitz),
                 reg,
                 std::nullopt,
                 0.0,
                 {},
                 Setting::I};
}

}  // namespace mpgm
