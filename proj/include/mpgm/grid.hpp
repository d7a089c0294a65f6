#pragma once

// Weighted point clouds discretizing the flat torus T^d = (R/Z)^d and the
// circle S^1. The weights represent the reference probability measure tau.

#include <Eigen/Dense>

#include <array>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace mpgm {

using Vector = Eigen::VectorXd;
/// Density f = d(mu)/d(tau), one value per grid point.
using Density = Eigen::VectorXd;

enum class DomainKind { torus, circle };

/// Fixed-capacity coordinate tuple (d <= 3). Unused coordinates are zero.
using Coords = std::array<double, 3>;

inline double wrapped_delta(double a, double b, double period) {
  double delta = std::fmod(std::abs(a - b), period);
  return std::min(delta, period - delta);
}

/// Geodesic distance. Torus: Euclidean norm of wrapped per-axis differences.
/// Circle: arc length between two angles.
inline double geodesic_dist(DomainKind kind, std::span<const double> a,
                            std::span<const double> b) {
  if (kind == DomainKind::circle) {
    return wrapped_delta(a[0], b[0], 2.0 * std::numbers::pi);
  }
  double sq = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    double delta = wrapped_delta(a[i], b[i], 1.0);
    sq += delta * delta;
  }
  return std::sqrt(sq);
}

class Grid {
 public:
  /// Regular lattice of n^d points on [0,1)^d, weights n^-d.
  static Grid torus(int d, int n) {
    if (d < 1 || d > 3) throw std::invalid_argument("torus_grid: d must be 1, 2 or 3");
    if (n < 1) throw std::invalid_argument("torus_grid: n must be positive");
    Grid g;
    g.kind_ = DomainKind::torus;
    g.dim_ = d;
    g.per_axis_ = n;
    std::size_t m = 1;
    for (int i = 0; i < d; ++i) m *= static_cast<std::size_t>(n);
    g.coords_.resize(m * static_cast<std::size_t>(d));
    for (std::size_t j = 0; j < m; ++j) {
      // row-major: the last axis varies fastest
      std::size_t rest = j;
      for (int axis = d - 1; axis >= 0; --axis) {
        std::size_t idx = rest % static_cast<std::size_t>(n);
        rest /= static_cast<std::size_t>(n);
        g.coords_[j * d + axis] = static_cast<double>(idx) / n;
      }
    }
    g.weights_ = Vector::Constant(static_cast<Eigen::Index>(m), 1.0 / static_cast<double>(m));
    return g;
  }

  /// m equispaced angles k*2pi/m, weights 1/m.
  static Grid circle(int m) {
    if (m < 1) throw std::invalid_argument("circle_grid: m must be positive");
    Grid g;
    g.kind_ = DomainKind::circle;
    g.dim_ = 1;
    g.per_axis_ = m;
    g.coords_.resize(static_cast<std::size_t>(m));
    for (int j = 0; j < m; ++j) g.coords_[j] = 2.0 * std::numbers::pi * j / m;
    g.weights_ = Vector::Constant(m, 1.0 / m);
    return g;
  }

  DomainKind kind() const { return kind_; }
  int dim() const { return dim_; }
  int per_axis() const { return per_axis_; }
  std::size_t size() const { return static_cast<std::size_t>(weights_.size()); }
  const Vector& weights() const { return weights_; }

  std::span<const double> point(std::size_t j) const {
    return {coords_.data() + j * static_cast<std::size_t>(dim_), static_cast<std::size_t>(dim_)};
  }

  double dist(std::span<const double> a, std::span<const double> b) const {
    return geodesic_dist(kind_, a, b);
  }

  /// Lattice spacing along one axis.
  double spacing() const {
    return kind_ == DomainKind::circle ? 2.0 * std::numbers::pi / per_axis_ : 1.0 / per_axis_;
  }

  /// Largest geodesic distance between two points of the continuum domain.
  double diameter() const {
    return kind_ == DomainKind::circle ? std::numbers::pi : 0.5 * std::sqrt(static_cast<double>(dim_));
  }

  std::size_t nearest(std::span<const double> center) const {
    std::size_t best = 0;
    double best_dist = dist(point(0), center);
    for (std::size_t j = 1; j < size(); ++j) {
      double dj = dist(point(j), center);
      if (dj < best_dist) {
        best_dist = dj;
        best = j;
      }
    }
    return best;
  }

  bool same_shape(const Grid& other) const {
    return kind_ == other.kind_ && dim_ == other.dim_ && per_axis_ == other.per_axis_;
  }

  std::string describe() const {
    if (kind_ == DomainKind::circle) return "circle(m=" + std::to_string(per_axis_) + ")";
    return "torus(d=" + std::to_string(dim_) + ",n=" + std::to_string(per_axis_) + ")";
  }

 private:
  Grid() = default;

  DomainKind kind_ = DomainKind::torus;
  int dim_ = 1;
  int per_axis_ = 1;
  std::vector<double> coords_;
  Vector weights_;
};

// Relative slack so that lattice points at distance exactly eps stay inside
// the closed ball despite rounding in the wrapped differences.
inline constexpr double kClosedBallSlack = 1e-12;

/// tau(B_eps(center)) for the closed geodesic ball.
inline double ball_mass(const Grid& grid, std::span<const double> center, double eps) {
  if (!(eps > 0.0)) throw std::invalid_argument("ball_mass: eps must be positive");
  const double radius = eps * (1.0 + kClosedBallSlack);
  double mass = 0.0;
  for (std::size_t j = 0; j < grid.size(); ++j) {
    if (grid.dist(grid.point(j), center) <= radius) mass += grid.weights()[static_cast<Eigen::Index>(j)];
  }
  return mass;
}

inline void check_same_size(const Grid& grid, const Vector& f, const char* what) {
  if (static_cast<std::size_t>(f.size()) != grid.size()) {
    throw std::invalid_argument(std::string(what) + ": density does not match grid (" +
                                std::to_string(f.size()) + " values, " +
                                std::to_string(grid.size()) + " points)");
  }
}

/// Total variation of f*tau, i.e. sum_j w_j |f_j|.
inline double l1_norm(const Grid& grid, const Density& f) {
  check_same_size(grid, f, "l1_norm");
  return grid.weights().dot(f.cwiseAbs());
}

/// Signed mass sum_j w_j f_j.
inline double total_mass(const Grid& grid, const Density& f) {
  check_same_size(grid, f, "total_mass");
  return grid.weights().dot(f);
}

/// Grid representation of a Dirac at `center`: 1/w at the nearest point.
inline Density discrete_dirac(const Grid& grid, std::span<const double> center, double weight = 1.0) {
  Density f = Density::Zero(static_cast<Eigen::Index>(grid.size()));
  auto j = static_cast<Eigen::Index>(grid.nearest(center));
  f[j] = weight / grid.weights()[j];
  return f;
}

}  // namespace mpgm
