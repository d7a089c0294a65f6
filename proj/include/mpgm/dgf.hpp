#pragma once

// Distance-generating functions eta and the Bregman divergences they induce
// on densities: D(f,g) = sum_j w_j [eta(f_j) - eta(g_j) - eta'(g_j)(f_j - g_j)].

#include "mpgm/grid.hpp"

#include <cmath>
#include <cstdio>
#include <limits>
#include <stdexcept>
#include <string>
#include <type_traits>
#include <variant>

namespace mpgm {

/// eta_p(s) = |s|^p / (p(p-1)), p > 1, signed domain.
struct PowerDgf {
  double p = 2.0;
};

/// eta(s) = s log s - s + 1 on [0, inf).
struct EntropyDgf {};

/// eta(s) = s asinh(s/beta) - sqrt(s^2 + beta^2) + beta, signed domain.
struct HyperbolicDgf {
  double beta = 1e-3;
};

class Dgf {
 public:
  using Kind = std::variant<PowerDgf, EntropyDgf, HyperbolicDgf>;

  Dgf(Kind kind) : kind_(kind) {  // NOLINT(google-explicit-constructor)
    if (auto* pw = std::get_if<PowerDgf>(&kind_); pw && !(pw->p > 1.0)) {
      throw std::invalid_argument("power dgf needs p > 1");
    }
    if (auto* hy = std::get_if<HyperbolicDgf>(&kind_); hy && !(hy->beta > 0.0)) {
      throw std::invalid_argument("hyperbolic dgf needs beta > 0");
    }
  }

  static Dgf power(double p) { return Dgf(PowerDgf{p}); }
  static Dgf entropy() { return Dgf(EntropyDgf{}); }
  static Dgf hyperbolic(double beta = 1e-3) { return Dgf(HyperbolicDgf{beta}); }

  /// Parses "p:<value>", "ent" or "hyp:<beta>" ("hyp" alone uses beta = 1e-3).
  static Dgf parse(const std::string& token) {
    if (token == "ent") return entropy();
    if (token == "hyp") return hyperbolic();
    auto colon = token.find(':');
    if (colon == std::string::npos) throw std::invalid_argument("unknown dgf token: " + token);
    std::string head = token.substr(0, colon);
    double value = 0.0;
    try {
      std::size_t used = 0;
      value = std::stod(token.substr(colon + 1), &used);
      if (used != token.size() - colon - 1) throw std::invalid_argument("trailing characters");
    } catch (const std::exception&) {
      throw std::invalid_argument("bad numeric value in dgf token: " + token);
    }
    if (head == "p") return power(value);
    if (head == "hyp") return hyperbolic(value);
    throw std::invalid_argument("unknown dgf token: " + token);
  }

  const Kind& kind() const { return kind_; }
  bool is_entropy() const { return std::holds_alternative<EntropyDgf>(kind_); }
  bool is_hyperbolic() const { return std::holds_alternative<HyperbolicDgf>(kind_); }
  bool is_power() const { return std::holds_alternative<PowerDgf>(kind_); }

  /// (A2)+ geometry: dom eta = [0, inf), nonnegativity is built in.
  bool nonnegative_domain() const { return is_entropy(); }

  /// Exponent p of the strong-convexity bound (power: p, entropy/hyperbolic: 1).
  double sc_exponent() const {
    if (auto* pw = std::get_if<PowerDgf>(&kind_)) return pw->p;
    return 1.0;
  }

  /// Offset beta of the strong-convexity bound (hyperbolic only).
  double sc_offset() const {
    if (auto* hy = std::get_if<HyperbolicDgf>(&kind_)) return hy->beta;
    return 0.0;
  }

  std::string token() const {
    if (is_entropy()) return "ent";
    if (auto* hy = std::get_if<HyperbolicDgf>(&kind_)) return "hyp:" + format_number(hy->beta);
    return "p:" + format_number(std::get<PowerDgf>(kind_).p);
  }

  double eta(double s) const {
    return std::visit(
        [s](const auto& k) -> double {
          using K = std::decay_t<decltype(k)>;
          if constexpr (std::is_same_v<K, PowerDgf>) {
            return std::pow(std::abs(s), k.p) / (k.p * (k.p - 1.0));
          } else if constexpr (std::is_same_v<K, EntropyDgf>) {
            if (s < 0.0) throw std::domain_error("entropy dgf evaluated at a negative value");
            if (s == 0.0) return 1.0;
            return s * std::log(s) - s + 1.0;
          } else {
            return s * std::asinh(s / k.beta) - std::hypot(s, k.beta) + k.beta;
          }
        },
        kind_);
  }

  /// eta'(s). Entropy at s = 0 returns -inf.
  double prime(double s) const {
    return std::visit(
        [s](const auto& k) -> double {
          using K = std::decay_t<decltype(k)>;
          if constexpr (std::is_same_v<K, PowerDgf>) {
            if (k.p == 2.0) return s;
            return std::copysign(std::pow(std::abs(s), k.p - 1.0) / (k.p - 1.0), s);
          } else if constexpr (std::is_same_v<K, EntropyDgf>) {
            if (s < 0.0) throw std::domain_error("entropy dgf evaluated at a negative value");
            if (s == 0.0) return -std::numeric_limits<double>::infinity();
            return std::log(s);
          } else {
            return std::asinh(s / k.beta);
          }
        },
        kind_);
  }

  /// [eta']^{-1}(u), the map from mirror to primal coordinates.
  double prime_inv(double u) const {
    return std::visit(
        [u](const auto& k) -> double {
          using K = std::decay_t<decltype(k)>;
          if constexpr (std::is_same_v<K, PowerDgf>) {
            if (k.p == 2.0) return u;
            return std::copysign(std::pow((k.p - 1.0) * std::abs(u), 1.0 / (k.p - 1.0)), u);
          } else if constexpr (std::is_same_v<K, EntropyDgf>) {
            return std::exp(u);
          } else {
            return k.beta * std::sinh(u);
          }
        },
        kind_);
  }

  /// d/du [eta']^{-1}(u) = 1 / eta''([eta']^{-1}(u)).
  double prime_inv_derivative(double u) const {
    return std::visit(
        [u](const auto& k) -> double {
          using K = std::decay_t<decltype(k)>;
          if constexpr (std::is_same_v<K, PowerDgf>) {
            if (k.p == 2.0) return 1.0;
            return std::pow((k.p - 1.0) * std::abs(u), (2.0 - k.p) / (k.p - 1.0));
          } else if constexpr (std::is_same_v<K, EntropyDgf>) {
            return std::exp(u);
          } else {
            return k.beta * std::cosh(u);
          }
        },
        kind_);
  }

  /// eta''(s): |s|^{p-2}, 1/s, (s^2 + beta^2)^{-1/2}.
  double second(double s) const {
    return std::visit(
        [s](const auto& k) -> double {
          using K = std::decay_t<decltype(k)>;
          if constexpr (std::is_same_v<K, PowerDgf>) {
            return std::pow(std::abs(s), k.p - 2.0);
          } else if constexpr (std::is_same_v<K, EntropyDgf>) {
            return 1.0 / s;
          } else {
            return 1.0 / std::hypot(s, k.beta);
          }
        },
        kind_);
  }

  /// Pointwise D_eta(a, b) with b given through its mirror value u_b = eta'(b).
  double pointwise_div_mirror(double a, double u_b) const {
    if (is_entropy()) {
      if (a < 0.0) throw std::domain_error("entropy divergence at a negative value");
      double b = std::exp(u_b);
      if (a == 0.0) return b;
      return a * (std::log(a) - u_b) - a + b;
    }
    double b = prime_inv(u_b);
    return eta(a) - eta(b) - u_b * (a - b);
  }

  double pointwise_div(double a, double b) const {
    if (is_entropy()) {
      if (a < 0.0 || b < 0.0) throw std::domain_error("entropy divergence at a negative value");
      if (b == 0.0) return a == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
      if (a == 0.0) return b;
      return a * std::log(a / b) - a + b;
    }
    return eta(a) - eta(b) - prime(b) * (a - b);
  }

  /// Coefficient c with D(f,g) >= c ||f-g||_{L1}^2 on the L1 ball of radius K.
  double sc_constant(double K) const {
    require_sc(K);
    return std::pow(K + sc_offset(), sc_exponent() - 2.0) / 2.0;
  }

  /// Largest step with the standard PGM/APGM guarantees:
  /// (K + beta)^{p-2} / (||Phi||_inf^2 Lip(grad R)). Infinite when G is affine.
  double step_size(double K, double phi_sup, double lip_R) const {
    require_sc(K);
    if (!(phi_sup >= 0.0) || !(lip_R >= 0.0)) {
      throw std::invalid_argument("step_size: constants must be nonnegative");
    }
    double curvature = phi_sup * phi_sup * lip_R;
    if (curvature == 0.0) return std::numeric_limits<double>::infinity();
    return std::pow(K + sc_offset(), sc_exponent() - 2.0) / curvature;
  }

 private:
  void require_sc(double K) const {
    if (!(K > 0.0)) throw std::invalid_argument("L1 bound K must be positive");
    if (sc_exponent() > 2.0) {
      throw std::invalid_argument("no strong-convexity bound for power dgf with p > 2");
    }
  }

  static std::string format_number(double x) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.10g", x);
    return buf;
  }

  Kind kind_;
};

/// Primal density from mirror values.
inline Density to_primal(const Dgf& dgf, const Vector& u) {
  return u.unaryExpr([&](double x) { return dgf.prime_inv(x); });
}

/// Mirror values eta'(f); entropy requires f > 0 for a finite result.
inline Vector to_mirror(const Dgf& dgf, const Density& f) {
  return f.unaryExpr([&](double x) { return dgf.prime(x); });
}

inline double bregman_div(const Dgf& dgf, const Grid& grid, const Density& f, const Density& g) {
  check_same_size(grid, f, "bregman_div");
  check_same_size(grid, g, "bregman_div");
  double total = 0.0;
  for (Eigen::Index j = 0; j < f.size(); ++j) {
    total += grid.weights()[j] * dgf.pointwise_div(f[j], g[j]);
  }
  return total;
}

/// Same divergence with the second argument supplied in mirror coordinates.
inline double bregman_div_mirror(const Dgf& dgf, const Grid& grid, const Density& f, const Vector& u_g) {
  check_same_size(grid, f, "bregman_div");
  check_same_size(grid, u_g, "bregman_div");
  double total = 0.0;
  for (Eigen::Index j = 0; j < f.size(); ++j) {
    total += grid.weights()[j] * dgf.pointwise_div_mirror(f[j], u_g[j]);
  }
  return total;
}

}  // namespace mpgm
