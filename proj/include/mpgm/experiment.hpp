#pragma once

// Experiment configuration: token resolution, problem construction, reference
// optimal values and the verification suite run by the command-line tool.

#include "mpgm/analysis.hpp"
#include "mpgm/dgf.hpp"
#include "mpgm/objective.hpp"
#include "mpgm/prox.hpp"
#include "mpgm/solver.hpp"
#include "mpgm/verify.hpp"

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace mpgm {

inline const std::vector<std::string>& problem_tokens() {
  static const std::vector<std::string> tokens{"deconv1d", "deconv2d", "lb:I", "lb:I*", "lb:II", "lb:II*", "relu"};
  return tokens;
}

struct ExperimentConfig {
  std::string problem = "deconv1d";
  std::string dgf = "p:2";
  std::string method = "pgm";
  long iters = 100000;
  std::optional<double> step;
  std::optional<double> k_bound;
  /// Grid points per axis (circle: total points); 0 selects the problem default.
  int grid = 0;
  /// Regularizer token; empty selects the problem default.
  std::string reg;
  int samples = 10;
  std::uint64_t seed = kDefaultReluSeed;
  /// Iteration budget of the reference run for problems without a closed form
  /// (0 means 10 x iters).
  long reference_iters = 0;
  std::string reference_cache;
  double fit_lo = 1e3;
  double fit_hi = 1e5;
};

inline int default_grid(const std::string& problem) {
  if (problem == "deconv1d") return 300;
  if (problem == "deconv2d") return 60;
  if (problem == "relu") return 2000;
  if (problem.rfind("lb:", 0) == 0) return 10000;
  throw std::invalid_argument("unknown problem token: " + problem);
}

inline std::string default_reg(const std::string& problem) {
  if (problem == "deconv1d" || problem == "deconv2d") return "nonneg";
  if (problem == "relu") return "tv:0.05";
  if (problem.rfind("lb:", 0) == 0) return "simplex";
  throw std::invalid_argument("unknown problem token: " + problem);
}

/// Builds the problem; throws std::invalid_argument for unknown tokens.
inline Problem build_problem(const ExperimentConfig& cfg) {
  const int n = cfg.grid > 0 ? cfg.grid : default_grid(cfg.problem);
  const Regularizer reg = Regularizer::parse(cfg.reg.empty() ? default_reg(cfg.problem) : cfg.reg);
  if (cfg.problem == "deconv1d") return deconv_problem(Grid::torus(1, n), reg);
  if (cfg.problem == "deconv2d") return deconv_problem(Grid::torus(2, n), reg);
  if (cfg.problem == "relu") return relu_problem(Grid::circle(n), cfg.samples, reg, cfg.seed);
  if (cfg.problem.rfind("lb:", 0) == 0) {
    if (reg.kind() != RegKind::simplex) throw std::invalid_argument("lower-bound problems use the simplex constraint");
    return lb_problem(Grid::torus(1, n), parse_setting(cfg.problem.substr(3)));
  }
  throw std::invalid_argument("unknown problem token: " + cfg.problem);
}

struct ReferenceValue {
  double value = 0.0;
  /// Estimated accuracy: decrease of the best value over the second half of the run.
  double precision = 0.0;
};

/// Long hyperbolic APGM run; the precision estimate compares the best value
/// after half the budget with the best value at the end.
inline ReferenceValue compute_reference(const Problem& problem, long iters) {
  if (iters < 2) throw std::invalid_argument("reference run needs at least 2 iterations");
  Problem pb = problem;
  pb.inf_value.reset();
  SolverConfig cfg;
  cfg.iters = iters;
  cfg.record = geometric_schedule(iters);
  Trace t = run_apgm(pb, Dgf::hyperbolic(), uniform_density(pb.grid), cfg);
  double best_half = std::numeric_limits<double>::infinity();
  double best = std::numeric_limits<double>::infinity();
  for (const auto& r : t.rows) {
    if (r.k <= iters / 2) best_half = std::min(best_half, r.F);
    best = std::min(best, r.F);
  }
  best = std::min(best, eval_F(pb, t.last));
  return {best, std::max(best_half - best, 1e-15 * std::max(1.0, std::abs(best)))};
}

inline std::string reference_key(const ExperimentConfig& cfg, const Problem& pb, long iters) {
  std::ostringstream key;
  key << pb.token << '|' << pb.grid.describe() << '|' << pb.reg.token() << '|' << cfg.samples << '|' << cfg.seed << '|'
      << iters;
  return key.str();
}

/// Reference value with an optional line-oriented cache file "key value precision".
inline ReferenceValue reference_value(const ExperimentConfig& cfg, const Problem& pb) {
  const long iters = cfg.reference_iters > 0 ? cfg.reference_iters : 10 * cfg.iters;
  const std::string key = reference_key(cfg, pb, iters);
  if (!cfg.reference_cache.empty()) {
    std::ifstream in(cfg.reference_cache);
    std::string line;
    while (std::getline(in, line)) {
      std::istringstream row(line);
      std::string k;
      ReferenceValue v;
      if (row >> k >> v.value >> v.precision && k == key) return v;
    }
  }
  ReferenceValue v = compute_reference(pb, iters);
  if (!cfg.reference_cache.empty()) {
    std::ofstream out(cfg.reference_cache, std::ios::app);
    out << key << ' ' << format_double(v.value) << ' ' << format_double(v.precision) << '\n';
  }
  return v;
}

/// Attaches inf F to problems without a closed form.
inline void ensure_inf(const ExperimentConfig& cfg, Problem& pb) {
  if (pb.inf_value) return;
  ReferenceValue ref = reference_value(cfg, pb);
  pb.inf_value = ref.value;
  pb.inf_precision = ref.precision;
}

inline SolverConfig solver_config(const ExperimentConfig& cfg) {
  SolverConfig s;
  s.method = parse_method(cfg.method);
  s.iters = cfg.iters;
  s.step = cfg.step;
  s.k_bound = cfg.k_bound;
  return s;
}

inline bool uses_log_factor(const Dgf& dgf) { return !dgf.is_power(); }

/// Writes `text` to `path` through a temporary file in the same directory.
inline void write_atomically(const std::string& path, const std::string& text) {
  namespace fs = std::filesystem;
  fs::path target(path);
  fs::path tmp = target;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + tmp.string());
    out << text;
    out.flush();
    if (!out) throw std::runtime_error("write failed: " + tmp.string());
  }
  fs::rename(tmp, target);
}

// ---------------------------------------------------------------------------
// Verification suite.

struct OracleResult {
  std::string name;
  double value = 0.0;
  std::string threshold;
  bool pass = false;
  std::string detail;
};

struct VerifyOptions {
  /// Flip the sign of the gradient potential handed to the gradient oracle.
  bool inject_sign_flip = false;
  /// Root-finder tolerance used in the KKT sweep.
  double kappa_tol = 1e-12;
  /// Grid size of the closed-form entropy check.
  int closed_form_grid = 100000;
  long closed_form_iters = 10000;
  std::uint64_t seed = 7;
};

inline std::vector<Problem> registered_problems() {
  std::vector<Problem> out;
  out.push_back(deconv_problem(Grid::torus(1, 300), Regularizer::nonneg()));
  out.push_back(deconv_problem(Grid::torus(2, 20), Regularizer::tv(0.05)));
  for (auto s : {Setting::I, Setting::I_star, Setting::II, Setting::II_star}) {
    out.push_back(lb_problem(Grid::torus(1, 200), s));
  }
  out.push_back(relu_problem(Grid::circle(200), 10, Regularizer::tv(0.05)));
  return out;
}

inline OracleResult gradient_oracle(const VerifyOptions& opt) {
  OracleResult r{"fd_gradient_check", 0.0, "<= 1e-5", true, ""};
  std::mt19937_64 rng(opt.seed);
  std::uniform_real_distribution<double> unit(0.5, 1.5);
  PotentialFn flipped = [](const Problem& pb, const Density& f) { return Vector(-grad_potential(pb, f)); };
  for (const auto& pb : registered_problems()) {
    Density f = Density::NullaryExpr(static_cast<Eigen::Index>(pb.grid.size()), [&] { return unit(rng); });
    auto rep = fd_gradient_check(pb, f, 10, 1e-5, opt.seed, opt.inject_sign_flip ? flipped : PotentialFn{});
    if (rep.max_rel_error > r.value) {
      r.value = rep.max_rel_error;
      r.detail = "worst on " + pb.token;
    }
  }
  r.pass = r.value <= 1e-5;
  return r;
}

inline std::vector<OracleResult> run_verify_suite(const VerifyOptions& opt = {}) {
  std::vector<OracleResult> out;
  out.push_back(gradient_oracle(opt));

  {
    KktSweepOptions k;
    k.kappa.tol = opt.kappa_tol;
    OracleResult r{"kkt_sweep", 0.0, "<= 1e-8", true, ""};
    for (const auto& row : kkt_sweep(k)) {
      if (row.worst.worst() > r.value) {
        r.value = row.worst.worst();
        r.detail = "worst: " + row.dgf + " + " + row.reg;
      }
    }
    r.pass = r.value <= 1e-8;
    out.push_back(r);
  }

  {
    std::vector<long> checkpoints;
    for (long k = 1; k <= opt.closed_form_iters; k *= 10) checkpoints.push_back(k);
    if (checkpoints.back() != opt.closed_form_iters) checkpoints.push_back(opt.closed_form_iters);
    auto rep = entropy_closed_form_check(Grid::torus(1, opt.closed_form_grid), 1.0, opt.closed_form_iters,
                                         checkpoints, 1e2, static_cast<double>(opt.closed_form_iters));
    out.push_back({"entropy_closed_form", rep.max_rel_deviation, "<= 1e-10", rep.max_rel_deviation <= 1e-10,
                   "worst at k=" + std::to_string(rep.worst_k)});
    out.push_back({"entropy_gap_slope", rep.fit.slope, "-1 +/- 0.05", std::abs(rep.fit.slope + 1.0) <= 0.05,
                   "r2=" + format_double(rep.fit.r2)});
  }

  {
    const Grid grid = Grid::torus(1, 64);
    OracleResult r{"pinsker_sample", std::numeric_limits<double>::infinity(), ">= -1e-12", true, ""};
    for (const auto& dgf : {Dgf::power(2.0), Dgf::power(1.5), Dgf::entropy(), Dgf::hyperbolic()}) {
      for (double K : {1.0, 3.0}) {
        auto rep = pinsker_sample(dgf, grid, K, 1000, opt.seed);
        if (rep.worst_margin < r.value) {
          r.value = rep.worst_margin;
          r.detail = "worst: " + dgf.token() + ", K=" + format_double(K);
        }
        if (rep.violations > 0) r.pass = false;
      }
    }
    out.push_back(r);
  }

  {
    OracleResult r{"gamma_sequence", 0.0, "0 < g_k <= min(1, 2/(k+2))", true, ""};
    double gamma = 1.0;
    for (long k = 0; k <= 1000000; ++k) {
      if (!(gamma > 0.0 && gamma <= 1.0 && gamma <= 2.0 / (k + 2.0))) {
        r.pass = false;
        r.detail = "violated at k=" + std::to_string(k);
        break;
      }
      r.value = std::max(r.value, gamma * (k + 2.0) / 2.0);
      gamma = gamma_next(gamma);
    }
    r.detail = r.pass ? "max g_k (k+2)/2 = " + format_double(r.value) : r.detail;
    out.push_back(r);
  }

  {
    auto rep = default_flow_check();
    out.push_back({"flow_square_ratio", rep.square.ratio(), "in [1.5, 2.5]",
                   rep.square.ratio() >= 1.5 && rep.square.ratio() <= 2.5,
                   "gap " + format_double(rep.square.gap_step)});
    out.push_back({"flow_difference_ratio", rep.difference.ratio(), "in [1.5, 2.5]",
                   rep.difference.ratio() >= 1.5 && rep.difference.ratio() <= 2.5,
                   "gap " + format_double(rep.difference.gap_step)});
  }
  return out;
}

}  // namespace mpgm
