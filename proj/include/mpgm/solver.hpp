#pragma once

// PGM and APGM drivers producing iteration traces, and trace CSV I/O.

#include "mpgm/dgf.hpp"
#include "mpgm/objective.hpp"
#include "mpgm/prox.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <limits>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace mpgm {

enum class Method { pgm, apgm };

inline std::string to_string(Method m) { return m == Method::pgm ? "pgm" : "apgm"; }

inline Method parse_method(const std::string& token) {
  if (token == "pgm") return Method::pgm;
  if (token == "apgm") return Method::apgm;
  throw std::invalid_argument("unknown method: " + token);
}

/// gamma_{k+1} = (sqrt(gamma^4 + 4 gamma^2) - gamma^2) / 2, evaluated as
/// 2 gamma / (sqrt(gamma^2 + 4) + gamma) to avoid cancellation for small gamma.
inline double gamma_next(double gamma) {
  if (!(gamma > 0.0 && gamma <= 1.0)) throw std::invalid_argument("gamma_next: gamma must lie in (0, 1]");
  return 2.0 * gamma / (std::sqrt(gamma * gamma + 4.0) + gamma);
}

/// 0, 1, ..., then round(10^(j / per_decade)) deduplicated, always ending at iters.
inline std::vector<long> geometric_schedule(long iters, int per_decade = 100) {
  if (iters < 1) throw std::invalid_argument("schedule: iters must be >= 1");
  std::vector<long> ks{0};
  for (int j = 0;; ++j) {
    auto k = static_cast<long>(std::llround(std::pow(10.0, static_cast<double>(j) / per_decade)));
    if (k > iters) break;
    if (k > ks.back()) ks.push_back(k);
  }
  if (ks.back() != iters) ks.push_back(iters);
  return ks;
}

/// A priori bound on ||f_k||_{L1} used for the step size.
inline double default_k_bound(const Problem& problem, const Density& f0) {
  const Regularizer& reg = problem.reg;
  switch (reg.kind()) {
    case RegKind::simplex: return 1.0;
    case RegKind::tv_ball: return reg.radius();
    case RegKind::nonneg_plus_tv:
    case RegKind::tv:
      if (reg.lambda() > 0.0) return eval_F(problem, f0) / reg.lambda();
      return 2.0 * l1_norm(problem.grid, f0);
  }
  return 1.0;
}

/// Fixed step from the smoothness constants; 1 when G is affine.
inline double default_step(const Problem& problem, const Dgf& dgf, double k_bound) {
  double s = dgf.step_size(k_bound, problem.smooth.phi_sup, problem.smooth.lip_R);
  return std::isfinite(s) ? s : 1.0;
}

struct SolverConfig {
  Method method = Method::pgm;
  std::optional<double> step;
  long iters = 1000;
  /// Iterations to record; empty means geometric_schedule(iters).
  std::vector<long> record;
  std::optional<double> k_bound;
  KappaOptions kappa;
  bool timing = false;
  /// Called with (k, f_k) at every recorded iteration.
  std::function<void(long, const Density&)> observer;
};

struct TraceRow {
  long k = 0;
  double F = 0.0;
  double gap = std::numeric_limits<double>::quiet_NaN();
  double l1 = 0.0;
  double linf_mirror = 0.0;
  double time_s = 0.0;
};

struct Trace {
  std::vector<std::pair<std::string, std::string>> meta;
  std::vector<TraceRow> rows;
  std::vector<std::string> warnings;
  bool aborted = false;
  std::string abort_reason;
  /// Last iterate f_k (primal).
  Density last;

  void set_meta(const std::string& key, const std::string& value) {
    for (auto& kv : meta) {
      if (kv.first == key) {
        kv.second = value;
        return;
      }
    }
    meta.emplace_back(key, value);
  }

  std::optional<std::string> get_meta(const std::string& key) const {
    for (const auto& kv : meta) {
      if (kv.first == key) return kv.second;
    }
    return std::nullopt;
  }
};

inline std::string format_double(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

namespace detail {

class Recorder {
 public:
  Recorder(const Problem& problem, const SolverConfig& cfg, Trace& trace)
      : problem_(problem),
        trace_(trace),
        timing_(cfg.timing),
        observer_(cfg.observer),
        start_(std::chrono::steady_clock::now()) {
    schedule_ = cfg.record.empty() ? geometric_schedule(cfg.iters) : cfg.record;
    for (std::size_t i = 1; i < schedule_.size(); ++i) {
      if (schedule_[i] <= schedule_[i - 1]) throw std::invalid_argument("record schedule must be increasing");
    }
  }

  bool wants(long k) const { return next_ < schedule_.size() && schedule_[next_] == k; }

  /// Returns false when the objective is not finite (the caller aborts).
  bool record(long k, const Density& f, const Vector& mirror) {
    while (next_ < schedule_.size() && schedule_[next_] <= k) ++next_;
    TraceRow row;
    row.k = k;
    row.F = eval_F(problem_, f);
    if (problem_.inf_value) row.gap = row.F - *problem_.inf_value;
    row.l1 = l1_norm(problem_.grid, f);
    row.linf_mirror = mirror.cwiseAbs().maxCoeff();
    if (timing_) row.time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    trace_.rows.push_back(row);
    if (observer_) observer_(k, f);
    if (!std::isfinite(row.F)) {
      trace_.aborted = true;
      trace_.abort_reason = "non-finite objective at k=" + std::to_string(k);
      return false;
    }
    return true;
  }

 private:
  const Problem& problem_;
  Trace& trace_;
  bool timing_;
  std::function<void(long, const Density&)> observer_;
  std::chrono::steady_clock::time_point start_;
  std::vector<long> schedule_;
  std::size_t next_ = 0;
};

inline void check_start(const Problem& problem, const Dgf& dgf, const Density& f0) {
  check_same_size(problem.grid, f0, "solver");
  if (!f0.allFinite()) throw std::invalid_argument("initial density must be finite");
  if (problem.reg.violation(problem.grid, f0) > kFeasibilityTol) {
    throw std::invalid_argument("initial density is not feasible for " + problem.reg.token());
  }
  if (dgf.nonnegative_domain() && !(f0.minCoeff() > 0.0)) {
    throw std::invalid_argument("entropy geometry needs a positive initial density");
  }
}

}  // namespace detail

inline void fill_metadata(Trace& trace, const Problem& problem, const Dgf& dgf, const SolverConfig& cfg, double s,
                          double k_bound) {
  trace.set_meta("problem", problem.token);
  trace.set_meta("dgf", dgf.token());
  trace.set_meta("reg", problem.reg.token());
  trace.set_meta("method", to_string(cfg.method));
  trace.set_meta("step", format_double(s));
  trace.set_meta("k_bound", format_double(k_bound));
  trace.set_meta("iters", std::to_string(cfg.iters));
  trace.set_meta("grid", problem.grid.describe());
  trace.set_meta("grid_size", std::to_string(problem.grid.size()));
  if (problem.inf_value) {
    trace.set_meta("inf", format_double(*problem.inf_value));
    trace.set_meta("inf_precision", format_double(problem.inf_precision));
  }
  if (problem.setting) trace.set_meta("setting", to_string(*problem.setting));
}

/// PGM: f_{k+1} = prox step from f_k with gradient G'[f_k].
inline Trace run_pgm(const Problem& problem, const Dgf& dgf, const Density& f0, SolverConfig cfg) {
  cfg.method = Method::pgm;
  if (cfg.iters < 1) throw std::invalid_argument("iters must be >= 1");
  detail::check_start(problem, dgf, f0);
  const double k_bound = cfg.k_bound.value_or(default_k_bound(problem, f0));
  const double s = cfg.step.value_or(default_step(problem, dgf, k_bound));
  if (!(s > 0.0)) throw std::invalid_argument("step must be positive");

  Trace trace;
  fill_metadata(trace, problem, dgf, cfg, s, k_bound);
  detail::Recorder rec(problem, cfg, trace);
  MirrorState state = MirrorState::from_primal(dgf, f0);
  Density f = f0;
  if (rec.wants(0) && !rec.record(0, f, state.u)) return trace;
  for (long k = 0; k < cfg.iters; ++k) {
    Vector grad = grad_potential(problem, f);
    state = bregman_step(dgf, problem.reg, problem.grid, state, grad, s, cfg.kappa).next;
    f = state.primal(dgf);
    if (rec.wants(k + 1) && !rec.record(k + 1, f, state.u)) break;
  }
  trace.last = std::move(f);
  return trace;
}

/// APGM. The recorded sequence is f_k; linf_mirror refers to h_k.
inline Trace run_apgm(const Problem& problem, const Dgf& dgf, const Density& f0, SolverConfig cfg) {
  cfg.method = Method::apgm;
  if (cfg.iters < 1) throw std::invalid_argument("iters must be >= 1");
  detail::check_start(problem, dgf, f0);
  const double k_bound = cfg.k_bound.value_or(default_k_bound(problem, f0));
  const double s = cfg.step.value_or(default_step(problem, dgf, k_bound));
  if (!(s > 0.0)) throw std::invalid_argument("step must be positive");

  Trace trace;
  fill_metadata(trace, problem, dgf, cfg, s, k_bound);
  detail::Recorder rec(problem, cfg, trace);
  MirrorState h = MirrorState::from_primal(dgf, f0);
  Density f = f0;
  double gamma = 1.0;
  long exceed_count = 0;
  long first_exceed = -1;
  double worst_norm = 0.0;
  if (rec.wants(0) && !rec.record(0, f, h.u)) return trace;
  for (long k = 0; k < cfg.iters; ++k) {
    Density h_primal = h.primal(dgf);
    Density g = (1.0 - gamma) * f + gamma * h_primal;
    Vector grad = grad_potential(problem, g);
    h = bregman_step(dgf, problem.reg, problem.grid, h, grad, s / gamma, cfg.kappa).next;
    h_primal = h.primal(dgf);
    f = (1.0 - gamma) * f + gamma * h_primal;
    gamma = gamma_next(gamma);
    double norm = l1_norm(problem.grid, h_primal);
    if (norm > k_bound * (1.0 + 1e-9)) {
      if (first_exceed < 0) first_exceed = k + 1;
      ++exceed_count;
      worst_norm = std::max(worst_norm, norm);
    }
    if (rec.wants(k + 1) && !rec.record(k + 1, f, h.u)) break;
  }
  if (exceed_count > 0) {
    std::ostringstream msg;
    msg << "||h_k||_L1 exceeded K_bound=" << k_bound << " at " << exceed_count << " iterations (first k="
        << first_exceed << ", max " << worst_norm << "); the APGM guarantee does not apply";
    trace.warnings.push_back(msg.str());
    trace.set_meta("k_bound_exceeded", std::to_string(exceed_count));
  }
  trace.last = std::move(f);
  return trace;
}

inline Trace run_solver(const Problem& problem, const Dgf& dgf, const Density& f0, const SolverConfig& cfg) {
  return cfg.method == Method::pgm ? run_pgm(problem, dgf, f0, cfg) : run_apgm(problem, dgf, f0, cfg);
}

inline Density uniform_density(const Grid& grid) { return Density::Ones(static_cast<Eigen::Index>(grid.size())); }

// ---------------------------------------------------------------------------
// Trace CSV: '#key=value' preamble, then header k,F,gap,l1,linf_mirror,time_s.

inline constexpr const char* kTraceHeader = "k,F,gap,l1,linf_mirror,time_s";

inline void write_trace(std::ostream& out, const Trace& trace) {
  for (const auto& [key, value] : trace.meta) out << '#' << key << '=' << value << '\n';
  out << kTraceHeader << '\n';
  for (const auto& r : trace.rows) {
    out << r.k << ',' << format_double(r.F) << ',' << format_double(r.gap) << ',' << format_double(r.l1) << ','
        << format_double(r.linf_mirror) << ',' << format_double(r.time_s) << '\n';
  }
}

inline Trace read_trace(std::istream& in) {
  Trace trace;
  std::string line;
  bool header_seen = false;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line[0] == '#') {
      auto eq = line.find('=');
      if (eq == std::string::npos) throw std::runtime_error("trace: malformed metadata line " + std::to_string(lineno));
      trace.meta.emplace_back(line.substr(1, eq - 1), line.substr(eq + 1));
      continue;
    }
    if (!header_seen) {
      if (line != kTraceHeader) throw std::runtime_error("trace: unexpected header '" + line + "'");
      header_seen = true;
      continue;
    }
    std::istringstream fields(line);
    std::string cell;
    std::vector<std::string> cells;
    while (std::getline(fields, cell, ',')) cells.push_back(cell);
    if (cells.size() != 6) throw std::runtime_error("trace: expected 6 columns at line " + std::to_string(lineno));
    TraceRow r;
    try {
      r.k = std::stol(cells[0]);
      r.F = std::strtod(cells[1].c_str(), nullptr);
      r.gap = std::strtod(cells[2].c_str(), nullptr);
      r.l1 = std::strtod(cells[3].c_str(), nullptr);
      r.linf_mirror = std::strtod(cells[4].c_str(), nullptr);
      r.time_s = std::strtod(cells[5].c_str(), nullptr);
    } catch (const std::exception&) {
      throw std::runtime_error("trace: bad number at line " + std::to_string(lineno));
    }
    trace.rows.push_back(r);
  }
  if (!header_seen) throw std::runtime_error("trace: missing header");
  return trace;
}

inline Trace read_trace_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open trace file: " + path);
  return read_trace(in);
}

}  // namespace mpgm
