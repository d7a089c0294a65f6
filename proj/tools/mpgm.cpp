// mpgm: run solvers, fit rates, compute psi envelopes and run the oracles.
//
// Exit codes: 0 success, 1 usage error, 2 runtime failure, 3 verification failure.
// MPGM_WORKERS sets the number of concurrent runs when `run` fans out.

#include "mpgm/experiment.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <exception>
#include <iomanip>
#include <iostream>
#include <mutex>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

using namespace mpgm;

namespace {

constexpr int kExitUsage = 1;
constexpr int kExitRuntime = 2;
constexpr int kExitVerify = 3;

// Config file named on the command line, echoed into trace metadata.
std::string g_config_path;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

int worker_count() {
  const char* env = std::getenv("MPGM_WORKERS");
  if (env == nullptr || *env == '\0') return 1;
  int n = std::atoi(env);
  if (n < 1) throw UsageError("MPGM_WORKERS must be a positive integer");
  return n;
}

std::vector<std::string> split_list(const std::vector<std::string>& items) {
  std::vector<std::string> out;
  for (const auto& item : items) {
    std::stringstream ss(item);
    std::string part;
    while (std::getline(ss, part, ',')) {
      if (!part.empty()) out.push_back(part);
    }
  }
  return out;
}

std::string file_safe(std::string s) {
  for (char& c : s) {
    if (c == ':' || c == '*' || c == '/' || c == ' ') c = c == '*' ? 's' : '_';
  }
  return s;
}

bool strip_log_for(const std::string& mode, const std::string& dgf_token) {
  if (mode == "on") return true;
  if (mode == "off") return false;
  return !Dgf::parse(dgf_token).is_power();
}

void write_plot_data(const std::string& path, const std::string& xname, const std::string& yname,
                     const std::vector<std::pair<double, double>>& xy) {
  std::ostringstream out;
  out << "# x=" << xname << " y=" << yname << '\n';
  for (const auto& [x, y] : xy) out << format_double(x) << ' ' << format_double(y) << '\n';
  write_atomically(path, out.str());
}

// ---------------------------------------------------------------------------

struct RunOptions {
  ExperimentConfig cfg;
  std::vector<std::string> dgfs{"p:2"};
  std::vector<std::string> methods{"pgm"};
  std::string out;
  std::string plot_data;
  std::string strip_log = "auto";
  bool timing = false;
  std::vector<long> snapshots;
};

struct RunOutcome {
  std::string label;
  std::string report;
  std::vector<std::string> warnings;
  bool failed = false;
};

RunOutcome run_one(const RunOptions& opt, const ExperimentConfig& cfg, const std::string& out_path,
                   const std::string& plot_path) {
  RunOutcome res;
  res.label = cfg.problem + " " + cfg.dgf + " " + cfg.method;
  Problem pb = build_problem(cfg);
  Dgf dgf = Dgf::parse(cfg.dgf);
  SolverConfig scfg = solver_config(cfg);
  scfg.timing = opt.timing;
  ensure_inf(cfg, pb);

  // Densities at the requested iterations, long format: one row per (k, grid point).
  std::ostringstream density_csv, regressor_csv;
  std::vector<long> snaps;
  for (long k : opt.snapshots) {
    if (k >= 0 && k <= cfg.iters) snaps.push_back(k);
  }
  std::sort(snaps.begin(), snaps.end());
  snaps.erase(std::unique(snaps.begin(), snaps.end()), snaps.end());
  if (!snaps.empty()) {
    std::vector<long> sched = geometric_schedule(cfg.iters);
    sched.insert(sched.end(), snaps.begin(), snaps.end());
    std::sort(sched.begin(), sched.end());
    sched.erase(std::unique(sched.begin(), sched.end()), sched.end());
    scfg.record = std::move(sched);

    density_csv << "k,index";
    for (int a = 0; a < pb.grid.dim(); ++a) density_csv << ",x" << a;
    density_csv << ",f\n";
    ReluData data;
    if (cfg.problem == "relu") {
      data = relu_samples(cfg.samples, cfg.seed);
      regressor_csv << "k,x,y,prediction\n";
    }
    scfg.observer = [&, data](long k, const Density& f) {
      if (!std::binary_search(snaps.begin(), snaps.end(), k)) return;
      for (std::size_t j = 0; j < pb.grid.size(); ++j) {
        density_csv << k << ',' << j;
        for (double x : pb.grid.point(j)) density_csv << ',' << format_double(x);
        density_csv << ',' << format_double(f[static_cast<Eigen::Index>(j)]) << '\n';
      }
      if (data.x.size() > 0) {
        const Vector pred = pb.smooth.embed(f, pb.grid.weights());
        for (Eigen::Index i = 0; i < data.x.size(); ++i) {
          regressor_csv << k << ',' << format_double(data.x[i]) << ',' << format_double(data.y[i]) << ','
                        << format_double(pred[i]) << '\n';
        }
      }
    };
  }

  Trace trace = run_solver(pb, dgf, uniform_density(pb.grid), scfg);

  trace.set_meta("dim", std::to_string(pb.grid.dim()));
  trace.set_meta("samples", std::to_string(cfg.samples));
  trace.set_meta("seed", std::to_string(cfg.seed));
  trace.set_meta("fit_lo", format_double(cfg.fit_lo));
  trace.set_meta("fit_hi", format_double(cfg.fit_hi));
  trace.set_meta("strip_log", opt.strip_log);
  trace.set_meta("timing", opt.timing ? "1" : "0");
  if (!g_config_path.empty()) trace.set_meta("config", g_config_path);
  if (cfg.problem == "relu") {
    trace.set_meta("reference_iters", std::to_string(cfg.reference_iters > 0 ? cfg.reference_iters : 10 * cfg.iters));
  }

  std::ostringstream rep;
  rep << res.label << ": ";
  if (!trace.rows.empty()) rep << "final gap " << format_double(trace.rows.back().gap);
  FitOptions fo;
  fo.k_lo = cfg.fit_lo;
  fo.k_hi = cfg.fit_hi;
  fo.strip_log = strip_log_for(opt.strip_log, cfg.dgf);
  try {
    RateFit fit = fit_trace(trace, fo);
    rep << ", fitted slope " << std::setprecision(4) << fit.slope << " (r2 " << fit.r2 << ", k in [" << fit.k_lo << ", "
        << fit.k_hi << "]" << (fo.strip_log ? ", log stripped" : "") << ")";
    trace.set_meta("fit_slope", format_double(fit.slope));
    trace.set_meta("fit_r2", format_double(fit.r2));
    trace.set_meta("fit_window", format_double(fit.k_lo) + ":" + format_double(fit.k_hi));
    trace.set_meta("fit_strip_log", fo.strip_log ? "1" : "0");
    if (fit.truncated) trace.set_meta("fit_note", fit.note);
  } catch (const FitError& e) {
    rep << ", no fit (" << e.what() << ")";
    trace.set_meta("fit_note", e.what());
  }
  try {
    Classification cls = classify_setting(pb);
    RateModel model = theoretical_exponent(scfg.method, dgf, cls.q, pb.grid.dim());
    rep << ", theory " << std::setprecision(4) << model.exponent << (model.log_factor ? " (up to log)" : "")
        << " [setting " << to_string(cls.setting) << ", q=" << cls.q << "]";
    trace.set_meta("theory_exponent", format_double(model.exponent));
    trace.set_meta("q", std::to_string(cls.q));
  } catch (const std::exception& e) {
    rep << ", theory unavailable (" << e.what() << ")";
  }
  res.warnings = trace.warnings;
  if (trace.aborted) {
    res.failed = true;
    rep << ", ABORTED: " << trace.abort_reason;
    trace.set_meta("aborted", trace.abort_reason);
  }
  if (!out_path.empty()) {
    std::ostringstream csv;
    write_trace(csv, trace);
    write_atomically(out_path, csv.str());
  }
  if (!snaps.empty()) {
    const std::string stem = out_path.size() > 4 && out_path.ends_with(".csv")
                                 ? out_path.substr(0, out_path.size() - 4) : out_path;
    write_atomically(stem + ".density.csv", density_csv.str());
    if (cfg.problem == "relu") write_atomically(stem + ".regressor.csv", regressor_csv.str());
  }
  if (!plot_path.empty()) {
    std::vector<std::pair<double, double>> xy;
    for (const auto& r : trace.rows) {
      if (r.k > 0) xy.emplace_back(static_cast<double>(r.k), r.gap);
    }
    write_plot_data(plot_path, "k", "gap", xy);
  }
  res.report = rep.str();
  return res;
}

int cmd_run(const RunOptions& opt) {
  if (opt.cfg.iters < 1) throw UsageError("--iters must be >= 1");
  if (!opt.snapshots.empty() && opt.out.empty()) throw UsageError("--snapshots needs --out");
  std::vector<std::string> dgfs = split_list(opt.dgfs);
  std::vector<std::string> methods = split_list(opt.methods);
  if (dgfs.empty() || methods.empty()) throw UsageError("need at least one --dgf and one --method");
  // Resolve every token before starting any work.
  for (const auto& d : dgfs) Dgf::parse(d);
  for (const auto& m : methods) parse_method(m);
  {
    ExperimentConfig probe = opt.cfg;
    probe.dgf = dgfs.front();
    build_problem(probe);
  }

  struct Job {
    ExperimentConfig cfg;
    std::string out;
    std::string plot;
  };
  std::vector<Job> jobs;
  const bool many = dgfs.size() * methods.size() > 1;
  for (const auto& d : dgfs) {
    for (const auto& m : methods) {
      Job job{opt.cfg, opt.out, opt.plot_data};
      job.cfg.dgf = d;
      job.cfg.method = m;
      if (many) {
        std::string stem = file_safe(opt.cfg.problem) + "_" + file_safe(d) + "_" + m;
        if (!opt.out.empty()) job.out = opt.out + "/" + stem + ".csv";
        if (!opt.plot_data.empty()) job.plot = opt.plot_data + "/" + stem + ".dat";
      }
      jobs.push_back(job);
    }
  }
  if (many) {
    if (!opt.out.empty()) std::filesystem::create_directories(opt.out);
    if (!opt.plot_data.empty()) std::filesystem::create_directories(opt.plot_data);
  }

  std::vector<RunOutcome> outcomes(jobs.size());
  std::vector<std::string> errors(jobs.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < jobs.size(); i = next++) {
      try {
        outcomes[i] = run_one(opt, jobs[i].cfg, jobs[i].out, jobs[i].plot);
      } catch (const std::exception& e) {
        errors[i] = e.what();
      }
    }
  };
  const int workers = std::min<int>(worker_count(), static_cast<int>(jobs.size()));
  std::vector<std::thread> pool;
  for (int w = 1; w < workers; ++w) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();

  int status = 0;
  for (std::size_t i = 0; i < jobs.size(); ++i) {
    if (!errors[i].empty()) {
      std::cerr << "error: " << jobs[i].cfg.problem << " " << jobs[i].cfg.dgf << " " << jobs[i].cfg.method << ": "
                << errors[i] << '\n';
      status = kExitRuntime;
      continue;
    }
    for (const auto& w : outcomes[i].warnings) std::cerr << "warning: " << outcomes[i].label << ": " << w << '\n';
    std::cout << outcomes[i].report << '\n';
    if (outcomes[i].failed) status = kExitRuntime;
  }
  return status;
}

// ---------------------------------------------------------------------------

struct RatesOptions {
  std::vector<std::string> files;
  double fit_lo = 1e3;
  double fit_hi = 1e5;
  std::string strip_log = "auto";
  std::string csv;
};

int cmd_rates(const RatesOptions& opt) {
  if (!(opt.fit_hi >= opt.fit_lo)) throw UsageError("empty fit window");
  std::ostringstream csv;
  csv << "file,problem,dgf,method,fitted,theory,discrepancy,r2,k_lo,k_hi\n";
  std::cout << std::left << std::setw(32) << "trace" << std::setw(10) << "dgf" << std::setw(6) << "meth" << std::right
            << std::setw(10) << "fitted" << std::setw(10) << "theory" << std::setw(10) << "diff" << std::setw(8) << "r2"
            << '\n';
  for (const auto& path : opt.files) {
    Trace t = read_trace_file(path);
    const std::string dgf = t.get_meta("dgf").value_or("p:2");
    const std::string method = t.get_meta("method").value_or("pgm");
    FitOptions fo;
    fo.k_lo = opt.fit_lo;
    fo.k_hi = opt.fit_hi;
    fo.strip_log = strip_log_for(opt.strip_log, dgf);
    RateFit fit = fit_trace(t, fo);
    double theory = std::numeric_limits<double>::quiet_NaN();
    if (auto setting = t.get_meta("setting")) {
      int d = std::stoi(t.get_meta("dim").value_or("1"));
      theory =
          theoretical_exponent(parse_method(method), Dgf::parse(dgf), structure_exponent(parse_setting(*setting)), d)
              .exponent;
    }
    const std::string problem = t.get_meta("problem").value_or("?");
    std::string name = std::filesystem::path(path).filename().string();
    std::cout << std::left << std::setw(32) << name << std::setw(10) << dgf << std::setw(6) << method << std::right
              << std::fixed << std::setprecision(3) << std::setw(10) << fit.slope << std::setw(10) << theory
              << std::setw(10) << fit.slope - theory << std::setw(8) << fit.r2 << std::defaultfloat << '\n';
    if (fit.truncated) std::cout << "  note: " << fit.note << '\n';
    csv << path << ',' << problem << ',' << dgf << ',' << method << ',' << format_double(fit.slope) << ','
        << format_double(theory) << ',' << format_double(fit.slope - theory) << ',' << format_double(fit.r2) << ','
        << format_double(fit.k_lo) << ',' << format_double(fit.k_hi) << '\n';
  }
  if (!opt.csv.empty()) write_atomically(opt.csv, csv.str());
  return 0;
}

// ---------------------------------------------------------------------------

struct PsiOptions {
  ExperimentConfig cfg;
  double alpha_lo = 1e-6;
  double alpha_hi = 1e-2;
  int alpha_count = 41;
  double eps_lo = 0.0;
  double eps_hi = 0.0;
  int eps_count = 30;
  std::string out;
  std::string plot_data;
};

int cmd_psi(const PsiOptions& opt) {
  if (!(opt.alpha_lo > 0.0) || !(opt.alpha_hi > opt.alpha_lo) || opt.alpha_count < 2) {
    throw UsageError("need 0 < alpha-lo < alpha-hi and alpha-count >= 2");
  }
  Problem pb = build_problem(opt.cfg);
  if (pb.mu_star.empty()) throw UsageError("problem " + pb.token + " has no known minimizer");
  Dgf dgf = Dgf::parse(opt.cfg.dgf);
  ensure_inf(opt.cfg, pb);
  std::vector<double> eps = default_eps_grid(pb.grid);
  if (opt.eps_lo > 0.0 || opt.eps_hi > 0.0) {
    double lo = opt.eps_lo > 0.0 ? opt.eps_lo : 3.0 * pb.grid.spacing();
    double hi = opt.eps_hi > 0.0 ? opt.eps_hi : pb.grid.diameter() / 4.0;
    eps = log_space(lo, hi, opt.eps_count);
    eps.push_back(pb.grid.diameter());
  }
  std::vector<double> alphas{0.0};
  for (double a : log_space(opt.alpha_lo, opt.alpha_hi, opt.alpha_count)) alphas.push_back(a);
  auto curve = psi_envelope(pb, dgf, uniform_density(pb.grid), alphas, eps);
  RateFit fit = fit_psi(curve, opt.alpha_lo, opt.alpha_hi);
  Classification cls = classify_setting(pb);
  double predicted = -theoretical_exponent(Method::pgm, dgf, cls.q, pb.grid.dim()).exponent;

  std::ostringstream csv;
  csv << "#problem=" << pb.token << "\n#dgf=" << dgf.token() << "\n#grid=" << pb.grid.describe()
      << "\n#alpha_exponent=" << format_double(fit.slope) << "\n#predicted=" << format_double(predicted) << '\n';
  write_psi_csv(csv, curve);
  if (!opt.out.empty()) {
    write_atomically(opt.out, csv.str());
  } else {
    std::cout << csv.str();
  }
  if (!opt.plot_data.empty()) {
    std::vector<std::pair<double, double>> xy;
    for (const auto& p : curve) {
      if (p.alpha > 0.0) xy.emplace_back(p.alpha, p.psi);
    }
    write_plot_data(opt.plot_data, "alpha", "psi_hat", xy);
  }
  std::cout << pb.token << " " << dgf.token() << ": alpha-exponent " << std::setprecision(4) << fit.slope
            << " (predicted " << predicted << (dgf.is_power() ? "" : ", up to log") << ", setting "
            << to_string(cls.setting) << "), psi(0) = " << format_double(curve.front().psi) << '\n';
  return 0;
}

// ---------------------------------------------------------------------------

int cmd_verify(const std::string& inject, bool quick) {
  VerifyOptions opt;
  if (inject == "sign-flip") {
    opt.inject_sign_flip = true;
  } else if (inject == "kappa-tol") {
    opt.kappa_tol = 1e-2;
  } else if (!inject.empty()) {
    throw UsageError("unknown --inject value: " + inject);
  }
  if (quick) {
    opt.closed_form_grid = 4000;
    opt.closed_form_iters = 1000;
  }
  auto results = run_verify_suite(opt);
  bool ok = true;
  std::cout << std::left << std::setw(24) << "oracle" << std::setw(14) << "value" << std::setw(30) << "threshold"
            << "result\n";
  for (const auto& r : results) {
    std::ostringstream value;
    value << std::setprecision(4) << r.value;
    std::cout << std::left << std::setw(24) << r.name << std::setw(14) << value.str() << std::setw(30) << r.threshold
              << (r.pass ? "PASS" : "FAIL") << "  " << r.detail << '\n';
    ok = ok && r.pass;
  }
  return ok ? 0 : kExitVerify;
}

/// Splices the flat key=value file named by `--config` into the argument list
/// right after the subcommand; keys also given on the command line are skipped
/// so that flags take precedence.
std::vector<std::string> expand_config(int argc, char** argv) {
  std::vector<std::string> args(argv, argv + argc);
  auto it = std::find(args.begin(), args.end(), "--config");
  std::string path;
  if (it != args.end() && it + 1 != args.end()) {
    path = *(it + 1);
    args.erase(it, it + 2);
  } else {
    for (auto a = args.begin(); a != args.end(); ++a) {
      if (a->rfind("--config=", 0) == 0) {
        path = a->substr(9);
        args.erase(a);
        break;
      }
    }
  }
  if (path.empty() || args.size() < 2) return args;
  g_config_path = path;
  std::vector<CLI::ConfigItem> items = CLI::ConfigINI().from_file(path);
  std::vector<std::string> injected;
  for (const auto& item : items) {
    if (item.name.empty() || item.name == "++" || item.name == "--") continue;
    const std::string flag = "--" + item.name;
    bool on_cli = std::any_of(args.begin() + 2, args.end(), [&](const std::string& a) {
      return a == flag || a.rfind(flag + "=", 0) == 0;
    });
    if (on_cli) continue;
    injected.push_back(flag);
    for (const auto& v : item.inputs) injected.push_back(v);
  }
  args.insert(args.begin() + 2, injected.begin(), injected.end());
  return args;
}

void add_experiment_options(CLI::App* sub, ExperimentConfig& cfg) {
  sub->add_option("--problem", cfg.problem, "deconv1d | deconv2d | lb:I | lb:I* | lb:II | lb:II* | relu")
      ->capture_default_str();
  sub->add_option("--grid", cfg.grid, "points per axis (0: problem default)")->capture_default_str();
  sub->add_option("--reg", cfg.reg, "nonneg[:lambda] | simplex | tv:lambda | ball:K (empty: problem default)");
  sub->add_option("--samples", cfg.samples, "relu: number of samples")->capture_default_str();
  sub->add_option("--seed", cfg.seed, "relu: noise seed")->capture_default_str();
  sub->add_option("--reference-iters", cfg.reference_iters, "reference run length (0: 10 x iters)");
  sub->add_option("--reference-cache", cfg.reference_cache, "cache file for reference values");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Bregman proximal gradient methods for optimization over measures"};
  app.require_subcommand(1);

  RunOptions run_opt;
  CLI::App* run = app.add_subcommand("run", "run PGM or APGM and write a trace");
  std::string config_path;
  run->add_option("--config", config_path, "flat key=value file; flags override it");
  add_experiment_options(run, run_opt.cfg);
  run->add_option("--dgf", run_opt.dgfs, "p:<p> | ent | hyp[:beta]; comma-separated for several")->delimiter(',');
  run->add_option("--method", run_opt.methods, "pgm | apgm; comma-separated for several")->delimiter(',');
  run->add_option("--iters", run_opt.cfg.iters, "number of iterations")->capture_default_str();
  run->add_option("--step", run_opt.cfg.step, "step size (default from the smoothness constants)");
  run->add_option("--k-bound", run_opt.cfg.k_bound, "a priori L1 bound used for the step size");
  run->add_option("--fit-lo", run_opt.cfg.fit_lo, "fit window start")->capture_default_str();
  run->add_option("--fit-hi", run_opt.cfg.fit_hi, "fit window end")->capture_default_str();
  run->add_option("--strip-log", run_opt.strip_log, "auto | on | off")->check(CLI::IsMember({"auto", "on", "off"}));
  run->add_option("--out", run_opt.out, "trace CSV (a directory when several runs are requested)");
  run->add_option("--plot-data", run_opt.plot_data, "x/y columns of (k, gap)");
  run->add_flag("--timing", run_opt.timing, "record wall time in the time_s column");
  run->add_option("--snapshots", run_opt.snapshots,
                  "iterations at which to write f_k to <out>.density.csv (relu: also <out>.regressor.csv)")
      ->delimiter(',');

  RatesOptions rates_opt;
  CLI::App* rates = app.add_subcommand("rates", "fit log-log slopes of trace files");
  rates->add_option("traces", rates_opt.files, "trace CSV files")->required()->check(CLI::ExistingFile);
  rates->add_option("--fit-lo", rates_opt.fit_lo, "fit window start")->capture_default_str();
  rates->add_option("--fit-hi", rates_opt.fit_hi, "fit window end")->capture_default_str();
  rates->add_option("--strip-log", rates_opt.strip_log, "auto | on | off")->check(CLI::IsMember({"auto", "on", "off"}));
  rates->add_option("--csv", rates_opt.csv, "machine-readable report");

  PsiOptions psi_opt;
  psi_opt.cfg.problem = "lb:II*";
  CLI::App* psi = app.add_subcommand("psi", "envelope of the mollified candidates");
  psi->add_option("--config", config_path, "flat key=value file; flags override it");
  add_experiment_options(psi, psi_opt.cfg);
  psi->add_option("--dgf", psi_opt.cfg.dgf, "p:<p> | ent | hyp[:beta]")->capture_default_str();
  psi->add_option("--alpha-lo", psi_opt.alpha_lo)->capture_default_str();
  psi->add_option("--alpha-hi", psi_opt.alpha_hi)->capture_default_str();
  psi->add_option("--alpha-count", psi_opt.alpha_count)->capture_default_str();
  psi->add_option("--eps-lo", psi_opt.eps_lo, "smallest radius (default 3 grid spacings)");
  psi->add_option("--eps-hi", psi_opt.eps_hi, "largest radius (default diameter / 4)");
  psi->add_option("--eps-count", psi_opt.eps_count)->capture_default_str();
  psi->add_option("--out", psi_opt.out, "envelope CSV (stdout if omitted)");
  psi->add_option("--plot-data", psi_opt.plot_data, "x/y columns of (alpha, psi)");

  std::string inject;
  bool quick = false;
  CLI::App* verify = app.add_subcommand("verify", "run every oracle and print a pass/fail table");
  verify->add_option("--inject", inject)->group("");  // debug hook: sign-flip | kappa-tol
  verify->add_flag("--quick", quick, "smaller closed-form check");

  try {
    std::vector<std::string> args = expand_config(argc, argv);
    std::vector<std::string> reversed(args.rbegin(), args.rend() - 1);
    app.parse(reversed);
  } catch (const CLI::FileError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }

  try {
    if (*run) return cmd_run(run_opt);
    if (*rates) return cmd_rates(rates_opt);
    if (*psi) return cmd_psi(psi_opt);
    if (*verify) return cmd_verify(inject, quick);
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::invalid_argument& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
  return kExitUsage;
}
