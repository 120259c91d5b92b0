#include "sddelab/experiment.hpp"

#include "sddelab/estimators.hpp"
#include "sddelab/parallel.hpp"
#include "sddelab/random.hpp"
#include "sddelab/skorokhod.hpp"
#include "sddelab/stationary.hpp"

#include <algorithm>
#include <cmath>
#include <fftw3.h>
#include <fmt/format.h>
#include <fmt/os.h>
#include <functional>
#include <map>
#include <numbers>

namespace sddelab {

int exit_code_for(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::InvalidArgument:
    case ErrorKind::Config: return kExitConfig;
    case ErrorKind::Numerical: return kExitNumerical;
    case ErrorKind::Io: return kExitIo;
  }
  return kExitIo;
}

const std::vector<std::string>& experiment_commands() {
  static const std::vector<std::string> names = {"stability", "fundamental", "simulate", "verify",   "stationary",
                                                 "covariance", "spectrum",   "powerlaw", "nonunique", "feller-demo"};
  return names;
}

std::string manifest_text(const std::string& command, const Config& config, std::uint64_t seed, int threads) {
  Config rest = config;
  for (const char* k : {"command", "seed", "threads"}) rest.erase(k);
  std::string out = "# sddelab run manifest; reload with --config to reproduce\n";
  out += fmt::format("# versions: sddelab {}, fmt {}, {}\n", SDDELAB_VERSION, FMT_VERSION, fftw_version);
  out += fmt::format("# threads: {} (outputs do not depend on it)\n", threads);
  out += fmt::format("command = {}\nseed = {}\n", command, seed);
  out += rest.format();
  return out;
}

namespace {

class Run {
 public:
  Run(const RunRequest& req, RunOutcome& out)
      : cfg_(req.config), dir_(req.out_dir), out_(out) {
    seed_ = req.seed ? *req.seed : cfg_.integer("seed", 0);
    const auto t = req.threads ? static_cast<std::uint64_t>(std::max(*req.threads, 1))
                               : cfg_.integer("threads", static_cast<std::uint64_t>(default_thread_count()));
    threads_ = static_cast<int>(std::max<std::uint64_t>(1, t));
  }

  std::uint64_t seed() const { return seed_; }
  int threads() const { return threads_; }

  fmt::ostream csv(const std::string& name, std::string_view header) {
    const auto path = dir_ / name;
    try {
      auto f = fmt::output_file(path.string());
      f.print("{}\n", header);
      out_.files.push_back(path);
      return f;
    } catch (const std::system_error& e) {
      throw_io(fmt::format("cannot write {}: {}", path.string(), e.what()));
    }
  }

  template <class... Args>
  void say(fmt::format_string<Args...> f, Args&&... args) {
    out_.summary += fmt::format(f, std::forward<Args>(args)...);
    out_.summary += '\n';
  }

  SddeProblem problem() const { return build_problem(cfg_, seed_); }

  /// Problem for the long-run commands; T defaults to the sampling horizon.
  SddeProblem stationary_problem() const {
    auto p = problem();
    if (!cfg_.has("T")) p.T = cfg_.number("kb.horizon");
    p.validate();
    return p;
  }

  KbOptions kb_options(const SddeProblem& p) const {
    KbOptions o;
    o.burn_in = cfg_.number("kb.burn_in", -1.0);
    o.horizon = cfg_.number("kb.horizon");
    o.spacing = cfg_.number("kb.spacing", 0.0);
    o.replicates = cfg_.integer("kb.replicates", 1);
    o.seed = seed_;
    o.threads = threads_;
    o.initial = p.phi;
    return o;
  }

  double stability(const DelayMeasure& mu) const { return stability_abscissa(mu, 1e-6).v0; }

  FundamentalSolution decaying_r(const SddeProblem& p) const {
    const auto st = stability_abscissa(p.mu, 1e-6);
    if (!(st.v0 < 0.0)) {
      throw_numerical(fmt::format("v0 = {} is not negative; no stationary second-order structure", st.v0));
    }
    return compute_r(p.mu, default_horizon(p.mu, st.v0, p.h), p.h);
  }

  /// E[F^2] for the second-order formulas: exact for constant F, else the time average.
  static double ef2(const SddeProblem& p, const EmpiricalMeasure& em) {
    if (p.F.kind() == DiffusionFunctional::Kind::Constant) return p.F.constant_value() * p.F.constant_value();
    return em.ef2;
  }

  void warn(const EmpiricalMeasure& em) {
    if (!em.warning.empty()) say("warning={}", em.warning);
  }

  const Config& cfg_;
  std::filesystem::path dir_;
  RunOutcome& out_;
  std::uint64_t seed_ = 0;
  int threads_ = 1;
};

void cmd_stability(Run& run) {
  const auto mu = build_measure(run.cfg_);
  StabilityOptions opts;
  opts.search_depth = run.cfg_.number("stability.depth", 0.0);
  const auto st = stability_abscissa(mu, run.cfg_.number("stability.tol", 1e-8), opts);
  {
    auto f = run.csv("stability.csv", "v0,below_search_floor,search_floor");
    f.print("{},{},{}\n", st.v0, st.below_search_floor ? 1 : 0, st.search_floor);
  }
  {
    auto f = run.csv("roots.csv", "re,im");
    for (const auto& z : st.roots) f.print("{},{}\n", z.real(), z.imag());
  }
  run.say("v0={:.10f}", st.v0);
  if (st.below_search_floor) run.say("below_search_floor={}", st.search_floor);
  run.say("roots={}", st.roots.size());
}

void cmd_fundamental(Run& run) {
  const auto mu = build_measure(run.cfg_);
  const double h = run.cfg_.number("h");
  const auto st = stability_abscissa(mu, 1e-6);
  const double T = run.cfg_.number("fundamental.T", st.v0 < 0.0 ? default_horizon(mu, st.v0, h) : 20.0 * mu.alpha());
  const auto fs = compute_r(mu, T, h);
  {
    auto f = run.csv("fundamental.csv", "t,r,rdot");
    for (std::size_t k = 0; k < fs.r.size(); ++k) f.print("{},{},{}\n", static_cast<double>(k) * h, fs.r[k], fs.rdot[k]);
  }
  auto f = run.csv("norms.csv", "quantity,value,error");
  f.print("v0,{},0\n", st.v0);
  f.print("decay_c,{},0\n", fs.fit.c);
  f.print("decay_beta,{},0\n", fs.fit.beta);
  run.say("v0={:.10f}", st.v0);
  if (fs.unstable_growth) {
    run.say("unstable_growth=1");
    return;
  }
  if (fs.fit.beta > 0.0) {
    const auto n2 = l2_norm_sq(fs);
    const auto d2 = l2_norm_sq_dot(fs);
    f.print("l2_norm_sq,{},{}\n", n2.value, n2.error);
    f.print("l2_norm_sq_dot,{},{}\n", d2.value, d2.error);
    run.say("l2_norm_sq={}", n2.value);
  }
}

void cmd_simulate(Run& run) {
  const auto p = run.problem();
  p.validate();
  const auto R = run.cfg_.integer("simulate.replicates", 1);
  const auto method = run.cfg_.text("simulate.method", "euler");
  if (method != "euler" && method != "voc") throw_config(fmt::format("config key 'simulate.method': expected euler or voc, got '{}'", method));
  std::optional<FundamentalSolution> fs;
  if (method == "voc") fs = compute_r(p.mu, p.T, p.h);
  std::vector<GridPath> paths(R);
  parallel_for(R, run.threads(), [&](std::size_t r) {
    const auto seed = derive_seed(run.seed(), r);
    if (fs) {
      paths[r] = solve_voc(p, sample_path(p.levy, p.T, p.h, seed), *fs);
    } else {
      paths[r] = solve_euler(p, seed);
    }
    paths[r].seed = seed;
  });
  for (std::size_t r = 0; r < R; ++r) {
    const auto file = run.dir_ / fmt::format("path_{}.csv", r);
    write_path_csv(paths[r], file);
    run.out_.files.push_back(file);
  }
  run.say("paths={}", R);
  run.say("final_value_0={}", paths[0].values.back());
}

void cmd_verify(Run& run) {
  Config cfg = run.cfg_;
  const auto hs = cfg.numbers("verify.h_list", {1e-2, 5e-3, 2.5e-3});
  const double h_min = *std::min_element(hs.begin(), hs.end());
  auto base = run.problem();
  if (!(base.T > 0.0)) throw_config("config key 'T': verify needs a positive horizon");
  std::vector<SddeProblem> problems;
  std::vector<std::size_t> factors;
  for (double h : hs) {
    cfg.set("h", fmt::format("{}", h));
    auto p = build_problem(cfg, run.seed());
    p.validate();
    const double ratio = h / h_min;
    if (std::abs(ratio - std::round(ratio)) > 1e-9 * ratio) {
      throw_config(fmt::format("config key 'verify.h_list': {} is not an integer multiple of {}", h, h_min));
    }
    problems.push_back(std::move(p));
    factors.push_back(static_cast<std::size_t>(std::llround(ratio)));
  }
  const auto noise = sample_path(base.levy, base.T, h_min, run.seed());
  std::vector<double> diffs(hs.size());
  parallel_for(hs.size(), run.threads(), [&](std::size_t i) {
    const auto& p = problems[i];
    const auto incr = noise.coarsen(factors[i]);
    const auto euler = solve_euler(p, incr);
    const auto voc = solve_voc(p, incr, compute_r(p.mu, p.T, p.h));
    double d = 0.0;
    for (std::size_t k = 0; k < euler.values.size(); ++k) d = std::max(d, std::abs(euler.values[k] - voc.values[k]));
    diffs[i] = d;
  });
  {
    auto f = run.csv("refinement.csv", "h,sup_diff,ratio");
    for (std::size_t i = 0; i < hs.size(); ++i) {
      if (i == 0) {
        f.print("{},{},\n", hs[i], diffs[i]);
      } else {
        f.print("{},{},{}\n", hs[i], diffs[i], diffs[i - 1] / diffs[i]);
        run.say("ratio_{}={}", i, diffs[i - 1] / diffs[i]);
      }
    }
  }

  // Coupling: two solutions from phi and phi + offset under shared noise.
  const auto R = cfg.integer("verify.coupling.replicates", 200);
  const double t_end = cfg.number("verify.coupling.t", 20.0);
  const double offset = cfg.number("verify.coupling.offset", 1.0);
  if (R == 0) throw_config("config key 'verify.coupling.replicates': must be positive");
  SddeProblem p = base;
  p.T = t_end;
  p.validate();
  Segment phi2 = p.phi;
  for (auto& v : phi2.values) v += offset;
  const double alpha = p.alpha();
  const std::size_t n_check = 10;
  std::vector<double> checkpoints;
  for (std::size_t c = 0; c <= n_check; ++c) {
    const double t = t_end * static_cast<double>(c) / static_cast<double>(n_check);
    checkpoints.push_back(std::round(t / p.h) * p.h);
  }
  std::vector<std::vector<double>> sq(R, std::vector<double>(checkpoints.size()));
  parallel_for(R, run.threads(), [&](std::size_t r) {
    const auto [x1, x2] = coupled_pair(p, p.phi, phi2, derive_seed(run.seed(), r + 1));
    const auto m = steps_for(alpha, p.h);
    for (std::size_t c = 0; c < checkpoints.size(); ++c) {
      const auto k = x1.index_of(checkpoints[c]);
      double s = 0.0;
      for (std::size_t j = k - m; j <= k; ++j) s = std::max(s, std::abs(x1.values[j] - x2.values[j]));
      sq[r][c] = s * s;
    }
  });
  auto f = run.csv("coupling.csv", "t,mean_sup_sq,se");
  std::vector<double> means;
  for (std::size_t c = 0; c < checkpoints.size(); ++c) {
    double m = 0.0, m2 = 0.0;
    for (std::size_t r = 0; r < R; ++r) {
      m += sq[r][c];
      m2 += sq[r][c] * sq[r][c];
    }
    m /= static_cast<double>(R);
    const double var = R > 1 ? std::max(0.0, (m2 - static_cast<double>(R) * m * m) / static_cast<double>(R - 1)) : 0.0;
    f.print("{},{},{}\n", checkpoints[c], m, std::sqrt(var / static_cast<double>(R)));
    means.push_back(m);
  }
  run.say("contraction_ratio={}", means.back() / means.front());
}

void cmd_stationary(Run& run) {
  const auto p = run.stationary_problem();
  const auto em = krylov_bogoliubov(p, run.kb_options(p));
  run.warn(em);
  {
    auto f = run.csv("assumptions.csv", "stable,log_moment,bounded,v0,passed");
    f.print("{},{},{},{},{}\n", to_string(em.gate.stable), to_string(em.gate.log_moment), to_string(em.gate.bounded),
            em.gate.v0, em.gate.passed() ? 1 : 0);
  }
  const auto mean = em.mean();
  const auto var = em.variance();
  {
    auto f = run.csv("marginal.csv", "quantity,value,se");
    f.print("mean,{},{}\n", mean.value, mean.se);
    f.print("variance,{},{}\n", var.value, var.se);
    f.print("ef2,{},0\n", Run::ef2(p, em));
    if (em.gate.passed()) {
      const auto fs = run.decaying_r(p);
      const double a = analytic_variance(fs, p.levy, Run::ef2(p, em));
      f.print("analytic_variance,{},0\n", a);
      run.say("analytic_variance={}", a);
      run.say("variance_z={}", (var.value - a) / var.se);
    }
  }
  run.say("samples={}", em.count());
  run.say("variance={}", var.value);
  run.say("variance_se={}", var.se);
  if (run.cfg_.flag("kb.write_samples", false)) {
    auto f = run.csv("samples.csv", "replicate,t,X");
    for (std::size_t r = 0; r < em.samples.size(); ++r) {
      for (std::size_t i = 0; i < em.samples[r].size(); ++i) {
        f.print("{},{},{}\n", r, em.burn_in + static_cast<double>(i + 1) * em.spacing, em.samples[r][i]);
      }
    }
  }

  TightnessOptions topts;
  const double alpha = p.alpha();
  topts.checkpoints = run.cfg_.numbers("tightness.checkpoints", {10 * alpha, 20 * alpha, 40 * alpha});
  topts.K = run.cfg_.numbers("tightness.K", {1.0, 2.0, 5.0, 10.0, 100.0});
  topts.replicates = run.cfg_.integer("tightness.replicates", 100);
  topts.seed = derive_seed(run.seed(), 0x7157);
  topts.threads = run.threads();
  topts.initial = p.phi;
  const auto tt = tightness_diagnostic(p, topts);
  auto f = run.csv("tightness.csv", "t,K,marginal,segment,blowups");
  for (std::size_t c = 0; c < tt.checkpoints.size(); ++c) {
    for (std::size_t k = 0; k < tt.K.size(); ++k) {
      f.print("{},{},{},{},{}\n", tt.checkpoints[c], tt.K[k], tt.marginal[c][k], tt.segment[c][k], tt.blowups[c]);
    }
  }
  run.say("tightness_monotone={}", tt.monotone ? 1 : 0);
  run.say("tightness_growth={}", tt.growth ? 1 : 0);
}

std::vector<std::size_t> lag_samples(const std::vector<double>& lags, double spacing, std::string_view key) {
  std::vector<std::size_t> out;
  for (double lag : lags) {
    const double k = lag / spacing;
    if (lag < 0.0 || std::abs(k - std::round(k)) > 1e-9 * std::max(1.0, k)) {
      throw_config(fmt::format("config key '{}': lag {} is not a nonnegative multiple of the spacing {}", key, lag, spacing));
    }
    out.push_back(static_cast<std::size_t>(std::llround(k)));
  }
  return out;
}

// Default sampling period for lag estimates: alpha / 20 when that is a whole number of steps,
// so the default lags {0, alpha/2, alpha} fall on samples.
double lag_spacing(const SddeProblem& p) {
  for (double div : {20.0, 10.0, 2.0}) {
    const double s = p.alpha() / div;
    const double steps = s / p.h;
    if (steps >= 1.0 - 1e-9 && std::abs(steps - std::round(steps)) <= 1e-9 * steps) return std::round(steps) * p.h;
  }
  return p.alpha();
}

void cmd_covariance(Run& run) {
  const auto p = run.stationary_problem();
  auto opts = run.kb_options(p);
  const double alpha = p.alpha();
  if (opts.spacing == 0.0) opts.spacing = lag_spacing(p);
  const auto lags = run.cfg_.numbers("covariance.lags", {0.0, alpha / 2, alpha});
  const auto ks = lag_samples(lags, opts.spacing, "covariance.lags");
  const auto fs = run.decaying_r(p);
  const auto em = krylov_bogoliubov(p, opts);
  run.warn(em);
  const auto emp = autocovariance(em.samples, ks);
  const double var0 = analytic_variance(fs, p.levy, Run::ef2(p, em));
  auto f = run.csv("covariance.csv", "lag,analytic,empirical,se,z");
  double worst = 0.0;
  for (std::size_t i = 0; i < lags.size(); ++i) {
    const double c = analytic_covariance(fs, var0, lags[i]);
    const double z = (emp[i].value - c) / emp[i].se;
    worst = std::max(worst, std::abs(z));
    f.print("{},{},{},{},{}\n", lags[i], c, emp[i].value, emp[i].se, z);
  }
  run.say("variance={}", var0);
  run.say("max_abs_z={}", worst);
}

void cmd_spectrum(Run& run) {
  const auto p = run.stationary_problem();
  auto opts = run.kb_options(p);
  if (opts.spacing == 0.0) opts.spacing = lag_spacing(p);
  const auto fs = run.decaying_r(p);
  const double alpha = p.alpha();
  const auto em = krylov_bogoliubov(p, opts);
  run.warn(em);
  const double var0 = analytic_variance(fs, p.levy, Run::ef2(p, em));
  const auto seg = run.cfg_.integer("spectrum.segment", 4096);
  const auto smooth = run.cfg_.integer("spectrum.smooth", 8);
  const auto pg = periodogram(em.samples, em.spacing, seg, smooth);
  {
    auto f = run.csv("spectrum.csv", "xi,periodogram,analytic");
    for (const auto& pt : pg) f.print("{},{},{}\n", pt.xi, pt.value, analytic_spectral_density(fs, p.mu, var0, pt.xi));
  }
  const auto lags = run.cfg_.numbers("spectrum.lags", {0.0, alpha / 2, alpha});
  const auto inv = spectral_inverse(fs, p.mu, var0, lags, run.cfg_.number("spectrum.xi_max", 200.0),
                                    run.cfg_.number("spectrum.dxi", 0.002));
  auto f = run.csv("duality.csv", "lag,covariance,inverse_transform,relative_error");
  double worst = 0.0;
  for (std::size_t i = 0; i < lags.size(); ++i) {
    const double c = analytic_covariance(fs, var0, lags[i]);
    const double rel = std::abs(inv[i] - c) / std::abs(c);
    worst = std::max(worst, rel);
    f.print("{},{},{},{}\n", lags[i], c, inv[i], rel);
  }
  run.say("duality_max_relative_error={}", worst);
}

void cmd_powerlaw(Run& run) {
  const auto p = run.stationary_problem();
  const double window = run.cfg_.number("powerlaw.window_hi", 0.9);
  check_cp_form(p, window);
  const auto em = krylov_bogoliubov(p, run.kb_options(p));
  run.warn(em);
  const auto rep = cp_power_law_fit(p, em, window);
  {
    auto f = run.csv("powerlaw.csv", "x,cdf");
    for (std::size_t i = 0; i < rep.fit.xs.size(); ++i) f.print("{},{}\n", rep.fit.xs[i], rep.fit.cdf[i]);
  }
  auto f = run.csv("powerlaw_fit.csv", "exponent,predicted,relative_error,points,x_lo,x_hi,log_prefactor");
  f.print("{},{},{},{},{},{},{}\n", rep.fit.exponent, rep.predicted, rep.relative_error, rep.fit.points, rep.fit.x_lo,
          rep.fit.x_hi, rep.fit.intercept);
  run.say("exponent={}", rep.fit.exponent);
  run.say("predicted={}", rep.predicted);
  run.say("relative_error={}", rep.relative_error);
}

void cmd_nonunique(Run& run) {
  const auto& c = run.cfg_;
  NonuniqueOptions o;
  o.sigmas = c.numbers("nonunique.sigmas", {1.0, 1.2, std::numbers::sqrt2});
  o.a = c.number("nonunique.a", o.a);
  o.alpha = c.number("nonunique.alpha", o.alpha);
  o.T = c.number("nonunique.T", o.T);
  o.h = c.number("nonunique.h", o.h);
  o.replicates = c.integer("nonunique.replicates", o.replicates);
  o.spacing = c.number("nonunique.spacing", o.spacing);
  o.seed = run.seed();
  o.threads = run.threads();
  const auto rep = nonuniqueness_demo(o);
  auto f = run.csv("nonunique.csv", "sigma,sup_deviation,variance,variance_se,predicted,relative_error");
  for (const auto& r : rep.rows) {
    f.print("{},{},{},{},{},{}\n", r.sigma, r.sup_deviation, r.variance, r.variance_se, r.predicted,
            std::abs(r.variance - r.predicted) / r.predicted);
  }
  double dev = 0.0;
  for (const auto& r : rep.rows) dev = std::max(dev, r.sup_deviation);
  run.say("max_sup_deviation={}", dev);
  run.say("variance_ratio_last_first={}", rep.rows.back().variance / rep.rows.front().variance);
}

void cmd_feller(Run& run) {
  const auto p = run.problem();
  const double beta = run.cfg_.number("feller.beta", p.alpha() / 2);
  const auto n = run.cfg_.integer("feller.n", 100);
  const auto rep = feller_counterexample(p, beta, n, run.seed());
  auto f = run.csv("feller.csv", "quantity,value");
  f.print("n,{}\nbeta,{}\nalpha,{}\n", rep.n, rep.beta, rep.alpha);
  f.print("initial_skorokhod_upper,{}\ninitial_skorokhod_lower,{}\n", rep.initial_upper, rep.initial_lower);
  f.print("f_gap_before_alpha,{}\nf_gap_at_alpha,{}\nmax_f_gap_after_alpha,{}\n", rep.gap_before, rep.gap_at_alpha,
          rep.max_gap_after);
  f.print("segment_skorokhod_lower_before_alpha,{}\n", rep.segment_lower_before);
  run.say("initial_skorokhod_upper={}", rep.initial_upper);
  run.say("f_gap_before_alpha={}", rep.gap_before);
  run.say("f_gap_at_alpha={}", rep.gap_at_alpha);
  run.say("max_f_gap_after_alpha={}", rep.max_gap_after);
}

const std::map<std::string, std::function<void(Run&)>>& dispatch() {
  static const std::map<std::string, std::function<void(Run&)>> table = {
      {"stability", cmd_stability},   {"fundamental", cmd_fundamental}, {"simulate", cmd_simulate},
      {"verify", cmd_verify},         {"stationary", cmd_stationary},   {"covariance", cmd_covariance},
      {"spectrum", cmd_spectrum},     {"powerlaw", cmd_powerlaw},       {"nonunique", cmd_nonunique},
      {"feller-demo", cmd_feller},
  };
  return table;
}

}  // namespace

RunOutcome run_experiment(const RunRequest& request) {
  RunOutcome out;
  try {
    const auto it = dispatch().find(request.command);
    if (it == dispatch().end()) throw_config(fmt::format("unknown command '{}'", request.command));
    if (request.config.has("command") && request.config.text("command", "") != request.command) {
      throw_config(fmt::format("config was written for command '{}', not '{}'", request.config.text("command", ""),
                               request.command));
    }
    std::error_code ec;
    std::filesystem::create_directories(request.out_dir, ec);
    if (ec) throw_io(fmt::format("cannot create output directory {}: {}", request.out_dir.string(), ec.message()));
    Run run(request, out);
    {
      const auto path = request.out_dir / "manifest.txt";
      try {
        auto f = fmt::output_file(path.string());
        f.print("{}", manifest_text(request.command, request.config, run.seed(), run.threads()));
      } catch (const std::system_error& e) {
        throw_io(fmt::format("cannot write {}: {}", path.string(), e.what()));
      }
      out.files.push_back(path);
    }
    it->second(run);
  } catch (const Error& e) {
    out.status = exit_code_for(e.kind());
    out.error = fmt::format("{}: {}", request.command, e.what());
  } catch (const std::exception& e) {
    out.status = kExitIo;
    out.error = fmt::format("{}: {}", request.command, e.what());
  }
  return out;
}

}  // namespace sddelab
