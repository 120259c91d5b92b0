#include "sddelab/stationary.hpp"

#include "sddelab/error.hpp"
#include "sddelab/parallel.hpp"
#include "sddelab/random.hpp"

#include <algorithm>
#include <cmath>
#include <fmt/format.h>
#include <limits>
#include <numbers>

namespace sddelab {

namespace {

[[noreturn]] void rethrow_for_replicate(const Error& e, std::size_t replicate) {
  throw Error(e.kind(), fmt::format("replicate {}: {}", replicate, e.what()));
}

std::size_t steps_of(double span, double h, const char* what) {
  try {
    return steps_for(span, h);
  } catch (const Error&) {
    throw_invalid(fmt::format("{} {} is not a multiple of the step h={}", what, span, h));
  }
}

MeanSe pooled_variance(const std::vector<std::vector<double>>& series) {
  double sum = 0.0;
  std::size_t n = 0;
  for (const auto& s : series) {
    for (double v : s) sum += v;
    n += s.size();
  }
  if (n == 0) throw_invalid("no samples");
  const double mean = sum / static_cast<double>(n);
  std::vector<double> sq;
  sq.reserve(n);
  for (const auto& s : series) {
    for (double v : s) sq.push_back((v - mean) * (v - mean));
  }
  return batch_mean(sq);
}

}  // namespace

std::size_t EmpiricalMeasure::count() const {
  std::size_t n = 0;
  for (const auto& s : samples) n += s.size();
  return n;
}

std::vector<double> EmpiricalMeasure::pooled() const {
  std::vector<double> out;
  out.reserve(count());
  for (const auto& s : samples) out.insert(out.end(), s.begin(), s.end());
  return out;
}

MeanSe EmpiricalMeasure::mean() const { return batch_mean(pooled()); }

MeanSe EmpiricalMeasure::variance() const { return pooled_variance(samples); }

EmpiricalMeasure krylov_bogoliubov(const SddeProblem& p, const KbOptions& opts) {
  p.validate();
  if (opts.replicates == 0) throw_invalid("at least one replicate is required");
  const double h = p.h;
  EmpiricalMeasure em;
  em.gate = check_assumptions(p.mu, p.levy, p.F);
  if (!em.gate.passed()) {
    em.warning = fmt::format("assumption gate not passed (v0<0: {}, log moment finite: {}, F bounded: {}); "
                             "samples need not approximate a stationary law",
                             to_string(em.gate.stable), to_string(em.gate.log_moment), to_string(em.gate.bounded));
  }
  double burn = opts.burn_in;
  if (burn < 0.0) burn = (em.gate.stable == Tri::True && em.gate.v0 < 0.0) ? 20.0 / (-em.gate.v0) : 10.0 * p.alpha();
  const auto burn_steps = static_cast<std::size_t>(std::ceil(burn / h - 1e-9));
  em.burn_in = static_cast<double>(burn_steps) * h;
  em.spacing = opts.spacing > 0.0 ? opts.spacing : p.alpha();
  const std::size_t every = steps_of(em.spacing, h, "spacing");
  if (every == 0) throw_invalid("spacing must be at least one step");
  const auto n_samples = static_cast<std::size_t>(std::floor(opts.horizon / em.spacing + 1e-9));
  if (n_samples == 0) throw_invalid(fmt::format("horizon {} holds no sample at spacing {}", opts.horizon, em.spacing));
  em.horizon = static_cast<double>(n_samples) * em.spacing;

  SddeProblem q = p;
  q.phi = opts.initial ? *opts.initial : constant_segment(p.alpha(), h, 0.0);
  em.samples.assign(opts.replicates, {});
  std::vector<std::vector<Segment>> segs(opts.replicates);
  std::vector<double> f2(opts.replicates, 0.0);
  parallel_for(opts.replicates, opts.threads, [&](std::size_t r) {
    try {
      EulerRun run(q, derive_seed(opts.seed, r));
      for (std::size_t k = 0; k < burn_steps; ++k) run.step();
      auto& out = em.samples[r];
      out.reserve(n_samples);
      double acc = 0.0;
      for (std::size_t i = 1; i <= n_samples; ++i) {
        for (std::size_t s = 0; s < every; ++s) {
          run.step();
          acc += run.last_F() * run.last_F();
        }
        out.push_back(run.value());
        if (opts.segment_every > 0 && i % opts.segment_every == 0) segs[r].push_back(run.segment());
      }
      f2[r] = acc;
    } catch (const Error& e) {
      rethrow_for_replicate(e, r);
    }
  });
  double f2_total = 0.0;
  for (std::size_t r = 0; r < opts.replicates; ++r) {
    f2_total += f2[r];
    for (auto& s : segs[r]) em.segments.push_back(std::move(s));
  }
  em.ef2 = f2_total / (static_cast<double>(opts.replicates) * static_cast<double>(n_samples * every));
  return em;
}

double analytic_variance(const FundamentalSolution& fs, const LevyTriplet& triplet, double EF2) {
  if (!(EF2 >= 0.0)) throw_invalid(fmt::format("E[F^2] must be nonnegative, got {}", EF2));
  const double rate = triplet.second_moment_rate();
  if (!std::isfinite(rate)) throw_numerical("driving process has infinite second moment; stationary variance is infinite");
  if (EF2 == 0.0) return 0.0;
  return EF2 * rate * l2_norm_sq(fs).value;
}

double analytic_mean(const DelayMeasure& mu, const LevyTriplet& triplet, double m) {
  const double chi0 = -mu.total_mass();
  if (!(chi0 > 0.0)) throw_invalid(fmt::format("chi(0) = {} is not positive; no finite stationary mean", chi0));
  const double rate = triplet.mean_rate();
  if (!std::isfinite(rate)) throw_numerical("driving process has infinite mean");
  return m * rate / chi0;
}

double analytic_covariance(const FundamentalSolution& fs, double var0, double lag) {
  return var0 * conv_rr(fs, lag).value / l2_norm_sq(fs).value;
}

double analytic_spectral_density(const FundamentalSolution& fs, const DelayMeasure& mu, double EX2, double xi) {
  const double chi2 = std::norm(char_function(mu, {0.0, xi}));
  if (!(chi2 > 1e-24)) throw_numerical(fmt::format("characteristic function vanishes at i*{}; spectral density is singular", xi));
  return EX2 / (l2_norm_sq(fs).value * chi2);
}

std::vector<double> spectral_inverse(const FundamentalSolution& fs, const DelayMeasure& mu, double EX2,
                                     const std::vector<double>& lags, double xi_max, double dxi) {
  const double l2 = l2_norm_sq(fs).value;
  const double A = EX2 / l2;
  const auto n = static_cast<std::size_t>(std::ceil(xi_max / dxi));
  std::vector<double> rem(n + 1);
  for (std::size_t i = 0; i <= n; ++i) {
    const double xi = static_cast<double>(i) * dxi;
    const double chi2 = std::norm(char_function(mu, {0.0, xi}));
    if (!(chi2 > 1e-24)) throw_numerical(fmt::format("characteristic function vanishes at i*{}", xi));
    rem[i] = A / chi2 - A / (xi * xi + 1.0);
  }
  std::vector<double> out;
  out.reserve(lags.size());
  for (double h : lags) {
    double acc = 0.5 * (rem[0] + rem[n] * std::cos(h * static_cast<double>(n) * dxi));
    for (std::size_t i = 1; i < n; ++i) acc += rem[i] * std::cos(h * static_cast<double>(i) * dxi);
    out.push_back(acc * dxi / std::numbers::pi + 0.5 * A * std::exp(-std::abs(h)));
  }
  return out;
}

CpForm check_cp_form(const SddeProblem& p, double window_hi) {
  CpForm form;
  if (!scalar_decay(p.mu, &form.a) || !(form.a > 0.0)) {
    throw_invalid("power-law fit needs mu = -a delta_0 with a > 0");
  }
  if (p.levy.sigma2 != 0.0) throw_invalid("power-law fit needs a pure-jump driving process (sigma2 = 0)");
  if (!p.levy.jump) throw_invalid("power-law fit needs a compound-Poisson jump part");
  const JumpSpec& js = *p.levy.jump;
  double jmin = 0.0;
  if (js.family == JumpFamily::Constant && js.size > 0.0) {
    jmin = js.size;
  } else if (js.family == JumpFamily::Pareto) {
    jmin = js.x_min;
  } else {
    throw_invalid("power-law fit needs jumps bounded below by a positive J (constant or pareto family)");
  }
  if (std::abs(p.levy.pathwise_drift()) > 1e-12) {
    throw_invalid(fmt::format("power-law fit needs zero drift between jumps, got {}", p.levy.pathwise_drift()));
  }
  double sigma0 = 0.0;
  const auto& F = p.F;
  const auto& f = F.inner();
  if (F.kind() == DiffusionFunctional::Kind::Constant) {
    sigma0 = F.constant_value();
  } else if (F.kind() != DiffusionFunctional::Kind::ClampedQV) {
    if (f.kind == InnerMap::Kind::Clamp) sigma0 = f.p1;
    if (f.kind == InnerMap::Kind::SqrtClamp) sigma0 = std::sqrt(f.p1);
    if (f.kind == InnerMap::Kind::TanhScaled) sigma0 = f.p3 - std::abs(f.p2);
  } else {
    sigma0 = 1.0;
  }
  if (!(sigma0 > 0.0)) throw_invalid("power-law fit needs F bounded below by a positive constant");
  form.lambda = js.lambda;
  form.floor = jmin * sigma0;
  if (!(window_hi > 0.0 && window_hi < form.floor)) {
    throw_invalid(fmt::format("power-law window {} must lie in (0, J sigma_0 = {})", window_hi, form.floor));
  }
  return form;
}

PowerLawReport cp_power_law_fit(const SddeProblem& p, const EmpiricalMeasure& measure, double window_hi) {
  const CpForm form = check_cp_form(p, window_hi);
  PowerLawReport rep;
  rep.fit = power_law_fit(measure.pooled(), window_hi);
  rep.predicted = form.lambda / form.a;
  rep.relative_error = std::abs(rep.fit.exponent - rep.predicted) / rep.predicted;
  rep.jump_floor = form.floor;
  return rep;
}

TightnessTable tightness_diagnostic(const SddeProblem& p, const TightnessOptions& opts) {
  p.validate();
  if (opts.checkpoints.empty() || opts.K.empty()) throw_invalid("tightness diagnostic needs checkpoints and K values");
  if (!std::is_sorted(opts.checkpoints.begin(), opts.checkpoints.end()) || opts.checkpoints.front() < 0.0) {
    throw_invalid("checkpoints must be nonnegative and ascending");
  }
  if (!std::is_sorted(opts.K.begin(), opts.K.end())) throw_invalid("K values must be ascending");
  if (opts.replicates == 0) throw_invalid("at least one replicate is required");
  const double h = p.h;
  std::vector<std::size_t> at_step;
  for (double t : opts.checkpoints) at_step.push_back(static_cast<std::size_t>(std::llround(t / h)));

  SddeProblem q = p;
  q.phi = opts.initial ? *opts.initial : constant_segment(p.alpha(), h, 0.0);
  const std::size_t C = opts.checkpoints.size();
  constexpr double kInf = std::numeric_limits<double>::infinity();
  std::vector<std::vector<double>> marg(opts.replicates, std::vector<double>(C, kInf));
  std::vector<std::vector<double>> sup(opts.replicates, std::vector<double>(C, kInf));
  std::vector<std::vector<char>> blown(opts.replicates, std::vector<char>(C, 1));
  parallel_for(opts.replicates, opts.threads, [&](std::size_t r) {
    EulerRun run(q, derive_seed(opts.seed, r));
    std::size_t done = 0;
    try {
      for (std::size_t c = 0; c < C; ++c) {
        for (; done < at_step[c]; ++done) run.step();
        marg[r][c] = std::abs(run.value());
        sup[r][c] = run.window_sup();
        blown[r][c] = 0;
      }
    } catch (const Error& e) {
      // A blow-up counts as exceeding every K from then on.
      if (e.kind() != ErrorKind::Numerical) rethrow_for_replicate(e, r);
    }
  });

  TightnessTable t;
  t.checkpoints = opts.checkpoints;
  t.K = opts.K;
  t.replicates = opts.replicates;
  const double R = static_cast<double>(opts.replicates);
  t.marginal.assign(C, std::vector<double>(opts.K.size(), 0.0));
  t.segment.assign(C, std::vector<double>(opts.K.size(), 0.0));
  t.blowups.assign(C, 0);
  for (std::size_t c = 0; c < C; ++c) {
    for (std::size_t r = 0; r < opts.replicates; ++r) {
      t.blowups[c] += blown[r][c];
      for (std::size_t k = 0; k < opts.K.size(); ++k) {
        if (marg[r][c] > opts.K[k]) t.marginal[c][k] += 1.0 / R;
        if (sup[r][c] > opts.K[k]) t.segment[c][k] += 1.0 / R;
      }
    }
    for (std::size_t k = 1; k < opts.K.size(); ++k) {
      if (t.marginal[c][k] > t.marginal[c][k - 1] || t.segment[c][k] > t.segment[c][k - 1]) t.monotone = false;
    }
  }
  const double p1 = t.segment.front().back();
  const double p2 = t.segment.back().back();
  const double pbar = 0.5 * (p1 + p2);
  const double se = std::sqrt(2.0 * pbar * (1.0 - pbar) / R);
  t.growth_delta = p2 - p1;
  t.growth = t.growth_delta > 3.0 * se && t.growth_delta > 2.0 / R;
  return t;
}

NonuniqueReport nonuniqueness_demo(const NonuniqueOptions& opts) {
  if (opts.sigmas.empty()) throw_invalid("non-uniqueness demo needs at least one sigma");
  for (double s : opts.sigmas) {
    if (!(s >= 1.0 && s <= std::sqrt(2.0) + 1e-12)) {
      throw_invalid(fmt::format("sigma {} outside the fixed-point range [1, sqrt(2)] of the clamped functional", s));
    }
  }
  if (!(opts.a > 0.0)) throw_invalid("a must be positive");
  if (opts.replicates == 0) throw_invalid("at least one replicate is required");
  const double h = opts.h;
  const std::size_t every = steps_of(opts.spacing, h, "spacing");
  const std::size_t steps = steps_of(opts.T, h, "horizon");

  SddeProblem base;
  base.mu = DelayMeasure::point(opts.alpha, 0.0, -opts.a);
  base.F = DiffusionFunctional::clamped_qv(opts.alpha);
  base.levy.sigma2 = 1.0;
  base.T = opts.T;
  base.h = h;
  base.F.check_step(h);

  const std::size_t S = opts.sigmas.size();
  const std::size_t R = opts.replicates;
  std::vector<std::vector<double>> samples(S * R);
  std::vector<double> dev(S * R, 0.0);
  parallel_for(S * R, opts.threads, [&](std::size_t i) {
    const std::size_t si = i / R;
    const std::size_t r = i % R;
    const double sigma = opts.sigmas[si];
    const std::uint64_t seed_r = derive_seed(opts.seed, r);
    Rng init(derive_seed(seed_r, 0));
    SddeProblem q = base;
    q.phi = stationary_ou_segment(opts.alpha, h, opts.a, sigma, init);
    try {
      EulerRun run(q, derive_seed(seed_r, 1));
      double d = 0.0;
      for (std::size_t k = 1; k <= steps; ++k) {
        run.step();
        d = std::max(d, std::abs(run.last_F() - sigma));
        if (k % every == 0) samples[i].push_back(run.value());
      }
      dev[i] = d;
    } catch (const Error& e) {
      rethrow_for_replicate(e, r);
    }
  });

  NonuniqueReport rep;
  for (std::size_t si = 0; si < S; ++si) {
    NonuniqueRow row;
    row.sigma = opts.sigmas[si];
    std::vector<std::vector<double>> series(samples.begin() + static_cast<std::ptrdiff_t>(si * R),
                                            samples.begin() + static_cast<std::ptrdiff_t>((si + 1) * R));
    for (std::size_t r = 0; r < R; ++r) row.sup_deviation = std::max(row.sup_deviation, dev[si * R + r]);
    const MeanSe v = pooled_variance(series);
    row.variance = v.value;
    row.variance_se = v.se;
    row.predicted = row.sigma * row.sigma / (2.0 * opts.a);
    rep.rows.push_back(row);
  }
  return rep;
}

}  // namespace sddelab
