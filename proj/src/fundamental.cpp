#include "sddelab/fundamental.hpp"

#include "sddelab/error.hpp"

#include <algorithm>
#include <cmath>
#include <fmt/format.h>
#include <fmt/os.h>

namespace sddelab {

namespace {

constexpr double kOverflow = 1e300;
constexpr double kLogFloor = 1e-14;

void check_step(const DelayMeasure& mu, double h) {
  if (!(h > 0.0) || h > mu.alpha() / 8.0 * (1.0 + 1e-12)) {
    throw_invalid(fmt::format("step h={} must satisfy 0 < h <= alpha/8 = {}", h, mu.alpha() / 8.0));
  }
}

struct HeunResult {
  std::vector<double> values;  // global index g <-> time (g - m) h
  std::vector<double> slope;   // right derivative at 0..steps, by step index
  bool overflow = false;
};

// Heun on the delay equation x' = K x_t. `node_jumps` marks jumps sitting on initial nodes;
// the corrector evaluates the window at t_{k+1} from the left, so a discontinuity entering
// the window is integrated as a one-sided kink instead of smearing it across the step.
HeunResult heun(const DiscreteKernel& kernel, std::vector<double> initial, const std::vector<double>& node_jumps,
                std::size_t steps, double h) {
  const std::size_t m = kernel.steps;
  HeunResult out;
  out.values = std::move(initial);
  out.values.resize(m + steps + 1, 0.0);
  out.slope.reserve(steps + 1);
  auto jump_at = [&](std::size_t g) { return g < node_jumps.size() ? node_jumps[g] : 0.0; };
  for (std::size_t k = 0; k < steps; ++k) {
    const double* w0 = out.values.data() + k;
    const double f0 = kernel.apply(w0);
    const std::size_t g = m + k;
    out.values[g + 1] = out.values[g] + h * f0;
    double f1 = 0.0;
    for (const auto& [j, w] : kernel.taps) f1 += w * (out.values[k + 1 + j] - jump_at(k + 1 + j));
    const double next = out.values[g] + 0.5 * h * (f0 + f1);
    out.slope.push_back(f0);
    if (!std::isfinite(next) || std::abs(next) > kOverflow) {
      out.overflow = true;
      out.values.resize(g + 1);
      return out;
    }
    out.values[g + 1] = next;
  }
  out.slope.push_back(kernel.apply(out.values.data() + steps));
  return out;
}

DecayFit fit_decay(const std::vector<double>& r, double h) {
  auto regress = [&](std::size_t from, std::size_t to) -> std::pair<double, std::size_t> {
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    std::size_t n = 0;
    for (std::size_t k = from; k <= to; ++k) {
      const double a = std::abs(r[k]);
      if (a < kLogFloor) continue;
      const double t = static_cast<double>(k) * h;
      const double y = std::log(a);
      sx += t;
      sy += y;
      sxx += t * t;
      sxy += t * y;
      ++n;
    }
    if (n < 2) return {0.0, n};
    const double dn = static_cast<double>(n);
    const double denom = sxx - sx * sx / dn;
    if (denom <= 0.0) return {0.0, n};
    return {(sxy - sx * sy / dn) / denom, n};
  };
  const std::size_t last = r.size() - 1;
  auto [slope, n] = regress(last / 2, last);
  if (n < 8) {
    // The tail underflowed below the log floor: fit the second half of the resolvable part.
    std::size_t last_ok = 0;
    for (std::size_t k = 0; k <= last; ++k) {
      if (std::abs(r[k]) >= kLogFloor) last_ok = k;
    }
    slope = regress(last_ok / 2, last_ok).first;
  }
  DecayFit fit;
  fit.beta = -slope;
  for (std::size_t k = 0; k <= last; ++k) {
    fit.c = std::max(fit.c, std::abs(r[k]) * std::exp(fit.beta * static_cast<double>(k) * h));
  }
  return fit;
}

void require_decay(const FundamentalSolution& fs) {
  if (fs.unstable_growth || !(fs.fit.beta > 0.0)) {
    throw_numerical(fmt::format("fundamental solution does not decay (fitted beta = {}); L2 functionals of r diverge",
                                fs.fit.beta));
  }
}

double trapezoid(const std::vector<double>& f, double h) {
  if (f.size() < 2) return 0.0;
  double acc = 0.5 * (f.front() + f.back());
  for (std::size_t k = 1; k + 1 < f.size(); ++k) acc += f[k];
  return acc * h;
}

}  // namespace

double FundamentalSolution::at(double t) const {
  if (t < 0.0) return 0.0;
  const double pos = t / h;
  const double last = static_cast<double>(r.size() - 1);
  if (pos > last * (1.0 + 1e-12) + kNodeTolerance) {
    throw_invalid(fmt::format("r requested at t={} beyond computed horizon {}", t, t_end()));
  }
  const auto k = std::min(static_cast<std::size_t>(pos), r.size() - 1);
  const double frac = pos - static_cast<double>(k);
  if (k + 1 >= r.size() || frac <= 0.0) return r[k];
  return (1.0 - frac) * r[k] + frac * r[k + 1];
}

double default_horizon(const DelayMeasure& mu, double v0, double h) {
  double T = 10.0 * mu.alpha();
  if (v0 < 0.0) T = std::max(T, 40.0 / (-v0));
  return std::ceil(T / h - 1e-9) * h;
}

FundamentalSolution compute_r(const DelayMeasure& mu, double T, double h) {
  check_step(mu, h);
  if (!(T >= mu.alpha() * (1.0 - 1e-12))) throw_invalid(fmt::format("horizon T={} must be at least alpha={}", T, mu.alpha()));
  const std::size_t steps = steps_for(T, h);
  const DiscreteKernel kernel = discretize(mu, h);
  const std::size_t m = kernel.steps;

  std::vector<double> initial(m + 1, 0.0);
  initial[m] = 1.0;
  std::vector<double> jumps(m + 1, 0.0);
  jumps[m] = 1.0;
  HeunResult run = heun(kernel, std::move(initial), jumps, steps, h);

  FundamentalSolution fs;
  fs.mu = mu;
  fs.h = h;
  fs.T = T;
  fs.r.assign(run.values.begin() + static_cast<std::ptrdiff_t>(m), run.values.end());
  fs.rdot = std::move(run.slope);
  fs.rdot.resize(fs.r.size());
  fs.unstable_growth = run.overflow;
  fs.fit = fit_decay(fs.r, h);
  return fs;
}

Estimate l2_norm_sq(const FundamentalSolution& fs) { return conv_rr(fs, 0.0); }

Estimate conv_rr(const FundamentalSolution& fs, double lag) {
  require_decay(fs);
  if (!(lag >= 0.0)) throw_invalid(fmt::format("lag must be nonnegative, got {}", lag));
  const double span = fs.t_end() - lag;
  if (span <= 0.0) throw_invalid(fmt::format("lag {} exceeds the computed horizon {}", lag, fs.t_end()));
  const double shift = lag / fs.h;
  const double shift_round = std::round(shift);
  std::vector<double> prod;
  if (std::abs(shift - shift_round) <= 1e-9 * std::max(1.0, shift)) {
    const auto s = static_cast<std::size_t>(shift_round);
    prod.resize(fs.r.size() - s);
    for (std::size_t k = 0; k < prod.size(); ++k) prod[k] = fs.r[k] * fs.r[k + s];
  } else {
    const auto n = static_cast<std::size_t>(std::floor(span / fs.h));
    prod.resize(n + 1);
    for (std::size_t k = 0; k <= n; ++k) prod[k] = fs.r[k] * fs.at(static_cast<double>(k) * fs.h + lag);
  }
  const double tail_start = fs.h * static_cast<double>(prod.size() - 1);
  const double b = fs.fit.beta;
  const double c = fs.fit.c;
  return {trapezoid(prod, fs.h), c * c * std::exp(-b * lag) * std::exp(-2.0 * b * tail_start) / (2.0 * b)};
}

Estimate l2_norm_sq_dot(const FundamentalSolution& fs) {
  require_decay(fs);
  std::vector<double> sq(fs.rdot.size());
  for (std::size_t k = 0; k < sq.size(); ++k) sq[k] = fs.rdot[k] * fs.rdot[k];
  // |r'| <= ||mu||_TV * c e^{beta alpha} e^{-beta t} once the window lies in [0, inf).
  const double cd = fs.mu.total_variation() * fs.fit.c * std::exp(fs.fit.beta * fs.mu.alpha());
  const double b = fs.fit.beta;
  return {trapezoid(sq, fs.h), cd * cd * std::exp(-2.0 * b * fs.t_end()) / (2.0 * b)};
}

double representation_value(const FundamentalSolution& fs, const Segment& phi, double t) {
  const double h = fs.h;
  const std::size_t m = phi.steps();
  const auto kt = static_cast<std::size_t>(std::llround(t / h));
  if (kt >= fs.r.size()) throw_invalid(fmt::format("t={} beyond the fundamental solution horizon", t));
  const DiscreteKernel kernel = discretize(fs.mu, h);
  if (kernel.steps != m) throw_invalid("segment grid does not match the fundamental solution grid");

  // Interior nodes carry the average of the one-sided values, which keeps the trapezoid rule
  // exact on each side of a jump of phi.
  std::vector<double> mid(m + 1), lower(m + 1), upper(m + 1);
  for (std::size_t i = 0; i <= m; ++i) {
    const double left = phi.left_limit(i);
    lower[i] = phi.values[i];
    upper[i] = left;
    mid[i] = 0.5 * (phi.values[i] + left);
  }
  double acc = phi.values[m] * fs.r[kt];
  for (const auto& [j, w] : kernel.taps) {
    const std::size_t i_end = std::min(m, j + kt);
    if (i_end == j) continue;
    double integral = 0.5 * (fs.r[kt] * lower[j] + fs.r[kt + j - i_end] * upper[i_end]);
    for (std::size_t i = j + 1; i < i_end; ++i) integral += fs.r[kt + j - i] * mid[i];
    acc += w * integral * h;
  }
  return acc;
}

GridPath deterministic_solution(const DelayMeasure& mu, const Segment& phi, double T, double h) {
  check_step(mu, h);
  if (std::abs(phi.h - h) > 1e-12 * h) throw_invalid(fmt::format("segment step {} differs from h={}", phi.h, h));
  if (std::abs(phi.alpha() - mu.alpha()) > kNodeTolerance * h) {
    throw_invalid(fmt::format("segment spans [{}, 0] but alpha={}", -phi.alpha(), mu.alpha()));
  }
  const std::size_t steps = steps_for(T, h);
  const DiscreteKernel kernel = discretize(mu, h);
  const std::size_t m = kernel.steps;
  std::vector<double> node_jumps(m + 1, 0.0);
  for (std::size_t j = 0; j <= m; ++j) node_jumps[j] = phi.values[j] - phi.left_limit(j);
  HeunResult run = heun(kernel, phi.values, node_jumps, steps, h);
  if (run.overflow) {
    throw_numerical(fmt::format("deterministic solution overflowed at t={}", static_cast<double>(run.values.size() - m - 1) * h));
  }

  const FundamentalSolution fs = compute_r(mu, std::max(T, mu.alpha()), h);
  const double tv = mu.total_variation();
  const double scale = std::max(1.0, phi.sup_abs());
  // Cap the cross-check work near 5e7 kernel-node products.
  const double per_node = static_cast<double>(std::max<std::size_t>(kernel.taps.size(), 1) * (m + 1));
  const auto checks = static_cast<std::size_t>(std::clamp(5e7 / per_node, 8.0, 512.0));
  const std::size_t stride = std::max<std::size_t>(1, steps / checks);
  double r_sup = 1.0;
  std::size_t r_seen = 0;
  for (std::size_t k = 0; k <= steps; k += stride) {
    for (; r_seen <= k; ++r_seen) r_sup = std::max(r_sup, std::abs(fs.r[r_seen]));
    const double t = static_cast<double>(k) * h;
    const double direct = run.values[m + k];
    const double repr = representation_value(fs, phi, t);
    const double tol = h * (1.0 + tv) * (1.0 + tv * mu.alpha()) * scale * r_sup * (1.0 + t);
    if (std::abs(direct - repr) > 10.0 * tol) {
      throw_numerical(fmt::format("deterministic solution self-check failed at t={}: direct {} vs representation {} "
                                  "(tolerance {})",
                                  t, direct, repr, tol));
    }
  }

  GridPath path;
  path.t0 = -mu.alpha();
  path.h = h;
  path.values = std::move(run.values);
  for (const auto& j : phi.jumps) path.jumps.push_back({j.time, j.size});
  return path;
}

void write_fundamental_csv(const FundamentalSolution& fs, const std::filesystem::path& file) {
  try {
    auto out = fmt::output_file(file.string());
    out.print("t,r,rdot\n");
    for (std::size_t k = 0; k < fs.r.size(); ++k) out.print("{},{},{}\n", static_cast<double>(k) * fs.h, fs.r[k], fs.rdot[k]);
  } catch (const std::system_error& e) {
    throw_io(fmt::format("cannot write {}: {}", file.string(), e.what()));
  }
}

}  // namespace sddelab
