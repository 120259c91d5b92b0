#include "sddelab/solver.hpp"

#include "sddelab/error.hpp"
#include "sddelab/random.hpp"

#include <algorithm>
#include <cmath>
#include <fmt/format.h>
#include <fmt/os.h>

namespace sddelab {

namespace {

constexpr std::size_t kCompactChunk = 1 << 16;

}  // namespace

std::size_t SddeProblem::steps() const { return steps_for(T, h); }

void SddeProblem::validate() const {
  const double alpha = mu.alpha();
  if (!(h > 0.0) || h > alpha / 8.0 * (1.0 + 1e-12)) {
    throw_invalid(fmt::format("step h={} must satisfy 0 < h <= alpha/8 = {}", h, alpha / 8.0));
  }
  if (std::abs(phi.h - h) > 1e-12 * h) throw_invalid(fmt::format("initial segment step {} differs from h={}", phi.h, h));
  if (phi.values.empty() || std::abs(phi.alpha() - alpha) > kNodeTolerance * h) {
    throw_invalid(fmt::format("initial segment spans [{}, 0] but alpha={}", -phi.alpha(), alpha));
  }
  for (double v : phi.values) {
    if (!std::isfinite(v)) throw_invalid("initial segment contains non-finite values");
  }
  if (F.history() > alpha * (1.0 + 1e-12)) {
    throw_invalid(fmt::format("functional reads {} time units of history but alpha={}", F.history(), alpha));
  }
  F.check_step(h);
  levy.validate();
  if (!(T > 0.0)) throw_invalid(fmt::format("horizon T must be positive, got {}", T));
  (void)steps();
}

PathState::PathState(const Segment& phi, const DiffusionFunctional& F, bool keep_all)
    : m_(phi.steps()),
      h_(phi.h),
      keep_all_(keep_all),
      need_qv_(F.kind() == DiffusionFunctional::Kind::ClampedQV),
      keep_(phi.steps() + static_cast<std::size_t>(std::ceil(F.history() / phi.h)) + 4),
      head0_(phi.left_limit(phi.steps())),
      vals_(phi.values),
      jumps_(phi.jumps) {
  if (need_qv_) {
    qv_.assign(1, 0.0);
    const double t0 = -phi.alpha();
    for (std::size_t j = 0; j < m_; ++j) qv_.push_back(qv_.back() + qv_step(vals_.data(), j, t0, h_, jumps_));
  }
}

PathWindow PathState::at_node(std::size_t g) const {
  PathWindow w;
  w.nodes = vals_.data();
  w.n = g - base_;
  w.t0 = time(base_);
  w.h = h_;
  w.t = time(g);
  w.head = g == m_ ? head0_ : node(g);
  w.jumps = jumps_;
  w.qv_prefix = need_qv_ ? qv_.data() : nullptr;
  return w;
}

PathWindow PathState::at_time(double t, double head) const {
  PathWindow w;
  w.nodes = vals_.data();
  w.n = vals_.size();
  w.t0 = time(base_);
  w.h = h_;
  w.t = t;
  w.head = head;
  w.jumps = jumps_;
  w.qv_prefix = need_qv_ ? qv_.data() : nullptr;
  return w;
}

void PathState::push(double value, std::span<const JumpMark> step_jumps) {
  if (need_qv_) {
    double jump_part = 0.0;
    double jump_sq = 0.0;
    for (const auto& j : step_jumps) {
      jump_part += j.size;
      jump_sq += j.size * j.size;
    }
    const double cont = value - vals_.back() - jump_part;
    qv_.push_back(qv_.back() + cont * cont + jump_sq);
  }
  vals_.push_back(value);
  jumps_.insert(jumps_.end(), step_jumps.begin(), step_jumps.end());
  if (!keep_all_ && vals_.size() > keep_ + kCompactChunk) compact();
}

void PathState::compact() {
  const std::size_t drop = vals_.size() - keep_;
  vals_.erase(vals_.begin(), vals_.begin() + static_cast<std::ptrdiff_t>(drop));
  if (need_qv_) qv_.erase(qv_.begin(), qv_.begin() + static_cast<std::ptrdiff_t>(drop));
  base_ += drop;
  const double t_base = time(base_);
  auto keep_from = std::lower_bound(jumps_.begin(), jumps_.end(), t_base,
                                    [](const JumpMark& j, double v) { return j.time < v; });
  jumps_.erase(jumps_.begin(), keep_from);
}

double PathState::window_sup(std::size_t g) const {
  double s = 0.0;
  for (std::size_t i = g - m_; i <= g; ++i) s = std::max(s, std::abs(node(i)));
  return s;
}

Segment PathState::segment(std::size_t g) const {
  Segment seg;
  seg.h = h_;
  seg.values.assign(vals_.begin() + static_cast<std::ptrdiff_t>(g - m_ - base_),
                    vals_.begin() + static_cast<std::ptrdiff_t>(g - base_ + 1));
  const double t = time(g);
  const double lo = time(g - m_) + kNodeTolerance * h_;
  for (const auto& j : jumps_) {
    if (j.time > lo && j.time <= t + kNodeTolerance * h_) seg.jumps.push_back({j.time - t, j.size});
  }
  return seg;
}

GridPath PathState::to_path(std::uint64_t seed) const {
  if (base_ != 0) throw_invalid("path history was discarded; construct with keep_all to export the path");
  GridPath p;
  p.t0 = time(0);
  p.h = h_;
  p.values = vals_;
  p.jumps = jumps_;
  p.seed = seed;
  return p;
}

NoiseSource::NoiseSource(const LevyTriplet& triplet, double h, std::uint64_t seed) : sampler_(std::in_place, triplet, h, seed) {}

NoiseSource::NoiseSource(const LevyIncrements& recorded) : recorded_(&recorded) {}

double NoiseSource::next(std::vector<JumpMark>& jumps) {
  if (sampler_) return sampler_->next(jumps);
  if (k_ >= recorded_->continuous.size()) throw_invalid("recorded noise exhausted before the horizon");
  const double t_hi = static_cast<double>(k_ + 1) * recorded_->h;
  const auto& js = recorded_->jumps;
  for (; jump_ < js.size() && js[jump_].time <= t_hi; ++jump_) jumps.push_back(js[jump_]);
  return recorded_->continuous[k_++];
}

bool scalar_decay(const DelayMeasure& mu, double* a) {
  if (mu.has_density() || mu.atoms().size() != 1 || mu.atoms()[0].location != 0.0) return false;
  if (a) *a = -mu.atoms()[0].weight;
  return true;
}

EulerRun::EulerRun(const SddeProblem& p, std::uint64_t seed, bool keep_all)
    : p_(p), seed_(seed), noise_(p.levy, p.h, seed), state_(p.phi, p.F, keep_all) {
  init();
}

EulerRun::EulerRun(const SddeProblem& p, const LevyIncrements& noise, bool keep_all)
    : p_(p), seed_(0), noise_(noise), state_(p.phi, p.F, keep_all) {
  if (std::abs(noise.h - p.h) > 1e-12 * p.h) throw_invalid(fmt::format("noise step {} differs from h={}", noise.h, p.h));
  init();
}

void EulerRun::init() {
  p_.validate();
  kernel_ = discretize(p_.mu, p_.h);
  // Exact exponential flow between jumps is only used without a Gaussian part; with one,
  // the plain Euler transition is kept.
  scalar_decay_ = scalar_decay(p_.mu, &decay_rate_) && p_.levy.sigma2 == 0.0;
}

void EulerRun::step() {
  const std::size_t g = state_.current();
  const double h = p_.h;
  const double tk = state_.time(g);
  const double x = state_.node(g);
  const bool dependent = p_.F.path_dependent();
  const double Fk = dependent ? p_.F.evaluate(state_.at_node(g)) : p_.F.constant_value();

  step_noise_.clear();
  step_jumps_.clear();
  const double dLc = noise_.next(step_noise_);

  double next;
  if (scalar_decay_) {
    const double a = decay_rate_;
    const double rate = Fk * dLc / h;
    auto flow = [&](double v, double dt) {
      if (a == 0.0) return v + rate * dt;
      const double e = std::exp(-a * dt);
      return v * e + rate * (1.0 - e) / a;
    };
    double cur = x;
    double s = tk;
    for (const auto& j : step_noise_) {
      cur = flow(cur, j.time - s);
      const double Ft = dependent ? p_.F.evaluate(state_.at_time(j.time, cur)) : Fk;
      const double size = Ft * j.size;
      cur += size;
      step_jumps_.push_back({j.time, size});
      s = j.time;
    }
    next = flow(cur, tk + h - s);
  } else {
    const double drift = kernel_.apply(state_.window_start(g));
    const double inc = drift * h + Fk * dLc;
    double jumps = 0.0;
    for (const auto& j : step_noise_) {
      const double theta = (j.time - tk) / h;
      const double head = x + theta * inc + jumps;
      const double Ft = dependent ? p_.F.evaluate(state_.at_time(j.time, head)) : Fk;
      const double size = Ft * j.size;
      jumps += size;
      step_jumps_.push_back({j.time, size});
    }
    next = x + inc + jumps;
  }
  if (!std::isfinite(next)) {
    throw_numerical(fmt::format("solution blew up: non-finite state at t={}", tk + h));
  }
  state_.push(next, step_jumps_);
  last_F_ = Fk;
  ++k_;
}

GridPath solve_euler(const SddeProblem& p, std::uint64_t seed) {
  EulerRun run(p, seed, true);
  const std::size_t n = p.steps();
  for (std::size_t k = 0; k < n; ++k) run.step();
  return run.path();
}

GridPath solve_euler(const SddeProblem& p, const LevyIncrements& noise) {
  EulerRun run(p, noise, true);
  const std::size_t n = p.steps();
  if (noise.steps() < n) throw_invalid(fmt::format("noise covers {} steps, horizon needs {}", noise.steps(), n));
  for (std::size_t k = 0; k < n; ++k) run.step();
  return run.path();
}

GridPath solve_voc(const SddeProblem& p, const LevyIncrements& noise, const FundamentalSolution& fs) {
  p.validate();
  const double h = p.h;
  const std::size_t N = p.steps();
  if (!(fs.mu == p.mu)) throw_invalid("fundamental solution was computed for a different delay measure");
  if (std::abs(fs.h - h) > 1e-12 * h) throw_invalid(fmt::format("fundamental solution step {} differs from h={}", fs.h, h));
  if (fs.r.size() < N + 1) {
    throw_invalid(fmt::format("fundamental solution horizon {} is shorter than T={}", fs.t_end(), p.T));
  }
  if (std::abs(noise.h - h) > 1e-12 * h) throw_invalid(fmt::format("noise step {} differs from h={}", noise.h, h));
  if (noise.steps() < N) throw_invalid(fmt::format("noise covers {} steps, horizon needs {}", noise.steps(), N));

  const GridPath xdet = deterministic_solution(p.mu, p.phi, p.T, h);
  const std::size_t m = p.phi.steps();
  PathState st(p.phi, p.F, true);
  const std::vector<double>& r = fs.r;
  const bool dependent = p.F.path_dependent();

  std::vector<double> weighted(N);  // F_k dLc_k
  struct Jump {
    double time;
    double amplitude;  // F(tau-) dL(tau), the jump of X
  };
  std::vector<Jump> past;
  std::size_t next_noise_jump = 0;
  std::vector<JumpMark> step_jumps;

  for (std::size_t n = 0; n < N; ++n) {
    const std::size_t g = m + n;
    const double tn = static_cast<double>(n) * h;
    const double Fn = dependent ? p.F.evaluate(st.at_node(g)) : p.F.constant_value();
    weighted[n] = Fn * noise.continuous[n];

    double cont = xdet.values[g + 1];
    for (std::size_t k = 0; k <= n; ++k) cont += r[n + 1 - k] * weighted[k];
    for (const auto& j : past) cont += fs.at(tn + h - j.time) * j.amplitude;

    const double xn = st.node(g);
    step_jumps.clear();
    double total = cont;
    for (; next_noise_jump < noise.jumps.size() && noise.jumps[next_noise_jump].time <= tn + h; ++next_noise_jump) {
      const JumpMark& nj = noise.jumps[next_noise_jump];
      const double theta = (nj.time - tn) / h;
      double head = (1.0 - theta) * xn + theta * cont;
      for (const auto& sj : step_jumps) head += fs.at(nj.time - sj.time) * sj.size;
      const double Ft = dependent ? p.F.evaluate(st.at_time(nj.time, head)) : p.F.constant_value();
      const double amp = Ft * nj.size;
      step_jumps.push_back({nj.time, amp});
      total += fs.at(tn + h - nj.time) * amp;
    }
    if (!std::isfinite(total)) throw_numerical(fmt::format("variation-of-constants path non-finite at t={}", tn + h));
    for (const auto& sj : step_jumps) past.push_back({sj.time, sj.size});
    st.push(total, step_jumps);
  }
  return st.to_path(0);
}

std::pair<GridPath, GridPath> coupled_pair(const SddeProblem& p, const Segment& phi1, const Segment& phi2,
                                           std::uint64_t seed) {
  SddeProblem a = p;
  a.phi = phi1;
  SddeProblem b = p;
  b.phi = phi2;
  return {solve_euler(a, seed), solve_euler(b, seed)};
}

Segment stationary_ou_segment(double alpha, double h, double a, double sigma, Rng& rng) {
  if (!(a > 0.0)) throw_invalid(fmt::format("stationary OU segment needs a > 0, got {}", a));
  const std::size_t m = steps_for(alpha, h);
  Segment seg;
  seg.h = h;
  seg.values.resize(m + 1);
  const double decay = std::exp(-a * h);
  const double sd_stat = std::abs(sigma) / std::sqrt(2.0 * a);
  const double sd_step = sd_stat * std::sqrt(1.0 - decay * decay);
  seg.values[0] = sd_stat * rng.normal();
  for (std::size_t j = 1; j <= m; ++j) seg.values[j] = seg.values[j - 1] * decay + sd_step * rng.normal();
  return seg;
}

void write_path_csv(const GridPath& path, const std::filesystem::path& file) {
  try {
    auto out = fmt::output_file(file.string());
    out.print("t,X,jump\n");
    std::size_t j = 0;
    for (std::size_t k = 0; k < path.values.size(); ++k) {
      const double t = path.time_at(k);
      int flag = 0;
      for (; j < path.jumps.size() && path.jumps[j].time <= t + kNodeTolerance * path.h; ++j) flag = 1;
      out.print("{},{},{}\n", t, path.values[k], flag);
    }
  } catch (const std::system_error& e) {
    throw_io(fmt::format("cannot write {}: {}", file.string(), e.what()));
  }
}

}  // namespace sddelab
