#include "sddelab/levy.hpp"

#include "sddelab/delay_measure.hpp"
#include "sddelab/error.hpp"
#include "sddelab/functional.hpp"
#include "sddelab/random.hpp"

#include <cmath>
#include <fmt/format.h>
#include <limits>

namespace sddelab {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void require(bool ok, const std::string& what) {
  if (!ok) throw_invalid(what);
}

// E[J 1{J > 1}] and E[J 1{J <= 1}] for J ~ Exp(mean m).
double exp_large(double m) { return (1.0 + m) * std::exp(-1.0 / m); }
double exp_small(double m) { return m - exp_large(m); }

}  // namespace

JumpSpec JumpSpec::constant(double lambda, double J) {
  JumpSpec s;
  s.lambda = lambda;
  s.family = JumpFamily::Constant;
  s.size = J;
  return s;
}

JumpSpec JumpSpec::exponential(double lambda, double mean) {
  JumpSpec s;
  s.lambda = lambda;
  s.family = JumpFamily::Exponential;
  s.mean = mean;
  return s;
}

JumpSpec JumpSpec::two_sided(double lambda, double mean_up, double mean_down, double p_up) {
  JumpSpec s;
  s.lambda = lambda;
  s.family = JumpFamily::TwoSidedExponential;
  s.mean_up = mean_up;
  s.mean_down = mean_down;
  s.p_up = p_up;
  return s;
}

JumpSpec JumpSpec::pareto(double lambda, double x_min, double tail_index) {
  JumpSpec s;
  s.lambda = lambda;
  s.family = JumpFamily::Pareto;
  s.x_min = x_min;
  s.tail_index = tail_index;
  return s;
}

JumpSpec JumpSpec::log_heavy(double lambda) {
  JumpSpec s;
  s.lambda = lambda;
  s.family = JumpFamily::LogHeavy;
  return s;
}

void JumpSpec::validate() const {
  require(lambda > 0.0 && std::isfinite(lambda), fmt::format("jump intensity must be positive, got {}", lambda));
  switch (family) {
    case JumpFamily::Constant:
      require(std::isfinite(size), "constant jump size must be finite");
      break;
    case JumpFamily::Exponential:
      require(mean > 0.0 && std::isfinite(mean), fmt::format("exponential mean must be positive, got {}", mean));
      break;
    case JumpFamily::TwoSidedExponential:
      require(mean_up > 0.0 && mean_down > 0.0, "two-sided exponential means must be positive");
      require(p_up >= 0.0 && p_up <= 1.0, fmt::format("p_up must lie in [0, 1], got {}", p_up));
      break;
    case JumpFamily::Pareto:
      require(x_min > 0.0 && std::isfinite(x_min), fmt::format("pareto x_min must be positive, got {}", x_min));
      require(tail_index > 0.0 && std::isfinite(tail_index),
              fmt::format("pareto tail index must be positive, got {}", tail_index));
      break;
    case JumpFamily::LogHeavy:
      break;
  }
}

double JumpSpec::draw(Rng& rng) const {
  switch (family) {
    case JumpFamily::Constant:
      return size;
    case JumpFamily::Exponential:
      return mean * rng.exponential();
    case JumpFamily::TwoSidedExponential: {
      const double u = rng.uniform();
      const double e = rng.exponential();
      return u < p_up ? mean_up * e : -mean_down * e;
    }
    case JumpFamily::Pareto:
      return x_min * std::pow(rng.uniform(), -1.0 / tail_index);
    case JumpFamily::LogHeavy:
      // P(J > x) = 1 / log x on (e, inf). Overflows to +inf for u < 1/709, which is a
      // faithful sample of this family's tail.
      return std::exp(1.0 / rng.uniform());
  }
  return 0.0;
}

double JumpSpec::second_moment() const {
  switch (family) {
    case JumpFamily::Constant:
      return size * size;
    case JumpFamily::Exponential:
      return 2.0 * mean * mean;
    case JumpFamily::TwoSidedExponential:
      return 2.0 * (p_up * mean_up * mean_up + (1.0 - p_up) * mean_down * mean_down);
    case JumpFamily::Pareto:
      return tail_index > 2.0 ? tail_index * x_min * x_min / (tail_index - 2.0) : kInf;
    case JumpFamily::LogHeavy:
      return kInf;
  }
  return kInf;
}

double JumpSpec::large_jump_mean() const {
  switch (family) {
    case JumpFamily::Constant:
      return std::abs(size) > 1.0 ? size : 0.0;
    case JumpFamily::Exponential:
      return exp_large(mean);
    case JumpFamily::TwoSidedExponential:
      return p_up * exp_large(mean_up) - (1.0 - p_up) * exp_large(mean_down);
    case JumpFamily::Pareto: {
      if (tail_index <= 1.0) return kInf;
      const double k = tail_index;
      if (x_min >= 1.0) return k * x_min / (k - 1.0);
      return k * std::pow(x_min, k) / (k - 1.0);
    }
    case JumpFamily::LogHeavy:
      return kInf;
  }
  return kInf;
}

double JumpSpec::small_jump_mean() const {
  switch (family) {
    case JumpFamily::Constant:
      return std::abs(size) <= 1.0 ? size : 0.0;
    case JumpFamily::Exponential:
      return exp_small(mean);
    case JumpFamily::TwoSidedExponential:
      return p_up * exp_small(mean_up) - (1.0 - p_up) * exp_small(mean_down);
    case JumpFamily::Pareto: {
      if (x_min >= 1.0) return 0.0;
      const double k = tail_index;
      const double coef = k * std::pow(x_min, k);
      if (std::abs(k - 1.0) < 1e-12) return coef * -std::log(x_min);
      return coef * (1.0 - std::pow(x_min, 1.0 - k)) / (1.0 - k);
    }
    case JumpFamily::LogHeavy:
      return 0.0;
  }
  return 0.0;
}

bool JumpSpec::log_moment_finite() const {
  // Every family except the log-heavy demo has at least a power tail.
  return family != JumpFamily::LogHeavy;
}

std::string family_name(JumpFamily f) {
  switch (f) {
    case JumpFamily::Constant:
      return "constant";
    case JumpFamily::Exponential:
      return "exponential";
    case JumpFamily::TwoSidedExponential:
      return "two_sided";
    case JumpFamily::Pareto:
      return "pareto";
    case JumpFamily::LogHeavy:
      return "log_heavy";
  }
  return "?";
}

JumpFamily parse_family(const std::string& name) {
  for (auto f : {JumpFamily::Constant, JumpFamily::Exponential, JumpFamily::TwoSidedExponential, JumpFamily::Pareto,
                 JumpFamily::LogHeavy}) {
    if (family_name(f) == name) return f;
  }
  throw_config(fmt::format("unknown jump family '{}' (expected constant, exponential, two_sided, pareto, log_heavy)", name));
}

void LevyTriplet::validate() const {
  require(std::isfinite(b), "levy drift b must be finite");
  require(sigma2 >= 0.0 && std::isfinite(sigma2), fmt::format("sigma2 must be nonnegative, got {}", sigma2));
  if (jump) jump->validate();
}

double LevyTriplet::pathwise_drift() const { return jump ? b - jump->lambda * jump->small_jump_mean() : b; }

double LevyTriplet::mean_rate() const { return jump ? b + jump->lambda * jump->large_jump_mean() : b; }

double LevyTriplet::second_moment_rate() const {
  return jump ? sigma2 + jump->lambda * jump->second_moment() : sigma2;
}

LevyTriplet LevyTriplet::from_pathwise(double drift, double sigma2, std::optional<JumpSpec> jump) {
  LevyTriplet t{drift, sigma2, jump};
  if (jump) t.b = drift + jump->lambda * jump->small_jump_mean();
  return t;
}

LevyIncrements LevyIncrements::coarsen(std::size_t factor) const {
  if (factor == 0 || continuous.size() % factor != 0) {
    throw_invalid(fmt::format("cannot coarsen {} steps by factor {}", continuous.size(), factor));
  }
  LevyIncrements out;
  out.h = h * static_cast<double>(factor);
  out.T = T;
  out.jumps = jumps;
  out.continuous.resize(continuous.size() / factor);
  for (std::size_t k = 0; k < out.continuous.size(); ++k) {
    double acc = 0.0;
    for (std::size_t j = 0; j < factor; ++j) acc += continuous[k * factor + j];
    out.continuous[k] = acc;
  }
  return out;
}

struct LevySampler::State {
  double h;
  double drift;
  double vol;
  std::optional<JumpSpec> jump;
  Rng gauss;
  Rng jumps;
  std::uint64_t k = 0;
  double next_jump = std::numeric_limits<double>::infinity();

  State(const LevyTriplet& t, double step, std::uint64_t seed)
      : h(step),
        drift(t.pathwise_drift()),
        vol(std::sqrt(t.sigma2)),
        jump(t.jump),
        gauss(derive_seed(seed, 0)),
        jumps(derive_seed(seed, 1)) {
    if (jump) next_jump = jumps.exponential() / jump->lambda;
  }
};

LevySampler::LevySampler(const LevyTriplet& triplet, double h, std::uint64_t seed) {
  triplet.validate();
  require(h > 0.0 && std::isfinite(h), fmt::format("step must be positive, got {}", h));
  state_ = std::make_unique<State>(triplet, h, seed);
}

LevySampler::~LevySampler() = default;
LevySampler::LevySampler(LevySampler&&) noexcept = default;
LevySampler& LevySampler::operator=(LevySampler&&) noexcept = default;

double LevySampler::next(std::vector<JumpMark>& out) {
  State& s = *state_;
  const double t_hi = static_cast<double>(s.k + 1) * s.h;
  ++s.k;
  while (s.next_jump <= t_hi) {
    out.push_back({s.next_jump, s.jump->draw(s.jumps)});
    s.next_jump += s.jumps.exponential() / s.jump->lambda;
  }
  double inc = s.drift * s.h;
  if (s.vol > 0.0) inc += s.vol * std::sqrt(s.h) * s.gauss.normal();
  return inc;
}

LevyIncrements sample_path(const LevyTriplet& triplet, double T, double h, std::uint64_t seed) {
  const std::size_t steps = steps_for(T, h);
  LevySampler sampler(triplet, h, seed);
  LevyIncrements out;
  out.h = h;
  out.T = T;
  out.continuous.resize(steps);
  for (std::size_t k = 0; k < steps; ++k) out.continuous[k] = sampler.next(out.jumps);
  while (!out.jumps.empty() && out.jumps.back().time >= T) out.jumps.pop_back();
  return out;
}

const char* to_string(Tri t) {
  switch (t) {
    case Tri::True:
      return "true";
    case Tri::False:
      return "false";
    case Tri::Unknown:
      return "unknown";
  }
  return "unknown";
}

AssumptionReport check_assumptions(const DelayMeasure& mu, const LevyTriplet& triplet, const DiffusionFunctional& F) {
  AssumptionReport rep;
  try {
    const auto st = stability_abscissa(mu, 1e-8);
    rep.v0 = st.v0;
    if (st.below_search_floor || st.v0 < -1e-6) {
      rep.stable = Tri::True;
    } else if (st.v0 > 1e-6) {
      rep.stable = Tri::False;
    } else {
      rep.notes += fmt::format("v0 = {} is within 1e-6 of zero; ", st.v0);
    }
  } catch (const Error& e) {
    rep.notes += fmt::format("stability undecided: {}; ", e.what());
  }
  rep.log_moment = (!triplet.jump || triplet.jump->log_moment_finite()) ? Tri::True : Tri::False;
  if (F.sup_bound()) {
    rep.bounded = Tri::True;
  } else if (F.provably_unbounded()) {
    rep.bounded = Tri::False;
  }
  return rep;
}

}  // namespace sddelab
