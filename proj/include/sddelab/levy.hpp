#pragma once

#include "sddelab/grid.hpp"

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace sddelab {

class Rng;
class DelayMeasure;
class DiffusionFunctional;

enum class JumpFamily { Constant, Exponential, TwoSidedExponential, Pareto, LogHeavy };

/// Compound-Poisson part: `lambda` jumps per unit time with i.i.d. sizes from `family`.
struct JumpSpec {
  double lambda = 0.0;
  JumpFamily family = JumpFamily::Constant;
  double size = 1.0;        // Constant: J
  double mean = 1.0;        // Exponential
  double mean_up = 1.0;     // TwoSidedExponential
  double mean_down = 1.0;
  double p_up = 0.5;
  double x_min = 1.0;       // Pareto
  double tail_index = 3.0;
  // LogHeavy has no parameters: density 1/(x log^2 x) on (e, inf).

  static JumpSpec constant(double lambda, double J);
  static JumpSpec exponential(double lambda, double mean);
  static JumpSpec two_sided(double lambda, double mean_up, double mean_down, double p_up);
  static JumpSpec pareto(double lambda, double x_min, double tail_index);
  static JumpSpec log_heavy(double lambda);

  void validate() const;
  double draw(Rng& rng) const;
  /// E[J^2]; +inf when infinite.
  double second_moment() const;
  /// E[J 1{|J| > 1}]; +inf when infinite.
  double large_jump_mean() const;
  /// E[J 1{|J| <= 1}].
  double small_jump_mean() const;
  /// Whether E[log|J| 1{|J| > 1}] is finite.
  bool log_moment_finite() const;
};

std::string family_name(JumpFamily f);
JumpFamily parse_family(const std::string& name);

/// Lévy triplet (b, sigma2, nu) with b relative to the truncation x 1{|x| <= 1}.
struct LevyTriplet {
  double b = 0.0;
  double sigma2 = 0.0;
  std::optional<JumpSpec> jump;

  void validate() const;
  /// Drift of the continuous part when the jumps are added uncompensated:
  /// b - lambda E[J 1{|J| <= 1}].
  double pathwise_drift() const;
  /// E L(1) = b + lambda E[J 1{|J| > 1}].
  double mean_rate() const;
  /// sigma2 + lambda E[J^2]; +inf when infinite.
  double second_moment_rate() const;

  /// Triplet whose pathwise drift equals `drift`.
  static LevyTriplet from_pathwise(double drift, double sigma2, std::optional<JumpSpec> jump);
};

/// Noise realisation on [0, T]: continuous[k] = drift h + sqrt(sigma2) dW over (t_k, t_{k+1}],
/// and the exact jumps in [0, T), ascending.
struct LevyIncrements {
  double h = 0.0;
  double T = 0.0;
  std::vector<double> continuous;
  std::vector<JumpMark> jumps;

  std::size_t steps() const { return continuous.size(); }
  /// The same path on the grid with step factor * h (continuous increments summed).
  LevyIncrements coarsen(std::size_t factor) const;
};

/// Streams the driving noise one grid step at a time. Gaussian increments and jumps use
/// separate seed streams, so jump times do not depend on the step.
class LevySampler {
 public:
  LevySampler(const LevyTriplet& triplet, double h, std::uint64_t seed);
  ~LevySampler();
  LevySampler(LevySampler&&) noexcept;
  LevySampler& operator=(LevySampler&&) noexcept;

  /// Continuous increment over (t_k, t_{k+1}] for the next k; jumps in that step are
  /// appended to `jumps` (absolute times).
  double next(std::vector<JumpMark>& jumps);

 private:
  struct State;
  std::unique_ptr<State> state_;
};

LevyIncrements sample_path(const LevyTriplet& triplet, double T, double h, std::uint64_t seed);

enum class Tri { False, True, Unknown };
const char* to_string(Tri t);

struct AssumptionReport {
  Tri stable = Tri::Unknown;          // v0(mu) < 0
  Tri log_moment = Tri::Unknown;      // int_{|x|>1} log|x| nu(dx) < inf
  Tri bounded = Tri::Unknown;         // sup |F| < inf
  double v0 = 0.0;
  std::string notes;

  bool passed() const { return stable == Tri::True && log_moment == Tri::True && bounded == Tri::True; }
};

AssumptionReport check_assumptions(const DelayMeasure& mu, const LevyTriplet& triplet, const DiffusionFunctional& F);

}  // namespace sddelab
