#pragma once

#include "sddelab/delay_measure.hpp"
#include "sddelab/functional.hpp"
#include "sddelab/fundamental.hpp"
#include "sddelab/grid.hpp"
#include "sddelab/levy.hpp"

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <utility>
#include <vector>

namespace sddelab {

class Rng;

struct SddeProblem {
  DelayMeasure mu{1.0};
  DiffusionFunctional F = DiffusionFunctional::constant(0.0);
  LevyTriplet levy;
  Segment phi;
  double T = 0.0;
  double h = 0.0;

  double alpha() const { return mu.alpha(); }
  std::size_t steps() const;
  /// Throws InvalidArgument on the first violated precondition.
  void validate() const;
};

/// Node buffer of a path under construction on the grid -alpha + g h. Keeps realised-QV
/// prefix sums when the functional needs them, and drops old history in streaming mode.
class PathState {
 public:
  PathState(const Segment& phi, const DiffusionFunctional& F, bool keep_all);

  std::size_t lag_steps() const { return m_; }
  double h() const { return h_; }
  /// Global index of the newest node.
  std::size_t current() const { return base_ + vals_.size() - 1; }
  double time(std::size_t g) const { return (static_cast<double>(g) - static_cast<double>(m_)) * h_; }
  double node(std::size_t g) const { return vals_[g - base_]; }
  /// Pointer to the node at time(g) - alpha (start of the drift window).
  const double* window_start(std::size_t g) const { return vals_.data() + (g - m_ - base_); }

  /// View for evaluating F(X)(t_g -).
  PathWindow at_node(std::size_t g) const;
  /// View for evaluating F at an off-grid time inside the step after the newest node.
  PathWindow at_time(double t, double head) const;
  /// Appends the next node; `step_jumps` are the jumps of X inside the step (absolute times).
  void push(double value, std::span<const JumpMark> step_jumps);

  /// Largest |X| over the last alpha (nodes only).
  double window_sup(std::size_t g) const;
  Segment segment(std::size_t g) const;
  /// Whole path from -alpha; only valid when constructed with keep_all.
  GridPath to_path(std::uint64_t seed) const;

 private:
  void compact();

  std::size_t m_;
  double h_;
  bool keep_all_;
  bool need_qv_;
  std::size_t keep_;
  std::size_t base_ = 0;
  double head0_;
  std::vector<double> vals_;
  std::vector<double> qv_;
  std::vector<JumpMark> jumps_;
};

/// Driving noise consumed one step at a time: either freshly sampled or replayed.
class NoiseSource {
 public:
  NoiseSource(const LevyTriplet& triplet, double h, std::uint64_t seed);
  explicit NoiseSource(const LevyIncrements& recorded);
  double next(std::vector<JumpMark>& jumps);

 private:
  std::optional<LevySampler> sampler_;
  const LevyIncrements* recorded_ = nullptr;
  std::size_t k_ = 0;
  std::size_t jump_ = 0;
};

/// Explicit Euler stepping of the SDDE, exposed step by step for long runs. Jumps are
/// applied at their exact times with F evaluated on the pre-jump history.
class EulerRun {
 public:
  EulerRun(const SddeProblem& p, std::uint64_t seed, bool keep_all = false);
  EulerRun(const SddeProblem& p, const LevyIncrements& noise, bool keep_all = false);

  /// Advances one grid step. Throws Numerical on a non-finite state.
  void step();
  std::size_t steps_done() const { return k_; }
  double time() const { return state_.time(state_.current()); }
  double value() const { return state_.node(state_.current()); }
  /// F(X)(t_k -) used for the most recent step.
  double last_F() const { return last_F_; }
  double window_sup() const { return state_.window_sup(state_.current()); }
  Segment segment() const { return state_.segment(state_.current()); }
  GridPath path() const { return state_.to_path(seed_); }

 private:
  void init();

  SddeProblem p_;
  std::uint64_t seed_;
  NoiseSource noise_;
  PathState state_;
  DiscreteKernel kernel_;
  bool scalar_decay_ = false;
  double decay_rate_ = 0.0;
  std::size_t k_ = 0;
  double last_F_ = 0.0;
  std::vector<JumpMark> step_noise_;
  std::vector<JumpMark> step_jumps_;
};

/// True when mu is a single atom at 0 (weight returned as -a) with no density.
bool scalar_decay(const DelayMeasure& mu, double* a = nullptr);

GridPath solve_euler(const SddeProblem& p, std::uint64_t seed);
GridPath solve_euler(const SddeProblem& p, const LevyIncrements& noise);

/// X(t) = x(t, phi) + int_0^t r(t-s) F(X)(s-) dL(s): left-point sums over the grid
/// increments plus exact jump terms, O(N^2).
GridPath solve_voc(const SddeProblem& p, const LevyIncrements& noise, const FundamentalSolution& fs);

/// Two solutions from phi1 and phi2 driven by the same noise realisation.
std::pair<GridPath, GridPath> coupled_pair(const SddeProblem& p, const Segment& phi1, const Segment& phi2,
                                           std::uint64_t seed);

/// Stationary OU segment on [-alpha, 0] for dX = -a X dt + sigma dW: X(-alpha) from the
/// stationary law, then exact transitions.
Segment stationary_ou_segment(double alpha, double h, double a, double sigma, Rng& rng);

/// CSV with columns t, X, jump (1 if X jumped in the step ending at t).
void write_path_csv(const GridPath& path, const std::filesystem::path& file);

}  // namespace sddelab
