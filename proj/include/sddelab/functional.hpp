#pragma once

#include "sddelab/grid.hpp"

#include <optional>
#include <span>
#include <string>
#include <vector>

namespace sddelab {

/// Scalar Lipschitz maps with known constants.
struct InnerMap {
  enum class Kind { Identity, Affine, Clamp, SqrtClamp, TanhScaled };
  Kind kind = Kind::Identity;
  double p1 = 0.0;  // Affine: slope     Clamp/SqrtClamp: lo   TanhScaled: scale
  double p2 = 0.0;  // Affine: intercept Clamp/SqrtClamp: hi   TanhScaled: gain
  double p3 = 0.0;  //                                          TanhScaled: offset

  static InnerMap identity();
  static InnerMap affine(double slope, double intercept);
  static InnerMap clamp(double lo, double hi);
  /// sqrt(clamp(x, lo, hi)) with lo > 0.
  static InnerMap sqrt_clamp(double lo, double hi);
  /// offset + gain * tanh(x / scale).
  static InnerMap tanh_scaled(double scale, double gain, double offset);

  double operator()(double x) const;
  double lipschitz() const;
  std::optional<double> bound() const;
  bool unbounded() const;
  std::string describe() const;
};

/// Read access to a path up to (not including) time t. Nodes 0..n-1 sit at t0 + i h < t,
/// `head` is X(t-). `qv_prefix`, when present, holds n cumulative realised-QV sums
/// (qv_prefix[i] = contribution of steps 0..i-1).
struct PathWindow {
  const double* nodes = nullptr;
  std::size_t n = 0;
  double t0 = 0.0;
  double h = 0.0;
  double t = 0.0;
  double head = 0.0;
  std::span<const JumpMark> jumps;
  const double* qv_prefix = nullptr;

  /// X(s) for s <= t by linear interpolation (the last node is joined to the head).
  double value(double s) const;
  double earliest() const { return t0; }
};

/// Realised QV of the step from node i to i+1: squared continuous increment plus squared
/// jump marks inside the step.
double qv_step(const double* nodes, std::size_t i, double t0, double h, std::span<const JumpMark> jumps);

class DiffusionFunctional {
 public:
  enum class Kind { Constant, NoDelay, PointDelay, Distributed, RunningSup, ClampedQV };

  static DiffusionFunctional constant(double m);
  static DiffusionFunctional no_delay(InnerMap f);
  /// f(sum_i w_i X(t - lag_i)).
  static DiffusionFunctional point_delay(InnerMap f, std::vector<double> lags, std::vector<double> weights);
  /// f(int_{-span}^0 c(s) X(t+s) ds), c sampled uniformly on [-span, 0].
  static DiffusionFunctional distributed(InnerMap f, std::vector<double> kernel, double span);
  /// f(sup of X over [t - window, t)).
  static DiffusionFunctional running_sup(InnerMap f, double window);
  /// sqrt(max(1, min((2/alpha) QV[t-alpha, t-alpha/2], 2))) for t >= 0.
  static DiffusionFunctional clamped_qv(double alpha);

  Kind kind() const { return kind_; }
  const InnerMap& inner() const { return f_; }
  double constant_value() const { return m_; }
  const std::vector<double>& lags() const { return lags_; }
  const std::vector<double>& weights() const { return weights_; }
  const std::vector<double>& kernel() const { return kernel_; }
  double span() const { return span_; }

  /// Length of the past the functional reads.
  double history() const;
  std::optional<double> lipschitz() const;
  std::optional<double> sup_bound() const;
  bool provably_unbounded() const;
  /// Whether the value can change with the path (false for Constant).
  bool path_dependent() const { return kind_ != Kind::Constant; }
  /// Minimal grid resolution requirement; throws if h is too coarse.
  void check_step(double h) const;

  double evaluate(const PathWindow& w) const;
  std::string describe() const;

 private:
  Kind kind_ = Kind::Constant;
  InnerMap f_;
  double m_ = 0.0;
  std::vector<double> lags_;
  std::vector<double> weights_;
  std::vector<double> kernel_;
  double span_ = 0.0;
};

/// F(X)(t-) on a grid path at grid time t (predictable: only the left limit at t is used).
double evaluate(const DiffusionFunctional& F, const GridPath& path, double t);

}  // namespace sddelab
