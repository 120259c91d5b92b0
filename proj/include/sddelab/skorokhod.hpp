#pragma once

#include "sddelab/grid.hpp"
#include "sddelab/solver.hpp"

#include <cstdint>
#include <utility>
#include <vector>

namespace sddelab {

/// Increasing piecewise-linear homeomorphism of [a, b]; knots are (s, lambda(s)) pairs
/// including both endpoints.
struct TimeChange {
  std::vector<std::pair<double, double>> knots;

  static TimeChange identity(double a, double b);
  double operator()(double s) const;
  /// sup |lambda(s) - s|
  double displacement() const;
  bool valid() const;
};

/// Value of a segment as a càdlàg function: linear between nodes, with jump marks as true
/// discontinuities inside their step.
double segment_value(const Segment& seg, double s);

/// sup |phi(lambda(s)) - psi(s)| + sup |lambda(s) - s|, evaluated exactly on the pieces
/// between breakpoints (the difference is linear on each).
double skorokhod_cost(const Segment& phi, const Segment& psi, const TimeChange& lambda);

struct SkorokhodResult {
  double upper = 0.0;     // achieved by `lambda`
  TimeChange lambda;
  double sup_norm = 0.0;  // ||phi - psi||_inf (identity time change)
  double lower = 0.0;
};

/// Upper bound on d_S over time changes whose knots match jump marks of phi to jump marks of
/// psi (dynamic programming over order-preserving matchings), plus a certified lower bound.
/// At most `max_marks` largest jumps per segment are considered for matching.
SkorokhodResult skorokhod_distance(const Segment& phi, const Segment& psi, std::size_t max_marks = 12);

/// Lower bound from the endpoints and from each jump: a jump must either be matched by a
/// jump of the other path (costing its displacement plus the size mismatch) or be left
/// unmatched (costing the distance from its one-sided limits to the other path's range).
double skorokhod_lower_bound(const Segment& phi, const Segment& psi);

struct FellerReport {
  std::size_t n = 0;
  double beta = 0.0;
  double alpha = 0.0;
  double initial_upper = 0.0;  // d_S(phi^n, phi^inf), upper bound
  double initial_lower = 0.0;
  double gap_before = 0.0;     // |f(X^n_t) - f(X^inf_t)| at t = alpha - beta
  double gap_at_alpha = 0.0;
  double max_gap_after = 0.0;  // max over grid times in [alpha, 2 alpha]
  /// Skorokhod lower bound between the two solution segments at t = alpha - beta.
  double segment_lower_before = 0.0;
};

/// Solves from phi^n = 1_{[-beta(1-1/n), 0]} and phi^inf = 1_{[-beta, 0]} with identical
/// noise and compares f(psi) = min(|psi(-alpha)|, 1) on the solution segments.
FellerReport feller_counterexample(const SddeProblem& tmpl, double beta, std::size_t n, std::uint64_t seed);

}  // namespace sddelab
