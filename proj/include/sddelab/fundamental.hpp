#pragma once

#include "sddelab/delay_measure.hpp"
#include "sddelab/grid.hpp"

#include <filesystem>
#include <vector>

namespace sddelab {

/// |r(t)| <= c * exp(-beta * t) on the grid.
struct DecayFit {
  double c = 0.0;
  double beta = 0.0;
};

struct FundamentalSolution {
  DelayMeasure mu{1.0};
  double h = 0.0;
  double T = 0.0;
  std::vector<double> r;     // r[k] = r(k h), r[0] = 1
  std::vector<double> rdot;  // right derivative at k h
  DecayFit fit;
  /// Set when |r| overflowed; r and rdot then stop at the last finite sample.
  bool unstable_growth = false;

  double t_end() const { return h * static_cast<double>(r.empty() ? 0 : r.size() - 1); }
  /// Linear interpolation; 0 for t < 0. Throws beyond the computed range.
  double at(double t) const;
};

/// Value with an error bar (here the analytic tail bound beyond the horizon).
struct Estimate {
  double value = 0.0;
  double error = 0.0;
};

/// max(10 alpha, 40 / (-v0)) for v0 < 0, rounded up to a multiple of h.
double default_horizon(const DelayMeasure& mu, double v0, double h);

/// Heun integration of r' = mu * r_t with r(0) = 1, r = 0 before 0; decay fit by log-linear
/// regression over [T/2, T].
FundamentalSolution compute_r(const DelayMeasure& mu, double T, double h);

/// ||r||^2 over [0, inf). Throws (Numerical) if the decay fit is not strictly decaying.
Estimate l2_norm_sq(const FundamentalSolution& fs);
/// int_0^inf r(s) r(s + lag) ds for lag >= 0.
Estimate conv_rr(const FundamentalSolution& fs, double lag);
/// ||r'||^2 over [0, inf); diagnostic only.
Estimate l2_norm_sq_dot(const FundamentalSolution& fs);

/// Solution of the deterministic delay equation from phi on [-alpha, T]; the returned path
/// starts at -alpha and contains phi. Integrated forward by Heun and cross-checked against
/// the representation phi(0) r(t) + int int r(t+s-u) phi(u) du mu(ds) at a set of nodes.
/// Throws (Numerical) when the two disagree by more than ten times the quadrature tolerance.
GridPath deterministic_solution(const DelayMeasure& mu, const Segment& phi, double T, double h);

/// Representation-formula value at grid time t, using r from `fs` (same mu and h).
double representation_value(const FundamentalSolution& fs, const Segment& phi, double t);

void write_fundamental_csv(const FundamentalSolution& fs, const std::filesystem::path& file);

}  // namespace sddelab
