#pragma once

#include "sddelab/estimators.hpp"
#include "sddelab/fundamental.hpp"
#include "sddelab/levy.hpp"
#include "sddelab/solver.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace sddelab {

struct KbOptions {
  /// Negative selects 20 / (-v0) (or 10 alpha when v0 is not negative).
  double burn_in = -1.0;
  /// Sampling period after burn-in.
  double horizon = 0.0;
  /// Zero selects alpha.
  double spacing = 0.0;
  std::size_t replicates = 1;
  std::uint64_t seed = 0;
  int threads = 1;
  /// Keep every `segment_every`-th sampled segment (0: none).
  std::size_t segment_every = 0;
  /// Start segment; defaults to the zero segment.
  std::optional<Segment> initial;
};

/// Time-averaged occupation samples of the solution (Krylov-Bogoliubov surrogate).
struct EmpiricalMeasure {
  double spacing = 0.0;
  double burn_in = 0.0;
  double horizon = 0.0;
  std::vector<std::vector<double>> samples;  // per replicate, in time order
  std::vector<Segment> segments;
  /// Time average of F(X)(t-)^2 over the sampled period (all grid steps).
  double ef2 = 0.0;
  AssumptionReport gate;
  std::string warning;

  std::size_t count() const;
  std::vector<double> pooled() const;
  MeanSe mean() const;
  /// Batch-means estimate of the marginal variance.
  MeanSe variance() const;
};

EmpiricalMeasure krylov_bogoliubov(const SddeProblem& p, const KbOptions& opts);

/// EF2 * (sigma^2 + lambda E[J^2]) * ||r||^2. Throws on an infinite second moment.
double analytic_variance(const FundamentalSolution& fs, const LevyTriplet& triplet, double EF2);
/// Stationary mean for constant F = m: m * E L(1) * int_0^inf r = m * E L(1) / chi(0).
double analytic_mean(const DelayMeasure& mu, const LevyTriplet& triplet, double m);
/// var0 * conv_rr(lag) / ||r||^2.
double analytic_covariance(const FundamentalSolution& fs, double var0, double lag);
/// EX2 / (||r||^2 |chi(i xi)|^2); throws when chi vanishes on the imaginary axis.
double analytic_spectral_density(const FundamentalSolution& fs, const DelayMeasure& mu, double EX2, double xi);

/// Numerical inverse transform c(h) = (1/pi) int_0^inf cos(h xi) S(xi) dxi of the analytic
/// spectral density. The 1/xi^2 tail is removed analytically via A/(xi^2+1) <-> A e^{-h}/2;
/// the remainder is integrated by the trapezoid rule on [0, xi_max].
std::vector<double> spectral_inverse(const FundamentalSolution& fs, const DelayMeasure& mu, double EX2,
                                     const std::vector<double>& lags, double xi_max = 200.0, double dxi = 0.002);

struct PowerLawReport {
  PowerLawFit fit;
  double predicted = 0.0;  // lambda / a
  double relative_error = 0.0;
  double jump_floor = 0.0;  // J sigma_0
};

/// Checks that p has the compound-Poisson form (mu = -a delta_0, no Gaussian part, zero
/// pathwise drift, positive jumps >= J, F >= sigma_0 > 0) and window_hi < J sigma_0.
/// Returns (a, lambda, J sigma_0).
struct CpForm {
  double a = 0.0;
  double lambda = 0.0;
  double floor = 0.0;
};
CpForm check_cp_form(const SddeProblem& p, double window_hi);

PowerLawReport cp_power_law_fit(const SddeProblem& p, const EmpiricalMeasure& measure, double window_hi);

struct TightnessOptions {
  std::vector<double> checkpoints;
  std::vector<double> K;
  std::size_t replicates = 100;
  std::uint64_t seed = 0;
  int threads = 1;
  std::optional<Segment> initial;
};

struct TightnessTable {
  std::vector<double> checkpoints;
  std::vector<double> K;
  /// [checkpoint][K]: fraction of replicates with |X(t)| > K, resp. sup_{[t-alpha,t]} |X| > K.
  std::vector<std::vector<double>> marginal;
  std::vector<std::vector<double>> segment;
  std::vector<std::size_t> blowups;  // replicates that had blown up by each checkpoint
  std::size_t replicates = 0;
  /// Exceedances are non-increasing in K at every checkpoint.
  bool monotone = true;
  /// Segment exceedance at the largest K rose from the first to the last checkpoint by more
  /// than three binomial standard errors and more than 2/replicates.
  bool growth = false;
  double growth_delta = 0.0;
};

TightnessTable tightness_diagnostic(const SddeProblem& p, const TightnessOptions& opts);

struct NonuniqueOptions {
  std::vector<double> sigmas;
  double a = 1.0;
  double alpha = 40.0;
  double T = 50.0;
  double h = 1e-3;
  std::size_t replicates = 16;
  double spacing = 0.05;
  std::uint64_t seed = 0;
  int threads = 1;
};

struct NonuniqueRow {
  double sigma = 0.0;
  /// max over replicates and t in [0, T] of |F(X)(t-) - sigma|
  double sup_deviation = 0.0;
  double variance = 0.0;
  double variance_se = 0.0;
  double predicted = 0.0;  // sigma^2 / (2a)
};

struct NonuniqueReport {
  std::vector<NonuniqueRow> rows;
};

/// Solves dX = -a X dt + F(X) dW with the clamped-QV functional from stationary OU
/// segments of each sigma; replicate i uses the same random numbers for every sigma.
NonuniqueReport nonuniqueness_demo(const NonuniqueOptions& opts);

}  // namespace sddelab
