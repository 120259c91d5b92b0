#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace sddelab {

inline constexpr std::size_t kBatches = 30;

struct MeanSe {
  double value = 0.0;
  double se = 0.0;
};

/// Batch-means estimate of the mean of `values` (contiguous batches).
MeanSe batch_mean(std::span<const double> values, std::size_t batches = kBatches);

struct CovariancePoint {
  std::size_t lag = 0;  // in samples
  double value = 0.0;
  double se = 0.0;
};

/// Biased autocovariance (divisor = number of samples) pooled over independent series.
/// Standard errors by batch means over the lagged products, batches taken contiguously
/// across the concatenated series.
std::vector<CovariancePoint> autocovariance(const std::vector<std::vector<double>>& series,
                                            std::span<const std::size_t> lags, std::size_t batches = kBatches);

struct SpectrumPoint {
  double xi = 0.0;
  double value = 0.0;
};

/// Bartlett periodogram: the series (sample spacing dt) is cut into segments of
/// `segment_length` samples, each mean-removed and transformed, and the raw periodograms
/// (dt / n) |sum_k x_k e^{-i xi k dt}|^2 are averaged, then smoothed by a centred moving
/// average over 2*smooth+1 frequencies. Normalisation: c(h) = int e^{i h xi} S(xi) dxi / (2 pi).
std::vector<SpectrumPoint> periodogram(const std::vector<std::vector<double>>& series, double dt,
                                       std::size_t segment_length, std::size_t smooth = 0);

struct PowerLawFit {
  double exponent = 0.0;
  double intercept = 0.0;  // log prefactor
  std::size_t points = 0;
  double x_lo = 0.0;
  double x_hi = 0.0;
  std::vector<double> xs;
  std::vector<double> cdf;
};

/// Log-log regression of the empirical CDF P(X <= x) at x_j = window_hi 2^{-j/4}, kept
/// while at least `min_count` samples lie at or below x_j. The default keeps the counting
/// error of every regression point near 3%; sparser tail points dominate the slope.
PowerLawFit power_law_fit(std::span<const double> samples, double window_hi, std::size_t min_count = 1000);

}  // namespace sddelab
