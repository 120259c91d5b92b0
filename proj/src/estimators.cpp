#include "sddelab/estimators.hpp"

#include "sddelab/error.hpp"

#include <algorithm>
#include <cmath>
#include <fftw3.h>
#include <fmt/format.h>
#include <mutex>
#include <numbers>

namespace sddelab {

namespace {

// FFTW planning is not thread-safe.
std::mutex& fftw_planner_mutex() {
  static std::mutex m;
  return m;
}

}  // namespace

MeanSe batch_mean(std::span<const double> values, std::size_t batches) {
  const std::size_t n = values.size();
  if (batches < 2 || n < batches) {
    throw_invalid(fmt::format("batch means need at least {} samples, got {}", std::max<std::size_t>(batches, 2), n));
  }
  double total = 0.0;
  std::vector<double> means(batches);
  for (std::size_t b = 0; b < batches; ++b) {
    const std::size_t lo = b * n / batches;
    const std::size_t hi = (b + 1) * n / batches;
    double s = 0.0;
    for (std::size_t i = lo; i < hi; ++i) s += values[i];
    total += s;
    means[b] = s / static_cast<double>(hi - lo);
  }
  const double mean = total / static_cast<double>(n);
  double ss = 0.0;
  for (double m : means) ss += (m - mean) * (m - mean);
  const double var_of_batch = ss / static_cast<double>(batches - 1);
  return {mean, std::sqrt(var_of_batch / static_cast<double>(batches))};
}

std::vector<CovariancePoint> autocovariance(const std::vector<std::vector<double>>& series,
                                            std::span<const std::size_t> lags, std::size_t batches) {
  std::size_t total = 0;
  double sum = 0.0;
  for (const auto& s : series) {
    total += s.size();
    for (double v : s) sum += v;
  }
  if (total == 0) throw_invalid("autocovariance of an empty sample");
  const double mean = sum / static_cast<double>(total);
  std::vector<CovariancePoint> out;
  std::vector<double> products;
  for (std::size_t lag : lags) {
    products.clear();
    for (const auto& s : series) {
      for (std::size_t i = 0; i + lag < s.size(); ++i) products.push_back((s[i] - mean) * (s[i + lag] - mean));
    }
    if (products.size() < batches) {
      throw_invalid(fmt::format("too few samples ({}) for lag {} with {} batches", products.size(), lag, batches));
    }
    const MeanSe bm = batch_mean(products, batches);
    const double scale = static_cast<double>(products.size()) / static_cast<double>(total);
    out.push_back({lag, bm.value * scale, bm.se * scale});
  }
  return out;
}

std::vector<SpectrumPoint> periodogram(const std::vector<std::vector<double>>& series, double dt,
                                       std::size_t segment_length, std::size_t smooth) {
  const std::size_t n = segment_length;
  if (n < 4) throw_invalid(fmt::format("periodogram segment length must be at least 4, got {}", n));
  if (!(dt > 0.0)) throw_invalid(fmt::format("sample spacing must be positive, got {}", dt));
  const std::size_t bins = n / 2 + 1;
  std::vector<double> acc(bins, 0.0);
  std::size_t segments = 0;

  double* in = fftw_alloc_real(n);
  fftw_complex* spec = fftw_alloc_complex(bins);
  fftw_plan plan;
  {
    std::lock_guard lock(fftw_planner_mutex());
    plan = fftw_plan_dft_r2c_1d(static_cast<int>(n), in, spec, FFTW_ESTIMATE);
  }
  for (const auto& s : series) {
    for (std::size_t start = 0; start + n <= s.size(); start += n) {
      double mean = 0.0;
      for (std::size_t i = 0; i < n; ++i) mean += s[start + i];
      mean /= static_cast<double>(n);
      for (std::size_t i = 0; i < n; ++i) in[i] = s[start + i] - mean;
      fftw_execute(plan);
      for (std::size_t j = 0; j < bins; ++j) acc[j] += spec[j][0] * spec[j][0] + spec[j][1] * spec[j][1];
      ++segments;
    }
  }
  {
    std::lock_guard lock(fftw_planner_mutex());
    fftw_destroy_plan(plan);
  }
  fftw_free(in);
  fftw_free(spec);
  if (segments == 0) throw_invalid(fmt::format("series shorter than one periodogram segment ({} samples)", n));

  const double norm = dt / static_cast<double>(n) / static_cast<double>(segments);
  std::vector<double> raw(bins);
  for (std::size_t j = 0; j < bins; ++j) raw[j] = acc[j] * norm;
  std::vector<SpectrumPoint> out;
  out.reserve(bins - 1);
  for (std::size_t j = 1; j < bins; ++j) {
    const std::size_t lo = j > smooth ? j - smooth : 1;
    const std::size_t hi = std::min(bins - 1, j + smooth);
    double s = 0.0;
    for (std::size_t i = lo; i <= hi; ++i) s += raw[i];
    out.push_back({2.0 * std::numbers::pi * static_cast<double>(j) / (static_cast<double>(n) * dt),
                   s / static_cast<double>(hi - lo + 1)});
  }
  return out;
}

PowerLawFit power_law_fit(std::span<const double> samples, double window_hi, std::size_t min_count) {
  if (!(window_hi > 0.0)) throw_invalid(fmt::format("power-law window must be positive, got {}", window_hi));
  if (samples.empty()) throw_numerical("power-law fit: no samples");
  std::vector<double> sorted(samples.begin(), samples.end());
  std::sort(sorted.begin(), sorted.end());
  const double n = static_cast<double>(sorted.size());
  PowerLawFit fit;
  for (int j = 0;; ++j) {
    const double x = window_hi * std::exp2(-0.25 * j);
    const auto count = static_cast<std::size_t>(std::upper_bound(sorted.begin(), sorted.end(), x) - sorted.begin());
    if (count < min_count || x <= 0.0) break;
    fit.xs.push_back(x);
    fit.cdf.push_back(static_cast<double>(count) / n);
  }
  fit.points = fit.xs.size();
  if (fit.points < 3) {
    throw_numerical(fmt::format("power-law fit: only {} window points hold at least {} samples", fit.points, min_count));
  }
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < fit.points; ++i) {
    const double lx = std::log(fit.xs[i]);
    const double ly = std::log(fit.cdf[i]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  const double k = static_cast<double>(fit.points);
  fit.exponent = (sxy - sx * sy / k) / (sxx - sx * sx / k);
  fit.intercept = (sy - fit.exponent * sx) / k;
  fit.x_hi = fit.xs.front();
  fit.x_lo = fit.xs.back();
  return fit;
}

}  // namespace sddelab
