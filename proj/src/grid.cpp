#include "sddelab/grid.hpp"

#include "sddelab/error.hpp"

#include <algorithm>
#include <cmath>
#include <fmt/format.h>

namespace sddelab {

std::size_t steps_for(double span, double h) {
  if (!(h > 0.0) || !std::isfinite(h)) throw_invalid(fmt::format("grid step must be positive, got {}", h));
  if (!(span >= 0.0) || !std::isfinite(span)) throw_invalid(fmt::format("span must be nonnegative, got {}", span));
  const double ratio = span / h;
  const double rounded = std::round(ratio);
  if (std::abs(ratio - rounded) > 1e-6 * std::max(1.0, ratio)) {
    throw_invalid(fmt::format("span {} is not a multiple of the grid step {}", span, h));
  }
  return static_cast<std::size_t>(rounded);
}

namespace {

bool on_node(double time, double node, double h) { return std::abs(time - node) <= kNodeTolerance * h; }

double jumps_at(std::span<const JumpMark> jumps, double node, double h) {
  double total = 0.0;
  for (const auto& j : jumps) {
    if (on_node(j.time, node, h)) total += j.size;
  }
  return total;
}

}  // namespace

double Segment::time_at(std::size_t j) const {
  return -alpha() + static_cast<double>(j) * h;
}

double Segment::left_limit(std::size_t j) const { return values[j] - jumps_at(jumps, time_at(j), h); }

double Segment::interpolate(double s) const {
  const double a = alpha();
  if (s < -a - kNodeTolerance * h || s > kNodeTolerance * h) {
    throw_invalid(fmt::format("time {} outside segment window [{}, 0]", s, -a));
  }
  const double pos = std::clamp((s + a) / h, 0.0, static_cast<double>(steps()));
  const auto j0 = std::min(static_cast<std::size_t>(pos), steps());
  const double frac = pos - static_cast<double>(j0);
  if (j0 == steps() || frac <= 0.0) return values[j0];
  return (1.0 - frac) * values[j0] + frac * values[j0 + 1];
}

double Segment::sup_abs() const {
  double s = 0.0;
  for (double v : values) s = std::max(s, std::abs(v));
  return s;
}

Segment constant_segment(double alpha, double h, double value) {
  const auto m = steps_for(alpha, h);
  return Segment{h, std::vector<double>(m + 1, value), {}};
}

Segment indicator_segment(double alpha, double h, double from) {
  const auto m = steps_for(alpha, h);
  if (from > 0.0 || from < -alpha) throw_invalid(fmt::format("indicator start {} outside [-alpha, 0]", from));
  const auto j_switch = static_cast<std::size_t>(std::llround((from + alpha) / h));
  Segment seg{h, std::vector<double>(m + 1, 0.0), {}};
  for (std::size_t j = j_switch; j <= m; ++j) seg.values[j] = 1.0;
  if (j_switch > 0) seg.jumps.push_back({seg.time_at(j_switch), 1.0});
  return seg;
}

Segment linear_segment(double alpha, double h, double intercept, double slope) {
  const auto m = steps_for(alpha, h);
  Segment seg{h, std::vector<double>(m + 1), {}};
  for (std::size_t j = 0; j <= m; ++j) seg.values[j] = intercept + slope * seg.time_at(j);
  return seg;
}

std::size_t GridPath::index_of(double t) const {
  const double pos = (t - t0) / h;
  const double k = std::round(pos);
  if (std::abs(pos - k) > kNodeTolerance || k < 0.0 || k > static_cast<double>(values.size()) - 1.0) {
    throw_invalid(fmt::format("time {} is not a grid node of the path [{}, {}]", t, t0, t_end()));
  }
  return static_cast<std::size_t>(k);
}

double GridPath::left_limit(std::size_t k) const { return values[k] - jumps_at(jumps, time_at(k), h); }

Segment segment_at(const GridPath& path, double t, double alpha) {
  const auto m = steps_for(alpha, path.h);
  const double start = t - alpha;
  if (start < path.t0 - kNodeTolerance * path.h) {
    throw_invalid(fmt::format("segment window [{}, {}] starts before the path ({})", start, t, path.t0));
  }
  const auto k_end = path.index_of(t);
  const auto k_start = k_end - m;
  Segment seg{path.h, std::vector<double>(path.values.begin() + static_cast<std::ptrdiff_t>(k_start),
                                          path.values.begin() + static_cast<std::ptrdiff_t>(k_end + 1)),
              {}};
  const double lo = path.time_at(k_start) - kNodeTolerance * path.h;
  const double hi = path.time_at(k_end) + kNodeTolerance * path.h;
  for (const auto& j : path.jumps) {
    // A jump on the left endpoint belongs to the window's past (Delta phi(-alpha) = 0).
    if (j.time > lo + 2.0 * kNodeTolerance * path.h && j.time <= hi) seg.jumps.push_back({j.time - t, j.size});
  }
  return seg;
}

GridPath path_from_segment(const Segment& seg) {
  GridPath p;
  p.t0 = -seg.alpha();
  p.h = seg.h;
  p.values = seg.values;
  p.jumps = seg.jumps;
  return p;
}

double jump_sum(std::span<const JumpMark> jumps, double lo, double hi) {
  auto first = std::upper_bound(jumps.begin(), jumps.end(), lo,
                                [](double v, const JumpMark& j) { return v < j.time; });
  double total = 0.0;
  for (auto it = first; it != jumps.end() && it->time <= hi; ++it) total += it->size;
  return total;
}

}  // namespace sddelab
