#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace sddelab {

/// Relative tolerance (in units of the grid step) for deciding that a time sits on a node.
inline constexpr double kNodeTolerance = 1e-7;

/// Number of grid steps covering `span`; throws if `span` is not an integer multiple of `h`.
std::size_t steps_for(double span, double h);

struct JumpMark {
  double time = 0.0;
  double size = 0.0;
};

/// Window of a path on [-alpha, 0]. values[j] is the (right-continuous) value at
/// time -alpha + j*h. Jump marks use window-relative times.
struct Segment {
  double h = 0.0;
  std::vector<double> values;
  std::vector<JumpMark> jumps;

  std::size_t steps() const { return values.empty() ? 0 : values.size() - 1; }
  double alpha() const { return h * static_cast<double>(steps()); }
  double time_at(std::size_t j) const;
  /// Value minus any jump sitting exactly on node j.
  double left_limit(std::size_t j) const;
  /// Linear interpolation between nodes, s in [-alpha, 0].
  double interpolate(double s) const;
  double sup_abs() const;
};

Segment constant_segment(double alpha, double h, double value);
/// 1 on [from, 0], 0 on [-alpha, from); the switch is snapped to the nearest node and
/// recorded as a unit jump mark.
Segment indicator_segment(double alpha, double h, double from);
/// s -> intercept + slope * s.
Segment linear_segment(double alpha, double h, double intercept, double slope);

/// Càdlàg path sampled on a uniform grid t0 + k*h, with exact jump marks (absolute
/// times, ascending). A jump at time tau in (t_k, t_{k+1}] is included in values[k+1].
struct GridPath {
  double t0 = 0.0;
  double h = 0.0;
  std::vector<double> values;
  std::vector<JumpMark> jumps;
  std::uint64_t seed = 0;

  double time_at(std::size_t k) const { return t0 + static_cast<double>(k) * h; }
  double t_end() const { return time_at(values.empty() ? 0 : values.size() - 1); }
  /// Index of grid time t; throws if t is not a node of this path.
  std::size_t index_of(double t) const;
  double left_limit(std::size_t k) const;
};

/// The window t + u, u in [-alpha, 0], with jump marks preserved (window-relative).
Segment segment_at(const GridPath& path, double t, double alpha);

/// Path on [-alpha, 0] holding exactly the given segment.
GridPath path_from_segment(const Segment& seg);

/// Sum of jump sizes with times in (lo, hi]; `jumps` must be sorted by time.
double jump_sum(std::span<const JumpMark> jumps, double lo, double hi);

}  // namespace sddelab
