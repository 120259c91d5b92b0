#include "sddelab/skorokhod.hpp"

#include "sddelab/error.hpp"

#include <algorithm>
#include <cmath>
#include <fmt/format.h>
#include <limits>

namespace sddelab {

TimeChange TimeChange::identity(double a, double b) { return TimeChange{{{a, a}, {b, b}}}; }

double TimeChange::operator()(double s) const {
  if (knots.size() < 2) throw_invalid("time change needs at least two knots");
  if (s <= knots.front().first) return knots.front().second;
  if (s >= knots.back().first) return knots.back().second;
  auto it = std::upper_bound(knots.begin(), knots.end(), s, [](double v, const auto& k) { return v < k.first; });
  const auto& [s1, l1] = *it;
  const auto& [s0, l0] = *(it - 1);
  return l0 + (s - s0) * (l1 - l0) / (s1 - s0);
}

double TimeChange::displacement() const {
  double d = 0.0;
  for (const auto& [s, l] : knots) d = std::max(d, std::abs(l - s));
  return d;
}

bool TimeChange::valid() const {
  if (knots.size() < 2) return false;
  if (knots.front().first != knots.front().second || knots.back().first != knots.back().second) return false;
  for (std::size_t i = 1; i < knots.size(); ++i) {
    if (!(knots[i].first > knots[i - 1].first) || !(knots[i].second > knots[i - 1].second)) return false;
  }
  return true;
}

namespace {

// Jump marks of a segment merged by time, strictly inside (-alpha, 0].
struct Curve {
  const Segment& seg;
  double alpha;
  std::vector<JumpMark> jumps;

  explicit Curve(const Segment& s) : seg(s), alpha(s.alpha()) {
    if (s.values.size() < 2) throw_invalid("segment needs at least two nodes");
    std::vector<JumpMark> sorted = s.jumps;
    std::sort(sorted.begin(), sorted.end(), [](const auto& a, const auto& b) { return a.time < b.time; });
    const double tol = kNodeTolerance * s.h;
    for (const auto& j : sorted) {
      if (j.time <= -alpha + tol || j.time > tol) continue;
      if (!jumps.empty() && std::abs(jumps.back().time - j.time) <= tol) {
        jumps.back().size += j.size;
      } else {
        jumps.push_back(j);
      }
    }
  }

  double value(double s) const {
    const double h = seg.h;
    const double pos = std::clamp((s + alpha) / h, 0.0, static_cast<double>(seg.steps()));
    const double k = std::round(pos);
    if (std::abs(pos - k) <= kNodeTolerance) return seg.values[static_cast<std::size_t>(k)];
    const auto j = static_cast<std::size_t>(std::ceil(pos));
    const double lo = seg.time_at(j - 1);
    const double hi = seg.time_at(j);
    const double tol = kNodeTolerance * h;
    double total = 0.0, passed = 0.0;
    auto it = std::upper_bound(jumps.begin(), jumps.end(), lo + tol,
                               [](double v, const JumpMark& m) { return v < m.time; });
    for (; it != jumps.end() && it->time <= hi + tol; ++it) {
      total += it->size;
      if (it->time <= s) passed += it->size;
    }
    const double theta = pos - static_cast<double>(j - 1);
    return (1.0 - theta) * seg.values[j - 1] + theta * (seg.values[j] - total) + passed;
  }

  double left_limit(double t) const {
    double v = value(t);
    for (const auto& j : jumps) {
      if (std::abs(j.time - t) <= kNodeTolerance * seg.h) v -= j.size;
    }
    return v;
  }

  // Times in [lo, hi] where the curve may fail to be linear.
  void breakpoints(double lo, double hi, std::vector<double>& out) const {
    const double h = seg.h;
    const auto first = static_cast<std::size_t>(std::max(0.0, std::ceil((lo + alpha) / h - kNodeTolerance)));
    for (std::size_t j = first; j <= seg.steps(); ++j) {
      const double t = seg.time_at(j);
      if (t > hi) break;
      out.push_back(t);
    }
    for (const auto& m : jumps) {
      if (m.time >= lo && m.time <= hi) out.push_back(m.time);
    }
  }
};

double merge_tolerance(double alpha) { return 1e-12 * (1.0 + alpha); }

// sup over v in [va, vb] of |phi(lambda(v)) - psi(v)| with lambda linear from (va, ua) to (vb, ub).
double piece_cost(const Curve& phi, const Curve& psi, double va, double vb, double ua, double ub) {
  const double slope = (ub - ua) / (vb - va);
  auto lam = [&](double v) { return ua + (v - va) * slope; };
  auto inv = [&](double u) { return va + (u - ua) / slope; };
  auto diff = [&](double v) { return phi.value(lam(v)) - psi.value(v); };

  std::vector<double> bp{va, vb};
  psi.breakpoints(va, vb, bp);
  std::vector<double> ub_pts;
  phi.breakpoints(ua, ub, ub_pts);
  for (double u : ub_pts) bp.push_back(std::clamp(inv(u), va, vb));
  std::sort(bp.begin(), bp.end());
  const double tol = merge_tolerance(psi.alpha);
  std::vector<double> merged;
  for (double t : bp) {
    if (merged.empty() || t - merged.back() > tol) merged.push_back(t);
  }
  if (merged.back() < vb) merged.back() = vb;

  double worst = std::max(std::abs(diff(va)), std::abs(diff(vb)));
  for (std::size_t i = 0; i + 1 < merged.size(); ++i) {
    const double p = merged[i], q = merged[i + 1];
    const double d1 = diff(p + (q - p) / 3.0);
    const double d2 = diff(p + 2.0 * (q - p) / 3.0);
    // The difference is linear on (p, q): extrapolate to the one-sided limits.
    worst = std::max({worst, std::abs(2.0 * d1 - d2), std::abs(2.0 * d2 - d1)});
  }
  return worst;
}

void check_windows(const Segment& phi, const Segment& psi) {
  const double a = phi.alpha(), b = psi.alpha();
  if (std::abs(a - b) > kNodeTolerance * std::min(phi.h, psi.h) * 10.0) {
    throw_invalid(fmt::format("segments live on different windows ([{}, 0] vs [{}, 0])", -a, -b));
  }
}

double cost_of(const Curve& phi, const Curve& psi, const TimeChange& lambda) {
  double sup = 0.0;
  for (std::size_t i = 0; i + 1 < lambda.knots.size(); ++i) {
    const auto& [va, ua] = lambda.knots[i];
    const auto& [vb, ubb] = lambda.knots[i + 1];
    sup = std::max(sup, piece_cost(phi, psi, va, vb, ua, ubb));
  }
  return sup + lambda.displacement();
}

// Value range of the curve on each linear piece, as [lo, hi] intervals.
std::vector<std::pair<double, double>> piece_ranges(const Curve& c) {
  std::vector<double> bp;
  c.breakpoints(-c.alpha, 0.0, bp);
  std::sort(bp.begin(), bp.end());
  const double tol = merge_tolerance(c.alpha);
  std::vector<double> merged;
  for (double t : bp) {
    if (merged.empty() || t - merged.back() > tol) merged.push_back(t);
  }
  std::vector<std::pair<double, double>> out;
  for (std::size_t i = 0; i + 1 < merged.size(); ++i) {
    const double p = merged[i], q = merged[i + 1];
    const double d1 = c.value(p + (q - p) / 3.0);
    const double d2 = c.value(p + 2.0 * (q - p) / 3.0);
    const double l = 2.0 * d1 - d2, r = 2.0 * d2 - d1;
    out.emplace_back(std::min(l, r), std::max(l, r));
  }
  return out;
}

// Lower bound forced by the jumps of `psi` when matched against `phi`.
double jump_bound(const Curve& phi, const Curve& psi) {
  const auto ranges = piece_ranges(phi);
  double bound = 0.0;
  for (const auto& jump : psi.jumps) {
    const double b = psi.value(jump.time);
    const double a = b - jump.size;
    double best = std::numeric_limits<double>::infinity();
    for (const auto& [lo, hi] : ranges) {
      const double w = std::clamp(0.5 * (a + b), lo, hi);
      best = std::min(best, std::max(std::abs(w - a), std::abs(w - b)));
    }
    for (const auto& m : phi.jumps) {
      const double pb = phi.value(m.time);
      const double pa = pb - m.size;
      best = std::min(best, std::max(std::abs(pa - a), std::abs(pb - b)) + std::abs(m.time - jump.time));
    }
    bound = std::max(bound, best);
  }
  return bound;
}

std::vector<JumpMark> largest(const std::vector<JumpMark>& jumps, std::size_t k) {
  std::vector<JumpMark> out = jumps;
  if (out.size() > k) {
    std::nth_element(out.begin(), out.begin() + static_cast<std::ptrdiff_t>(k), out.end(),
                     [](const auto& a, const auto& b) { return std::abs(a.size) > std::abs(b.size); });
    out.resize(k);
  }
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.time < b.time; });
  return out;
}

}  // namespace

double segment_value(const Segment& seg, double s) { return Curve(seg).value(s); }

double skorokhod_cost(const Segment& phi, const Segment& psi, const TimeChange& lambda) {
  check_windows(phi, psi);
  const double alpha = psi.alpha();
  if (!lambda.valid()) throw_invalid("time change is not an increasing bijection fixing its endpoints");
  const double tol = merge_tolerance(alpha);
  if (std::abs(lambda.knots.front().first + alpha) > tol || std::abs(lambda.knots.back().first) > tol) {
    throw_invalid(fmt::format("time change must map [{}, 0] onto itself", -alpha));
  }
  return cost_of(Curve(phi), Curve(psi), lambda);
}

double skorokhod_lower_bound(const Segment& phi, const Segment& psi) {
  check_windows(phi, psi);
  const Curve a(phi), b(psi);
  const double alpha = b.alpha;
  double bound = std::max(std::abs(a.value(-alpha) - b.value(-alpha)), std::abs(a.value(0.0) - b.value(0.0)));
  bound = std::max(bound, jump_bound(a, b));
  bound = std::max(bound, jump_bound(b, a));
  return bound;
}

SkorokhodResult skorokhod_distance(const Segment& phi, const Segment& psi, std::size_t max_marks) {
  check_windows(phi, psi);
  const Curve cphi(phi), cpsi(psi);
  const double alpha = cpsi.alpha;
  const double tol = merge_tolerance(alpha) + kNodeTolerance * std::max(phi.h, psi.h);

  struct Knot {
    double v, u;
  };
  std::vector<Knot> nodes{{-alpha, -alpha}};
  const auto U = largest(cphi.jumps, max_marks);
  const auto V = largest(cpsi.jumps, max_marks);
  for (const auto& ju : U) {
    for (const auto& jv : V) {
      const bool u_end = std::abs(ju.time) <= tol, v_end = std::abs(jv.time) <= tol;
      if (u_end || v_end) continue;  // 0 is fixed by every time change
      nodes.push_back({jv.time, ju.time});
    }
  }
  std::sort(nodes.begin() + 1, nodes.end(), [](const Knot& a, const Knot& b) { return a.v < b.v; });
  nodes.push_back({0.0, 0.0});
  const std::size_t K = nodes.size();

  constexpr double inf = std::numeric_limits<double>::infinity();
  std::vector<std::vector<double>> cost(K, std::vector<double>(K, inf));
  for (std::size_t i = 0; i < K; ++i) {
    for (std::size_t j = i + 1; j < K; ++j) {
      if (nodes[j].v - nodes[i].v > tol && nodes[j].u - nodes[i].u > tol) {
        cost[i][j] = piece_cost(cphi, cpsi, nodes[i].v, nodes[j].v, nodes[i].u, nodes[j].u);
      }
    }
  }

  std::vector<double> budgets{0.0};
  for (const auto& n : nodes) budgets.push_back(std::abs(n.u - n.v));
  std::sort(budgets.begin(), budgets.end());
  budgets.erase(std::unique(budgets.begin(), budgets.end()), budgets.end());

  double best_total = inf;
  std::vector<std::size_t> best_chain;
  std::vector<double> best(K);
  std::vector<std::size_t> prev(K);
  for (double B : budgets) {
    std::fill(best.begin(), best.end(), inf);
    best[0] = 0.0;
    for (std::size_t j = 1; j < K; ++j) {
      if (std::abs(nodes[j].u - nodes[j].v) > B) continue;
      for (std::size_t i = 0; i < j; ++i) {
        if (best[i] == inf || cost[i][j] == inf) continue;
        const double c = std::max(best[i], cost[i][j]);
        if (c < best[j]) {
          best[j] = c;
          prev[j] = i;
        }
      }
    }
    if (best[K - 1] + B < best_total) {
      best_total = best[K - 1] + B;
      best_chain.clear();
      for (std::size_t k = K - 1;; k = prev[k]) {
        best_chain.push_back(k);
        if (k == 0) break;
      }
      std::reverse(best_chain.begin(), best_chain.end());
    }
  }

  SkorokhodResult res;
  for (std::size_t k : best_chain) res.lambda.knots.emplace_back(nodes[k].v, nodes[k].u);
  res.lambda.knots.front() = {-alpha, -alpha};
  res.lambda.knots.back() = {0.0, 0.0};
  res.upper = cost_of(cphi, cpsi, res.lambda);
  res.sup_norm = piece_cost(cphi, cpsi, -alpha, 0.0, -alpha, 0.0);
  res.lower = std::min(skorokhod_lower_bound(phi, psi), res.upper);
  return res;
}

FellerReport feller_counterexample(const SddeProblem& tmpl, double beta, std::size_t n, std::uint64_t seed) {
  const double alpha = tmpl.alpha();
  const double h = tmpl.h;
  if (!(beta > 0.0) || !(beta < alpha)) throw_invalid(fmt::format("beta must lie in (0, alpha), got {}", beta));
  if (n < 2) throw_invalid(fmt::format("n must be at least 2, got {}", n));
  const double from_n = -beta * (1.0 - 1.0 / static_cast<double>(n));
  for (double s : {from_n, -beta}) {
    const double pos = (s + alpha) / h;
    if (std::abs(pos - std::round(pos)) > 1e-6) {
      throw_invalid(fmt::format("indicator switch {} is not a grid node for h = {}", s, h));
    }
  }
  SddeProblem p = tmpl;
  p.T = 2.0 * alpha;
  const Segment phi_n = indicator_segment(alpha, h, from_n);
  const Segment phi_inf = indicator_segment(alpha, h, -beta);
  p.phi = phi_inf;

  FellerReport rep;
  rep.n = n;
  rep.beta = beta;
  rep.alpha = alpha;
  const auto d = skorokhod_distance(phi_n, phi_inf);
  rep.initial_upper = d.upper;
  rep.initial_lower = d.lower;

  const auto [xn, xinf] = coupled_pair(p, phi_n, phi_inf, seed);
  // f(X_t) = min(|X(t - alpha)|, 1)
  auto gap = [&](double t) {
    const double s = t - alpha;
    const double a = std::min(std::abs(xn.values[xn.index_of(s)]), 1.0);
    const double b = std::min(std::abs(xinf.values[xinf.index_of(s)]), 1.0);
    return std::abs(a - b);
  };
  rep.gap_before = gap(alpha - beta);
  rep.gap_at_alpha = gap(alpha);
  const auto m = steps_for(alpha, h);
  for (std::size_t k = 0; k <= m; ++k) rep.max_gap_after = std::max(rep.max_gap_after, gap(alpha + static_cast<double>(k) * h));
  rep.segment_lower_before =
      skorokhod_lower_bound(segment_at(xn, alpha - beta, alpha), segment_at(xinf, alpha - beta, alpha));
  return rep;
}

}  // namespace sddelab
