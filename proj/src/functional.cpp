#include "sddelab/functional.hpp"

#include "sddelab/error.hpp"

#include <algorithm>
#include <cmath>
#include <fmt/format.h>
#include <fmt/ranges.h>

namespace sddelab {

InnerMap InnerMap::identity() { return {}; }

InnerMap InnerMap::affine(double slope, double intercept) {
  if (!std::isfinite(slope) || !std::isfinite(intercept)) throw_invalid("affine map parameters must be finite");
  return {Kind::Affine, slope, intercept, 0.0};
}

InnerMap InnerMap::clamp(double lo, double hi) {
  if (!(lo <= hi)) throw_invalid(fmt::format("clamp needs lo <= hi, got [{}, {}]", lo, hi));
  return {Kind::Clamp, lo, hi, 0.0};
}

InnerMap InnerMap::sqrt_clamp(double lo, double hi) {
  if (!(lo > 0.0 && lo <= hi)) throw_invalid(fmt::format("sqrt_clamp needs 0 < lo <= hi, got [{}, {}]", lo, hi));
  return {Kind::SqrtClamp, lo, hi, 0.0};
}

InnerMap InnerMap::tanh_scaled(double scale, double gain, double offset) {
  if (!(scale > 0.0)) throw_invalid(fmt::format("tanh scale must be positive, got {}", scale));
  if (!std::isfinite(gain) || !std::isfinite(offset)) throw_invalid("tanh map parameters must be finite");
  return {Kind::TanhScaled, scale, gain, offset};
}

double InnerMap::operator()(double x) const {
  switch (kind) {
    case Kind::Identity:
      return x;
    case Kind::Affine:
      return p1 * x + p2;
    case Kind::Clamp:
      return std::clamp(x, p1, p2);
    case Kind::SqrtClamp:
      return std::sqrt(std::clamp(x, p1, p2));
    case Kind::TanhScaled:
      return p3 + p2 * std::tanh(x / p1);
  }
  return x;
}

double InnerMap::lipschitz() const {
  switch (kind) {
    case Kind::Identity:
    case Kind::Clamp:
      return 1.0;
    case Kind::Affine:
      return std::abs(p1);
    case Kind::SqrtClamp:
      return 0.5 / std::sqrt(p1);
    case Kind::TanhScaled:
      return std::abs(p2) / p1;
  }
  return 1.0;
}

std::optional<double> InnerMap::bound() const {
  switch (kind) {
    case Kind::Identity:
      return std::nullopt;
    case Kind::Affine:
      return p1 == 0.0 ? std::optional<double>(std::abs(p2)) : std::nullopt;
    case Kind::Clamp:
      return std::max(std::abs(p1), std::abs(p2));
    case Kind::SqrtClamp:
      return std::sqrt(p2);
    case Kind::TanhScaled:
      return std::abs(p3) + std::abs(p2);
  }
  return std::nullopt;
}

bool InnerMap::unbounded() const { return kind == Kind::Identity || (kind == Kind::Affine && p1 != 0.0); }

std::string InnerMap::describe() const {
  switch (kind) {
    case Kind::Identity:
      return "identity";
    case Kind::Affine:
      return fmt::format("affine(slope={}, intercept={})", p1, p2);
    case Kind::Clamp:
      return fmt::format("clamp({}, {})", p1, p2);
    case Kind::SqrtClamp:
      return fmt::format("sqrt_clamp({}, {})", p1, p2);
    case Kind::TanhScaled:
      return fmt::format("{} + {} tanh(x/{})", p3, p2, p1);
  }
  return "?";
}

double PathWindow::value(double s) const {
  const double tol = kNodeTolerance * h;
  if (s >= t - tol) return head;
  if (s < t0 - tol) throw_invalid(fmt::format("insufficient history: X({}) requested, path starts at {}", s, t0));
  if (n == 0) throw_invalid(fmt::format("insufficient history before t={}", t));
  const double pos = std::max(0.0, (s - t0) / h);
  auto i = static_cast<std::size_t>(std::floor(pos + kNodeTolerance));
  if (i + 1 >= n) {
    const double t_last = t0 + static_cast<double>(n - 1) * h;
    const double frac = std::clamp((s - t_last) / (t - t_last), 0.0, 1.0);
    return frac <= kNodeTolerance ? nodes[n - 1] : (1.0 - frac) * nodes[n - 1] + frac * head;
  }
  const double frac = pos - static_cast<double>(i);
  if (frac <= kNodeTolerance) return nodes[i];
  return (1.0 - frac) * nodes[i] + frac * nodes[i + 1];
}

double qv_step(const double* nodes, std::size_t i, double t0, double h, std::span<const JumpMark> jumps) {
  const double lo = t0 + static_cast<double>(i) * h;
  const double hi = lo + h;
  double jump_part = 0.0;
  double jump_sq = 0.0;
  // Jumps are sorted; a node-aligned mark belongs to the step that ends on it.
  auto it = std::upper_bound(jumps.begin(), jumps.end(), lo + kNodeTolerance * h,
                             [](double v, const JumpMark& j) { return v < j.time; });
  for (; it != jumps.end() && it->time <= hi + kNodeTolerance * h; ++it) {
    jump_part += it->size;
    jump_sq += it->size * it->size;
  }
  const double cont = nodes[i + 1] - nodes[i] - jump_part;
  return cont * cont + jump_sq;
}

DiffusionFunctional DiffusionFunctional::constant(double m) {
  if (!std::isfinite(m)) throw_invalid("constant functional value must be finite");
  DiffusionFunctional F;
  F.kind_ = Kind::Constant;
  F.m_ = m;
  return F;
}

DiffusionFunctional DiffusionFunctional::no_delay(InnerMap f) {
  DiffusionFunctional F;
  F.kind_ = Kind::NoDelay;
  F.f_ = f;
  return F;
}

DiffusionFunctional DiffusionFunctional::point_delay(InnerMap f, std::vector<double> lags, std::vector<double> weights) {
  if (lags.empty()) throw_invalid("point-delay functional needs at least one lag");
  if (lags.size() != weights.size()) {
    throw_invalid(fmt::format("point-delay functional: {} lags but {} weights", lags.size(), weights.size()));
  }
  for (double l : lags) {
    if (!(l >= 0.0) || !std::isfinite(l)) throw_invalid(fmt::format("lag must be nonnegative, got {}", l));
  }
  for (double w : weights) {
    if (!std::isfinite(w)) throw_invalid("point-delay weights must be finite");
  }
  DiffusionFunctional F;
  F.kind_ = Kind::PointDelay;
  F.f_ = f;
  F.lags_ = std::move(lags);
  F.weights_ = std::move(weights);
  return F;
}

DiffusionFunctional DiffusionFunctional::distributed(InnerMap f, std::vector<double> kernel, double span) {
  if (kernel.size() < 2) throw_invalid("distributed functional needs at least two kernel samples");
  if (!(span > 0.0)) throw_invalid(fmt::format("kernel span must be positive, got {}", span));
  for (double c : kernel) {
    if (!std::isfinite(c)) throw_invalid("kernel samples must be finite");
  }
  DiffusionFunctional F;
  F.kind_ = Kind::Distributed;
  F.f_ = f;
  F.kernel_ = std::move(kernel);
  F.span_ = span;
  return F;
}

DiffusionFunctional DiffusionFunctional::running_sup(InnerMap f, double window) {
  if (!(window > 0.0)) throw_invalid(fmt::format("running-sup window must be positive, got {}", window));
  DiffusionFunctional F;
  F.kind_ = Kind::RunningSup;
  F.f_ = f;
  F.span_ = window;
  return F;
}

DiffusionFunctional DiffusionFunctional::clamped_qv(double alpha) {
  if (!(alpha > 0.0)) throw_invalid(fmt::format("clamped-QV window must be positive, got {}", alpha));
  DiffusionFunctional F;
  F.kind_ = Kind::ClampedQV;
  F.span_ = alpha;
  return F;
}

double DiffusionFunctional::history() const {
  switch (kind_) {
    case Kind::Constant:
    case Kind::NoDelay:
      return 0.0;
    case Kind::PointDelay:
      return *std::max_element(lags_.begin(), lags_.end());
    case Kind::Distributed:
    case Kind::RunningSup:
    case Kind::ClampedQV:
      return span_;
  }
  return 0.0;
}

std::optional<double> DiffusionFunctional::lipschitz() const {
  switch (kind_) {
    case Kind::Constant:
      return 0.0;
    case Kind::NoDelay:
    case Kind::RunningSup:
      return f_.lipschitz();
    case Kind::PointDelay: {
      double s = 0.0;
      for (double w : weights_) s += std::abs(w);
      return f_.lipschitz() * s;
    }
    case Kind::Distributed: {
      const double ds = span_ / static_cast<double>(kernel_.size() - 1);
      double s = 0.0;
      for (std::size_t j = 0; j < kernel_.size(); ++j) {
        s += std::abs(kernel_[j]) * ((j == 0 || j + 1 == kernel_.size()) ? 0.5 * ds : ds);
      }
      return f_.lipschitz() * s;
    }
    case Kind::ClampedQV:
      // Quadratic variation is not continuous in the sup norm.
      return std::nullopt;
  }
  return std::nullopt;
}

std::optional<double> DiffusionFunctional::sup_bound() const {
  switch (kind_) {
    case Kind::Constant:
      return std::abs(m_);
    case Kind::ClampedQV:
      return std::sqrt(2.0);
    case Kind::PointDelay: {
      bool all_zero = std::all_of(weights_.begin(), weights_.end(), [](double w) { return w == 0.0; });
      if (all_zero) return std::abs(f_(0.0));
      return f_.bound();
    }
    default:
      return f_.bound();
  }
}

bool DiffusionFunctional::provably_unbounded() const {
  switch (kind_) {
    case Kind::NoDelay:
    case Kind::RunningSup:
      return f_.unbounded();
    case Kind::PointDelay:
      return f_.unbounded() && std::any_of(weights_.begin(), weights_.end(), [](double w) { return w != 0.0; });
    default:
      // A distributed kernel may integrate to zero against every path direction we could
      // test cheaply; leave it undecided.
      return false;
  }
}

void DiffusionFunctional::check_step(double h) const {
  if (kind_ == Kind::ClampedQV && h > span_ / 4.0 * (1.0 + 1e-12)) {
    throw_invalid(fmt::format("clamped-QV window under-resolved: h={} exceeds alpha/4={}", h, span_ / 4.0));
  }
}

double DiffusionFunctional::evaluate(const PathWindow& w) const {
  switch (kind_) {
    case Kind::Constant:
      return m_;
    case Kind::NoDelay:
      return f_(w.head);
    case Kind::PointDelay: {
      double acc = 0.0;
      for (std::size_t i = 0; i < lags_.size(); ++i) acc += weights_[i] * w.value(w.t - lags_[i]);
      return f_(acc);
    }
    case Kind::Distributed: {
      const std::size_t nk = kernel_.size();
      const double ds = span_ / static_cast<double>(nk - 1);
      double acc = 0.0;
      for (std::size_t j = 0; j < nk; ++j) {
        const double wt = (j == 0 || j + 1 == nk) ? 0.5 * ds : ds;
        acc += wt * kernel_[j] * w.value(w.t - span_ + static_cast<double>(j) * ds);
      }
      return f_(acc);
    }
    case Kind::RunningSup: {
      const double lo = w.t - span_;
      double s = std::max(w.value(lo), w.head);
      const double pos = (lo - w.t0) / w.h;
      auto first = static_cast<std::size_t>(std::max(0.0, std::ceil(pos - kNodeTolerance)));
      for (std::size_t i = first; i < w.n; ++i) s = std::max(s, w.nodes[i]);
      return f_(s);
    }
    case Kind::ClampedQV: {
      if (w.t < -kNodeTolerance * w.h) return 0.0;
      const double lo = w.t - span_;
      const double hi = w.t - 0.5 * span_;
      if (lo < w.t0 - kNodeTolerance * w.h) {
        throw_invalid(fmt::format("insufficient history for the QV window at t={}", w.t));
      }
      const auto ia = static_cast<std::size_t>(std::max(0.0, std::ceil((lo - w.t0) / w.h - kNodeTolerance)));
      const auto ib = static_cast<std::size_t>(std::floor((hi - w.t0) / w.h + kNodeTolerance));
      if (ib >= w.n) throw_invalid(fmt::format("QV window at t={} extends past the available nodes", w.t));
      double qv = 0.0;
      if (ib > ia) {
        if (w.qv_prefix) {
          qv = w.qv_prefix[ib] - w.qv_prefix[ia];
        } else {
          for (std::size_t i = ia; i < ib; ++i) qv += qv_step(w.nodes, i, w.t0, w.h, w.jumps);
        }
      }
      return std::sqrt(std::max(1.0, std::min(2.0 / span_ * qv, 2.0)));
    }
  }
  return 0.0;
}

std::string DiffusionFunctional::describe() const {
  switch (kind_) {
    case Kind::Constant:
      return fmt::format("constant({})", m_);
    case Kind::NoDelay:
      return fmt::format("no_delay[{}]", f_.describe());
    case Kind::PointDelay:
      return fmt::format("point_delay[{}; lags={}; weights={}]", f_.describe(), lags_, weights_);
    case Kind::Distributed:
      return fmt::format("distributed[{}; span={}; {} kernel samples]", f_.describe(), span_, kernel_.size());
    case Kind::RunningSup:
      return fmt::format("running_sup[{}; window={}]", f_.describe(), span_);
    case Kind::ClampedQV:
      return fmt::format("clamped_qv(alpha={})", span_);
  }
  return "?";
}

double evaluate(const DiffusionFunctional& F, const GridPath& path, double t) {
  const std::size_t k = path.index_of(t);
  if (t - F.history() < path.t0 - kNodeTolerance * path.h) {
    throw_invalid(fmt::format("insufficient history: functional needs [{}, {}], path starts at {}", t - F.history(), t, path.t0));
  }
  F.check_step(path.h);
  PathWindow w;
  w.nodes = path.values.data();
  w.n = k;
  w.t0 = path.t0;
  w.h = path.h;
  w.t = t;
  w.head = path.left_limit(k);
  w.jumps = path.jumps;
  return F.evaluate(w);
}

}  // namespace sddelab
