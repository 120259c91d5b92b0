#include "sddelab/delay_measure.hpp"

#include "sddelab/error.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fmt/format.h>
#include <fstream>
#include <numbers>
#include <sstream>

namespace sddelab {

namespace {

using cplx = std::complex<double>;

std::vector<double> resample(std::span<const double> xs, std::span<const double> ys, double lo, double hi,
                             std::size_t nodes) {
  std::vector<double> out(nodes);
  for (std::size_t k = 0; k < nodes; ++k) {
    const double s = lo + (hi - lo) * static_cast<double>(k) / static_cast<double>(nodes - 1);
    auto it = std::lower_bound(xs.begin(), xs.end(), s);
    if (it == xs.begin()) {
      out[k] = ys.front();
    } else if (it == xs.end()) {
      out[k] = ys.back();
    } else {
      const auto i = static_cast<std::size_t>(it - xs.begin());
      const double t = (s - xs[i - 1]) / (xs[i] - xs[i - 1]);
      out[k] = (1.0 - t) * ys[i - 1] + t * ys[i];
    }
  }
  return out;
}

}  // namespace

DelayMeasure::DelayMeasure(double alpha) : DelayMeasure(alpha, {}, {}) {}

DelayMeasure::DelayMeasure(double alpha, std::vector<Atom> atoms, std::vector<double> density)
    : alpha_(alpha), atoms_(std::move(atoms)) {
  if (!(alpha > 0.0) || !std::isfinite(alpha)) throw_invalid(fmt::format("delay horizon alpha must be positive, got {}", alpha));
  for (const auto& a : atoms_) {
    if (!(a.location >= -alpha_ && a.location <= 0.0)) {
      throw_invalid(fmt::format("atom location {} outside [-{}, 0]", a.location, alpha_));
    }
    if (!std::isfinite(a.weight)) throw_invalid("atom weight must be finite");
  }
  if (!density.empty()) {
    set_density(std::move(density));
  } else {
    rebuild();
  }
}

DelayMeasure DelayMeasure::point(double alpha, double location, double weight) {
  return DelayMeasure(alpha, {Atom{location, weight}});
}

DelayMeasure& DelayMeasure::add_atom(double location, double weight) {
  if (!(location >= -alpha_ && location <= 0.0)) {
    throw_invalid(fmt::format("atom location {} outside [-{}, 0]", location, alpha_));
  }
  if (!std::isfinite(weight)) throw_invalid("atom weight must be finite");
  atoms_.push_back({location, weight});
  rebuild();
  return *this;
}

DelayMeasure& DelayMeasure::set_density(std::vector<double> samples) {
  if (samples.size() < 2) throw_invalid("density needs at least two samples");
  for (double v : samples) {
    if (!std::isfinite(v)) throw_invalid("density samples must be finite");
  }
  if (samples.size() < kMinDensityNodes) {
    std::vector<double> xs(samples.size());
    for (std::size_t i = 0; i < xs.size(); ++i) {
      xs[i] = -alpha_ + alpha_ * static_cast<double>(i) / static_cast<double>(xs.size() - 1);
    }
    samples = resample(xs, samples, -alpha_, 0.0, kMinDensityNodes);
  }
  density_ = std::move(samples);
  rebuild();
  return *this;
}

double DelayMeasure::density_step() const {
  return density_.empty() ? 0.0 : alpha_ / static_cast<double>(density_.size() - 1);
}

double DelayMeasure::density_at(double s) const {
  if (density_.empty() || s < -alpha_ || s > 0.0) return 0.0;
  const double pos = (s + alpha_) / density_step();
  const auto i = std::min(static_cast<std::size_t>(pos), density_.size() - 2);
  const double t = pos - static_cast<double>(i);
  return (1.0 - t) * density_[i] + t * density_[i + 1];
}

void DelayMeasure::rebuild() {
  spectral_ = atoms_;
  if (density_.empty()) return;
  const double ds = density_step();
  const std::size_t n = density_.size();
  for (std::size_t k = 0; k < n; ++k) {
    const double w = (k == 0 || k + 1 == n) ? 0.5 * ds : ds;
    spectral_.push_back({-alpha_ + static_cast<double>(k) * ds, w * density_[k]});
  }
}

double DelayMeasure::total_variation() const {
  double tv = 0.0;
  for (const auto& a : spectral_) tv += std::abs(a.weight);
  return tv;
}

double DelayMeasure::total_mass() const {
  double m = 0.0;
  for (const auto& a : spectral_) m += a.weight;
  return m;
}

bool DelayMeasure::operator==(const DelayMeasure& other) const {
  return alpha_ == other.alpha_ && atoms_ == other.atoms_ && density_ == other.density_;
}

DiscreteKernel discretize(const DelayMeasure& mu, double h) {
  const std::size_t m = steps_for(mu.alpha(), h);
  std::vector<double> dense(m + 1, 0.0);
  auto deposit = [&](double s, double weight) {
    const double pos = std::clamp((s + mu.alpha()) / h, 0.0, static_cast<double>(m));
    auto j = static_cast<std::size_t>(pos);
    double frac = pos - static_cast<double>(j);
    if (frac < 1e-12) frac = 0.0;
    if (frac > 1.0 - 1e-12) {
      ++j;
      frac = 0.0;
    }
    if (j >= m) {
      dense[m] += weight;
      return;
    }
    dense[j] += (1.0 - frac) * weight;
    if (frac > 0.0) dense[j + 1] += frac * weight;
  };
  for (const auto& a : mu.atoms()) deposit(a.location, a.weight);
  if (mu.has_density()) {
    const std::size_t panels = std::max(m, mu.density().size() - 1);
    const double dq = mu.alpha() / static_cast<double>(panels);
    for (std::size_t k = 0; k <= panels; ++k) {
      const double s = -mu.alpha() + static_cast<double>(k) * dq;
      const double w = (k == 0 || k == panels) ? 0.5 * dq : dq;
      deposit(s, w * mu.density_at(s));
    }
  }
  DiscreteKernel kernel;
  kernel.steps = m;
  for (std::size_t j = 0; j <= m; ++j) {
    if (dense[j] != 0.0) kernel.taps.emplace_back(j, dense[j]);
  }
  return kernel;
}

double apply(const DelayMeasure& mu, const Segment& seg) {
  if (seg.values.size() < 2) throw_invalid("segment needs at least two nodes");
  if (std::abs(seg.alpha() - mu.alpha()) > kNodeTolerance * seg.h) {
    throw_invalid(fmt::format("segment spans [{}, 0] but the delay measure spans [{}, 0]", -seg.alpha(), -mu.alpha()));
  }
  for (double v : seg.values) {
    if (!std::isfinite(v)) throw_invalid("segment contains non-finite values");
  }
  return discretize(mu, seg.h).apply(seg.values.data());
}

cplx char_function(const DelayMeasure& mu, cplx z) {
  cplx acc = z;
  for (const auto& a : mu.spectral_atoms()) acc -= a.weight * std::exp(z * a.location);
  return acc;
}

cplx char_function_derivative(const DelayMeasure& mu, cplx z) {
  cplx acc = 1.0;
  for (const auto& a : mu.spectral_atoms()) acc -= a.weight * a.location * std::exp(z * a.location);
  return acc;
}

double root_modulus_bound(const DelayMeasure& mu, double re) {
  return mu.total_variation() * std::exp(mu.alpha() * std::max(0.0, -re));
}

namespace {

// Log-derivative contour integration. The integrand along an edge z(t) = a + t (b - a) is
// chi'(z) / chi(z) * (b - a).
class ContourIntegrator {
 public:
  explicit ContourIntegrator(const DelayMeasure& mu) : mu_(mu) {
    for (const auto& a : mu.spectral_atoms()) max_lag_ = std::max(max_lag_, std::abs(a.location));
    scale_ = 1.0 + mu.total_variation();
  }

  std::optional<cplx> edge(cplx a, cplx b) const {
    const double len = std::abs(b - a);
    if (len == 0.0) return cplx{};
    const double panel = 0.5 / std::max(max_lag_, 0.05);
    const auto panels = static_cast<std::size_t>(std::clamp(std::ceil(len / panel), 4.0, 4.0e6));
    cplx total{};
    for (std::size_t p = 0; p < panels; ++p) {
      const cplx za = a + (b - a) * (static_cast<double>(p) / static_cast<double>(panels));
      const cplx zb = a + (b - a) * (static_cast<double>(p + 1) / static_cast<double>(panels));
      auto fa = integrand(za);
      auto fb = integrand(zb);
      auto fm = integrand(0.5 * (za + zb));
      if (!fa || !fb || !fm) return std::nullopt;
      auto piece = simpson(za, zb, *fa, *fm, *fb, 1e-7, 0);
      if (!piece) return std::nullopt;
      total += *piece;
    }
    return total;
  }

 private:
  std::optional<cplx> integrand(cplx z) const {
    const cplx f = char_function(mu_, z);
    if (std::abs(f) < 1e-13 * scale_ * std::max(1.0, std::abs(z))) return std::nullopt;
    return char_function_derivative(mu_, z) / f;
  }

  std::optional<cplx> simpson(cplx za, cplx zb, cplx fa, cplx fm, cplx fb, double eps, int depth) const {
    const cplx dz = zb - za;
    const cplx whole = dz / 6.0 * (fa + 4.0 * fm + fb);
    const cplx zm = 0.5 * (za + zb);
    const cplx zlq = 0.5 * (za + zm);
    const cplx zrq = 0.5 * (zm + zb);
    auto flq = integrand(zlq);
    auto frq = integrand(zrq);
    if (!flq || !frq) return std::nullopt;
    const cplx left = (zm - za) / 6.0 * (fa + 4.0 * *flq + fm);
    const cplx right = (zb - zm) / 6.0 * (fm + 4.0 * *frq + fb);
    const cplx refined = left + right;
    if (std::abs(refined - whole) <= 15.0 * eps) return refined + (refined - whole) / 15.0;
    if (depth >= 48) return std::nullopt;
    const double child_eps = std::max(0.5 * eps, 1e-11);
    auto l = simpson(za, zm, fa, *flq, fm, child_eps, depth + 1);
    if (!l) return std::nullopt;
    auto r = simpson(zm, zb, fm, *frq, fb, child_eps, depth + 1);
    if (!r) return std::nullopt;
    return *l + *r;
  }

  const DelayMeasure& mu_;
  double max_lag_ = 0.0;
  double scale_ = 1.0;
};

std::optional<int> count_with(const ContourIntegrator& integ, const Rect& box) {
  const cplx c00{box.re_lo, box.im_lo};
  const cplx c10{box.re_hi, box.im_lo};
  const cplx c11{box.re_hi, box.im_hi};
  const cplx c01{box.re_lo, box.im_hi};
  cplx total{};
  for (auto [a, b] : {std::pair{c00, c10}, std::pair{c10, c11}, std::pair{c11, c01}, std::pair{c01, c00}}) {
    auto part = integ.edge(a, b);
    if (!part) return std::nullopt;
    total += *part;
  }
  const cplx winding = total / cplx(0.0, 2.0 * std::numbers::pi);
  const double rounded = std::round(winding.real());
  if (std::abs(winding.real() - rounded) > 0.25 || std::abs(winding.imag()) > 0.25 || rounded < 0.0) {
    return std::nullopt;
  }
  return static_cast<int>(rounded);
}

std::optional<cplx> newton(const DelayMeasure& mu, cplx z, double tol) {
  for (int it = 0; it < 200; ++it) {
    const cplx f = char_function(mu, z);
    const cplx df = char_function_derivative(mu, z);
    if (df == cplx{}) return std::nullopt;
    const cplx step = f / df;
    z -= step;
    if (!std::isfinite(z.real()) || !std::isfinite(z.imag())) return std::nullopt;
    if (std::abs(step) <= std::max(1e-15 * std::max(1.0, std::abs(z)), 1e-3 * tol)) return z;
  }
  return std::nullopt;
}

}  // namespace

std::optional<int> count_roots(const DelayMeasure& mu, const Rect& box) {
  ContourIntegrator integ(mu);
  return count_with(integ, box);
}

StabilityResult stability_abscissa(const DelayMeasure& mu, double tol, const StabilityOptions& options) {
  if (!(tol > 0.0)) throw_invalid(fmt::format("tolerance must be positive, got {}", tol));
  ContourIntegrator integ(mu);
  const double tv = mu.total_variation();
  const double alpha = mu.alpha();
  const double depth = options.search_depth > 0.0 ? options.search_depth : 10.0 / alpha;
  const double right = 1.1 * tv + 0.1;
  auto height = [&](double s) { return 1.1 * root_modulus_bound(mu, s) + 0.1; };

  StabilityResult result;
  result.search_floor = -depth;

  // Count of zeros with real part > s. The probe is nudged sideways when the contour
  // passes too close to a zero; the point actually used is returned alongside the count.
  auto count_right_of = [&](double s, double nudge) -> std::pair<double, int> {
    for (int attempt = 0; attempt <= options.max_retries; ++attempt) {
      const double sign = (attempt % 2 == 0) ? 1.0 : -1.0;
      const double probe = s + sign * nudge * 0.0137 * attempt;
      if (auto c = count_with(integ, Rect{probe, right, -height(probe), height(probe)})) return {probe, *c};
    }
    throw_numerical(fmt::format("zero count unstable near Re z = {} after {} retries", s, options.max_retries));
  };

  // Walk down from the imaginary axis until a zero is enclosed.
  double hi = right;
  double lo = 0.0;
  double step = 0.125 / alpha;
  for (;;) {
    const double target = std::max(lo, -depth);
    auto [probe, c] = count_right_of(target, step);
    if (c > 0) {
      lo = probe;
      break;
    }
    hi = probe;
    if (target <= -depth) {
      result.below_search_floor = true;
      result.v0 = -depth;
      return result;
    }
    lo = (lo == 0.0) ? -step : 2.0 * lo;
  }

  const double width_stop = std::clamp(tol, 1e-6, 1e-3) * std::max(1.0, tv);
  while (hi - lo > width_stop) {
    auto [probe, c] = count_right_of(0.5 * (lo + hi), hi - lo);
    if (probe <= lo || probe >= hi) break;
    (c > 0 ? lo : hi) = probe;
  }

  // Isolate the zeros of the strip by recursive subdivision, then polish with Newton.
  const double w = hi - lo;
  std::vector<cplx> found;
  struct Pending {
    Rect box;
    int count;
    int depth;
  };
  const Rect strip{lo - w, hi + w, -height(lo - w), height(lo - w)};
  auto strip_count = count_with(integ, strip);
  for (int attempt = 1; !strip_count && attempt <= options.max_retries; ++attempt) {
    Rect b = strip;
    b.re_lo -= 0.0137 * w * attempt;
    strip_count = count_with(integ, b);
  }
  if (!strip_count || *strip_count == 0) throw_numerical(fmt::format("failed to enclose the rightmost zero near Re z = {}", lo));

  std::vector<Pending> stack{{strip, *strip_count, 0}};
  while (!stack.empty()) {
    Pending p = stack.back();
    stack.pop_back();
    const double width = p.box.re_hi - p.box.re_lo;
    const double tall = p.box.im_hi - p.box.im_lo;
    const cplx center{0.5 * (p.box.re_lo + p.box.re_hi), 0.5 * (p.box.im_lo + p.box.im_hi)};
    if (std::max(width, tall) <= 4.0 * w || p.depth > 120) {
      if (auto z = newton(mu, center, tol)) {
        const double slack = 0.25 * std::max(width, tall);
        const bool inside = z->real() >= p.box.re_lo - slack && z->real() <= p.box.re_hi + slack &&
                            z->imag() >= p.box.im_lo - slack && z->imag() <= p.box.im_hi + slack;
        if (inside && (p.count == 1 || std::max(width, tall) < 1e-9 || p.depth > 120)) {
          found.push_back(*z);
          continue;
        }
      }
      if (p.depth > 160) throw_numerical("zero isolation did not converge");
    }
    bool split_ok = false;
    for (int attempt = 0; attempt <= options.max_retries && !split_ok; ++attempt) {
      const double jitter = 0.5 + 0.0173 * (attempt + 1) * ((attempt % 2 == 0) ? 1.0 : -1.0);
      Rect a = p.box;
      Rect b = p.box;
      if (tall >= width) {
        const double cut = p.box.im_lo + jitter * tall;
        a.im_hi = cut;
        b.im_lo = cut;
      } else {
        const double cut = p.box.re_lo + jitter * width;
        a.re_hi = cut;
        b.re_lo = cut;
      }
      auto ca = count_with(integ, a);
      auto cb = count_with(integ, b);
      if (!ca || !cb || *ca + *cb != p.count) continue;
      split_ok = true;
      if (*ca > 0) stack.push_back({a, *ca, p.depth + 1});
      if (*cb > 0) stack.push_back({b, *cb, p.depth + 1});
    }
    if (!split_ok) throw_numerical(fmt::format("zero isolation unstable near {}+{}i", center.real(), center.imag()));
  }

  std::sort(found.begin(), found.end(), [](cplx a, cplx b) {
    return a.real() != b.real() ? a.real() > b.real() : a.imag() > b.imag();
  });
  result.roots = std::move(found);
  result.v0 = result.roots.front().real();
  if (result.v0 < lo - 2.0 * w - tol || result.v0 > hi + tol) {
    throw_numerical(fmt::format("located zero {} inconsistent with the counting bracket [{}, {}]", result.v0, lo, hi));
  }
  return result;
}

std::vector<double> read_density_csv(const std::filesystem::path& file, double alpha) {
  std::ifstream in(file);
  if (!in) throw_io(fmt::format("cannot open density file {}", file.string()));
  std::vector<double> xs, ys;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::replace(line.begin(), line.end(), ',', ' ');
    std::istringstream row(line);
    double s, b;
    if (!(row >> s >> b)) continue;  // header
    xs.push_back(s);
    ys.push_back(b);
  }
  if (xs.size() < 2) throw_config(fmt::format("density file {} needs at least two rows", file.string()));
  for (std::size_t i = 1; i < xs.size(); ++i) {
    if (!(xs[i] > xs[i - 1])) throw_config(fmt::format("density file {}: s must be increasing", file.string()));
  }
  const double tol = 1e-9 * alpha;
  if (xs.front() > -alpha + tol || xs.back() < -tol) {
    throw_config(fmt::format("density file {} must cover [-{}, 0]", file.string(), alpha));
  }
  return resample(xs, ys, -alpha, 0.0, std::max(DelayMeasure::kMinDensityNodes, xs.size()));
}

namespace {

double parse_double(std::string_view text, std::string_view what) {
  while (!text.empty() && text.front() == ' ') text.remove_prefix(1);
  while (!text.empty() && text.back() == ' ') text.remove_suffix(1);
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc{} || ptr != text.data() + text.size()) {
    throw_config(fmt::format("{}: cannot parse '{}' as a number", what, text));
  }
  return v;
}

}  // namespace

DelayMeasure parse_measure(std::string_view text, const std::filesystem::path& base_dir) {
  std::optional<double> alpha;
  std::vector<Atom> atoms;
  std::optional<std::filesystem::path> density_file;
  std::istringstream in{std::string(text)};
  std::string line;
  while (std::getline(in, line)) {
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw_config(fmt::format("measure: expected key=value, got '{}'", line));
    std::string key = line.substr(0, eq);
    std::string value = line.substr(eq + 1);
    key.erase(key.find_last_not_of(" \t") + 1);
    key.erase(0, key.find_first_not_of(" \t"));
    value.erase(value.find_last_not_of(" \t\r") + 1);
    if (key == "alpha") {
      alpha = parse_double(value, "alpha");
    } else if (key == "atom") {
      const auto comma = value.find(',');
      if (comma == std::string::npos) throw_config(fmt::format("atom: expected <u>,<w>, got '{}'", value));
      atoms.push_back({parse_double(std::string_view(value).substr(0, comma), "atom location"),
                       parse_double(std::string_view(value).substr(comma + 1), "atom weight")});
    } else if (key == "density_file") {
      value.erase(0, value.find_first_not_of(" \t"));
      density_file = std::filesystem::path(value);
    } else {
      throw_config(fmt::format("measure: unknown key '{}'", key));
    }
  }
  if (!alpha) throw_config("measure: missing alpha");
  if (!(*alpha > 0.0)) throw_config(fmt::format("measure: alpha must be positive, got {}", *alpha));
  for (const auto& a : atoms) {
    if (!(a.location >= -*alpha && a.location <= 0.0)) {
      throw_config(fmt::format("measure: atom location {} outside [-{}, 0]", a.location, *alpha));
    }
  }
  std::vector<double> density;
  if (density_file) {
    auto path = density_file->is_relative() ? base_dir / *density_file : *density_file;
    density = read_density_csv(path, *alpha);
  }
  return DelayMeasure(*alpha, std::move(atoms), std::move(density));
}

std::string format_measure(const DelayMeasure& mu) {
  std::string out = fmt::format("alpha={}\n", mu.alpha());
  for (const auto& a : mu.atoms()) out += fmt::format("atom={},{}\n", a.location, a.weight);
  return out;
}

}  // namespace sddelab
