#include "sddelab/config.hpp"

#include "sddelab/error.hpp"
#include "sddelab/random.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fmt/format.h>
#include <fstream>
#include <sstream>

namespace sddelab {

namespace {

const std::vector<std::string> kKeys = {
    "command", "seed", "threads", "T", "h",
    // problem
    "mu.alpha", "mu.atoms", "mu.density", "mu.density_file",
    "F.kind", "F.m", "F.f", "F.f.slope", "F.f.intercept", "F.f.lo", "F.f.hi", "F.f.scale", "F.f.gain", "F.f.offset",
    "F.lags", "F.weights", "F.kernel", "F.kernel_file", "F.span", "F.window", "F.alpha",
    "levy.b", "levy.sigma2", "levy.drift_form", "levy.jump.family", "levy.jump.lambda", "levy.jump.size",
    "levy.jump.mean", "levy.jump.mean_up", "levy.jump.mean_down", "levy.jump.p_up", "levy.jump.x_min",
    "levy.jump.tail_index",
    "phi.kind", "phi.value", "phi.from", "phi.intercept", "phi.slope", "phi.a", "phi.sigma",
    // commands
    "stability.tol", "stability.depth",
    "fundamental.T",
    "simulate.replicates", "simulate.method",
    "verify.h_list", "verify.coupling.replicates", "verify.coupling.t", "verify.coupling.offset",
    "kb.burn_in", "kb.horizon", "kb.spacing", "kb.replicates", "kb.write_samples",
    "tightness.checkpoints", "tightness.K", "tightness.replicates",
    "covariance.lags",
    "spectrum.segment", "spectrum.smooth", "spectrum.xi_max", "spectrum.dxi", "spectrum.lags",
    "powerlaw.window_hi",
    "nonunique.sigmas", "nonunique.a", "nonunique.alpha", "nonunique.T", "nonunique.h", "nonunique.replicates",
    "nonunique.spacing",
    "feller.beta", "feller.n",
};

const std::vector<std::string> kPathKeys = {"mu.density_file", "F.kernel_file"};

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

[[noreturn]] void bad_value(std::string_view key, std::string_view value, std::string_view expected) {
  throw_config(fmt::format("config key '{}': expected {}, got '{}'", key, expected, value));
}

double to_double(std::string_view key, std::string_view value) {
  const auto v = trim(value);
  double out = 0.0;
  auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size() || v.empty()) bad_value(key, value, "a number");
  return out;
}

std::vector<std::string_view> split_list(std::string_view s) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && (s[i] == ',' || std::isspace(static_cast<unsigned char>(s[i])))) ++i;
    std::size_t j = i;
    while (j < s.size() && s[j] != ',' && !std::isspace(static_cast<unsigned char>(s[j]))) ++j;
    if (j > i) out.push_back(s.substr(i, j - i));
    i = j;
  }
  return out;
}

}  // namespace

const std::vector<std::string>& known_keys() { return kKeys; }

bool is_known_key(std::string_view key) { return std::find(kKeys.begin(), kKeys.end(), key) != kKeys.end(); }

Config Config::parse(std::string_view text, const std::filesystem::path& base_dir) {
  Config c;
  c.base_dir_ = base_dir;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const auto eol = std::min(text.find('\n', pos), text.size());
    std::string_view line = text.substr(pos, eol - pos);
    pos = eol + 1;
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) throw_config(fmt::format("config line {}: expected key = value", line_no));
    const auto key = std::string(trim(line.substr(0, eq)));
    const auto value = std::string(trim(line.substr(eq + 1)));
    if (!is_known_key(key)) throw_config(fmt::format("config line {}: unknown key '{}'", line_no, key));
    if (c.has(key)) throw_config(fmt::format("config line {}: duplicate key '{}'", line_no, key));
    c.entries_.emplace_back(key, value);
    if (eol == text.size()) break;
  }
  return c;
}

Config Config::load(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw_io(fmt::format("cannot open config file {}", file.string()));
  std::stringstream ss;
  ss << in.rdbuf();
  return parse(ss.str(), std::filesystem::absolute(file).parent_path());
}

const std::string* Config::find(std::string_view key) const {
  for (const auto& [k, v] : entries_) {
    if (k == key) return &v;
  }
  return nullptr;
}

bool Config::has(std::string_view key) const { return find(key) != nullptr; }

void Config::set(const std::string& key, const std::string& value) {
  if (!is_known_key(key)) throw_config(fmt::format("unknown key '{}'", key));
  for (auto& [k, v] : entries_) {
    if (k == key) {
      v = value;
      return;
    }
  }
  entries_.emplace_back(key, value);
}

void Config::erase(std::string_view key) {
  std::erase_if(entries_, [&](const auto& e) { return e.first == key; });
}

std::string Config::text(std::string_view key, std::string_view fallback) const {
  const auto* v = find(key);
  return v ? *v : std::string(fallback);
}

double Config::number(std::string_view key) const {
  const auto* v = find(key);
  if (!v) throw_config(fmt::format("config key '{}' is required", key));
  return to_double(key, *v);
}

double Config::number(std::string_view key, double fallback) const {
  const auto* v = find(key);
  return v ? to_double(key, *v) : fallback;
}

std::uint64_t Config::integer(std::string_view key, std::uint64_t fallback) const {
  const auto* v = find(key);
  if (!v) return fallback;
  const auto s = trim(*v);
  std::uint64_t out = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  if (ec != std::errc() || ptr != s.data() + s.size() || s.empty()) bad_value(key, *v, "a nonnegative integer");
  return out;
}

bool Config::flag(std::string_view key, bool fallback) const {
  const auto* v = find(key);
  if (!v) return fallback;
  if (*v == "true" || *v == "1" || *v == "yes") return true;
  if (*v == "false" || *v == "0" || *v == "no") return false;
  bad_value(key, *v, "true or false");
}

std::vector<double> Config::numbers(std::string_view key, std::vector<double> fallback) const {
  const auto* v = find(key);
  if (!v) return fallback;
  std::vector<double> out;
  for (auto item : split_list(*v)) out.push_back(to_double(key, item));
  if (out.empty()) bad_value(key, *v, "a non-empty list of numbers");
  return out;
}

std::optional<std::filesystem::path> Config::path(std::string_view key) const {
  const auto* v = find(key);
  if (!v) return std::nullopt;
  std::filesystem::path p(*v);
  if (p.is_relative() && !base_dir_.empty()) p = base_dir_ / p;
  return p;
}

std::string Config::format() const {
  std::string out;
  for (const auto& [k, v] : entries_) {
    if (std::find(kPathKeys.begin(), kPathKeys.end(), k) != kPathKeys.end()) {
      out += fmt::format("{} = {}\n", k, std::filesystem::absolute(*path(k)).lexically_normal().string());
    } else {
      out += fmt::format("{} = {}\n", k, v);
    }
  }
  return out;
}

DelayMeasure build_measure(const Config& c) {
  const double alpha = c.number("mu.alpha");
  if (!(alpha > 0.0)) throw_config(fmt::format("config key 'mu.alpha': must be positive, got {}", alpha));
  std::vector<Atom> atoms;
  if (c.has("mu.atoms")) {
    const auto raw = c.text("mu.atoms", "");
    for (auto item : split_list(raw)) {
      const auto colon = item.find(':');
      if (colon == std::string_view::npos) bad_value("mu.atoms", item, "location:weight pairs");
      atoms.push_back({to_double("mu.atoms", item.substr(0, colon)), to_double("mu.atoms", item.substr(colon + 1))});
    }
  }
  std::vector<double> density;
  if (c.has("mu.density") && c.has("mu.density_file")) {
    throw_config("config keys 'mu.density' and 'mu.density_file' are mutually exclusive");
  }
  if (c.has("mu.density")) density = c.numbers("mu.density", {});
  if (auto file = c.path("mu.density_file")) density = read_density_csv(*file, alpha);
  try {
    return DelayMeasure(alpha, std::move(atoms), std::move(density));
  } catch (const Error& e) {
    throw_config(fmt::format("delay measure (mu.*): {}", e.what()));
  }
}

namespace {

InnerMap build_inner(const Config& c) {
  const auto name = c.text("F.f", "identity");
  if (name == "identity") return InnerMap::identity();
  if (name == "affine") return InnerMap::affine(c.number("F.f.slope", 1.0), c.number("F.f.intercept", 0.0));
  if (name == "clamp") return InnerMap::clamp(c.number("F.f.lo"), c.number("F.f.hi"));
  if (name == "sqrt_clamp") return InnerMap::sqrt_clamp(c.number("F.f.lo"), c.number("F.f.hi"));
  if (name == "tanh_scaled") {
    return InnerMap::tanh_scaled(c.number("F.f.scale", 1.0), c.number("F.f.gain", 1.0), c.number("F.f.offset", 0.0));
  }
  bad_value("F.f", name, "identity, affine, clamp, sqrt_clamp or tanh_scaled");
}

}  // namespace

DiffusionFunctional build_functional(const Config& c, double alpha) {
  const auto kind = c.text("F.kind", "constant");
  try {
    if (kind == "constant") return DiffusionFunctional::constant(c.number("F.m", 1.0));
    if (kind == "no_delay") return DiffusionFunctional::no_delay(build_inner(c));
    if (kind == "point_delay") {
      auto lags = c.numbers("F.lags", {});
      if (lags.empty()) throw_config("config key 'F.lags' is required for F.kind = point_delay");
      auto weights = c.numbers("F.weights", std::vector<double>(lags.size(), 1.0));
      return DiffusionFunctional::point_delay(build_inner(c), std::move(lags), std::move(weights));
    }
    if (kind == "distributed") {
      const double span = c.number("F.span", alpha);
      std::vector<double> kernel;
      if (auto file = c.path("F.kernel_file")) {
        kernel = read_density_csv(*file, span);
      } else {
        kernel = c.numbers("F.kernel", {});
      }
      if (kernel.empty()) throw_config("F.kind = distributed needs 'F.kernel' or 'F.kernel_file'");
      return DiffusionFunctional::distributed(build_inner(c), std::move(kernel), span);
    }
    if (kind == "running_sup") return DiffusionFunctional::running_sup(build_inner(c), c.number("F.window", alpha));
    if (kind == "clamped_qv") return DiffusionFunctional::clamped_qv(c.number("F.alpha", alpha));
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::InvalidArgument) throw_config(fmt::format("functional (F.*): {}", e.what()));
    throw;
  }
  bad_value("F.kind", kind, "constant, no_delay, point_delay, distributed, running_sup or clamped_qv");
}

LevyTriplet build_levy(const Config& c) {
  const double b = c.number("levy.b", 0.0);
  const double sigma2 = c.number("levy.sigma2", 0.0);
  std::optional<JumpSpec> jump;
  const auto family = c.text("levy.jump.family", "none");
  if (family != "none") {
    JumpFamily f;
    try {
      f = parse_family(family);
    } catch (const Error&) {
      bad_value("levy.jump.family", family, "none, constant, exponential, two_sided, pareto or log_heavy");
    }
    const double lambda = c.number("levy.jump.lambda");
    switch (f) {
      case JumpFamily::Constant: jump = JumpSpec::constant(lambda, c.number("levy.jump.size", 1.0)); break;
      case JumpFamily::Exponential: jump = JumpSpec::exponential(lambda, c.number("levy.jump.mean", 1.0)); break;
      case JumpFamily::TwoSidedExponential:
        jump = JumpSpec::two_sided(lambda, c.number("levy.jump.mean_up", 1.0), c.number("levy.jump.mean_down", 1.0),
                                   c.number("levy.jump.p_up", 0.5));
        break;
      case JumpFamily::Pareto:
        jump = JumpSpec::pareto(lambda, c.number("levy.jump.x_min", 1.0), c.number("levy.jump.tail_index", 3.0));
        break;
      case JumpFamily::LogHeavy: jump = JumpSpec::log_heavy(lambda); break;
    }
  }
  const auto form = c.text("levy.drift_form", "triplet");
  LevyTriplet t;
  if (form == "triplet") {
    t = LevyTriplet{b, sigma2, jump};
  } else if (form == "pathwise") {
    t = LevyTriplet::from_pathwise(b, sigma2, jump);
  } else {
    bad_value("levy.drift_form", form, "triplet or pathwise");
  }
  try {
    t.validate();
  } catch (const Error& e) {
    throw_config(fmt::format("driving process (levy.*): {}", e.what()));
  }
  return t;
}

SddeProblem build_problem(const Config& c, std::uint64_t seed) {
  SddeProblem p;
  p.mu = build_measure(c);
  const double alpha = p.mu.alpha();
  p.F = build_functional(c, alpha);
  p.levy = build_levy(c);
  p.h = c.number("h");
  p.T = c.number("T", 0.0);
  if (!(p.h > 0.0)) throw_config(fmt::format("config key 'h': must be positive, got {}", p.h));

  const auto kind = c.text("phi.kind", "constant");
  try {
    if (kind == "constant") {
      p.phi = constant_segment(alpha, p.h, c.number("phi.value", 0.0));
    } else if (kind == "indicator") {
      p.phi = indicator_segment(alpha, p.h, c.number("phi.from"));
    } else if (kind == "linear") {
      p.phi = linear_segment(alpha, p.h, c.number("phi.intercept", 0.0), c.number("phi.slope", 0.0));
    } else if (kind == "stationary_ou") {
      double a = 0.0;
      if (!c.has("phi.a") && !scalar_decay(p.mu, &a)) {
        throw_config("phi.kind = stationary_ou needs 'phi.a' unless mu = -a delta_0");
      }
      a = c.number("phi.a", a);
      Rng rng(derive_seed(seed, 0x9e11));
      p.phi = stationary_ou_segment(alpha, p.h, a, c.number("phi.sigma", std::sqrt(p.levy.sigma2)), rng);
    } else {
      bad_value("phi.kind", kind, "constant, indicator, linear or stationary_ou");
    }
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::InvalidArgument) throw_config(fmt::format("initial segment (phi.*): {}", e.what()));
    throw;
  }
  return p;
}

}  // namespace sddelab
