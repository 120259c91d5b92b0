#pragma once

#include "sddelab/grid.hpp"

#include <complex>
#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace sddelab {

struct Atom {
  double location = 0.0;  // in [-alpha, 0]
  double weight = 0.0;
  bool operator==(const Atom&) const = default;
};

/// Signed finite measure on [-alpha, 0]: point atoms plus an optional density stored on
/// its own uniform grid (at least kMinDensityNodes nodes, trapezoid quadrature).
class DelayMeasure {
 public:
  static constexpr std::size_t kMinDensityNodes = 64;

  explicit DelayMeasure(double alpha);
  DelayMeasure(double alpha, std::vector<Atom> atoms, std::vector<double> density = {});

  /// weight * delta_{location}
  static DelayMeasure point(double alpha, double location, double weight);

  DelayMeasure& add_atom(double location, double weight);
  /// Uniform samples of b on [-alpha, 0]; fewer than kMinDensityNodes are resampled linearly.
  DelayMeasure& set_density(std::vector<double> samples);

  double alpha() const { return alpha_; }
  std::span<const Atom> atoms() const { return atoms_; }
  std::span<const double> density() const { return density_; }
  bool has_density() const { return !density_.empty(); }
  double density_step() const;
  /// b(s) by linear interpolation of the stored samples (0 without density).
  double density_at(double s) const;

  double total_variation() const;
  /// mu([-alpha, 0])
  double total_mass() const;

  /// Atoms together with the trapezoid nodes of the density part: the finite sum that
  /// characteristic-function evaluations run over.
  std::span<const Atom> spectral_atoms() const { return spectral_; }

  bool operator==(const DelayMeasure& other) const;

 private:
  void rebuild();

  double alpha_;
  std::vector<Atom> atoms_;
  std::vector<double> density_;
  std::vector<Atom> spectral_;
};

/// Linear functional phi -> sum_j weight_j * phi(-alpha + index_j * h) realising the drift
/// integral on a grid with step h. Off-grid atoms are split between the neighbouring nodes.
struct DiscreteKernel {
  std::size_t steps = 0;  // window has steps + 1 nodes
  std::vector<std::pair<std::size_t, double>> taps;

  double apply(const double* window_start) const {
    double acc = 0.0;
    for (const auto& [j, w] : taps) acc += w * window_start[j];
    return acc;
  }
};

DiscreteKernel discretize(const DelayMeasure& mu, double h);

/// Drift integral of the segment against mu.
double apply(const DelayMeasure& mu, const Segment& seg);

/// z - int e^{z u} mu(du)
std::complex<double> char_function(const DelayMeasure& mu, std::complex<double> z);
std::complex<double> char_function_derivative(const DelayMeasure& mu, std::complex<double> z);

struct Rect {
  double re_lo = 0.0;
  double re_hi = 0.0;
  double im_lo = 0.0;
  double im_hi = 0.0;
};

/// Zero count of the characteristic function inside `box` by the argument principle
/// (adaptive Simpson on chi'/chi). Empty when the winding number does not round cleanly
/// (a zero too close to the contour).
std::optional<int> count_roots(const DelayMeasure& mu, const Rect& box);

/// Upper bound on |lambda| for zeros with real part >= re.
double root_modulus_bound(const DelayMeasure& mu, double re);

struct StabilityOptions {
  /// Depth R of the search below the imaginary axis; 0 selects 10 / alpha.
  double search_depth = 0.0;
  int max_retries = 8;
};

struct StabilityResult {
  double v0 = 0.0;
  /// No zero with real part >= -search_depth exists; v0 is then only known to be below it.
  bool below_search_floor = false;
  double search_floor = 0.0;
  /// Zeros located by the final isolation step, ordered by decreasing real part.
  std::vector<std::complex<double>> roots;
};

/// Largest real part of a zero of the characteristic function (the stability abscissa).
/// Throws ErrorKind::Numerical if counting stays unstable after the jitter retries.
StabilityResult stability_abscissa(const DelayMeasure& mu, double tol, const StabilityOptions& options = {});

/// Parses `alpha=<f>`, repeated `atom=<u>,<w>`, optional `density_file=<path>` lines.
/// Relative density paths resolve against `base_dir`.
DelayMeasure parse_measure(std::string_view text, const std::filesystem::path& base_dir = {});
std::string format_measure(const DelayMeasure& mu);

/// Two-column CSV (s, b(s)) resampled onto a uniform grid over [-alpha, 0].
std::vector<double> read_density_csv(const std::filesystem::path& file, double alpha);

}  // namespace sddelab
