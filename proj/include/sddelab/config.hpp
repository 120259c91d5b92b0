#pragma once

#include "sddelab/solver.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace sddelab {

/// Flat key=value configuration with dotted section names.
///
///   # comment
///   mu.alpha = 1
///   mu.atoms = -1:-1.5, 0:-0.25     # location:weight pairs
///   F.kind   = constant
///
/// Keys may appear once; unknown keys are rejected at parse time. Values are trimmed;
/// lists are separated by commas or whitespace. Relative file paths resolve against the
/// directory of the config file.
class Config {
 public:
  static Config parse(std::string_view text, const std::filesystem::path& base_dir = {});
  static Config load(const std::filesystem::path& file);

  bool has(std::string_view key) const;
  void set(const std::string& key, const std::string& value);
  void erase(std::string_view key);
  const std::vector<std::pair<std::string, std::string>>& entries() const { return entries_; }
  const std::filesystem::path& base_dir() const { return base_dir_; }

  std::string text(std::string_view key, std::string_view fallback) const;
  double number(std::string_view key) const;
  double number(std::string_view key, double fallback) const;
  std::uint64_t integer(std::string_view key, std::uint64_t fallback) const;
  bool flag(std::string_view key, bool fallback) const;
  std::vector<double> numbers(std::string_view key, std::vector<double> fallback) const;
  std::optional<std::filesystem::path> path(std::string_view key) const;

  /// One `key = value` line per entry; file-valued keys are written as absolute paths so
  /// the output reloads from any directory.
  std::string format() const;

 private:
  const std::string* find(std::string_view key) const;

  std::vector<std::pair<std::string, std::string>> entries_;
  std::filesystem::path base_dir_;
};

bool is_known_key(std::string_view key);
const std::vector<std::string>& known_keys();

/// Problem block: mu.*, F.*, levy.*, phi.*, T, h. `seed` feeds random initial segments.
SddeProblem build_problem(const Config& c, std::uint64_t seed);
DelayMeasure build_measure(const Config& c);
DiffusionFunctional build_functional(const Config& c, double alpha);
LevyTriplet build_levy(const Config& c);

}  // namespace sddelab
