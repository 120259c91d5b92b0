#pragma once

#include "sddelab/config.hpp"
#include "sddelab/error.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace sddelab {

inline constexpr int kExitOk = 0;
inline constexpr int kExitIo = 1;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitNumerical = 3;

int exit_code_for(ErrorKind kind);

/// stability, fundamental, simulate, verify, stationary, covariance, spectrum, powerlaw,
/// nonunique, feller-demo
const std::vector<std::string>& experiment_commands();

struct RunRequest {
  std::string command;
  Config config;
  /// Override the config's `seed` / `threads`.
  std::optional<std::uint64_t> seed;
  std::optional<int> threads;
  std::filesystem::path out_dir = ".";
};

struct RunOutcome {
  int status = kExitOk;
  /// `key=value` lines describing the headline results.
  std::string summary;
  std::string error;
  std::vector<std::filesystem::path> files;
};

/// Validates the config for `command`, runs it, and writes CSV files plus manifest.txt into
/// out_dir. Never throws; failures are reported through status and error.
RunOutcome run_experiment(const RunRequest& request);

/// Manifest text: the config echo with command and seed, loadable by Config::parse.
std::string manifest_text(const std::string& command, const Config& config, std::uint64_t seed, int threads);

}  // namespace sddelab
