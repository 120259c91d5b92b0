#pragma once

#include <cstdint>
#include <random>

namespace sddelab {

/// Per-stream seed derived from (master, stream) by splitmix64 mixing. Replicate i of a
/// farm always uses derive_seed(master, i), so results never depend on scheduling.
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream);

/// mt19937_64 with hand-rolled transforms, so sample sequences are identical across
/// standard library implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  /// Uniform on the open interval (0, 1).
  double uniform();
  double normal();
  /// Exponential with unit mean.
  double exponential();

 private:
  std::mt19937_64 engine_;
  double cached_normal_ = 0.0;
  bool has_cached_ = false;
};

}  // namespace sddelab
