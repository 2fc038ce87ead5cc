#pragma once

#include <cstdint>
#include <string_view>

namespace ddpgpp {

// Counter-based generator (splitmix64). Streams are derived from a root seed
// plus a component name and index, so adding draws to one component never
// shifts the sequence seen by another.
class Rng {
 public:
  explicit Rng(uint64_t seed) : state_(seed) {}

  static Rng stream(uint64_t root_seed, std::string_view name, uint64_t index = 0);

  uint64_t next_u64();

  // Uniform in [0, 1).
  double uniform();
  // Uniform in [lo, hi).
  double uniform(double lo, double hi);
  // Uniform over {0, ..., n-1}; n must be positive.
  int64_t uniform_int(int64_t n);
  // Standard Gaussian (Box-Muller, cosine branch).
  double normal();

 private:
  uint64_t state_;
};

}  // namespace ddpgpp
