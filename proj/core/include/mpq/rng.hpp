#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace mpq {

// Deterministic random source. mt19937_64 is fully specified by the
// standard and every transform below is coded explicitly, so a given seed
// produces the same stream regardless of the standard library's own
// distribution implementations.
class Rng {
 public:
  explicit Rng(uint64_t seed) : engine_(seed) {}

  uint64_t next_u64() { return engine_(); }

  // Uniform in [0, 1) with 53 random bits.
  double uniform01() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  // Uniform integer in [0, n).
  int64_t uniform_int(int64_t n);

  // Standard normal via Box-Muller with a cached spare.
  double normal();
  double normal(double mean, double stddev) { return mean + stddev * normal(); }

 private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

// Derives an independent stream seed for a named substream.
uint64_t mix_seed(uint64_t seed, std::string_view tag);

}  // namespace mpq
