#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace pricelab {

// Seeded deterministic stream. Substreams derived from the same seed with
// distinct stream ids are statistically independent; used to split one
// experiment seed across replications.
class RngStream {
 public:
  explicit RngStream(uint64_t seed, uint64_t stream = 0) {
    std::seed_seq seq{static_cast<uint32_t>(seed),
                      static_cast<uint32_t>(seed >> 32),
                      static_cast<uint32_t>(stream),
                      static_cast<uint32_t>(stream >> 32)};
    gen_.seed(seq);
  }

  uint64_t next_u64() { return gen_(); }

  // Uniform in [0, 1).
  double uniform() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

  // Standard normal, Box-Muller. Consumes two uniforms per call.
  double normal() {
    constexpr double kTwoPi = 6.283185307179586476925287;
    const double u1 = (static_cast<double>(gen_() >> 11) + 1.0) * 0x1.0p-53;
    const double u2 = static_cast<double>(gen_() >> 11) * 0x1.0p-53;
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(kTwoPi * u2);
  }

 private:
  std::mt19937_64 gen_;
};

}  // namespace pricelab
