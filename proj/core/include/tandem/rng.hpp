#ifndef TANDEM_RNG_HPP_
#define TANDEM_RNG_HPP_

#include <cstdint>
#include <string>
#include <string_view>

namespace tandem {

// Counter-free deterministic generator (xoshiro256++ seeded via splitmix64).
// Distributions are implemented here rather than with <random> so that
// sampled sequences are identical across standard libraries.
class Rng {
 public:
  Rng() : Rng(0) {}
  explicit Rng(uint64_t seed);

  uint64_t next_u64();
  // uniform in [0, 1)
  double uniform();
  double uniform(double lo, double hi);
  // standard normal via Box-Muller (no cached spare, for replayability)
  double normal();
  double normal(double mean, double stddev) { return mean + stddev * normal(); }
  // uniform integer in [0, n)
  uint64_t below(uint64_t n);

 private:
  uint64_t s_[4];
};

// Derives a child seed from a root seed and a stream name, so subsystems
// (datagen, policy-init, rollout:i, eval, ...) draw from independent streams.
uint64_t derive_seed(uint64_t root, std::string_view stream);

}  // namespace tandem

#endif  // TANDEM_RNG_HPP_
