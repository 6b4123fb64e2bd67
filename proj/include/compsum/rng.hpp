#pragma once

#include <cstdint>
#include <random>
#include <stdexcept>
#include <vector>

namespace compsum {

// Deterministic random stream. All randomness in the library goes through
// this wrapper so a fixed seed reproduces byte-identical artifacts: the
// engine is mt19937_64 (bit-exact by the standard) and the double/int
// conversions below are ours, not the implementation-defined std
// distributions.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  // uniform in [0, 1)
  double uniform() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  // uniform in [lo, hi)
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // uniform integer in [0, n); n must be positive
  std::size_t uniform_index(std::size_t n) {
    if (n == 0) throw std::invalid_argument("uniform_index: n must be positive");
    return static_cast<std::size_t>(engine_() % n);
  }

  // index drawn from a normalized probability vector
  std::size_t categorical(const std::vector<double>& probs) {
    const double u = uniform();
    double acc = 0.0;
    for (std::size_t i = 0; i < probs.size(); ++i) {
      acc += probs[i];
      if (u < acc) return i;
    }
    return probs.empty() ? 0 : probs.size() - 1;
  }

  // independent child stream; used to give each episode its own seed so
  // results do not depend on scheduling
  Rng split(std::uint64_t stream_id) {
    return Rng(mix(engine_() ^ stream_id));
  }

  static std::uint64_t mix(std::uint64_t x) {
    // splitmix64 finalizer
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace compsum
