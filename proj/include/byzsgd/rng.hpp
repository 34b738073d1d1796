// Deterministic random streams. All randomness flows through SplitMix64 so
// runs are bit-identical across standard libraries and thread counts. Streams
// are derived from one master seed by mixing a purpose tag and up to two
// indices (worker, round); distinct tags give independent streams.
#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

namespace byzsgd {

enum class StreamTag : std::uint64_t {
  kData = 0x6461746167656eULL,       // dataset generation
  kWorker = 0x776f726b6572ULL,       // per-worker minibatch sampling
  kAdversary = 0x616476657273ULL,    // corrupt-set choice
  kAttackNoise = 0x61747461636bULL,  // attack randomness (gaussian kind)
  kMaster = 0x6d6173746572ULL,       // master-side coordinate draws
  kReplicate = 0x7265706c6963ULL,    // per-replicate sub-seeds
  kProbe = 0x70726f626573ULL,        // probe points for constant measurement
};

inline std::uint64_t splitmix64_next(std::uint64_t& state) {
  state += 0x9e3779b97f4a7c15ULL;
  std::uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// stream(seed, tag, a, b): fold (seed, tag, a, b) through a splitmix64 chain.
inline std::uint64_t mix_seed(std::uint64_t seed, StreamTag tag, std::uint64_t a = 0,
                              std::uint64_t b = 0) {
  std::uint64_t s = seed;
  std::uint64_t h = splitmix64_next(s);
  s ^= static_cast<std::uint64_t>(tag) * 0xd1342543de82ef95ULL + 0x2545f4914f6cdd1dULL;
  h ^= splitmix64_next(s);
  s ^= (a + 1) * 0xaf251af3b0f025b5ULL;
  h ^= splitmix64_next(s);
  s ^= (b + 1) * 0x9e3779b97f4a7c15ULL;
  h ^= splitmix64_next(s);
  return h;
}

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  static Rng stream(std::uint64_t seed, StreamTag tag, std::uint64_t a = 0,
                    std::uint64_t b = 0) {
    return Rng(mix_seed(seed, tag, a, b));
  }

  std::uint64_t next_u64() { return splitmix64_next(state_); }

  // uniform in [0, 1)
  double uniform01() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  // unbiased uniform integer in [0, n)
  std::uint64_t uniform_below(std::uint64_t n) {
    const std::uint64_t threshold = (0 - n) % n;
    for (;;) {
      const std::uint64_t r = next_u64();
      if (r >= threshold) return r % n;
    }
  }

  // standard normal (Box-Muller; one draw per call)
  double normal() {
    double u1 = uniform01();
    while (u1 <= 0.0) u1 = uniform01();
    const double u2 = uniform01();
    return std::sqrt(-2.0 * std::log(u1)) *
           std::cos(6.28318530717958647692528676655900577 * u2);
  }

  std::vector<double> normal_vec(std::size_t d) {
    std::vector<double> v(d);
    for (double& x : v) x = normal();
    return v;
  }

  // Partial Fisher-Yates: k distinct indices drawn uniformly from [0, n).
  std::vector<std::size_t> sample_without_replacement(std::size_t n, std::size_t k) {
    std::vector<std::size_t> idx(n);
    for (std::size_t i = 0; i < n; ++i) idx[i] = i;
    for (std::size_t i = 0; i < k; ++i) {
      const std::size_t j = i + static_cast<std::size_t>(uniform_below(n - i));
      std::swap(idx[i], idx[j]);
    }
    idx.resize(k);
    return idx;
  }

 private:
  std::uint64_t state_;
};

}  // namespace byzsgd
