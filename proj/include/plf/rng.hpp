#pragma once

#include <array>
#include <cstdint>
#include <initializer_list>
#include <vector>

namespace plf {

// Deterministic random source. The generator is xoshiro256++ seeded through
// splitmix64, with uniform/gaussian draws implemented here rather than taken
// from <random> so that a seed reproduces the same stream on any platform.
// Gaussian variates use Box-Muller; their bit pattern follows the platform's
// libm for log/cos, everything else is integer-exact.
class Rng {
 public:
  explicit Rng(uint64_t seed);

  // Independent stream addressed by (seed, words...). Used to give each
  // (purpose, iteration, epoch, ...) coordinate its own generator so that
  // runs can be resumed or parallelized without serializing engine state.
  static Rng derive(uint64_t seed, std::initializer_list<uint64_t> words);

  uint64_t next_u64();
  double uniform01();                   // [0, 1), 53-bit resolution
  uint64_t uniform_below(uint64_t n);   // unbiased draw from [0, n)
  double gaussian();                    // standard normal

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (size_t i = v.size(); i > 1; --i) {
      size_t j = static_cast<size_t>(uniform_below(i));
      std::swap(v[i - 1], v[j]);
    }
  }

 private:
  std::array<uint64_t, 4> s_{};
  double spare_ = 0.0;
  bool has_spare_ = false;
};

// Stream labels for Rng::derive. Values are part of the reproducibility
// contract: changing them changes every seeded run.
enum class Stream : uint64_t {
  synth_centers = 1,
  synth_latent = 2,
  synth_backbone = 3,
  proxies = 16,
  batches = 17,
  test_instances = 32,
};

inline uint64_t stream_id(Stream s) { return static_cast<uint64_t>(s); }

}  // namespace plf
