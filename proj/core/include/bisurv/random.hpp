#pragma once

#include <cstdint>
#include <random>

namespace bisurv {

// mt19937_64 with explicitly specified draws so the same seed yields the same
// stream on every platform (std distributions are implementation-defined).
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  // Uniform on the open interval (0, 1).
  double uniform() { return (static_cast<double>(engine_() >> 11) + 0.5) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  int bernoulli(double p) { return uniform() < p ? 1 : 0; }

  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
};

// SplitMix64 finalizer, used to derive independent stream seeds.
inline std::uint64_t mix_seed(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::uint64_t stream_seed(std::uint64_t base, std::uint64_t stream) {
  return mix_seed(mix_seed(base) ^ mix_seed(stream + 0x632be59bd9b4e019ULL));
}

}  // namespace bisurv
