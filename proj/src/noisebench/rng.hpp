// Deterministic random source: mt19937_64 plus portable transforms.
// std::distribution objects are avoided on purpose, their output is not
// pinned by the standard and results must reproduce bit-for-bit per seed.
#pragma once

#include <cstdint>
#include <string_view>
#include <vector>
#include <random>

namespace noisebench {

std::uint64_t splitmix64(std::uint64_t x);
std::uint64_t fnv1a64(std::string_view data);

// Stable sub-seed fan-out so stages and channels can be re-run in isolation.
std::uint64_t derive_seed(std::uint64_t base, std::string_view name);
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t counter);

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t u64() { return engine_(); }

  // [0, 1) with 53 random bits
  double uniform01();
  // (0, 1) strictly, for interpolation weights and log() arguments
  double open01();
  double uniform(double lo, double hi);
  double normal();
  double laplace(double scale_b);
  long poisson(double lambda);

  // uniform index in [0, n), rejection sampled, n >= 1
  std::size_t index(std::size_t n);

  template <typename T>
  void shuffle(std::vector<T>& v) {
    if (v.size() < 2) return;
    for (std::size_t i = v.size() - 1; i > 0; --i) {
      std::size_t j = index(i + 1);
      std::swap(v[i], v[j]);
    }
  }

 private:
  std::mt19937_64 engine_;
  double cached_normal_ = 0.0;
  bool has_cached_normal_ = false;
};

}  // namespace noisebench
