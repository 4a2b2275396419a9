#include "noisebench/rng.hpp"

#include <cmath>
#include <limits>

#include "noisebench/errors.hpp"

namespace noisebench {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

std::uint64_t fnv1a64(std::string_view data) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : data) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

std::uint64_t derive_seed(std::uint64_t base, std::string_view name) {
  return splitmix64(splitmix64(base) ^ fnv1a64(name));
}

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t counter) {
  return splitmix64(splitmix64(base) ^ splitmix64(counter + 0x9e3779b97f4a7c15ull));
}

double Rng::uniform01() {
  return static_cast<double>(u64() >> 11) * 0x1.0p-53;
}

double Rng::open01() {
  return (static_cast<double>(u64() >> 12) + 0.5) * 0x1.0p-52;
}

double Rng::uniform(double lo, double hi) {
  return lo + (hi - lo) * uniform01();
}

double Rng::normal() {
  if (has_cached_normal_) {
    has_cached_normal_ = false;
    return cached_normal_;
  }
  // Box-Muller; u1 in (0, 1] keeps log finite
  double u1 = (static_cast<double>(u64() >> 11) + 1.0) * 0x1.0p-53;
  double u2 = uniform01();
  double radius = std::sqrt(-2.0 * std::log(u1));
  double angle = 2.0 * 3.141592653589793238462643383279502884 * u2;
  cached_normal_ = radius * std::sin(angle);
  has_cached_normal_ = true;
  return radius * std::cos(angle);
}

double Rng::laplace(double scale_b) {
  double u = uniform01() - 0.5;
  double a = 1.0 - 2.0 * std::abs(u);
  if (a <= 0.0) a = std::numeric_limits<double>::min();
  double mag = -scale_b * std::log(a);
  return u < 0.0 ? -mag : mag;
}

long Rng::poisson(double lambda) {
  if (!(lambda > 0.0)) raise(ErrorCode::Config, "poisson lambda must be > 0");
  double limit = std::exp(-lambda);
  long k = 0;
  double p = 1.0;
  do {
    ++k;
    p *= uniform01();
  } while (p > limit);
  return k - 1;
}

std::size_t Rng::index(std::size_t n) {
  if (n == 0) raise(ErrorCode::Internal, "Rng::index on empty range");
  std::uint64_t span = n;
  std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() - (std::numeric_limits<std::uint64_t>::max() % span + 1) % span;
  std::uint64_t v = u64();
  while (v > limit) v = u64();
  return static_cast<std::size_t>(v % span);
}

}  // namespace noisebench
