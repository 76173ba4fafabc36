#include "hcpack/random.hpp"

#include <algorithm>
#include <stdexcept>

namespace hcp {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t fnv1a64(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::uint64_t Rng::below(std::uint64_t n) {
  if (n == 0) throw std::invalid_argument("Rng::below(0)");
  // Rejection on the top of the range keeps the draw unbiased.
  const std::uint64_t limit = UINT64_MAX - (UINT64_MAX % n);
  std::uint64_t x;
  do {
    x = next();
  } while (x >= limit);
  return x % n;
}

long Rng::between(long lo, long hi) {
  if (hi < lo) throw std::invalid_argument("Rng::between: empty range");
  return lo + static_cast<long>(below(static_cast<std::uint64_t>(hi - lo) + 1));
}

double Rng::unit() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

std::vector<int> Rng::subset(int n, int r) {
  if (r < 0 || r > n) throw std::invalid_argument("Rng::subset: bad size");
  // Partial Fisher-Yates.
  std::vector<int> pool(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) pool[static_cast<std::size_t>(i)] = i;
  for (int i = 0; i < r; ++i) {
    auto j = static_cast<std::size_t>(i) + below(static_cast<std::uint64_t>(n - i));
    std::swap(pool[static_cast<std::size_t>(i)], pool[j]);
  }
  pool.resize(static_cast<std::size_t>(r));
  std::sort(pool.begin(), pool.end());
  return pool;
}

SeedStream SeedStream::sub(std::string_view name) const {
  return SeedStream(splitmix64(seed_ ^ fnv1a64(name)), name_ + "/" + std::string(name));
}

SeedStream SeedStream::sub(std::uint64_t index) const {
  return SeedStream(splitmix64(seed_ + 0x632be59bd9b4e019ULL * (index + 1)),
                    name_ + "/" + std::to_string(index));
}

}  // namespace hcp
