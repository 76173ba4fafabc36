#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <string_view>
#include <vector>

namespace hcp {

/// Name recorded in artifacts for the generator below.
inline constexpr std::string_view kRngName = "mt19937_64+splitmix64-substreams";

/// Seeded generator whose output is identical on every platform: the engine
/// is fully specified by the standard and bounded draws avoid the
/// implementation-defined std distributions.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }
  /// Uniform in [0, n); n > 0.
  std::uint64_t below(std::uint64_t n);
  /// Uniform in [lo, hi].
  long between(long lo, long hi);
  /// Uniform in [0, 1).
  double unit();
  /// Uniformly random r-subset of {0, ..., n-1}, sorted ascending.
  std::vector<int> subset(int n, int r);

 private:
  std::mt19937_64 engine_;
};

/// A named seed from which independent named sub-streams are derived, so each
/// pipeline stage draws from its own reproducible stream.
class SeedStream {
 public:
  explicit SeedStream(std::uint64_t seed, std::string name = "root")
      : seed_(seed), name_(std::move(name)) {}

  SeedStream sub(std::string_view name) const;
  SeedStream sub(std::uint64_t index) const;
  Rng rng() const { return Rng(seed_); }

  std::uint64_t seed() const { return seed_; }
  const std::string& name() const { return name_; }

 private:
  std::uint64_t seed_;
  std::string name_;
};

std::uint64_t splitmix64(std::uint64_t x);
std::uint64_t fnv1a64(std::string_view s);

}  // namespace hcp
