#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "hcpack/rational.hpp"

namespace hcp {

/// Open interval (lo, hi).
struct Interval {
  Rat lo;
  Rat hi;

  Interval(Rat lo_, Rat hi_);
  Rat length() const { return hi - lo; }
};

/// Touching endpoints count as disjoint (open intervals).
bool intervals_disjoint(const Interval& a, const Interval& b);

/// The class of open d-cubes of side (1+epsilon)/k.
class CubeClass {
 public:
  /// Requires k >= 2, d >= 1, epsilon >= 0 and a side of at most 1.
  /// epsilon == 0 is accepted here; constructions demand epsilon > 0.
  CubeClass(int k, Rat epsilon, int d);

  int k() const { return k_; }
  const Rat& epsilon() const { return epsilon_; }
  int dim() const { return d_; }
  const Rat& side() const { return side_; }
  Rat volume() const { return side_.pow(static_cast<unsigned>(d_)); }

  friend bool operator==(const CubeClass& a, const CubeClass& b) {
    return a.k_ == b.k_ && a.d_ == b.d_ && a.epsilon_ == b.epsilon_;
  }

 private:
  int k_;
  Rat epsilon_;
  int d_;
  Rat side_;
};

/// A cube of a given class at an exact base point. Containment in the unit
/// bin is not enforced here; verify_bin reports it.
struct PlacedCube {
  CubeClass cls;
  std::vector<Rat> base;

  PlacedCube(CubeClass c, std::vector<Rat> b);

  int dim() const { return cls.dim(); }
  Interval extent(int axis) const;
  bool contained() const;
};

/// Throws InputError when dimensions differ.
bool cubes_disjoint(const PlacedCube& a, const PlacedCube& b);

Rat cube_volume(const PlacedCube& c);

/// Unit bin [0,1]^d. Disjointness is checked by verify_bin, never assumed.
struct Bin {
  int d = 1;
  std::vector<PlacedCube> cubes;

  Bin() = default;
  explicit Bin(int dim) : d(dim) {}
  Bin(int dim, std::vector<PlacedCube> cs) : d(dim), cubes(std::move(cs)) {}
};

struct BinReport {
  bool dimension_ok = true;
  bool containment_ok = true;
  bool disjoint_ok = true;
  /// First cube (by index) that is outside the bin or has the wrong dimension.
  std::optional<std::size_t> uncontained;
  /// Lexicographically smallest overlapping pair (i < j).
  std::optional<std::pair<std::size_t, std::size_t>> offending_pair;
  std::size_t pairs_checked = 0;

  bool ok() const { return dimension_ok && containment_ok && disjoint_ok; }
};

/// Bins with more cubes than this use the sweep prefilter in verify_bin.
inline constexpr std::size_t kSweepThreshold = 64;

/// Exact containment and pairwise disjointness check.
BinReport verify_bin(const Bin& b);
/// Same check with an explicit strategy; both must agree.
BinReport verify_bin_pairwise(const Bin& b);
BinReport verify_bin_sweep(const Bin& b);

Rat occupied_volume(const Bin& b);

/// True if `cube` is contained in the bin and disjoint from every cube in
/// `occupants`.
bool fits_among(const PlacedCube& cube, std::span<const PlacedCube> occupants);

}  // namespace hcp
