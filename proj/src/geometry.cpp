#include "hcpack/geometry.hpp"

#include <algorithm>
#include <numeric>

#include "hcpack/errors.hpp"

namespace hcp {

Interval::Interval(Rat lo_, Rat hi_) : lo(std::move(lo_)), hi(std::move(hi_)) {
  if (!(lo < hi)) throw InputError("interval requires lo < hi, got (" + lo.str() + ", " + hi.str() + ")");
}

bool intervals_disjoint(const Interval& a, const Interval& b) {
  return a.hi <= b.lo || b.hi <= a.lo;
}

CubeClass::CubeClass(int k, Rat epsilon, int d) : k_(k), epsilon_(std::move(epsilon)), d_(d) {
  if (k_ < 2) throw InputError("cube class requires k >= 2, got " + std::to_string(k_));
  if (d_ < 1) throw InputError("cube class requires d >= 1, got " + std::to_string(d_));
  if (epsilon_.sign() < 0) throw InputError("cube class requires epsilon >= 0, got " + epsilon_.str());
  side_ = (Rat(1) + epsilon_) / Rat(k_);
  if (side_ > Rat(1))
    throw InputError("cube side (1+eps)/k exceeds 1 for k=" + std::to_string(k_) +
                     ", eps=" + epsilon_.str());
}

PlacedCube::PlacedCube(CubeClass c, std::vector<Rat> b) : cls(std::move(c)), base(std::move(b)) {
  if (base.size() != static_cast<std::size_t>(cls.dim()))
    throw InputError("cube base has " + std::to_string(base.size()) +
                     " coordinates, class dimension is " + std::to_string(cls.dim()));
}

Interval PlacedCube::extent(int axis) const {
  const auto& lo = base.at(static_cast<std::size_t>(axis));
  return Interval(lo, lo + cls.side());
}

bool PlacedCube::contained() const {
  const Rat limit = Rat(1) - cls.side();
  return std::all_of(base.begin(), base.end(),
                     [&](const Rat& x) { return x.sign() >= 0 && x <= limit; });
}

bool cubes_disjoint(const PlacedCube& a, const PlacedCube& b) {
  if (a.dim() != b.dim())
    throw InputError("cubes_disjoint: dimension mismatch (" + std::to_string(a.dim()) + " vs " +
                     std::to_string(b.dim()) + ")");
  // Open intervals: disjoint in an axis iff one ends where the other starts or
  // before, i.e. b - a >= side(a) or a - b >= side(b). Hot path: reuse one temporary.
  thread_local mpq_class diff;
  for (std::size_t i = 0; i < a.base.size(); ++i) {
    mpq_sub(diff.get_mpq_t(), b.base[i].raw().get_mpq_t(), a.base[i].raw().get_mpq_t());
    if (mpq_cmp(diff.get_mpq_t(), a.cls.side().raw().get_mpq_t()) >= 0) return true;
    mpq_neg(diff.get_mpq_t(), diff.get_mpq_t());
    if (mpq_cmp(diff.get_mpq_t(), b.cls.side().raw().get_mpq_t()) >= 0) return true;
  }
  return false;
}

Rat cube_volume(const PlacedCube& c) { return c.cls.volume(); }

Rat occupied_volume(const Bin& b) {
  Rat total(0);
  for (const auto& c : b.cubes) total += c.cls.volume();
  return total;
}

bool fits_among(const PlacedCube& cube, std::span<const PlacedCube> occupants) {
  if (!cube.contained()) return false;
  return std::all_of(occupants.begin(), occupants.end(),
                     [&](const PlacedCube& o) { return cubes_disjoint(cube, o); });
}

namespace {

// Indices of cubes with the right dimension; fills the containment part of the report.
std::vector<std::size_t> check_containment(const Bin& b, BinReport& rep) {
  std::vector<std::size_t> valid;
  valid.reserve(b.cubes.size());
  for (std::size_t i = 0; i < b.cubes.size(); ++i) {
    const auto& c = b.cubes[i];
    if (c.dim() != b.d) {
      rep.dimension_ok = false;
      if (!rep.uncontained) rep.uncontained = i;
      continue;
    }
    if (!c.contained()) {
      rep.containment_ok = false;
      if (!rep.uncontained) rep.uncontained = i;
    }
    valid.push_back(i);
  }
  return valid;
}

void record_overlap(BinReport& rep, std::size_t i, std::size_t j) {
  auto p = std::minmax(i, j);
  std::pair<std::size_t, std::size_t> pair{p.first, p.second};
  rep.disjoint_ok = false;
  if (!rep.offending_pair || pair < *rep.offending_pair) rep.offending_pair = pair;
}

}  // namespace

BinReport verify_bin_pairwise(const Bin& b) {
  BinReport rep;
  auto valid = check_containment(b, rep);
  for (std::size_t x = 0; x < valid.size(); ++x) {
    for (std::size_t y = x + 1; y < valid.size(); ++y) {
      ++rep.pairs_checked;
      if (!cubes_disjoint(b.cubes[valid[x]], b.cubes[valid[y]])) {
        record_overlap(rep, valid[x], valid[y]);
        // Pairs are visited in lexicographic order, so the first hit is the smallest.
        return rep;
      }
    }
  }
  return rep;
}

BinReport verify_bin_sweep(const Bin& b) {
  BinReport rep;
  auto valid = check_containment(b, rep);
  const std::size_t n = valid.size();
  if (n < 2) return rep;
  const auto d = static_cast<std::size_t>(b.d);

  // Replace every endpoint by its rank among the distinct endpoints of its
  // axis. Ranks preserve the exact order, so the integer tests below decide
  // open-interval overlap exactly.
  std::vector<std::vector<std::uint32_t>> lo_rank(d, std::vector<std::uint32_t>(n));
  std::vector<std::vector<std::uint32_t>> hi_rank(d, std::vector<std::uint32_t>(n));
  for (std::size_t axis = 0; axis < d; ++axis) {
    std::vector<Rat> ends;
    ends.reserve(2 * n);
    for (auto idx : valid) {
      const auto& c = b.cubes[idx];
      ends.push_back(c.base[axis]);
      ends.push_back(c.base[axis] + c.cls.side());
    }
    std::vector<Rat> his(ends.size() / 2);
    for (std::size_t t = 0; t < n; ++t) his[t] = ends[2 * t + 1];
    std::sort(ends.begin(), ends.end());
    ends.erase(std::unique(ends.begin(), ends.end()), ends.end());
    auto rank_of = [&](const Rat& v) {
      return static_cast<std::uint32_t>(std::lower_bound(ends.begin(), ends.end(), v) - ends.begin());
    };
    for (std::size_t t = 0; t < n; ++t) {
      lo_rank[axis][t] = rank_of(b.cubes[valid[t]].base[axis]);
      hi_rank[axis][t] = rank_of(his[t]);
    }
  }

  // Sweep along the axis with the most distinct low endpoints.
  std::size_t sweep_axis = 0;
  std::size_t best_distinct = 0;
  for (std::size_t axis = 0; axis < d; ++axis) {
    auto v = lo_rank[axis];
    std::sort(v.begin(), v.end());
    auto distinct = static_cast<std::size_t>(std::unique(v.begin(), v.end()) - v.begin());
    if (distinct > best_distinct) {
      best_distinct = distinct;
      sweep_axis = axis;
    }
  }
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  const auto& slo = lo_rank[sweep_axis];
  const auto& shi = hi_rank[sweep_axis];
  std::stable_sort(order.begin(), order.end(), [&](auto x, auto y) { return slo[x] < slo[y]; });

  for (std::size_t a = 0; a < n; ++a) {
    const auto s = order[a];
    for (std::size_t bpos = a + 1; bpos < n; ++bpos) {
      const auto t = order[bpos];
      if (slo[t] >= shi[s]) break;
      ++rep.pairs_checked;
      bool separated = false;
      for (std::size_t axis = 0; axis < d && !separated; ++axis) {
        if (axis == sweep_axis) continue;
        separated = hi_rank[axis][s] <= lo_rank[axis][t] || hi_rank[axis][t] <= lo_rank[axis][s];
      }
      if (!separated) record_overlap(rep, valid[s], valid[t]);
    }
  }
  return rep;
}

BinReport verify_bin(const Bin& b) {
  return b.cubes.size() > kSweepThreshold ? verify_bin_sweep(b) : verify_bin_pairwise(b);
}

}  // namespace hcp
