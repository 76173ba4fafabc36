#include "hcpack/game.hpp"

#include <algorithm>
#include <functional>
#include <map>
#include <mutex>
#include <numeric>
#include <set>
#include <sstream>
#include <unordered_map>

#include "hcpack/errors.hpp"

namespace hcp {

std::vector<std::size_t> GameConfig::bin_ids() const {
  std::vector<std::size_t> ids;
  for (const auto& it : items) ids.push_back(it.bin);
  std::sort(ids.begin(), ids.end());
  ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
  return ids;
}

std::vector<std::size_t> GameConfig::members(std::size_t id) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < items.size(); ++i)
    if (items[i].bin == id) out.push_back(i);
  return out;
}

Bin GameConfig::bin(std::size_t id) const {
  Bin b(d);
  for (const auto& it : items)
    if (it.bin == id) b.cubes.push_back(it.cube);
  return b;
}

Rat GameConfig::bin_volume(std::size_t id) const {
  Rat v(0);
  for (const auto& it : items)
    if (it.bin == id) v += it.cube.cls.volume();
  return v;
}

std::size_t GameConfig::item_index(std::size_t item_id) const {
  for (std::size_t i = 0; i < items.size(); ++i)
    if (items[i].id == item_id) return i;
  throw InputError("no item with id " + std::to_string(item_id));
}

std::size_t GameConfig::fresh_bin_id() const {
  std::size_t next = 0;
  for (const auto& it : items) next = std::max(next, it.bin + 1);
  return next;
}

void validate_config(const GameConfig& cfg) {
  if (cfg.d < 1) throw InputError("config requires d >= 1");
  std::set<std::size_t> ids;
  for (const auto& it : cfg.items) {
    if (!ids.insert(it.id).second) throw InputError("duplicate item id " + std::to_string(it.id));
    if (it.cube.dim() != cfg.d) throw InputError("item " + std::to_string(it.id) + " has the wrong dimension");
  }
  for (auto b : cfg.bin_ids()) {
    auto rep = verify_bin(cfg.bin(b));
    if (!rep.ok()) throw VerificationError("bin " + std::to_string(b) + " fails verification");
  }
}

GameConfig config_from_bins(int d, const std::vector<Bin>& bins) {
  GameConfig cfg;
  cfg.d = d;
  std::size_t next = 0;
  for (std::size_t b = 0; b < bins.size(); ++b)
    for (const auto& c : bins[b].cubes) cfg.items.push_back(GameItem{next++, b, c});
  return cfg;
}

GameConfig homogeneous_mixture(int d, const std::vector<int>& classes, const Rat& eps) {
  std::vector<Bin> bins;
  for (int k : classes) bins.push_back(build_homogeneous(k, d, eps).bin);
  return config_from_bins(d, bins);
}

Rat item_cost(const GameConfig& cfg, std::size_t item_index) {
  const auto& it = cfg.items.at(item_index);
  return it.cube.cls.volume() / cfg.bin_volume(it.bin);
}

std::size_t social_cost(const GameConfig& cfg) {
  std::map<std::size_t, Rat> vol;
  for (const auto& it : cfg.items) vol[it.bin] += it.cube.cls.volume();
  Rat total(0);
  for (const auto& it : cfg.items) total += it.cube.cls.volume() / vol[it.bin];
  if (!(total == Rat(static_cast<long>(vol.size()))))
    throw VerificationError("item costs add up to " + total.str() + ", not to the " + std::to_string(vol.size()) +
                            " used bins");
  return vol.size();
}

std::string to_string(Feasibility f) { return f == Feasibility::insertion ? "insertion" : "repack"; }

Feasibility parse_feasibility(const std::string& s) {
  if (s == "insertion") return Feasibility::insertion;
  if (s == "repack") return Feasibility::repack;
  throw InputError("feasibility mode must be 'insertion' or 'repack', got '" + s + "'");
}

namespace {

std::vector<std::vector<Rat>> insertion_candidates(int d, const Rat& side, const std::vector<PlacedCube>& occ) {
  const Rat limit = Rat(1) - side;
  std::vector<std::vector<Rat>> axes(static_cast<std::size_t>(d));
  for (std::size_t a = 0; a < axes.size(); ++a) {
    auto& v = axes[a];
    v.push_back(Rat(0));
    v.push_back(limit);
    for (const auto& c : occ) {
      v.push_back(c.base[a]);
      v.push_back(c.base[a] + c.cls.side());
      v.push_back(c.base[a] - side);
    }
    std::erase_if(v, [&](const Rat& x) { return x.sign() < 0 || x > limit; });
    std::sort(v.begin(), v.end());
    v.erase(std::unique(v.begin(), v.end()), v.end());
  }
  return axes;
}

// Calls `visit` on every point of the product grid, in lexicographic order,
// until it returns true.
bool for_each_point(const std::vector<std::vector<Rat>>& axes, const std::function<bool(const std::vector<Rat>&)>& visit) {
  for (const auto& a : axes)
    if (a.empty()) return false;
  std::vector<std::size_t> idx(axes.size(), 0);
  std::vector<Rat> p(axes.size());
  for (std::size_t a = 0; a < axes.size(); ++a) p[a] = axes[a][0];
  while (true) {
    if (visit(p)) return true;
    std::size_t a = axes.size();
    while (a-- > 0) {
      if (++idx[a] < axes[a].size()) {
        p[a] = axes[a][idx[a]];
        break;
      }
      idx[a] = 0;
      p[a] = axes[a][0];
    }
    if (a == static_cast<std::size_t>(-1)) return false;
  }
}

bool disjoint_from_all(const PlacedCube& c, const std::vector<PlacedCube>& occ) {
  return std::all_of(occ.begin(), occ.end(), [&](const PlacedCube& o) { return cubes_disjoint(c, o); });
}

}  // namespace

std::optional<std::vector<std::vector<Rat>>> insertion_layout(int d, const std::vector<PlacedCube>& fixed,
                                                              const std::vector<CubeClass>& arrivals,
                                                              std::size_t node_budget) {
  std::vector<std::size_t> order(arrivals.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](auto a, auto b) { return arrivals[b].side() < arrivals[a].side(); });
  std::vector<PlacedCube> occ = fixed;
  std::vector<std::vector<Rat>> pos(arrivals.size());
  std::size_t nodes = 0;
  std::function<bool(std::size_t)> place = [&](std::size_t j) -> bool {
    if (j == order.size()) return true;
    const auto& cls = arrivals[order[j]];
    auto axes = insertion_candidates(d, cls.side(), occ);
    return for_each_point(axes, [&](const std::vector<Rat>& p) {
      if (++nodes > node_budget) throw BudgetExceeded("insertion search exceeded its node budget");
      PlacedCube c(cls, p);
      if (!disjoint_from_all(c, occ)) return false;
      occ.push_back(std::move(c));
      pos[order[j]] = p;
      if (place(j + 1)) return true;
      occ.pop_back();
      return false;
    });
  };
  if (!place(0)) return std::nullopt;
  return pos;
}

namespace {

// Cheap necessary conditions: total volume at most 1, and at most (m-1)^d
// cubes of side above 1/m for every m.
bool repack_possible(int d, const std::vector<CubeClass>& cubes) {
  Rat vol(0);
  for (const auto& c : cubes) vol += c.volume();
  if (vol > Rat(1)) return false;
  if (cubes.empty()) return true;
  Rat smallest = cubes.front().side();
  for (const auto& c : cubes) smallest = std::min(smallest, c.side());
  const long mmax = static_cast<long>(to_size(smallest.reciprocal().floor())) + 1;
  for (long m = 2; m <= mmax; ++m) {
    const Rat bound(1, m);
    std::size_t above = 0;
    for (const auto& c : cubes)
      if (c.side() > bound) ++above;
    if (BigInt(static_cast<unsigned long>(above)) > ipow(m - 1, static_cast<unsigned>(d))) return false;
  }
  return true;
}


using Layout = std::optional<std::vector<std::vector<Rat>>>;

// Exact search on the integer lattice spanned by the sides. Scaled by the
// common denominator and divided by the gcd of the sides, every coordinate
// of a pushed-down layout is an integer, so the bin becomes a W^d grid. The
// lowest empty cell (first axis fastest) is either the corner of some cube
// or wasted; total waste is bounded by the empty volume. Returns false when
// the grid is too large to use.
bool grid_layout(int d, const std::vector<CubeClass>& cubes, std::size_t node_budget, Layout& out) {
  constexpr std::size_t kMaxCells = std::size_t{1} << 22;
  BigInt Q = 1;
  for (const auto& c : cubes) mpz_lcm(Q.get_mpz_t(), Q.get_mpz_t(), c.side().den().get_mpz_t());
  BigInt g = 0;
  std::vector<BigInt> scaled;
  for (const auto& c : cubes) {
    scaled.push_back(c.side().num() * (Q / c.side().den()));
    mpz_gcd(g.get_mpz_t(), g.get_mpz_t(), scaled.back().get_mpz_t());
  }
  const BigInt W_big = Q / g;  // floor
  if (W_big > 4096) return false;
  const std::size_t W = W_big.get_ui();
  std::size_t cells = 1;
  for (int a = 0; a < d; ++a) {
    if (cells > kMaxCells / W) return false;
    cells *= W;
  }
  std::size_t used = 0;
  std::vector<std::size_t> len;
  for (const auto& b : scaled) {
    len.push_back(BigInt(b / g).get_ui());
    std::size_t v = 1;
    for (int a = 0; a < d; ++a) v *= len.back();
    used += v;
  }
  if (used > cells) {
    out = std::nullopt;
    return true;
  }
  const std::size_t slack = cells - used;

  // Cube types, largest first.
  std::vector<std::size_t> kinds;
  std::vector<std::vector<std::size_t>> members;
  for (std::size_t i = 0; i < cubes.size(); ++i) {
    auto it = std::find(kinds.begin(), kinds.end(), len[i]);
    if (it == kinds.end()) {
      kinds.push_back(len[i]);
      members.push_back({i});
    } else {
      members[it - kinds.begin()].push_back(i);
    }
  }
  std::vector<std::size_t> perm(kinds.size());
  std::iota(perm.begin(), perm.end(), 0);
  std::sort(perm.begin(), perm.end(), [&](auto a, auto b) { return kinds[b] < kinds[a]; });
  std::vector<std::size_t> left(kinds.size());
  for (std::size_t t = 0; t < kinds.size(); ++t) left[t] = members[t].size();

  std::vector<std::size_t> stride(static_cast<std::size_t>(d), 1);
  for (int a = 1; a < d; ++a) stride[a] = stride[a - 1] * W;
  std::vector<std::uint8_t> occ(cells, 0);
  std::vector<std::size_t> corner(cubes.size());
  std::size_t remaining = cubes.size();
  std::size_t waste = 0;
  std::size_t nodes = 0;
  std::vector<std::size_t> coord(static_cast<std::size_t>(d));

  // Visits every cell of the cube of side s at `base` (flat index); stops on false.
  auto each_cell = [&](std::size_t base, std::size_t s, const auto& f) {
    std::vector<std::size_t> off(static_cast<std::size_t>(d), 0);
    while (true) {
      std::size_t idx = base;
      for (int a = 0; a < d; ++a) idx += off[a] * stride[a];
      if (!f(idx)) return false;
      int a = 0;
      while (a < d && ++off[a] == s) off[a++] = 0;
      if (a == d) return true;
    }
  };
  auto fits = [&](std::size_t base, std::size_t s) {
    for (int a = 0; a < d; ++a) {
      const std::size_t c = (base / stride[a]) % W;
      if (c + s > W) return false;
    }
    return each_cell(base, s, [&](std::size_t i) { return occ[i] == 0; });
  };
  auto fill = [&](std::size_t base, std::size_t s, std::uint8_t v) {
    each_cell(base, s, [&](std::size_t i) {
      occ[i] = v;
      return true;
    });
  };

  // Corner coordinates of a pushed-down layout are sums of other sides.
  std::vector<char> normal(W + 1, 0);
  normal[0] = 1;
  for (auto l : len)
    for (std::size_t v = W; v-- > 0;)
      if (normal[v] && v + l <= W) normal[v + l] = 1;
  // A cube above the floor rests on a cube cell directly below its bottom face.
  auto rests = [&](std::size_t base, std::size_t s) {
    if (base < stride[d - 1]) return true;
    const std::size_t below = base - stride[d - 1];
    std::vector<std::size_t> off(static_cast<std::size_t>(d - 1), 0);
    while (true) {
      std::size_t idx = below;
      for (int a = 0; a + 1 < d; ++a) idx += off[a] * stride[a];
      if (occ[idx] == 1) return true;
      int a = 0;
      while (a + 1 < d && ++off[a] == s) off[a++] = 0;
      if (a + 1 >= d) return false;
    }
  };

  // Along the other axes support can come from later cubes, so it is checked
  // once the scan has passed every cell next to the face.
  std::vector<std::size_t> placed_order;
  auto side_face_ok = [&](std::size_t cursor) {
    for (auto who : placed_order) {
      const std::size_t base = corner[who], s = len[who];
      for (int a = 0; a + 1 < d; ++a) {
        if ((base / stride[a]) % W == 0) continue;
        const std::size_t start = base - stride[a];
        std::size_t last = start;
        for (int b = 0; b < d; ++b)
          if (b != a) last += (s - 1) * stride[b];
        if (last >= cursor) continue;
        std::vector<std::size_t> off(static_cast<std::size_t>(d), 0);
        bool found = false;
        while (!found) {
          std::size_t idx = start;
          for (int b = 0; b < d; ++b) idx += off[b] * stride[b];
          found = occ[idx] == 1;
          int b = 0;
          while (b < d && (b == a || ++off[b] == s)) {
            if (b != a) off[b] = 0;
            ++b;
          }
          if (b == d) break;
        }
        if (!found) return false;
      }
    }
    return true;
  };

  std::function<bool(std::size_t)> search = [&](std::size_t cursor) -> bool {
    if (remaining == 0) return true;
    std::vector<std::size_t> forced;
    auto undo = [&] {
      for (auto c : forced) occ[c] = 0;
      waste -= forced.size();
    };
    std::vector<std::size_t> options;
    while (true) {
      while (cursor < cells && occ[cursor]) ++cursor;
      if (cursor == cells) {
        undo();
        return false;
      }
      if (!side_face_ok(cursor)) {
        undo();
        return false;
      }
      // The largest remaining cube must still start at or above this layer.
      const std::size_t layer = cursor / stride[d - 1];
      bool room = true;
      for (auto t : perm)
        if (left[t] > 0) {
          room = layer + kinds[t] <= W;
          break;
        }
      if (!room) {
        undo();
        return false;
      }
      bool aligned = true;
      for (int a = 0; a < d && aligned; ++a) aligned = normal[(cursor / stride[a]) % W];
      options.clear();
      if (aligned)
        for (auto t : perm)
          if (left[t] > 0 && fits(cursor, kinds[t]) && rests(cursor, kinds[t])) options.push_back(t);
      if (!options.empty()) {
        if (++nodes > node_budget) {
          undo();
          throw BudgetExceeded("repack search exceeded its node budget");
        }
        break;
      }
      if (waste == slack) {
        undo();
        return false;
      }
      occ[cursor] = 2;
      ++waste;
      forced.push_back(cursor);
      ++cursor;
    }
    for (auto t : options) {
      fill(cursor, kinds[t], 1);
      const std::size_t who = members[t][members[t].size() - left[t]];
      corner[who] = cursor;
      placed_order.push_back(who);
      --left[t];
      --remaining;
      if (search(cursor + 1)) return true;
      ++remaining;
      ++left[t];
      placed_order.pop_back();
      fill(cursor, kinds[t], 0);
    }
    if (waste < slack) {
      ++waste;
      occ[cursor] = 2;
      const bool ok = search(cursor + 1);
      occ[cursor] = 0;
      --waste;
      if (ok) return true;
    }
    undo();
    return false;
  };
  if (!search(0)) {
    out = std::nullopt;
    return true;
  }
  std::vector<std::vector<Rat>> pos(cubes.size());
  const Rat unit = Rat(g) / Rat(Q);
  for (std::size_t i = 0; i < cubes.size(); ++i)
    for (int a = 0; a < d; ++a)
      pos[i].push_back(unit * Rat(static_cast<long>((corner[i] / stride[a]) % W)));
  out = std::move(pos);
  return true;
}

Layout sweep_layout(int d, const std::vector<CubeClass>& cubes, std::size_t node_budget) {

  // Normal patterns: in some optimal layout every coordinate is a sum of sides.
  std::map<Rat, std::size_t> side_counts;
  for (const auto& c : cubes) ++side_counts[c.side()];
  std::vector<Rat> sums{Rat(0)};
  for (const auto& [s, n] : side_counts) {
    std::vector<Rat> next;
    for (const auto& base : sums)
      for (std::size_t t = 0; t <= n; ++t) {
        Rat v = base + Rat(static_cast<long>(t)) * s;
        if (v >= Rat(1)) break;
        next.push_back(v);
      }
    std::sort(next.begin(), next.end());
    next.erase(std::unique(next.begin(), next.end()), next.end());
    sums = std::move(next);
  }

  // Every feasible layout can be pushed down along each axis until no cube
  // moves. Listing the cubes of such a layout by base point (last axis most
  // significant), each cube sits on the floor or on an earlier cube along the
  // last axis, and no later cube starts below it.
  const std::size_t top = static_cast<std::size_t>(d - 1);
  std::vector<Rat> kinds;  // distinct sides, largest first
  std::vector<std::size_t> left;
  std::vector<std::vector<std::size_t>> members;
  for (auto it = side_counts.rbegin(); it != side_counts.rend(); ++it) {
    kinds.push_back(it->first);
    left.push_back(it->second);
    members.emplace_back();
  }
  for (std::size_t i = 0; i < cubes.size(); ++i)
    for (std::size_t t = 0; t < kinds.size(); ++t)
      if (cubes[i].side() == kinds[t]) members[t].push_back(i);
  Rat remaining(0);
  for (const auto& c : cubes) remaining += c.volume();

  auto later = [&](const std::vector<Rat>& a, const std::vector<Rat>& b) {
    for (std::size_t i = a.size(); i-- > 0;)
      if (a[i] != b[i]) return b[i] < a[i];
    return false;
  };
  // Cube c cannot move down along `axis`: it touches the wall or the top face
  // of a cube whose extent meets c's on every other axis.
  auto supported = [&](const PlacedCube& c, std::size_t axis, const std::vector<PlacedCube>& occ) {
    if (c.base[axis].is_zero()) return true;
    for (const auto& o : occ) {
      if (o.base[axis] + o.cls.side() != c.base[axis]) continue;
      bool overlap = true;
      for (std::size_t a = 0; a < static_cast<std::size_t>(d) && overlap; ++a)
        if (a != axis) overlap = !intervals_disjoint(o.extent(static_cast<int>(a)), c.extent(static_cast<int>(a)));
      if (overlap) return true;
    }
    return false;
  };
  // Cubes whose top lies at or below `level` can no longer gain support from
  // later cubes, which all start at or above `level`.
  auto settled = [&](const Rat& level, const std::vector<PlacedCube>& occ) {
    for (const auto& c : occ) {
      if (c.base[top] + c.cls.side() > level) continue;
      for (std::size_t a = 0; a < top; ++a)
        if (!supported(c, a, occ)) return false;
    }
    return true;
  };
  // Room left at or above `level` on the last axis.
  auto room_above = [&](const Rat& level, const std::vector<PlacedCube>& occ) {
    Rat room = Rat(1) - level;
    for (const auto& o : occ) {
      const Rat hi = o.base[top] + o.cls.side();
      if (hi <= level) continue;
      const Rat lo = std::max(o.base[top], level);
      room -= o.cls.side().pow(static_cast<unsigned>(d - 1)) * (hi - lo);
    }
    return room;
  };

  std::vector<PlacedCube> placed;
  std::vector<std::vector<Rat>> pos(cubes.size());
  std::vector<Rat> last;
  std::size_t nodes = 0;
  std::function<bool()> place = [&]() -> bool {
    if (placed.size() == cubes.size()) return true;
    for (std::size_t t = 0; t < kinds.size(); ++t) {
      if (left[t] == 0) continue;
      const CubeClass& cls = cubes[members[t][0]];
      const Rat limit = Rat(1) - cls.side();
      std::vector<Rat> axis;
      for (const auto& v : sums)
        if (v <= limit) axis.push_back(v);
      std::vector<Rat> levels{Rat(0)};
      for (const auto& o : placed) levels.push_back(o.base[top] + o.cls.side());
      std::sort(levels.begin(), levels.end());
      levels.erase(std::unique(levels.begin(), levels.end()), levels.end());
      std::vector<std::vector<Rat>> axes(static_cast<std::size_t>(d), axis);
      axes[top].clear();
      for (const auto& l : levels)
        if (l <= limit && (last.empty() || !(l < last[top]))) axes[top].push_back(l);
      // Points come out with the first axis fastest; the order matters only for speed.
      const bool found = for_each_point(axes, [&](const std::vector<Rat>& p) {
        if (++nodes > node_budget) throw BudgetExceeded("repack search exceeded its node budget");
        if (!last.empty() && !later(p, last)) return false;
        PlacedCube c(cls, p);
        if (!disjoint_from_all(c, placed) || !supported(c, top, placed)) return false;
        placed.push_back(std::move(c));
        const bool done = placed.size() == cubes.size();
        if (remaining - cls.volume() > room_above(p[top], placed) || !settled(done ? Rat(1) : p[top], placed)) {
          placed.pop_back();
          return false;
        }
        const std::size_t who = members[t][members[t].size() - left[t]];
        --left[t];
        remaining -= cls.volume();
        const auto saved = last;
        last = p;
        pos[who] = p;
        if (place()) return true;
        last = saved;
        remaining += cls.volume();
        ++left[t];
        placed.pop_back();
        return false;
      });
      if (found) return true;
    }
    return false;
  };
  if (!place()) return std::nullopt;
  return pos;
}

// Results depend only on the multiset of cube classes, and the dynamics ask
// the same question many times.
std::mutex layout_memo_mutex;
std::map<std::string, Layout> layout_memo;

std::string layout_key(int d, std::vector<std::size_t>& order, const std::vector<CubeClass>& cubes) {
  std::sort(order.begin(), order.end(), [&](auto a, auto b) { return cubes[a].side() < cubes[b].side(); });
  std::string key = std::to_string(d);
  for (auto i : order) key += " " + cubes[i].side().str();
  return key;
}

}  // namespace

std::optional<std::vector<std::vector<Rat>>> repack_layout(int d, const std::vector<CubeClass>& cubes, std::size_t cap,
                                                           std::size_t node_budget) {
  if (cubes.size() > cap)
    throw BudgetExceeded("repack search over " + std::to_string(cubes.size()) + " cubes exceeds the cap of " +
                         std::to_string(cap));
  if (!repack_possible(d, cubes)) return std::nullopt;

  std::vector<std::size_t> order(cubes.size());
  std::iota(order.begin(), order.end(), 0);
  const std::string key = layout_key(d, order, cubes);
  Layout sorted_result;
  bool cached = false;
  {
    std::lock_guard<std::mutex> lock(layout_memo_mutex);
    auto it = layout_memo.find(key);
    if (it != layout_memo.end()) {
      sorted_result = it->second;
      cached = true;
    }
  }
  if (!cached) {
    std::vector<CubeClass> sorted;
    for (auto i : order) sorted.push_back(cubes[i]);
    if (!grid_layout(d, sorted, node_budget, sorted_result)) sorted_result = sweep_layout(d, sorted, node_budget);
    std::lock_guard<std::mutex> lock(layout_memo_mutex);
    if (layout_memo.size() > 100000) layout_memo.clear();
    layout_memo.emplace(key, sorted_result);
  }
  if (!sorted_result) return std::nullopt;
  std::vector<std::vector<Rat>> pos(cubes.size());
  for (std::size_t j = 0; j < order.size(); ++j) pos[order[j]] = (*sorted_result)[j];
  return pos;
}

namespace {

struct MoveScan {
  std::vector<MoveProposal> moves;
  std::size_t checked = 0;
  std::size_t candidates = 0;
};

MoveScan scan_moves(const GameConfig& cfg, const GameOptions& opt, std::size_t limit) {
  MoveScan scan;
  const auto bins = cfg.bin_ids();
  std::map<std::size_t, Rat> vol;
  std::map<std::size_t, std::vector<std::size_t>> members;
  for (std::size_t i = 0; i < cfg.items.size(); ++i) {
    vol[cfg.items[i].bin] += cfg.items[i].cube.cls.volume();
    members[cfg.items[i].bin].push_back(i);
  }
  // Items of one class in one bin face the same volumes, and whether a class
  // fits a target does not depend on where the mover came from.
  std::map<std::pair<std::size_t, std::size_t>, std::vector<std::size_t>> types;  // (bin, first item) -> items
  for (auto b : bins) {
    const auto& ms = members[b];
    for (std::size_t q = 0; q < ms.size(); ++q) {
      const auto& cls = cfg.items[ms[q]].cube.cls;
      std::size_t rep = ms[q];
      for (std::size_t r = 0; r < q; ++r)
        if (cfg.items[ms[r]].cube.cls == cls) {
          rep = ms[r];
          break;
        }
      types[{b, rep}].push_back(ms[q]);
    }
  }
  std::map<std::pair<std::size_t, std::size_t>, std::optional<std::vector<std::vector<Rat>>>> fits;  // (target, rep)
  auto layout = [&](std::size_t t, std::size_t rep) -> const std::optional<std::vector<std::vector<Rat>>>& {
    const auto& cls = cfg.items[rep].cube.cls;
    for (auto& [key, val] : fits)
      if (key.first == t && cfg.items[key.second].cube.cls == cls) return val;
    std::optional<std::vector<std::vector<Rat>>> result;
    if (opt.mode == Feasibility::insertion) {
      std::vector<PlacedCube> fixed;
      for (auto j : members[t]) fixed.push_back(cfg.items[j].cube);
      result = insertion_layout(cfg.d, fixed, {cls}, opt.node_budget);
    } else {
      std::vector<CubeClass> all;
      for (auto j : members[t]) all.push_back(cfg.items[j].cube.cls);
      all.push_back(cls);
      result = repack_layout(cfg.d, all, opt.repack_cap, opt.node_budget);
    }
    return fits.emplace(std::make_pair(t, rep), std::move(result)).first->second;
  };
  for (const auto& [key, items] : types) {
    const auto [b, rep] = key;
    const Rat v = cfg.items[rep].cube.cls.volume();
    for (auto t : bins) {
      if (t == b) continue;
      scan.checked += items.size();
      // v/(V_t + v) < v/V_b  <=>  V_t + v > V_b
      if (!(vol[t] + v > vol[b])) continue;
      scan.candidates += items.size();
      const auto& p = layout(t, rep);
      if (!p) continue;
      for (auto i : items) {
        MoveProposal m;
        m.item = cfg.items[i].id;
        m.from = b;
        m.to = t;
        m.mode = opt.mode;
        m.cost_before = v / vol[b];
        m.cost_after = v / (vol[t] + v);
        if (opt.mode == Feasibility::insertion) {
          m.base = (*p)[0];
        } else {
          for (std::size_t q = 0; q < members[t].size(); ++q)
            m.relayout.emplace_back(cfg.items[members[t][q]].id, (*p)[q]);
          m.base = p->back();
          m.relayout.emplace_back(m.item, m.base);
        }
        scan.moves.push_back(std::move(m));
        if (scan.moves.size() >= limit) return scan;
      }
    }
  }
  std::sort(scan.moves.begin(), scan.moves.end(),
            [](const MoveProposal& a, const MoveProposal& b) { return std::tie(a.item, a.to) < std::tie(b.item, b.to); });
  return scan;
}

}  // namespace

std::vector<MoveProposal> improving_moves(const GameConfig& cfg, const GameOptions& opt, std::size_t limit) {
  return scan_moves(cfg, opt, limit).moves;
}

void apply_move(GameConfig& cfg, const MoveProposal& m) {
  auto& it = cfg.items[cfg.item_index(m.item)];
  it.bin = m.to;
  it.cube.base = m.base;
  for (const auto& [id, base] : m.relayout) cfg.items[cfg.item_index(id)].cube.base = base;
}

NashCertificate is_nash(const GameConfig& cfg, const GameOptions& opt) {
  auto scan = scan_moves(cfg, opt, static_cast<std::size_t>(-1));
  NashCertificate cert;
  cert.mode = opt.mode;
  cert.moves_checked = scan.checked;
  cert.volume_candidates = scan.candidates;
  cert.nash = scan.moves.empty();
  cert.improving = std::move(scan.moves);
  cert.note = opt.mode == Feasibility::insertion ? kInsertionNote : kRepackNote;
  return cert;
}

DynamicsPolicy parse_policy(const std::string& s) {
  if (s == "first" || s == "first-improving") return DynamicsPolicy::first;
  if (s == "best" || s == "best-improving") return DynamicsPolicy::best;
  if (s == "random" || s == "random-seeded") return DynamicsPolicy::random;
  throw InputError("policy must be first, best or random, got '" + s + "'");
}

std::string to_string(DynamicsPolicy p) {
  switch (p) {
    case DynamicsPolicy::first: return "first";
    case DynamicsPolicy::best: return "best";
    case DynamicsPolicy::random: return "random";
  }
  return "first";
}

namespace {

std::vector<Rat> sorted_volumes(const GameConfig& cfg) {
  std::map<std::size_t, Rat> vol;
  for (const auto& it : cfg.items) vol[it.bin] += it.cube.cls.volume();
  std::vector<Rat> v;
  for (auto& [b, x] : vol) v.push_back(x);
  std::sort(v.begin(), v.end(), std::greater<>());
  return v;
}

}  // namespace

DynamicsResult best_response_dynamics(GameConfig cfg, DynamicsPolicy policy, std::size_t max_steps,
                                      const GameOptions& opt, std::uint64_t seed) {
  validate_config(cfg);
  Rng rng(seed);
  DynamicsResult res;
  auto potential = sorted_volumes(cfg);
  while (true) {
    const std::size_t limit = policy == DynamicsPolicy::first ? 1 : static_cast<std::size_t>(-1);
    auto moves = improving_moves(cfg, opt, limit);
    if (moves.empty()) {
      res.converged = true;
      break;
    }
    if (res.steps == max_steps) break;
    std::size_t pick = 0;
    if (policy == DynamicsPolicy::best) {
      for (std::size_t i = 1; i < moves.size(); ++i)
        if (moves[i].cost_before - moves[i].cost_after > moves[pick].cost_before - moves[pick].cost_after) pick = i;
    } else if (policy == DynamicsPolicy::random) {
      pick = static_cast<std::size_t>(rng.below(moves.size()));
    }
    apply_move(cfg, moves[pick]);
    validate_config(cfg);
    auto next = sorted_volumes(cfg);
    if (!(potential < next)) throw VerificationError("bin-volume potential did not increase");
    potential = std::move(next);
    res.trace.push_back(std::move(moves[pick]));
    ++res.steps;
  }
  res.final = std::move(cfg);
  return res;
}

namespace {

struct ItemType {
  std::size_t bin_pos = 0;  // index into the bin list
  CubeClass cls;
  std::vector<std::size_t> items;  // indices into cfg.items
  Rat vol;
};

struct TargetLayout {
  bool ok = false;
  std::vector<std::vector<Rat>> arrivals;                          // in arrival order
  std::vector<std::size_t> leavers;                                // chosen leaving items (indices)
  std::vector<std::pair<std::size_t, std::vector<Rat>>> relayout;  // repack: staying items
};

// Calls `visit` with every way to pick counts[g] items out of pools[g], for all g.
bool for_each_choice(const std::vector<const std::vector<std::size_t>*>& pools, const std::vector<std::size_t>& counts,
                     const std::function<bool(const std::vector<std::size_t>&)>& visit) {
  std::vector<std::size_t> picked;
  std::function<bool(std::size_t, std::size_t, std::size_t)> rec = [&](std::size_t g, std::size_t from,
                                                                       std::size_t left) -> bool {
    if (g == pools.size()) return visit(picked);
    if (left == 0) return rec(g + 1, 0, g + 1 < pools.size() ? counts[g + 1] : 0);
    const auto& pool = *pools[g];
    for (std::size_t i = from; i + left <= pool.size(); ++i) {
      picked.push_back(pool[i]);
      if (rec(g, i + 1, left - 1)) return true;
      picked.pop_back();
    }
    return false;
  };
  return rec(0, 0, pools.empty() ? 0 : counts[0]);
}

}  // namespace

StrongNashCertificate is_strong_nash(const GameConfig& cfg, const StrongNashOptions& opt) {
  if (opt.max_coalition < 1) throw InputError("coalition cap must be at least 1");
  StrongNashCertificate cert;
  cert.max_coalition = opt.max_coalition;
  cert.mode = opt.feasibility.mode;
  cert.note = opt.feasibility.mode == Feasibility::insertion ? kInsertionNote : kRepackNote;

  const std::size_t cap = opt.max_coalition;
  // A coalition touches at most 2*cap bins, so beyond that many copies of an
  // identical bin the extra copies only repeat coalitions already examined.
  std::vector<std::size_t> bins;
  {
    std::map<std::vector<std::string>, std::size_t> copies;
    for (auto b : cfg.bin_ids()) {
      std::vector<std::string> sig;
      for (auto i : cfg.members(b)) {
        std::ostringstream o;
        const auto& c = cfg.items[i].cube;
        o << c.cls.k() << '/' << c.cls.epsilon();
        for (const auto& x : c.base) o << ',' << x;
        sig.push_back(o.str());
      }
      std::sort(sig.begin(), sig.end());
      if (copies[sig]++ < 2 * cap) bins.push_back(b);
    }
  }
  const std::size_t B = bins.size();
  std::vector<Rat> V(B + cap, Rat(0));
  std::map<std::size_t, std::size_t> bin_pos;
  for (std::size_t b = 0; b < B; ++b) bin_pos[bins[b]] = b;

  std::vector<ItemType> types;
  {
    std::map<std::tuple<std::size_t, int, Rat>, std::size_t> index;
    for (std::size_t i = 0; i < cfg.items.size(); ++i) {
      const auto& it = cfg.items[i];
      auto found = bin_pos.find(it.bin);
      if (found == bin_pos.end()) continue;
      const auto b = found->second;
      V[b] += it.cube.cls.volume();
      auto key = std::make_tuple(b, it.cube.cls.k(), it.cube.cls.epsilon());
      auto [pos, fresh] = index.try_emplace(key, types.size());
      if (fresh) types.push_back(ItemType{b, it.cube.cls, {}, it.cube.cls.volume()});
      types[pos->second].items.push_back(i);
    }
  }

  struct Pair {
    std::size_t type;
    std::size_t target;
  };
  std::vector<Pair> pairs;
  for (std::size_t t = 0; t < types.size(); ++t)
    for (std::size_t g = 0; g < B + cap; ++g)
      if (g != types[t].bin_pos) pairs.push_back({t, g});

  std::vector<std::size_t> used(types.size(), 0);
  std::vector<Rat> delta(B + cap, Rat(0));
  std::vector<std::size_t> chosen;
  std::map<std::string, TargetLayout> memo;

  auto layout_target = [&](std::size_t g) -> TargetLayout {
    // Arrivals in chosen order; leaving counts per type of bin g.
    std::vector<CubeClass> arrivals;
    std::vector<std::size_t> arrival_types;
    for (auto p : chosen)
      if (pairs[p].target == g) {
        arrivals.push_back(types[pairs[p].type].cls);
        arrival_types.push_back(pairs[p].type);
      }
    std::vector<const std::vector<std::size_t>*> pools;
    std::vector<std::size_t> counts;
    std::vector<std::size_t> staying_all;
    std::ostringstream key;
    key << g << '|';
    for (auto t : arrival_types) key << t << ',';
    key << '|';
    if (g < B) {
      for (std::size_t t = 0; t < types.size(); ++t) {
        if (types[t].bin_pos != g) continue;
        if (used[t] > 0) {
          pools.push_back(&types[t].items);
          counts.push_back(used[t]);
        }
        key << t << ':' << used[t] << ',';
      }
    }
    auto found = memo.find(key.str());
    if (found != memo.end()) return found->second;
    ++cert.geometric_checks;

    TargetLayout out;
    const auto& fo = opt.feasibility;
    std::vector<std::size_t> in_bin;
    if (g < B) in_bin = cfg.members(bins[g]);
    auto try_with = [&](const std::vector<std::size_t>& leavers) -> bool {
      std::vector<std::size_t> staying;
      for (auto i : in_bin)
        if (std::find(leavers.begin(), leavers.end(), i) == leavers.end()) staying.push_back(i);
      if (fo.mode == Feasibility::insertion) {
        std::vector<PlacedCube> fixed;
        for (auto i : staying) fixed.push_back(cfg.items[i].cube);
        auto p = insertion_layout(cfg.d, fixed, arrivals, fo.node_budget);
        if (!p) return false;
        out.arrivals = std::move(*p);
      } else {
        std::vector<CubeClass> all;
        for (auto i : staying) all.push_back(cfg.items[i].cube.cls);
        all.insert(all.end(), arrivals.begin(), arrivals.end());
        auto p = repack_layout(cfg.d, all, fo.repack_cap, fo.node_budget);
        if (!p) return false;
        for (std::size_t q = 0; q < staying.size(); ++q) out.relayout.emplace_back(cfg.items[staying[q]].id, (*p)[q]);
        out.arrivals.assign(p->begin() + static_cast<std::ptrdiff_t>(staying.size()), p->end());
      }
      out.leavers = leavers;
      out.ok = true;
      return true;
    };
    if (fo.mode == Feasibility::repack || pools.empty()) {
      // Which equal cubes leave does not matter when the bin is re-laid out.
      std::vector<std::size_t> leavers;
      for (std::size_t q = 0; q < pools.size(); ++q)
        leavers.insert(leavers.end(), pools[q]->begin(), pools[q]->begin() + static_cast<std::ptrdiff_t>(counts[q]));
      try_with(leavers);
    } else {
      for_each_choice(pools, counts, try_with);
    }
    memo.emplace(key.str(), out);
    return out;
  };

  auto evaluate = [&]() -> bool {
    // New bins must be used as a prefix of the labels.
    std::vector<bool> new_used(cap, false);
    for (auto p : chosen)
      if (pairs[p].target >= B) new_used[pairs[p].target - B] = true;
    for (std::size_t j = 1; j < cap; ++j)
      if (new_used[j] && !new_used[j - 1]) return false;
    for (auto p : chosen) {
      const auto& pr = pairs[p];
      if (!(V[pr.target] + delta[pr.target] > V[types[pr.type].bin_pos])) return false;
    }
    ++cert.volume_passed;
    std::vector<std::size_t> targets;
    for (auto p : chosen) targets.push_back(pairs[p].target);
    std::sort(targets.begin(), targets.end());
    targets.erase(std::unique(targets.begin(), targets.end()), targets.end());
    std::map<std::size_t, TargetLayout> layouts;
    for (auto g : targets) {
      auto lay = layout_target(g);
      if (!lay.ok) return false;
      layouts.emplace(g, std::move(lay));
    }

    // Concrete witness: leaving items per type, then arrivals in chosen order.
    std::map<std::size_t, std::vector<std::size_t>> leaving;
    for (std::size_t t = 0; t < types.size(); ++t) {
      if (used[t] == 0) continue;
      const auto g = types[t].bin_pos;
      std::vector<std::size_t> pool;
      auto lt = layouts.find(g);
      if (lt != layouts.end()) {
        for (auto i : lt->second.leavers)
          if (std::find(types[t].items.begin(), types[t].items.end(), i) != types[t].items.end()) pool.push_back(i);
      } else {
        pool.assign(types[t].items.begin(), types[t].items.begin() + static_cast<std::ptrdiff_t>(used[t]));
      }
      leaving[t] = std::move(pool);
    }
    Coalition c;
    std::map<std::size_t, std::size_t> next_arrival;
    const auto fresh = cfg.fresh_bin_id();
    for (auto p : chosen) {
      const auto& pr = pairs[p];
      auto& pool = leaving[pr.type];
      const auto idx = pool.back();
      pool.pop_back();
      Coalition::Member m;
      m.item = cfg.items[idx].id;
      m.from = cfg.items[idx].bin;
      m.new_bin = pr.target >= B;
      m.to = m.new_bin ? fresh + (pr.target - B) : bins[pr.target];
      m.base = layouts[pr.target].arrivals[next_arrival[pr.target]++];
      m.cost_before = types[pr.type].vol / V[types[pr.type].bin_pos];
      m.cost_after = types[pr.type].vol / (V[pr.target] + delta[pr.target]);
      c.members.push_back(std::move(m));
    }
    for (auto& [g, lay] : layouts)
      for (auto& r : lay.relayout) c.relayout.push_back(r);
    cert.witness = std::move(c);
    return true;
  };

  std::function<bool(std::size_t)> rec = [&](std::size_t start) -> bool {
    if (chosen.size() == cap) return false;
    for (std::size_t p = start; p < pairs.size(); ++p) {
      const auto& pr = pairs[p];
      const auto t = pr.type;
      if (used[t] == types[t].items.size()) continue;
      ++used[t];
      delta[types[t].bin_pos] -= types[t].vol;
      delta[pr.target] += types[t].vol;
      chosen.push_back(p);
      if (++cert.type_coalitions > opt.type_budget)
        throw BudgetExceeded("coalition enumeration exceeded its budget of " + std::to_string(opt.type_budget));
      if (evaluate() || rec(p)) return true;
      chosen.pop_back();
      delta[pr.target] -= types[t].vol;
      delta[types[t].bin_pos] += types[t].vol;
      --used[t];
    }
    return false;
  };
  cert.strong_nash = !rec(0);
  return cert;
}

void apply_coalition(GameConfig& cfg, const Coalition& c) {
  for (const auto& m : c.members) {
    auto& it = cfg.items[cfg.item_index(m.item)];
    it.bin = m.to;
    it.cube.base = m.base;
  }
  for (const auto& [id, base] : c.relayout) cfg.items[cfg.item_index(id)].cube.base = base;
}

namespace {

PoaInstance build_poa(const TypedPacking& U, const PoaOptions& opt) {
  if (U.bin.cubes.empty()) throw InputError("packing is empty");
  const int kmax = U.k_max();
  if (U.epsilon.sign() <= 0 || U.epsilon > Rat(1, kmax - 1))
    throw InputError("eps = " + U.epsilon.str() + " violates 0 < eps <= 1/(k_max - 1) = 1/" +
                     std::to_string(kmax - 1));
  const auto d = static_cast<unsigned>(U.d);
  PoaInstance out;
  out.weight = U.weight;
  const BigInt per_copy = static_cast<unsigned long>(U.bin.cubes.size());
  const BigInt item_cap = static_cast<unsigned long>(opt.item_cap);
  BigInt N = 1;
  for (int k : U.classes()) N *= ipow(k - 1, d);
  if (N * per_copy > item_cap) {
    BigInt scaled = 1;
    for (int k : U.classes()) {
      const BigInt p = ipow(k - 1, d);
      BigInt g;
      const BigInt nu = static_cast<unsigned long>(U.nu.at(k));
      mpz_gcd(g.get_mpz_t(), p.get_mpz_t(), nu.get_mpz_t());
      const BigInt need = p / g;
      mpz_lcm(scaled.get_mpz_t(), scaled.get_mpz_t(), need.get_mpz_t());
    }
    if (scaled * per_copy > item_cap)
      throw BudgetExceeded("even the smallest valid N = " + big_str(scaled) + " exceeds the item cap");
    N = scaled;
    out.scaled = true;
  }
  out.N = N;
  const auto copies = to_size(N);
  out.P = config_from_bins(U.d, std::vector<Bin>(copies, U.bin));
  std::vector<Bin> regrouped;
  for (int k : U.classes()) {
    const BigInt count = N * BigInt(static_cast<unsigned long>(U.nu.at(k)));
    const BigInt p = ipow(k - 1, d);
    if (count % p != 0) throw VerificationError("class " + std::to_string(k) + " does not regroup evenly");
    const auto h = build_homogeneous(k, U.d, U.epsilon);
    for (std::size_t i = 0; i < to_size(count / p); ++i) regrouped.push_back(h.bin);
  }
  out.P_prime = config_from_bins(U.d, regrouped);
  validate_config(out.P);
  validate_config(out.P_prime);
  out.P_bins = social_cost(out.P);
  out.P_prime_bins = social_cost(out.P_prime);
  out.ratio = Rat(static_cast<long>(out.P_prime_bins), static_cast<long>(out.P_bins));
  if (!(out.ratio == out.weight))
    throw VerificationError("ratio " + out.ratio.str() + " differs from the weight " + out.weight.str());
  return out;
}

}  // namespace

PoaInstance poa_instance(const TypedPacking& U, const PoaOptions& opt) {
  auto out = build_poa(U, opt);
  if (opt.certify) out.nash = is_nash(out.P_prime, opt.feasibility);
  return out;
}

PoaInstance spoa_instance(const TypedPacking& U, const PoaOptions& opt) {
  for (int k : U.classes())
    if ((k & (k - 1)) != 0) throw InputError("class " + std::to_string(k) + " is not a power of two");
  auto out = build_poa(U, opt);
  if (opt.certify) {
    out.nash = is_nash(out.P_prime, opt.feasibility);
    StrongNashOptions so;
    so.max_coalition = opt.coalition_cap;
    so.feasibility = opt.feasibility;
    out.strong = is_strong_nash(out.P_prime, so);
  }
  return out;
}

bool prop1_check(int k, int ell, int d) {
  if (k <= 1 || ell < k + 1 || d < 2)
    throw InputError("prop1 requires d >= 2, l >= k+1 and k > 1 (got k=" + std::to_string(k) +
                     ", l=" + std::to_string(ell) + ", d=" + std::to_string(d) + ")");
  // Multiplied through by (k l)^d: (l (k-1))^d + k^d < (k (l-1))^d.
  const auto e = static_cast<unsigned>(d);
  return ipow(static_cast<long>(ell) * (k - 1), e) + ipow(k, e) < ipow(static_cast<long>(k) * (ell - 1), e);
}

Prop1Sweep prop1_sweep(int kmax, int dmax) {
  Prop1Sweep s;
  for (int k = 2; k < kmax; ++k)
    for (int ell = k + 1; ell <= kmax; ++ell)
      for (int d = 2; d <= dmax; ++d) {
        ++s.checked;
        if (!prop1_check(k, ell, d)) {
          ++s.failures;
          if (!s.first_failure) s.first_failure = std::make_tuple(k, ell, d);
        }
      }
  return s;
}

bool meir_moser_predicate(const std::vector<Rat>& volumes, const Rat& ell, int d) {
  if (ell.sign() <= 0 || ell > Rat(1)) throw InputError("largest side must lie in (0, 1], got " + ell.str());
  if (d < 1) throw InputError("d must be at least 1");
  Rat total(0);
  for (const auto& v : volumes) total += v;
  const auto e = static_cast<unsigned>(d);
  return total <= ell.pow(e) + (Rat(1) - ell).pow(e);
}

Prop2Report prop2_check(const GameConfig& cfg, bool certified_nash) {
  Prop2Report r;
  r.conditioned = certified_nash;
  const Rat threshold = Rat(1) / Rat(2).pow(static_cast<unsigned>(cfg.d));
  r.total_volume = Rat(0);
  for (auto b : cfg.bin_ids()) {
    const Rat v = cfg.bin_volume(b);
    ++r.bins;
    r.total_volume += v;
    if (v < threshold) ++r.low_bins;
  }
  r.bin_bound = Rat(2).pow(static_cast<unsigned>(cfg.d)) * r.total_volume + Rat(1);
  r.within_bound = Rat(static_cast<long>(r.bins)) <= r.bin_bound;
  r.ok = !certified_nash || (r.low_bins <= 1 && r.within_bound);
  return r;
}

GameConfig random_config(int d, std::size_t items, const std::vector<int>& classes, const Rat& eps, Rng& rng) {
  if (classes.empty()) throw InputError("random_config needs at least one class");
  GameConfig cfg;
  cfg.d = d;
  for (std::size_t i = 0; i < items; ++i) {
    const CubeClass cls(classes[rng.below(classes.size())], eps, d);
    const auto bins = cfg.bin_ids();
    const auto pick = rng.below(bins.size() + 1);
    std::size_t bin = cfg.fresh_bin_id();
    std::vector<Rat> base(static_cast<std::size_t>(d), Rat(0));
    if (pick < bins.size()) {
      const Bin b = cfg.bin(bins[pick]);
      if (auto p = insertion_layout(d, b.cubes, {cls})) {
        bin = bins[pick];
        base = (*p)[0];
      }
    }
    cfg.items.push_back(GameItem{i, bin, PlacedCube(cls, std::move(base))});
  }
  return cfg;
}

}  // namespace hcp
