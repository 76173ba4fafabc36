#include <doctest.h>

#include <algorithm>
#include <functional>

#include "hcpack/errors.hpp"
#include "hcpack/game.hpp"

using namespace hcp;

namespace {

std::vector<Rat> sorted_volumes(const GameConfig& cfg) {
  std::vector<Rat> v;
  for (auto id : cfg.bin_ids()) v.push_back(cfg.bin_volume(id));
  std::sort(v.begin(), v.end(), std::greater<>());
  return v;
}

GameConfig underfilled(int d, int k, const Rat& eps) {
  // H_k plus a second class-k bin holding one cube.
  Bin lone(d);
  lone.cubes.emplace_back(CubeClass(k, eps, d), std::vector<Rat>(d, Rat(0)));
  Bin partial = build_homogeneous(k, d, eps).bin;
  partial.cubes.pop_back();
  return config_from_bins(d, {partial, lone});
}

// Independent oracle: place cubes in input order at every point whose
// coordinates are sums of sides, no pruning beyond disjointness.
bool brute_fits(int d, const std::vector<CubeClass>& cubes) {
  std::vector<Rat> sums{Rat(0)};
  for (const auto& c : cubes) {
    const auto n = sums.size();
    for (std::size_t i = 0; i < n; ++i) sums.push_back(sums[i] + c.side());
  }
  std::sort(sums.begin(), sums.end());
  sums.erase(std::unique(sums.begin(), sums.end()), sums.end());
  std::vector<PlacedCube> placed;
  std::function<bool(std::size_t)> go = [&](std::size_t j) {
    if (j == cubes.size()) return true;
    std::vector<Rat> axis;
    for (const auto& v : sums)
      if (v + cubes[j].side() <= Rat(1)) axis.push_back(v);
    std::vector<std::size_t> idx(static_cast<std::size_t>(d), 0);
    while (true) {
      std::vector<Rat> p;
      for (int a = 0; a < d; ++a) p.push_back(axis[idx[a]]);
      PlacedCube c(cubes[j], p);
      if (fits_among(c, placed)) {
        placed.push_back(c);
        if (go(j + 1)) return true;
        placed.pop_back();
      }
      int a = 0;
      while (a < d && ++idx[a] == axis.size()) idx[a++] = 0;
      if (a == d) return false;
    }
  };
  return go(0);
}

}  // namespace

TEST_CASE("costs add up to the number of bins") {
  const auto cfg = homogeneous_mixture(2, {2, 3, 4}, Rat(1, 3));
  Rat total = 0;
  for (std::size_t i = 0; i < cfg.items.size(); ++i) total += item_cost(cfg, i);
  CHECK(total == 3);
  CHECK(social_cost(cfg) == 3);
}

TEST_CASE("homogeneous mixtures are Nash") {
  for (int d : {2, 3})
    for (int a = 2; a <= 5; ++a)
      for (int b = a + 1; b <= 5; ++b) {
        const auto cfg = homogeneous_mixture(d, {a, b}, Rat(1, b - 1));
        CHECK(is_nash(cfg).nash);
      }
}

TEST_CASE("an under-filled pair of bins is not Nash") {
  const auto cfg = underfilled(2, 3, Rat(1, 2));
  const auto cert = is_nash(cfg);
  CHECK_FALSE(cert.nash);
  REQUIRE_FALSE(cert.improving.empty());
  const auto& m = cert.improving.front();
  CHECK(m.cost_after < m.cost_before);
  auto moved = cfg;
  apply_move(moved, m);
  CHECK_NOTHROW(validate_config(moved));
  CHECK(item_cost(moved, moved.item_index(m.item)) == m.cost_after);
}

TEST_CASE("repack layout decides small bins exactly") {
  const CubeClass c3(3, Rat(1, 9), 2);
  CHECK(repack_layout(2, std::vector<CubeClass>(4, c3)).has_value());
  CHECK_FALSE(repack_layout(2, std::vector<CubeClass>(5, c3)).has_value());
  const CubeClass c2(2, Rat(1, 9), 2);
  CHECK_FALSE(repack_layout(2, {c2, c2}).has_value());
  CHECK(repack_layout(2, {c2, c3, c3, c3}).has_value());
  const CubeClass c4(4, Rat(1, 9), 2);
  const auto lay = repack_layout(2, {c2, c4, c4, c4, c4, c4});
  REQUIRE(lay.has_value());
  Bin b(2);
  std::vector<CubeClass> cls{c2, c4, c4, c4, c4, c4};
  for (std::size_t i = 0; i < cls.size(); ++i) b.cubes.emplace_back(cls[i], (*lay)[i]);
  CHECK(verify_bin(b).ok());
  CHECK_THROWS_AS(repack_layout(2, std::vector<CubeClass>(13, c4)), BudgetExceeded);
}

TEST_CASE("repack layout agrees with a brute-force oracle") {
  Rng rng(77);
  const std::vector<Rat> epsilons{Rat(1, 16), Rat(1, 10), Rat(0), Rat(1, 3)};
  std::size_t yes = 0, no = 0;
  for (int trial = 0; trial < 150; ++trial) {
    const int d = trial % 5 == 0 ? 3 : 2;
    const std::size_t n = 2 + rng.below(d == 2 ? 4 : 3);
    std::vector<CubeClass> cubes;
    const bool mixed = trial % 7 == 0;
    for (std::size_t i = 0; i < n; ++i) {
      const Rat eps = mixed ? Rat(1, 990 + static_cast<long>(rng.below(20))) : epsilons[trial % epsilons.size()];
      cubes.emplace_back(static_cast<int>(rng.between(2, 4)), eps, d);
    }
    const auto lay = repack_layout(d, cubes);
    CHECK(lay.has_value() == brute_fits(d, cubes));
    (lay ? yes : no) += 1;
    if (lay) {
      Bin b(d);
      for (std::size_t i = 0; i < n; ++i) b.cubes.emplace_back(cubes[i], (*lay)[i]);
      CHECK(verify_bin(b).ok());
    }
  }
  CHECK(yes > 20);
  CHECK(no > 20);
}

TEST_CASE("insertion layout finds room next to existing cubes") {
  const CubeClass c3(3, Rat(1, 9), 2);
  std::vector<PlacedCube> fixed{PlacedCube(c3, {0, 0})};
  const auto lay = insertion_layout(2, fixed, {c3, c3, c3});
  REQUIRE(lay.has_value());
  std::vector<PlacedCube> all = fixed;
  for (const auto& p : *lay) all.emplace_back(c3, p);
  CHECK(verify_bin(Bin(2, all)).ok());
  CHECK_FALSE(insertion_layout(2, fixed, {c3, c3, c3, c3}).has_value());
}

TEST_CASE("best-response dynamics raise the sorted volume vector") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    Rng rng(seed);
    const auto start = random_config(2, 8, {2, 3, 4}, Rat(1, 9), rng);
    for (auto policy : {DynamicsPolicy::first, DynamicsPolicy::best, DynamicsPolicy::random}) {
      const auto res = best_response_dynamics(start, policy, 200, {}, seed);
      CHECK(res.converged);
      auto cfg = start;
      auto prev = sorted_volumes(cfg);
      for (const auto& m : res.trace) {
        CHECK(m.cost_after < m.cost_before);
        apply_move(cfg, m);
        auto next = sorted_volumes(cfg);
        CHECK(std::lexicographical_compare(prev.begin(), prev.end(), next.begin(), next.end()));
        prev = next;
      }
      CHECK(is_nash(res.final).nash);
      CHECK(social_cost(res.final) <= social_cost(start));
      const auto p2 = prop2_check(res.final, true);
      CHECK(p2.ok);
      CHECK(p2.low_bins <= 1);
    }
  }
}

TEST_CASE("coalition cap 1 matches the Nash check") {
  for (std::uint64_t seed = 0; seed < 12; ++seed) {
    Rng rng(100 + seed);
    const auto cfg = random_config(2, 6, {2, 3, 4}, Rat(1, 9), rng);
    StrongNashOptions so;
    so.max_coalition = 1;
    CHECK(is_strong_nash(cfg, so).strong_nash == is_nash(cfg).nash);
  }
}

TEST_CASE("strong Nash on small mixtures") {
  const auto h34 = homogeneous_mixture(2, {3, 4}, Rat(1, 16));
  CHECK(is_nash(h34).nash);
  StrongNashOptions so;
  so.max_coalition = 2;
  const auto cert = is_strong_nash(h34, so);
  CHECK_FALSE(cert.strong_nash);
  REQUIRE(cert.witness);
  CHECK(cert.witness->members.size() == 2);
  auto moved = h34;
  apply_coalition(moved, *cert.witness);
  CHECK_NOTHROW(validate_config(moved));
  for (const auto& m : cert.witness->members) {
    CHECK(m.cost_after < m.cost_before);
    CHECK(item_cost(moved, moved.item_index(m.item)) == m.cost_after);
  }

  so.max_coalition = 3;
  CHECK(is_strong_nash(homogeneous_mixture(2, {2, 4}, Rat(1, 16)), so).strong_nash);
}

TEST_CASE("PoA instance on the warm-up packing") {
  const auto U = build_U(warmup_family(3), Rat(1, 9));
  const auto p = poa_instance(U);
  CHECK(p.P_bins == 8);
  CHECK(p.P_prime_bins == 12);
  CHECK(p.ratio == Rat(3, 2));
  CHECK(p.ratio == U.weight);
  REQUIRE(p.nash);
  CHECK(p.nash->nash);
  CHECK_THROWS_AS(spoa_instance(U), InputError);
}

TEST_CASE("prop1 against a direct rational evaluation") {
  for (int k = 2; k <= 12; ++k)
    for (int l = k + 1; l <= 13; ++l)
      for (int d = 2; d <= 8; ++d) {
        const Rat lhs = (Rat(1) - Rat(1, k)).pow(d) + Rat(1, l).pow(d);
        const Rat rhs = (Rat(1) - Rat(1, l)).pow(d);
        CHECK(prop1_check(k, l, d) == (lhs < rhs));
      }
  CHECK(prop1_sweep(30, 10).failures == 0);
}

TEST_CASE("Meir-Moser predicate boundary") {
  // l = 1/2, d = 2: bound 1/4 + 1/4 = 1/2.
  CHECK(meir_moser_predicate({Rat(1, 4), Rat(1, 4)}, Rat(1, 2), 2));
  CHECK_FALSE(meir_moser_predicate({Rat(1, 4), Rat(1, 4), Rat(1, 1000000)}, Rat(1, 2), 2));
  CHECK(meir_moser_predicate({Rat(1)}, Rat(1), 3));
  CHECK_THROWS_AS(meir_moser_predicate({}, Rat(0), 2), InputError);
}

TEST_CASE("prop2 flags too many low bins only for Nash configs") {
  // Two nearly empty class-4 bins would each be below 1/4.
  Bin a(2), b(2);
  a.cubes.emplace_back(CubeClass(4, Rat(1, 3), 2), std::vector<Rat>{0, 0});
  b.cubes.emplace_back(CubeClass(4, Rat(1, 3), 2), std::vector<Rat>{0, 0});
  const auto two = config_from_bins(2, {a, b});
  CHECK(prop2_check(two, false).ok);
  CHECK_FALSE(prop2_check(two, true).ok);
  CHECK(prop2_check(two, true).low_bins == 2);
}

TEST_CASE("config validation") {
  auto cfg = homogeneous_mixture(2, {3}, Rat(1, 2));
  cfg.items[1].cube.base = cfg.items[0].cube.base;
  CHECK_THROWS_AS(validate_config(cfg), VerificationError);
}
