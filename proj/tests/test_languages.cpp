#include <doctest.h>

#include <functional>
#include <set>

#include "hcpack/errors.hpp"
#include "hcpack/languages.hpp"
#include "hcpack/packing.hpp"

using namespace hcp;

namespace {

// Every word of [alphabet]^n, lexicographic.
void for_each_word(const std::vector<int>& alphabet, int n, const std::function<void(const std::vector<int>&)>& f) {
  std::vector<int> w(n, alphabet.front());
  std::vector<std::size_t> idx(n, 0);
  while (true) {
    f(w);
    int i = n - 1;
    while (i >= 0 && idx[i] + 1 == alphabet.size()) {
      idx[i] = 0;
      w[i] = alphabet.front();
      --i;
    }
    if (i < 0) return;
    w[i] = alphabet[++idx[i]];
  }
}

BigInt brute_good(int k, int n, const std::vector<std::vector<int>>& avoid) {
  std::vector<int> alphabet;
  for (int a = 1; a <= k; ++a)
    if (a != k - 1) alphabet.push_back(a);
  BigInt good = 0;
  for_each_word(alphabet, n, [&](const std::vector<int>& w) {
    for (const auto& J : avoid) {
      bool hits = false;
      for (int p : J) hits = hits || w[p] == k;
      if (!hits) return;
    }
    ++good;
  });
  return good;
}

// Separation straight from the definition over all word pairs.
bool brute_separated(const Language& lo, const Language& hi) {
  const auto A = lo.all_words(1u << 20);
  const auto B = hi.all_words(1u << 20);
  for (const auto& a : A)
    for (const auto& b : B) {
      bool ok = false;
      for (int i = 0; i < a.dim() && !ok; ++i) ok = a.letters[i] < lo.k() && b.letters[i] == hi.k();
      if (!ok) return false;
    }
  return true;
}

}  // namespace

TEST_CASE("word validation") {
  CHECK_NOTHROW(validate_word(Word{3, {1, 2, 3}}));
  CHECK_THROWS_AS(validate_word(Word{3, {0, 2}}), InputError);
  CHECK_THROWS_AS(validate_word(Word{3, {4}}), InputError);
}

TEST_CASE("warm-up family: sizes, gapped, separated, weight") {
  for (int d = 2; d <= 6; ++d) {
    const auto f = warmup_family(d);
    CHECK(f.classes.size() == static_cast<std::size_t>(d - 1));
    Rat w = 0;
    for (const auto& L : f.languages) {
      CHECK(L.size() == ipow(L.k() - 1, d - 1));
      CHECK(is_gapped(L).gapped);
      w += Rat(1, L.k() - 1);
    }
    for (std::size_t i = 0; i < f.languages.size(); ++i)
      for (std::size_t j = i + 1; j < f.languages.size(); ++j) {
        const auto r = are_separated(f.languages[i], f.languages[j]);
        CHECK(r.separated);
        CHECK(r.exhaustive);
        if (d <= 5) CHECK(brute_separated(f.languages[i], f.languages[j]));
      }
    CHECK(certify_family(f).ok);
    const auto U = build_U(f, Rat(1, static_cast<long>(d) * d));
    CHECK(U.weight == w);
  }
  CHECK(build_U(warmup_family(4), Rat(1, 16)).weight == Rat(11, 6));
}

TEST_CASE("a non-gapped language is detected") {
  auto L = Language::explicit_words(3, 2, {Word{3, {2, 1}}, Word{3, {3, 1}}});
  const auto g = is_gapped(L);
  CHECK_FALSE(g.gapped);
  CHECK(g.failing_coordinate == std::optional<int>{0});
}

TEST_CASE("a non-separated pair yields a witness") {
  auto lo = Language::explicit_words(2, 2, {Word{2, {1, 1}}});
  auto hi = Language::explicit_words(3, 2, {Word{3, {1, 1}}});
  const auto r = are_separated(lo, hi);
  CHECK_FALSE(r.separated);
  REQUIRE(r.witness);
  CHECK(r.witness->first.letters == std::vector<int>{1, 1});
  CHECK_THROWS_AS(are_separated(hi, lo), InputError);
}

TEST_CASE("bad words") {
  std::vector<int> core{1, 3, 1};
  std::vector<int> J1{0, 2}, J2{1}, none{};
  CHECK(is_bad_word(core, 3, J1));
  CHECK_FALSE(is_bad_word(core, 3, J2));
  CHECK(is_bad_word(core, 3, none));
}

TEST_CASE("good-word count: known value and brute force") {
  std::vector<std::vector<int>> one{{0, 1}};
  CHECK(count_good_words_exact(3, 3, one) == 6);
  CHECK(brute_good(3, 3, one) == 6);

  Rng rng(11);
  for (int trial = 0; trial < 60; ++trial) {
    const int k = 2 + static_cast<int>(rng.below(4));
    const int n = 1 + static_cast<int>(rng.below(7));
    const int sets = static_cast<int>(rng.below(5));
    std::vector<std::vector<int>> avoid;
    for (int s = 0; s < sets; ++s) avoid.push_back(rng.subset(n, 1 + static_cast<int>(rng.below(n))));
    CHECK(count_good_words_exact(k, n, avoid) == brute_good(k, n, avoid));
  }
}

TEST_CASE("good-word count respects its term budget") {
  std::vector<std::vector<int>> avoid(5, std::vector<int>{0});
  CHECK_THROWS_AS(count_good_words_exact(3, 2, avoid, 16), BudgetExceeded);
}

TEST_CASE("implicit and materialized cores agree") {
  std::vector<int> F{0, 2, 3};
  std::vector<std::vector<int>> avoid{{0, 1}, {2}};
  const BigInt n = count_good_words_exact(4, 3, avoid);
  auto L = Language::implicit(4, 5, F, avoid, n);
  CHECK(L.size() == n * 9);
  std::size_t seen = 0;
  for_each_word({1, 2, 4}, 3, [&](const std::vector<int>& c) {
    const bool good = !is_bad_word(c, 4, avoid[0]) && !is_bad_word(c, 4, avoid[1]);
    CHECK(L.core_contains(c) == good);
    seen += good;
  });
  CHECK(BigInt(static_cast<unsigned long>(seen)) == n);
  const auto words = L.all_words(100000);
  CHECK(BigInt(static_cast<unsigned long>(words.size())) == L.size());
  CHECK(std::is_sorted(words.begin(), words.end()));
  for (const auto& w : words) CHECK(L.contains(w));
  CHECK(L.first_words(5).size() == 5);
}

TEST_CASE("F-sets respect the intersection threshold") {
  for (int d : {8, 12, 20}) {
    const auto fs = sample_f_sets(d, SeedStream(3).sub("f"), FSetOptions{4});
    CHECK(fs.sets.size() == 4);
    for (std::size_t i = 0; i < fs.sets.size(); ++i) {
      CHECK(fs.sets[i].size() == static_cast<std::size_t>((d + 1) / 2));
      for (std::size_t j = i + 1; j < fs.sets.size(); ++j) {
        std::vector<int> both;
        std::set_intersection(fs.sets[i].begin(), fs.sets[i].end(), fs.sets[j].begin(), fs.sets[j].end(),
                              std::back_inserter(both));
        CHECK(Rat(static_cast<long>(both.size())) < fs.threshold);
      }
    }
  }
}

TEST_CASE("randomized construction: certified and geometrically disjoint") {
  for (std::uint64_t seed = 0; seed < 6; ++seed) {
    SeparatedFamily f;
    try {
      f = build_separated_family(8, {2, 3}, SeedStream(seed));
    } catch (const BudgetExceeded&) {
      continue;
    }
    CHECK(certify_family(f).ok);
    CHECK(brute_separated(f.languages[0], f.languages[1]));
    for (const auto& L : f.languages) CHECK(is_gapped(L).gapped);
    const auto U = build_U(f, Rat(1, 9));
    CHECK(verify_bin(U.bin).ok());
  }
}

TEST_CASE("power-of-two classes") {
  CHECK(power_of_two_classes(3) == std::vector<int>{2, 4});
  CHECK(power_of_two_classes(4) == std::vector<int>{2, 4, 8});
}
