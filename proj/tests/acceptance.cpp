// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fails.

#include <chrono>
#include <filesystem>
#include <functional>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <string>

#include "hcpack/errors.hpp"
#include "hcpack/game.hpp"
#include "hcpack/online.hpp"
#include "hcpack/packing.hpp"
#include "hcpack/reproduce.hpp"

using namespace hcp;

namespace {

// Wall-clock limits per criterion, in seconds.
constexpr double kLimitGeometry = 10.0;
constexpr double kLimitAdversary = 30.0;
constexpr double kLimitProp1 = 5.0;
constexpr double kLimitSpoa = 60.0;

struct Outcome {
  bool pass = true;
  std::ostringstream note;

  void require(bool ok, const std::string& what) {
    if (!ok && pass) note << "failed: " << what << "; ";
    pass = pass && ok;
  }
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::vector<int> range(int lo, int hi) {
  std::vector<int> v;
  for (int k = lo; k <= hi; ++k) v.push_back(k);
  return v;
}

void geometry(Outcome& o) {
  std::size_t bins = 0;
  for (int d = 2; d <= 6; ++d) {
    for (int S = 2; S <= 6; ++S) {
      auto classes = range(2, S);
      if (classes.size() > static_cast<std::size_t>(d)) continue;
      const Rat eps(1, static_cast<long>(S) * S);
      const auto U = build_U(warmup_family_for(d, classes), eps);
      o.require(verify_bin(U.bin).ok(), "build_U d=" + std::to_string(d) + " S=" + std::to_string(S));
      ++bins;
    }
    for (int k = 2; k <= 6; ++k) {
      const auto H = build_homogeneous(k, d, Rat(1, k - 1));
      o.require(verify_bin(H.bin).ok(), "homogeneous");
      ++bins;
    }
  }
  o.note << bins << " bins verified";
}

void fact_gap(Outcome& o) {
  const Rat eps(1, 144);
  std::size_t pairs = 0;
  for (int k = 2; k <= 12; ++k) {
    for (int kp = k + 1; kp <= 12; ++kp, ++pairs) o.require(gap_inequality_holds(k, kp, eps), "gap");
    for (int a = 1; a <= k; ++a)
      for (int b = a + 1; b <= k; ++b) {
        const bool overlap = !intervals_disjoint(letter_interval(k, a, eps), letter_interval(k, b, eps));
        o.require(overlap == (a == k - 1 && b == k), "overlap pattern k=" + std::to_string(k));
      }
  }
  o.note << pairs << " class pairs";
}

void warmup_languages(Outcome& o) {
  for (int d = 2; d <= 10; ++d) {
    const auto f = warmup_family(d);
    Rat w = 0;
    for (const auto& L : f.languages) {
      o.require(is_gapped(L).gapped, "gapped");
      o.require(L.size() == ipow(L.k() - 1, static_cast<unsigned>(d - 1)), "language size");
      w += Rat(1, L.k() - 1);
    }
    const auto cert = certify_family(f);
    o.require(cert.ok && cert.exhaustive, "separation d=" + std::to_string(d));
    Rat fw = 0;
    for (const auto& L : f.languages) fw += Rat(L.size()) / Rat(ipow(L.k() - 1, static_cast<unsigned>(d)));
    o.require(fw == w, "weight d=" + std::to_string(d));
    if (d == 4) o.require(w == Rat(11, 6), "d=4 weight 11/6");
  }
  o.note << "d=2..10";
}

// Brute-force count of core words over [k] \ {k-1} on `n` positions hitting k in every set.
BigInt brute_good(int k, int n, const std::vector<std::vector<int>>& sets) {
  std::vector<int> alphabet;
  for (int a = 1; a <= k; ++a)
    if (a != k - 1) alphabet.push_back(a);
  std::vector<std::size_t> idx(n, 0);
  BigInt good = 0;
  while (true) {
    bool ok = true;
    for (const auto& J : sets) {
      bool hit = false;
      for (int p : J) hit = hit || alphabet[idx[p]] == k;
      ok = ok && hit;
    }
    if (ok) ++good;
    int i = n - 1;
    while (i >= 0 && idx[i] + 1 == alphabet.size()) idx[i--] = 0;
    if (i < 0) return good;
    ++idx[i];
  }
}

void randomized_construction(Outcome& o) {
  std::size_t feasible = 0, infeasible = 0, counts = 0;
  o.require(count_good_words_exact(3, 3, std::vector<std::vector<int>>{{0, 1}}) == 6, "example count 6");
  o.require(brute_good(3, 3, {{0, 1}}) == 6, "brute example 6");
  for (int d = 2; d <= 10; ++d)
    for (int S = 2; S <= 4; ++S)
      for (std::uint64_t seed = 0; seed < 20; ++seed) {
        FamilyOptions fo;
        fo.mode = BuildMode::enumerate;
        SeparatedFamily f;
        try {
          f = build_separated_family(d, range(2, S), SeedStream(seed).sub("acceptance"), fo);
        } catch (const BudgetExceeded&) {
          ++infeasible;
          continue;
        }
        ++feasible;
        const auto cert = certify_family(f);
        o.require(cert.ok && cert.exhaustive, "certificate d=" + std::to_string(d));
        for (std::size_t i = 0; i < f.languages.size(); ++i) {
          const auto& L = f.languages[i];
          const auto& F = L.core_coords();
          if (ipow(L.k() - 1, static_cast<unsigned>(F.size())) > 1000000) continue;
          std::vector<std::vector<int>> sets;
          for (std::size_t j = 0; j < i; ++j) {
            std::vector<int> diff;
            std::set_difference(F.begin(), F.end(), f.fsets->sets[j].begin(), f.fsets->sets[j].end(),
                                std::back_inserter(diff));
            sets.push_back(positions_in_core(F, diff));
          }
          const BigInt brute = brute_good(L.k(), static_cast<int>(F.size()), sets);
          o.require(count_good_words_exact(L.k(), static_cast<int>(F.size()), sets) == brute, "inclusion-exclusion");
          o.require(L.core_count() == brute, "core count");
          ++counts;
        }
      }
  o.require(feasible > 0, "no feasible run");
  o.note << feasible << " feasible runs, " << infeasible << " over budget, " << counts << " counts cross-checked";
}

void adversary(Outcome& o) {
  const auto U = build_U(warmup_family(3), Rat(1, 9));
  for (int M : {1, 2}) {
    const BigInt C = full_scale(U, M);
    const auto inst = adversarial_instance(U, M);
    const auto lb = lower_bound_certificate(U, M, C);
    o.require(lb.total == BigInt(12 * M), "lower bound 12M");
    o.require(Rat(lb.total) == Rat(BigInt(BigInt(M) * adversary_N(U))) * U.weight, "lower bound = MN w(U)");
    const auto off = offline_certificate(U, inst, C);
    o.require(off.ok() && off.bins <= BigInt(16 * M), "offline certificate");
    auto alg = make_class_harmonic(M);
    const auto run = run_bounded_space(*alg, inst, M);
    o.require(BigInt(static_cast<unsigned long>(run.bins_used)) >= lb.total, "measured >= bound");
    const auto ratio = ratio_report(run, off, lb);
    o.require(ratio.ratio >= U.weight / Rat(2), "ratio >= w/2");
    o.note << "M=" << M << ": bound " << big_str(lb.total) << ", bins " << run.bins_used << ", offline "
           << big_str(off.bins) << ", ratio " << ratio.ratio.str() << "; ";
  }
}

void prop1(Outcome& o) {
  const auto s = prop1_sweep(100, 20);
  o.require(s.failures == 0, "prop1 failure");
  o.note << s.checked << " triples";
}

void nash(Outcome& o) {
  std::size_t configs = 0;
  for (int d : {2, 3})
    for (int mask = 1; mask < 16; ++mask) {
      std::vector<int> classes;
      for (int k = 2; k <= 5; ++k)
        if (mask & (1 << (k - 2))) classes.push_back(k);
      const Rat eps(1, classes.back() - 1);
      const auto cfg = homogeneous_mixture(d, classes, eps);
      o.require(is_nash(cfg).nash, "mixture not Nash");
      ++configs;
    }
  // H_3 missing one cube next to a bin with a single class-3 cube.
  Bin partial = build_homogeneous(3, 2, Rat(1, 2)).bin;
  partial.cubes.pop_back();
  Bin lone(2);
  lone.cubes.emplace_back(CubeClass(3, Rat(1, 2), 2), std::vector<Rat>{0, 0});
  const auto broken = config_from_bins(2, {partial, lone});
  const auto cert = is_nash(broken);
  o.require(!cert.nash && !cert.improving.empty(), "broken config passed");
  if (!cert.improving.empty()) {
    auto moved = broken;
    apply_move(moved, cert.improving.front());
    validate_config(moved);
    o.require(item_cost(moved, moved.item_index(cert.improving.front().item)) < cert.improving.front().cost_before,
              "move does not improve");
  }
  o.note << configs << " mixtures Nash, broken config refuted";
}

void poa(Outcome& o) {
  const auto U = build_U(warmup_family(3), Rat(1, 9));
  const auto p = poa_instance(U);
  o.require(p.P_bins == 8, "|P| = 8");
  o.require(p.P_prime_bins == 12, "|P'| = 12");
  o.require(p.ratio == Rat(3, 2) && p.ratio == U.weight, "ratio 3/2");
  o.require(p.nash && p.nash->nash, "P' Nash");
  o.note << "|P|=" << p.P_bins << " |P'|=" << p.P_prime_bins << " ratio " << p.ratio.str();
}

void spoa(Outcome& o) {
  const auto U = build_U(warmup_family_for(2, {2, 4}), Rat(1, 16));
  PoaOptions po;
  po.coalition_cap = 3;
  const auto p = spoa_instance(U, po);
  o.require(p.ratio == U.weight, "ratio = weight");
  o.require(p.strong && p.strong->strong_nash && p.strong->max_coalition == 3, "P' strong Nash");
  o.note << "ratio " << p.ratio.str() << ", " << (p.strong ? p.strong->type_coalitions : 0) << " coalition types";
}

void prop2(Outcome& o) {
  GameOptions g;
  g.mode = Feasibility::repack;
  std::size_t certified = 0;
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    Rng rng(SeedStream(seed).sub("prop2").seed());
    const std::size_t items = 4 + rng.below(9);
    const auto start = random_config(2, items, {2, 3, 4, 5}, Rat(1, 16), rng);
    const auto res = best_response_dynamics(start, DynamicsPolicy::random, 1000, g, seed);
    o.require(res.converged, "dynamics did not converge");
    const auto cert = is_nash(res.final, g);
    o.require(cert.nash, "endpoint not Nash");
    const auto rep = prop2_check(res.final, cert.nash);
    o.require(rep.ok && rep.low_bins <= 1, "more than one bin below 1/4");
    certified += cert.nash;
  }
  // Boundary: l = 1/2, d = 2 allows total volume exactly 1/2.
  o.require(meir_moser_predicate({Rat(1, 4), Rat(1, 4)}, Rat(1, 2), 2), "Meir-Moser at equality");
  o.require(!meir_moser_predicate({Rat(1, 4), Rat(1, 4), Rat(1, 1000000007)}, Rat(1, 2), 2), "Meir-Moser above");
  o.require(meir_moser_predicate({Rat(1, 27), Rat(8, 27)}, Rat(1, 3), 3), "Meir-Moser l=1/3");
  o.require(!meir_moser_predicate({Rat(1, 27), Rat(8, 27), Rat(1, 1000000007)}, Rat(1, 3), 3), "Meir-Moser l=1/3 above");
  o.note << certified << " endpoints certified Nash (repack)";
}

void determinism(Outcome& o) {
  const auto root = std::filesystem::temp_directory_path() / "hcpack_acceptance";
  std::filesystem::remove_all(root);
  ReproduceOptions opt;
  opt.dims = {2, 3};
  opt.seed = 2024;
  const auto a = reproduce(opt, root / "a");
  const auto b = reproduce(opt, root / "b");
  o.require(a.files == b.files, "bundle hashes differ");
  o.require(sha256_file(root / "a" / "manifest.json") == sha256_file(root / "b" / "manifest.json"), "manifest differs");
  o.note << a.files.size() << " files hash-identical";
  std::filesystem::remove_all(root);
}

}  // namespace

int main() {
  struct Criterion {
    int id;
    const char* name;
    std::function<void(Outcome&)> run;
    double limit;  // 0 = no limit
  };
  const std::vector<Criterion> all{
      {1, "geometry exactness", geometry, kLimitGeometry},
      {2, "gap inequality and overlap pattern", fact_gap, 0},
      {3, "warm-up languages", warmup_languages, 0},
      {4, "randomized construction and counting", randomized_construction, 0},
      {5, "adversary counting", adversary, kLimitAdversary},
      {6, "prop1 sweep", prop1, kLimitProp1},
      {7, "Nash certification", nash, 0},
      {8, "PoA instance", poa, 0},
      {9, "SPoA instance", spoa, kLimitSpoa},
      {10, "prop2 on dynamics endpoints", prop2, 0},
      {11, "determinism", determinism, 0},
  };
  int failed = 0;
  for (const auto& c : all) {
    Outcome o;
    const auto t0 = std::chrono::steady_clock::now();
    try {
      c.run(o);
    } catch (const std::exception& e) {
      o.require(false, std::string("exception: ") + e.what());
    }
    const double t = seconds_since(t0);
    if (c.limit > 0) o.require(t < c.limit, "over time limit");
    std::cout << (o.pass ? "PASS" : "FAIL") << " criterion " << c.id << " (" << c.name << "): " << o.note.str()
              << " [" << std::fixed << std::setprecision(2) << t << "s]" << std::endl;
    failed += !o.pass;
  }
  std::cout << (failed ? "FAIL" : "PASS") << ": " << (all.size() - failed) << "/" << all.size() << " criteria\n";
  return failed ? 1 : 0;
}
