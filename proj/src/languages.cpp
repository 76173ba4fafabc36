#include "hcpack/languages.hpp"

#include <algorithm>
#include <numeric>
#include <set>
#include <sstream>

#include "hcpack/errors.hpp"

namespace hcp {

namespace {

// Letters of the core alphabet [k] \ {k-1}, ascending.
std::vector<int> core_alphabet(int k) {
  std::vector<int> a;
  for (int x = 1; x <= k; ++x)
    if (x != k - 1) a.push_back(x);
  return a;
}

// Advances `digits` (indices into an alphabet of `radix` letters) in
// lexicographic order. Returns false after the last tuple.
bool next_tuple(std::vector<int>& digits, int radix) {
  for (std::size_t i = digits.size(); i-- > 0;) {
    if (++digits[i] < radix) return true;
    digits[i] = 0;
  }
  return false;
}

void check_coords(int d, const std::vector<int>& coords) {
  for (std::size_t i = 0; i < coords.size(); ++i) {
    if (coords[i] < 0 || coords[i] >= d) throw InputError("coordinate out of range: " + std::to_string(coords[i]));
    if (i > 0 && coords[i] <= coords[i - 1]) throw InputError("core coordinates must be strictly ascending");
  }
}

bool letters_in_range(const std::vector<int>& letters, int k) {
  return std::all_of(letters.begin(), letters.end(), [k](int x) { return x >= 1 && x <= k; });
}

}  // namespace

void validate_word(const Word& w) {
  if (w.k < 2) throw InputError("word alphabet bound must be >= 2");
  if (!letters_in_range(w.letters, w.k))
    throw InputError("word letter outside [1, " + std::to_string(w.k) + "]");
}

Language Language::explicit_words(int k, int d, std::vector<Word> words) {
  if (k < 2 || d < 1) throw InputError("language requires k >= 2 and d >= 1");
  Language L(k, d);
  L.core_.resize(static_cast<std::size_t>(d));
  std::iota(L.core_.begin(), L.core_.end(), 0);
  std::vector<CoreWord> cores;
  cores.reserve(words.size());
  for (auto& w : words) {
    if (w.k != k) throw InputError("word alphabet bound differs from language class");
    if (w.dim() != d) throw InputError("word length differs from language dimension");
    validate_word(w);
    cores.push_back(std::move(w.letters));
  }
  std::sort(cores.begin(), cores.end());
  cores.erase(std::unique(cores.begin(), cores.end()), cores.end());
  L.core_count_ = static_cast<unsigned long>(cores.size());
  L.core_words_ = std::move(cores);
  return L;
}

Language Language::product(int k, int d, std::vector<int> core_coords, std::vector<CoreWord> core_words) {
  if (k < 2 || d < 1) throw InputError("language requires k >= 2 and d >= 1");
  check_coords(d, core_coords);
  Language L(k, d);
  for (const auto& c : core_words) {
    if (c.size() != core_coords.size()) throw InputError("core word length differs from core size");
    if (!letters_in_range(c, k)) throw InputError("core letter outside [1, k]");
  }
  std::sort(core_words.begin(), core_words.end());
  core_words.erase(std::unique(core_words.begin(), core_words.end()), core_words.end());
  L.core_ = std::move(core_coords);
  L.core_count_ = static_cast<unsigned long>(core_words.size());
  L.core_words_ = std::move(core_words);
  return L;
}

Language Language::implicit(int k, int d, std::vector<int> core_coords,
                            std::vector<std::vector<int>> avoid_positions, BigInt core_count) {
  if (k < 2 || d < 1) throw InputError("language requires k >= 2 and d >= 1");
  check_coords(d, core_coords);
  for (const auto& s : avoid_positions)
    for (int p : s)
      if (p < 0 || p >= static_cast<int>(core_coords.size())) throw InputError("avoid position outside the core");
  Language L(k, d);
  L.core_ = std::move(core_coords);
  L.avoid_ = std::move(avoid_positions);
  L.core_count_ = std::move(core_count);
  return L;
}

std::vector<int> Language::free_coords() const {
  std::vector<int> out;
  std::size_t j = 0;
  for (int i = 0; i < d_; ++i) {
    if (j < core_.size() && core_[j] == i) {
      ++j;
      continue;
    }
    out.push_back(i);
  }
  return out;
}

const std::vector<CoreWord>& Language::core_words() const {
  if (!core_words_) throw InputError("language core is implicit, not materialized");
  return *core_words_;
}

BigInt Language::size() const {
  return core_count_ * ipow(k_ - 1, static_cast<unsigned>(d_ - static_cast<int>(core_.size())));
}

bool Language::core_contains(const CoreWord& c) const {
  if (c.size() != core_.size() || !letters_in_range(c, k_)) return false;
  if (core_words_) return std::binary_search(core_words_->begin(), core_words_->end(), c);
  if (std::find(c.begin(), c.end(), k_ - 1) != c.end()) return false;
  return std::none_of(avoid_.begin(), avoid_.end(), [&](const std::vector<int>& s) { return is_bad_word(c, k_, s); });
}

bool Language::contains(const Word& w) const {
  if (w.k != k_ || w.dim() != d_) return false;
  CoreWord core;
  core.reserve(core_.size());
  std::size_t j = 0;
  for (int i = 0; i < d_; ++i) {
    int x = w.letters[static_cast<std::size_t>(i)];
    if (j < core_.size() && core_[j] == i) {
      core.push_back(x);
      ++j;
    } else if (x < 1 || x > k_ - 1) {
      return false;
    }
  }
  return core_contains(core);
}

Word Language::expand(const CoreWord& c, int free_letter) const {
  Word w{k_, std::vector<int>(static_cast<std::size_t>(d_), free_letter)};
  for (std::size_t j = 0; j < core_.size(); ++j) w.letters[static_cast<std::size_t>(core_[j])] = c.at(j);
  return w;
}

namespace {

// Calls fn(core) for every core word of L in lexicographic order until fn
// returns false. Implicit cores are generated by scanning candidates.
template <typename Fn>
void for_each_core(const Language& L, std::size_t scan_cap, Fn&& fn) {
  if (L.materialized()) {
    for (const auto& c : L.core_words())
      if (!fn(c)) return;
    return;
  }
  if (L.empty()) return;
  const auto alpha = core_alphabet(L.k());
  std::vector<int> digits(L.core_coords().size(), 0);
  CoreWord c(digits.size());
  std::size_t scanned = 0;
  do {
    if (++scanned > scan_cap) throw BudgetExceeded("core scan exceeded " + std::to_string(scan_cap) + " candidates");
    for (std::size_t i = 0; i < digits.size(); ++i) c[i] = alpha[static_cast<std::size_t>(digits[i])];
    bool bad = std::any_of(L.avoid_sets().begin(), L.avoid_sets().end(),
                           [&](const std::vector<int>& s) { return is_bad_word(c, L.k(), s); });
    if (!bad && !fn(c)) return;
  } while (next_tuple(digits, static_cast<int>(alpha.size())));
}

// Calls fn(word) for every free completion of `core` in lexicographic order.
template <typename Fn>
bool for_each_completion(const Language& L, const std::vector<int>& free, const CoreWord& core, Fn&& fn) {
  Word w = L.expand(core, 1);
  std::vector<int> digits(free.size(), 0);
  do {
    for (std::size_t i = 0; i < free.size(); ++i) w.letters[static_cast<std::size_t>(free[i])] = digits[i] + 1;
    if (!fn(w)) return false;
  } while (next_tuple(digits, L.k() - 1));
  return true;
}

}  // namespace

std::vector<Word> Language::all_words(std::size_t cap) const {
  if (size() > BigInt(static_cast<unsigned long>(cap)))
    throw BudgetExceeded("language of class " + std::to_string(k_) + " has " + big_str(size()) +
                         " words, above the cap of " + std::to_string(cap));
  std::vector<Word> out;
  out.reserve(to_size(size()));
  const auto free = free_coords();
  for_each_core(*this, std::max<std::size_t>(cap, 1) * 64, [&](const CoreWord& c) {
    for_each_completion(*this, free, c, [&](const Word& w) {
      out.push_back(w);
      return true;
    });
    return true;
  });
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<Word> Language::first_words(std::size_t budget, std::size_t scan_cap) const {
  std::vector<Word> out;
  if (budget == 0) return out;
  const auto free = free_coords();
  for_each_core(*this, scan_cap, [&](const CoreWord& c) {
    return for_each_completion(*this, free, c, [&](const Word& w) {
      out.push_back(w);
      return out.size() < budget;
    });
  });
  return out;
}

std::optional<CoreWord> Language::sample_core(Rng& rng, std::size_t max_tries) const {
  if (empty()) return std::nullopt;
  if (core_words_) return (*core_words_)[rng.below(core_words_->size())];
  const auto alpha = core_alphabet(k_);
  CoreWord c(core_.size());
  for (std::size_t t = 0; t < max_tries; ++t) {
    for (auto& x : c) x = alpha[rng.below(alpha.size())];
    if (core_contains(c)) return c;
  }
  return std::nullopt;
}

GappedCertificate is_gapped(const Language& L) {
  GappedCertificate cert;
  const auto d = static_cast<std::size_t>(L.dim());
  std::vector<bool> has_km1(d, false), has_k(d, false);
  if (!L.empty()) {
    // Free coordinates carry every letter of [k-1] and never k.
    for (int i : L.free_coords()) has_km1[static_cast<std::size_t>(i)] = true;
    const auto& core = L.core_coords();
    if (L.materialized()) {
      for (const auto& c : L.core_words()) {
        for (std::size_t j = 0; j < core.size(); ++j) {
          auto i = static_cast<std::size_t>(core[j]);
          if (c[j] == L.k() - 1) has_km1[i] = true;
          if (c[j] == L.k()) has_k[i] = true;
        }
      }
    } else {
      // Implicit cores use the alphabet [k]\{k-1}; letter k may appear at
      // every core coordinate.
      for (int i : core) has_k[static_cast<std::size_t>(i)] = true;
    }
  }
  cert.per_coordinate.resize(d);
  for (std::size_t i = 0; i < d; ++i) {
    Missing m = Missing::none;
    if (!has_km1[i] && !has_k[i]) m = Missing::both;
    else if (!has_km1[i]) m = Missing::k_minus_1;
    else if (!has_k[i]) m = Missing::k;
    cert.per_coordinate[i] = m;
    if (m == Missing::none && cert.gapped) {
      cert.gapped = false;
      cert.failing_coordinate = static_cast<int>(i);
    }
  }
  return cert;
}

namespace {

// Separation of one core pair: some coordinate i in the upper core carries
// letter k' and the lower word is below k there (always true on a free
// coordinate of the lower language).
class CorePairTester {
 public:
  CorePairTester(const Language& lower, const Language& upper) : lower_(lower), upper_(upper) {
    const auto& lc = lower.core_coords();
    for (int i : upper.core_coords()) {
      auto it = std::lower_bound(lc.begin(), lc.end(), i);
      lower_pos_.push_back(it != lc.end() && *it == i ? static_cast<int>(it - lc.begin()) : -1);
    }
  }

  bool separated(const CoreWord& c, const CoreWord& cu) const {
    for (std::size_t j = 0; j < cu.size(); ++j) {
      if (cu[j] != upper_.k()) continue;
      int p = lower_pos_[j];
      if (p < 0 || c[static_cast<std::size_t>(p)] < lower_.k()) return true;
    }
    return false;
  }

 private:
  const Language& lower_;
  const Language& upper_;
  std::vector<int> lower_pos_;
};

}  // namespace

SeparationResult are_separated(const Language& lower, const Language& upper, std::size_t samples,
                               std::uint64_t seed) {
  if (!(lower.k() < upper.k()))
    throw InputError("are_separated requires lower class < upper class, got " + std::to_string(lower.k()) +
                     " and " + std::to_string(upper.k()));
  if (lower.dim() != upper.dim()) throw InputError("are_separated: dimension mismatch");
  SeparationResult res;
  if (lower.empty() || upper.empty()) return res;
  CorePairTester tester(lower, upper);
  auto fail = [&](const CoreWord& c, const CoreWord& cu) {
    res.separated = false;
    res.witness = std::make_pair(lower.expand(c, 1), upper.expand(cu, 1));
  };
  if (lower.materialized() && upper.materialized()) {
    for (const auto& c : lower.core_words()) {
      for (const auto& cu : upper.core_words()) {
        ++res.pairs_checked;
        if (!tester.separated(c, cu)) {
          fail(c, cu);
          return res;
        }
      }
    }
    return res;
  }
  res.exhaustive = false;
  Rng rng(splitmix64(seed ^ (static_cast<std::uint64_t>(lower.k()) << 32) ^ static_cast<std::uint64_t>(upper.k())));
  for (std::size_t s = 0; s < samples; ++s) {
    auto c = lower.sample_core(rng);
    auto cu = upper.sample_core(rng);
    if (!c || !cu) break;
    ++res.pairs_checked;
    if (!tester.separated(*c, *cu)) {
      fail(*c, *cu);
      return res;
    }
  }
  return res;
}

Rat default_fset_threshold(int d) { return Rat(7L * d, 26L); }

FSets sample_f_sets(int d, const SeedStream& stream, const FSetOptions& opt) {
  if (d < 2) throw InputError("sample_f_sets requires d >= 2");
  const int count = opt.count > 0 ? opt.count : d;
  const int r = (d + 1) / 2;
  FSets out;
  out.d = d;
  out.threshold = opt.threshold.value_or(default_fset_threshold(d));
  Rng rng = stream.rng();

  auto intersection = [](const std::vector<int>& a, const std::vector<int>& b) {
    int n = 0;
    std::size_t i = 0, j = 0;
    while (i < a.size() && j < b.size()) {
      if (a[i] < b[j]) ++i;
      else if (b[j] < a[i]) ++j;
      else { ++n; ++i; ++j; }
    }
    return n;
  };

  int worst_seen = 0;
  while (static_cast<int>(out.sets.size()) < count) {
    std::size_t tries = 0;
    bool placed = false;
    while (!placed) {
      if (out.draws >= opt.attempt_budget) {
        std::ostringstream msg;
        msg << "sample_f_sets: attempt budget " << opt.attempt_budget << " exhausted for d=" << d
            << " with threshold " << out.threshold << " (placed " << out.sets.size() << " of " << count
            << " sets, " << out.restarts << " restarts, smallest blocking intersection seen " << worst_seen
            << ", mean intersection " << Rat(static_cast<long>(r) * r, d) << ")";
        throw BudgetExceeded(msg.str());
      }
      ++out.draws;
      auto cand = rng.subset(d, r);
      int worst = 0;
      for (const auto& s : out.sets) worst = std::max(worst, intersection(cand, s));
      if (Rat(worst) < out.threshold) {
        out.max_intersection = std::max(out.max_intersection, worst);
        out.sets.push_back(std::move(cand));
        placed = true;
      } else {
        ++out.rejections;
        worst_seen = worst_seen == 0 ? worst : std::min(worst_seen, worst);
        if (++tries >= opt.per_set_tries) {
          // Start over: the sets drawn so far may leave no room.
          out.sets.clear();
          out.max_intersection = 0;
          ++out.restarts;
          break;
        }
      }
    }
  }
  return out;
}

bool is_bad_word(std::span<const int> core, int k, std::span<const int> avoid_positions) {
  return std::none_of(avoid_positions.begin(), avoid_positions.end(),
                      [&](int p) { return core[static_cast<std::size_t>(p)] == k; });
}

std::vector<int> positions_in_core(std::span<const int> core_coords, std::span<const int> coords) {
  std::vector<int> out;
  out.reserve(coords.size());
  for (int c : coords) {
    auto it = std::lower_bound(core_coords.begin(), core_coords.end(), c);
    if (it == core_coords.end() || *it != c)
      throw InputError("coordinate " + std::to_string(c) + " is not in the core");
    out.push_back(static_cast<int>(it - core_coords.begin()));
  }
  std::sort(out.begin(), out.end());
  return out;
}

BigInt count_good_words_exact(int k, int core_size, std::span<const std::vector<int>> avoid_positions,
                              std::size_t term_cap) {
  if (k < 2 || core_size < 0) throw InputError("count_good_words: bad parameters");
  const std::size_t m = avoid_positions.size();
  if (m >= 63 || (std::size_t{1} << m) > term_cap)
    throw BudgetExceeded("inclusion-exclusion over " + std::to_string(m) + " sets exceeds the term cap " +
                         std::to_string(term_cap));
  const auto n = static_cast<std::size_t>(core_size);
  for (const auto& s : avoid_positions)
    for (int p : s)
      if (p < 0 || static_cast<std::size_t>(p) >= n) throw InputError("avoid position outside the core");

  // coeff[u] = sum over subsets T whose union has size u of (-1)^|T|.
  std::vector<long long> coeff(n + 1, 0);
  std::vector<int> multiplicity(n, 0);
  std::size_t union_size = 0;
  auto dfs = [&](auto&& self, std::size_t idx, int sign) -> void {
    if (idx == m) {
      coeff[union_size] += sign;
      return;
    }
    self(self, idx + 1, sign);
    for (int p : avoid_positions[idx])
      if (multiplicity[static_cast<std::size_t>(p)]++ == 0) ++union_size;
    self(self, idx + 1, -sign);
    for (int p : avoid_positions[idx])
      if (--multiplicity[static_cast<std::size_t>(p)] == 0) --union_size;
  };
  dfs(dfs, 0, 1);

  BigInt total = 0;
  for (std::size_t u = 0; u <= n; ++u) {
    if (coeff[u] == 0) continue;
    // Words bad for every class in T: letters on the union avoid k (k-2
    // choices), other positions are free (k-1 choices).
    BigInt term = ipow(k - 2, static_cast<unsigned>(u)) * ipow(k - 1, static_cast<unsigned>(n - u));
    total += BigInt(static_cast<long>(coeff[u])) * term;
  }
  return total;
}

GoodWordCount count_good_words(int k, int core_size, std::span<const std::vector<int>> avoid_positions,
                               std::size_t term_cap, std::size_t samples, Rng& rng) {
  GoodWordCount out;
  const std::size_t m = avoid_positions.size();
  if (m < 63 && (std::size_t{1} << m) <= term_cap) {
    out.count = count_good_words_exact(k, core_size, avoid_positions, term_cap);
    out.terms = std::size_t{1} << m;
    out.estimate = out.count.get_d();
    return out;
  }
  out.exact = false;
  const auto alpha = core_alphabet(k);
  std::vector<int> v(static_cast<std::size_t>(core_size));
  std::size_t good = 0;
  for (std::size_t s = 0; s < samples; ++s) {
    for (auto& x : v) x = alpha[rng.below(alpha.size())];
    bool bad = std::any_of(avoid_positions.begin(), avoid_positions.end(),
                           [&](const std::vector<int>& J) { return is_bad_word(v, k, J); });
    if (!bad) ++good;
  }
  out.samples = samples;
  double total = ipow(k - 1, static_cast<unsigned>(core_size)).get_d();
  out.estimate = samples == 0 ? 0.0 : total * static_cast<double>(good) / static_cast<double>(samples);
  return out;
}

const Language& SeparatedFamily::language(int k) const {
  for (std::size_t i = 0; i < classes.size(); ++i)
    if (classes[i] == k) return languages[i];
  throw InputError("family has no class " + std::to_string(k));
}

bool SeparatedFamily::power_of_two() const {
  return std::all_of(classes.begin(), classes.end(), [](int k) { return k >= 2 && (k & (k - 1)) == 0; });
}

namespace {

void check_classes(const std::vector<int>& classes) {
  for (std::size_t i = 0; i < classes.size(); ++i) {
    if (classes[i] < 2) throw InputError("classes must be >= 2");
    if (i > 0 && classes[i] <= classes[i - 1]) throw InputError("classes must be strictly ascending");
  }
}

SeparatedFamily warmup_with_coords(int d, std::vector<int> classes, const std::vector<int>& coords) {
  SeparatedFamily f;
  f.d = d;
  f.kind = FamilyKind::warmup;
  f.classes = std::move(classes);
  for (std::size_t i = 0; i < f.classes.size(); ++i) {
    int k = f.classes[i];
    f.languages.push_back(Language::product(k, d, {coords[i]}, {{k}}));
  }
  return f;
}

}  // namespace

SeparatedFamily warmup_family(int d) {
  if (d < 2) throw InputError("warmup_family requires d >= 2");
  std::vector<int> classes, coords;
  for (int k = 2; k <= d; ++k) {
    classes.push_back(k);
    coords.push_back(k - 1);
  }
  return warmup_with_coords(d, std::move(classes), coords);
}

SeparatedFamily warmup_family_for(int d, std::vector<int> classes) {
  check_classes(classes);
  if (static_cast<int>(classes.size()) > d)
    throw InputError("warm-up pattern needs one coordinate per class: " + std::to_string(classes.size()) +
                     " classes but d=" + std::to_string(d));
  std::vector<int> coords(classes.size());
  std::iota(coords.begin(), coords.end(), 0);
  return warmup_with_coords(d, std::move(classes), coords);
}

std::vector<int> power_of_two_classes(int s_prime) {
  std::vector<int> out;
  for (int j = 2; j <= s_prime; ++j) {
    if (j - 1 >= 30) throw InputError("power-of-two class 2^" + std::to_string(j - 1) + " is too large");
    out.push_back(1 << (j - 1));
  }
  return out;
}

SeparatedFamily build_separated_family(int d, std::vector<int> classes, const SeedStream& stream,
                                       const FamilyOptions& opt) {
  if (d < 2) throw InputError("build_separated_family requires d >= 2");
  check_classes(classes);
  SeparatedFamily f;
  f.d = d;
  f.kind = FamilyKind::randomized;
  f.seed = stream.seed();
  f.classes = std::move(classes);
  if (f.classes.empty()) return f;

  FSetOptions fopt = opt.fsets;
  fopt.count = static_cast<int>(f.classes.size());
  f.fsets = sample_f_sets(d, stream.sub("fsets"), fopt);
  const auto& sets = f.fsets->sets;

  for (std::size_t m = 0; m < f.classes.size(); ++m) {
    const int k = f.classes[m];
    const auto& core = sets[m];
    std::vector<std::vector<int>> avoid;
    for (std::size_t l = 0; l < m; ++l) {
      std::vector<int> J;
      std::set_difference(core.begin(), core.end(), sets[l].begin(), sets[l].end(), std::back_inserter(J));
      avoid.push_back(positions_in_core(core, J));
    }
    const BigInt count = count_good_words_exact(k, static_cast<int>(core.size()), avoid, opt.term_cap);
    if (opt.mode == BuildMode::enumerate) {
      const BigInt candidates = ipow(k - 1, static_cast<unsigned>(core.size()));
      if (candidates > BigInt(static_cast<unsigned long>(opt.enumerate_cap)))
        throw BudgetExceeded("enumerate mode: class " + std::to_string(k) + " has " + big_str(candidates) +
                             " core candidates, above the cap of " + std::to_string(opt.enumerate_cap));
      auto implicit = Language::implicit(k, d, core, avoid, count);
      std::vector<CoreWord> words;
      for_each_core(implicit, opt.enumerate_cap + 1, [&](const CoreWord& c) {
        words.push_back(c);
        return true;
      });
      if (BigInt(static_cast<unsigned long>(words.size())) != count)
        throw VerificationError("enumerated core size differs from the inclusion-exclusion count for class " +
                                std::to_string(k));
      f.languages.push_back(Language::product(k, d, core, std::move(words)));
    } else {
      f.languages.push_back(Language::implicit(k, d, core, std::move(avoid), count));
    }
  }
  return f;
}

FamilyCertificate certify_family(const SeparatedFamily& f, std::size_t samples, std::uint64_t seed) {
  FamilyCertificate cert;
  for (const auto& L : f.languages) {
    cert.gapped.push_back(is_gapped(L));
    if (!cert.gapped.back().gapped) cert.ok = false;
  }
  for (std::size_t i = 0; i < f.languages.size(); ++i) {
    for (std::size_t j = i + 1; j < f.languages.size(); ++j) {
      auto r = are_separated(f.languages[i], f.languages[j], samples, seed);
      if (!r.separated) cert.ok = false;
      if (!r.exhaustive) cert.exhaustive = false;
      cert.pairs.push_back({f.classes[i], f.classes[j], std::move(r)});
    }
  }
  return cert;
}

std::vector<std::pair<int, Rat>> bad_fractions(const SeparatedFamily& f) {
  std::vector<std::pair<int, Rat>> out;
  for (std::size_t i = 0; i < f.languages.size(); ++i) {
    const auto& L = f.languages[i];
    BigInt total = ipow(L.k() - 1, static_cast<unsigned>(L.core_coords().size()));
    // Warm-up cores are a single fixed word; the fraction is reported against the core alphabet too.
    out.emplace_back(f.classes[i], Rat(1) - Rat(L.core_count(), total));
  }
  return out;
}

}  // namespace hcp
