#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "hcpack/random.hpp"
#include "hcpack/rational.hpp"

namespace hcp {

/// A word over [k]^d. Letters are 1-based; coordinates are 0-based positions.
struct Word {
  int k = 2;
  std::vector<int> letters;

  int dim() const { return static_cast<int>(letters.size()); }
  friend bool operator==(const Word&, const Word&) = default;
  friend auto operator<=>(const Word& a, const Word& b) { return a.letters <=> b.letters; }
};

/// Throws InputError unless every letter lies in [1, k].
void validate_word(const Word& w);

/// A core word: letters aligned with the sorted core coordinates of a Language.
using CoreWord = std::vector<int>;

/// A k-language in product form: an explicit or implicit set of core words on
/// the core coordinates F, times all of [k-1] on the remaining coordinates.
///
/// An explicit word set is the special case F = all coordinates. An implicit
/// core is "every word over [k] \ {k-1} on F that is not bad", where bad means
/// avoiding letter k on one of `avoid_sets`.
class Language {
 public:
  /// Explicit language: F = [d], core words = the given words (deduplicated, sorted).
  static Language explicit_words(int k, int d, std::vector<Word> words);
  /// Product form with a materialized core set.
  static Language product(int k, int d, std::vector<int> core_coords, std::vector<CoreWord> core_words);
  /// Product form with the implicit non-bad core. `avoid_positions` index into
  /// `core_coords`; `core_count` is the exact number of good core words.
  static Language implicit(int k, int d, std::vector<int> core_coords,
                           std::vector<std::vector<int>> avoid_positions, BigInt core_count);

  int k() const { return k_; }
  int dim() const { return d_; }
  const std::vector<int>& core_coords() const { return core_; }
  std::vector<int> free_coords() const;
  bool materialized() const { return core_words_.has_value(); }
  const std::vector<CoreWord>& core_words() const;
  /// Avoid sets of an implicit core, as positions into core_coords().
  const std::vector<std::vector<int>>& avoid_sets() const { return avoid_; }
  const BigInt& core_count() const { return core_count_; }

  /// |L| = |core| * (k-1)^(d - |F|).
  BigInt size() const;
  bool empty() const { return core_count_ == 0; }

  bool contains(const Word& w) const;
  /// Membership of a core word (letters aligned with core_coords()).
  bool core_contains(const CoreWord& c) const;
  /// Full word from a core word, with every free coordinate set to `free_letter`.
  Word expand(const CoreWord& c, int free_letter = 1) const;

  /// All words in lexicographic order; throws BudgetExceeded above `cap`.
  std::vector<Word> all_words(std::size_t cap) const;
  /// Up to `budget` words in core-major order: good core words in
  /// lexicographic order, each followed by its free completions in
  /// lexicographic order. `scan_cap` bounds the number of core candidates visited.
  std::vector<Word> first_words(std::size_t budget, std::size_t scan_cap = 1u << 22) const;
  /// Uniform random member (implicit cores via rejection); nullopt when the
  /// language is empty or rejection sampling gives up.
  std::optional<CoreWord> sample_core(Rng& rng, std::size_t max_tries = 100000) const;

 private:
  Language(int k, int d) : k_(k), d_(d) {}
  int k_;
  int d_;
  std::vector<int> core_;
  std::optional<std::vector<CoreWord>> core_words_;
  std::vector<std::vector<int>> avoid_;
  BigInt core_count_ = 0;
};

/// Which letter a coordinate misses.
enum class Missing { none, k_minus_1, k, both };

struct GappedCertificate {
  bool gapped = true;
  std::vector<Missing> per_coordinate;
  /// First coordinate missing neither letter.
  std::optional<int> failing_coordinate;
};

GappedCertificate is_gapped(const Language& L);

struct SeparationResult {
  bool separated = true;
  /// Every core pair checked (decides separation exactly) or random word pairs only.
  bool exhaustive = true;
  std::size_t pairs_checked = 0;
  std::optional<std::pair<Word, Word>> witness;
};

/// Requires lower.k() < upper.k() (InputError otherwise). Exhaustive over core
/// pairs when both cores are materialized, which is exact because the free
/// coordinates never affect separation; otherwise checks `samples` random pairs.
SeparationResult are_separated(const Language& lower, const Language& upper,
                               std::size_t samples = 2000, std::uint64_t seed = 0);

struct FSets {
  int d = 0;
  std::vector<std::vector<int>> sets;  // sorted 0-based coordinates, each of size ceil(d/2)
  Rat threshold;                       // every pairwise intersection is < threshold
  std::size_t draws = 0;
  std::size_t rejections = 0;
  std::size_t restarts = 0;
  int max_intersection = 0;
};

struct FSetOptions {
  /// Number of sets; 0 means d.
  int count = 0;
  std::optional<Rat> threshold;  // default 7d/26
  std::size_t attempt_budget = 200000;
  std::size_t per_set_tries = 2000;
};

Rat default_fset_threshold(int d);

/// Random ceil(d/2)-subsets of [d] with all pairwise intersections below the
/// threshold, drawn one set at a time. Throws BudgetExceeded with diagnostics.
FSets sample_f_sets(int d, const SeedStream& stream, const FSetOptions& opt = {});

/// True iff `core` avoids letter k at every coordinate of `avoid` (given as
/// positions into `core`). An empty set makes every word bad.
bool is_bad_word(std::span<const int> core, int k, std::span<const int> avoid_positions);

/// Coordinate set -> positions inside the sorted core coordinates. Throws if not a subset.
std::vector<int> positions_in_core(std::span<const int> core_coords, std::span<const int> coords);

struct GoodWordCount {
  bool exact = true;
  BigInt count;           // exact count (exact == true)
  double estimate = 0.0;  // Monte Carlo estimate of the count (exact == false)
  std::size_t samples = 0;
  std::size_t terms = 0;  // inclusion-exclusion terms evaluated
};

/// Number of words over [k]\{k-1} on `core_size` positions that avoid letter k
/// on none of the given position sets, by inclusion-exclusion.
/// Throws BudgetExceeded when 2^|sets| exceeds `term_cap`.
BigInt count_good_words_exact(int k, int core_size, std::span<const std::vector<int>> avoid_positions,
                              std::size_t term_cap = std::size_t{1} << 24);
/// Exact when the term count fits `term_cap`, Monte Carlo otherwise.
GoodWordCount count_good_words(int k, int core_size, std::span<const std::vector<int>> avoid_positions,
                               std::size_t term_cap, std::size_t samples, Rng& rng);

enum class FamilyKind { warmup, randomized };
enum class BuildMode { enumerate, implicit };

struct SeparatedFamily {
  int d = 0;
  FamilyKind kind = FamilyKind::warmup;
  std::vector<int> classes;  // ascending
  std::vector<Language> languages;
  std::optional<FSets> fsets;  // sets[i] is the core of classes[i]
  std::uint64_t seed = 0;
  std::string rng = std::string(kRngName);

  const Language& language(int k) const;
  bool power_of_two() const;
};

/// Warm-up family over classes 2..d: class k places letter k at coordinate k-1
/// (0-based) and letters below k elsewhere.
SeparatedFamily warmup_family(int d);
/// Same pattern for arbitrary ascending classes: the i-th class owns coordinate i.
/// Requires classes.size() <= d.
SeparatedFamily warmup_family_for(int d, std::vector<int> classes);

struct FamilyOptions {
  BuildMode mode = BuildMode::enumerate;
  /// enumerate mode refuses classes with more than this many core candidates.
  std::size_t enumerate_cap = 1u << 20;
  std::size_t term_cap = std::size_t{1} << 24;
  FSetOptions fsets;
};

/// Randomized construction: each class gets a random core F, and its core
/// language is every word over [k]\{k-1} on F that hits letter k inside
/// F_k \ F_l for every smaller class l.
SeparatedFamily build_separated_family(int d, std::vector<int> classes, const SeedStream& stream,
                                       const FamilyOptions& opt = {});

/// {2, 4, ..., 2^(s_prime-1)}.
std::vector<int> power_of_two_classes(int s_prime);

struct FamilyCertificate {
  bool ok = true;
  bool exhaustive = true;
  std::vector<GappedCertificate> gapped;
  struct Pair {
    int lower;
    int upper;
    SeparationResult result;
  };
  std::vector<Pair> pairs;
};

FamilyCertificate certify_family(const SeparatedFamily& f, std::size_t samples = 2000, std::uint64_t seed = 0);

/// Fraction of bad core words per class (exact), for reporting the density guarantee.
std::vector<std::pair<int, Rat>> bad_fractions(const SeparatedFamily& f);

}  // namespace hcp
