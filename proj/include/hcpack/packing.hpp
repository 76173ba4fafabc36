#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "hcpack/geometry.hpp"
#include "hcpack/languages.hpp"

namespace hcp {

/// x^(k)(j): (j-1)(1+eps)/k for j < k, and 1 - (1+eps)/k for j = k.
/// Requires 2 <= k, 1 <= j <= k and 0 < eps < 1/(k-1).
Rat base_coordinate(int k, int j, const Rat& eps);
/// y^(k)(j) = x^(k)(j) + (1+eps)/k.
Rat end_coordinate(int k, int j, const Rat& eps);
/// I^(k)(j) = (x^(k)(j), y^(k)(j)).
Interval letter_interval(int k, int j, const Rat& eps);

/// y^(k)(k-1) < x^(k')(k'): a class-k cube below its last slot stays clear of
/// a class-k' cube in its last slot.
bool gap_inequality_holds(int k, int k_prime, const Rat& eps);

/// Cube of class (w.k, eps, d) based at (x^(k)(w_1), ..., x^(k)(w_d)).
PlacedCube place_word(const Word& w, const Rat& eps);

/// A verified single-bin packing where every cube is some Q_k^d(eps).
struct TypedPacking {
  int d = 0;
  Rat epsilon;
  Bin bin;
  std::map<int, std::size_t> nu;  // class -> number of copies
  Rat weight;
  /// Weight of the full (possibly implicit) family the bin was drawn from.
  std::optional<Rat> family_weight;

  std::vector<int> classes() const;  // K(U), ascending
  int k_max() const;
};

/// Sum over classes of nu_k / (k-1)^d.
Rat weight_from_counts(const std::map<int, std::size_t>& nu, int d);
/// Same weight summed cube by cube.
Rat weight_from_cubes(const Bin& b);

/// Builds the typed view of a bin. Throws VerificationError if the bin fails
/// verify_bin, mixes epsilons, or exceeds (k-1)^d copies of some class.
TypedPacking make_typed_packing(Bin b);

struct Selection {
  /// Every word of every language; otherwise at most `per_class` words per
  /// class in core-major order.
  bool all = true;
  std::size_t per_class = 256;
  /// Refuse to materialize more cubes than this when `all` is set.
  std::size_t cap = 200000;

  static Selection everything(std::size_t cap = 200000) { return {true, 0, cap}; }
  static Selection budget(std::size_t per_class) { return {false, per_class, 0}; }
};

/// Places Q(w) for the selected words of every language of the family.
/// Requires 0 < eps <= k_max^-2 and checks the gap inequality for every class
/// pair before building. The result always passes verify_bin.
TypedPacking build_U(const SeparatedFamily& family, const Rat& eps, const Selection& sel = {});

/// (k-1)^d cubes of class k on the grid (i (1+eps)/k), i in {0..k-2}^d.
struct HomogeneousBin {
  int k = 2;
  int d = 1;
  Rat epsilon;
  Bin bin;
};

/// Requires 0 < eps <= 1/(k-1).
HomogeneousBin build_homogeneous(int k, int d, const Rat& eps);

/// Grid position number `index` (base k-1 digits, last axis fastest) of a
/// class-k homogeneous bin.
std::vector<Rat> homogeneous_slot(int k, int d, const Rat& eps, std::size_t index);

enum class LogBase { natural, two };

std::string to_string(LogBase b);
LogBase parse_log_base(const std::string& s);
double log_in(LogBase b, double x);

/// ceil(2d / (9 log d)).
int compute_S(int d, LogBase base);
/// ceil(log2 d - log2(log d) - 3), with `base` for the inner log.
int compute_S_prime(int d, LogBase base);

struct DriverOptions {
  LogBase log_base = LogBase::natural;
  std::uint64_t seed = 1;
  std::optional<Rat> epsilon_override;
  /// Asymptotic targets are asserted only from this dimension on.
  int d0 = 1000000;
  /// Per-class word budget when a language is too large to materialize.
  std::size_t word_budget = 256;
  /// Full materialization limit (cubes) before switching to the budget.
  std::size_t materialize_cap = 20000;
  FamilyOptions family;
};

struct DriverReport {
  std::string lemma;  // "A" or "B"
  int d = 0;
  LogBase log_base = LogBase::natural;
  int S = 0;  // S for lemma A, S' for lemma B
  Rat epsilon;
  std::string family_label;  // "randomized", "warmup-fallback", ...
  std::optional<std::string> fallback_reason;
  SeparatedFamily family;
  FamilyCertificate certificate;
  TypedPacking packing;
  bool fully_materialized = true;
  std::map<int, BigInt> language_sizes;
  /// Sum over classes of |L_k| / (k-1)^d, exact.
  Rat family_weight;
  Rat recomputed_weight;  // weight of the materialized packing, cube by cube
  double target = 0.0;    // d/(5 log d) for A, log d for B
  bool target_met = false;
  std::optional<Rat> density_target;  // (10/11)(S-1) for A
  bool density_met = false;
  bool asserted = false;  // d >= d0
  std::vector<std::pair<int, Rat>> bad_fraction;
};

DriverReport lemma_A_driver(int d, const DriverOptions& opt = {});
DriverReport lemma_B_driver(int d, const DriverOptions& opt = {});

}  // namespace hcp
