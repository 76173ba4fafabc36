#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <tuple>
#include <vector>

#include "hcpack/geometry.hpp"
#include "hcpack/packing.hpp"
#include "hcpack/random.hpp"

namespace hcp {

/// One player: a cube with a bin and a position inside it.
struct GameItem {
  std::size_t id = 0;
  std::size_t bin = 0;
  PlacedCube cube;
};

/// A strategy profile. Bins are identified by id; a bin exists while it holds an item.
struct GameConfig {
  int d = 1;
  std::vector<GameItem> items;

  /// Ids of nonempty bins, ascending.
  std::vector<std::size_t> bin_ids() const;
  /// Indices into `items` of the members of bin `id`, in item order.
  std::vector<std::size_t> members(std::size_t id) const;
  Bin bin(std::size_t id) const;
  Rat bin_volume(std::size_t id) const;
  std::size_t item_index(std::size_t item_id) const;
  /// Smallest id larger than every bin id in use.
  std::size_t fresh_bin_id() const;
};

/// Throws InputError on duplicate item ids or wrong dimensions and
/// VerificationError if some bin fails verify_bin.
void validate_config(const GameConfig& cfg);

/// One bin per input bin, ids 0.. in order; item ids in reading order.
GameConfig config_from_bins(int d, const std::vector<Bin>& bins);
/// One homogeneous bin H_k per listed class.
GameConfig homogeneous_mixture(int d, const std::vector<int>& classes, const Rat& eps);

/// volume(item) / occupied volume of its bin.
Rat item_cost(const GameConfig& cfg, std::size_t item_index);
/// Number of used bins. Throws VerificationError if the costs do not add up to it.
std::size_t social_cost(const GameConfig& cfg);

enum class Feasibility { insertion, repack };
std::string to_string(Feasibility f);
Feasibility parse_feasibility(const std::string& s);

struct GameOptions {
  /// insertion: others keep their positions and the mover tries a finite set
  /// of candidate base points. repack: the target bin is laid out again from
  /// scratch, exhaustively.
  Feasibility mode = Feasibility::insertion;
  std::size_t repack_cap = 12;          // most cubes in one repack search
  std::size_t node_budget = 5000000;    // per layout search
};

/// Positions for `arrivals` among the fixed cubes, trying candidate base
/// points built from the boundaries of the cubes already present.
std::optional<std::vector<std::vector<Rat>>> insertion_layout(int d, const std::vector<PlacedCube>& fixed,
                                                              const std::vector<CubeClass>& arrivals,
                                                              std::size_t node_budget = 5000000);
/// Exhaustive layout of all cubes in one bin over normal-pattern coordinates
/// (sums of sides). Positions are aligned with `cubes`. Throws BudgetExceeded
/// above `cap` cubes or when the node budget runs out.
std::optional<std::vector<std::vector<Rat>>> repack_layout(int d, const std::vector<CubeClass>& cubes,
                                                           std::size_t cap = 12,
                                                           std::size_t node_budget = 5000000);

struct MoveProposal {
  std::size_t item = 0;  // item id
  std::size_t from = 0;
  std::size_t to = 0;
  std::vector<Rat> base;
  /// Repack mode: new positions of every cube in the target bin, mover included.
  std::vector<std::pair<std::size_t, std::vector<Rat>>> relayout;
  Rat cost_before;
  Rat cost_after;
  Feasibility mode = Feasibility::insertion;
};

/// All strictly improving unilateral moves into other nonempty bins (a move
/// to an empty bin costs 1 and never improves). Stops after `limit` moves.
std::vector<MoveProposal> improving_moves(const GameConfig& cfg, const GameOptions& opt = {},
                                          std::size_t limit = static_cast<std::size_t>(-1));

void apply_move(GameConfig& cfg, const MoveProposal& m);

inline constexpr const char* kInsertionNote =
    "insertion candidates are boundary combinations: complete for grid-structured bins, heuristic otherwise";
inline constexpr const char* kRepackNote = "repack search is exhaustive over normal-pattern coordinates";

struct NashCertificate {
  bool nash = true;
  Feasibility mode = Feasibility::insertion;
  std::size_t moves_checked = 0;  // (item, target bin) pairs examined
  std::size_t volume_candidates = 0;  // pairs where the move would lower the cost
  std::vector<MoveProposal> improving;
  std::string note;
};

NashCertificate is_nash(const GameConfig& cfg, const GameOptions& opt = {});

enum class DynamicsPolicy { first, best, random };
DynamicsPolicy parse_policy(const std::string& s);
std::string to_string(DynamicsPolicy p);

struct DynamicsResult {
  GameConfig final;
  std::vector<MoveProposal> trace;
  bool converged = false;
  std::size_t steps = 0;
};

/// Applies improving moves until none is left or `max_steps` is reached.
/// Checks after every step that the bins are valid and that the sorted
/// bin-volume vector increased lexicographically.
DynamicsResult best_response_dynamics(GameConfig cfg, DynamicsPolicy policy, std::size_t max_steps,
                                      const GameOptions& opt = {}, std::uint64_t seed = 0);

/// A joint deviation. Every member leaves its bin; new bins get fresh ids.
struct Coalition {
  struct Member {
    std::size_t item = 0;
    std::size_t from = 0;
    std::size_t to = 0;
    bool new_bin = false;
    std::vector<Rat> base;
    Rat cost_before;
    Rat cost_after;
  };
  std::vector<Member> members;
  /// Repack mode: new positions of the cubes that stay in a target bin.
  std::vector<std::pair<std::size_t, std::vector<Rat>>> relayout;
};

struct StrongNashOptions {
  std::size_t max_coalition = 3;
  GameOptions feasibility;
  /// Most (type, target) multisets to examine before giving up.
  std::size_t type_budget = 200000000;
};

struct StrongNashCertificate {
  bool strong_nash = true;
  std::size_t max_coalition = 0;
  Feasibility mode = Feasibility::insertion;
  std::size_t type_coalitions = 0;  // multisets of (item type, target) examined
  std::size_t volume_passed = 0;    // of those, every member would gain
  std::size_t geometric_checks = 0;
  std::optional<Coalition> witness;
  std::string note;
};

/// Exhaustive over coalitions of 1..max_coalition items and all joint targets
/// (other existing bins or new bins). Members may not reposition within their
/// own bins. Throws BudgetExceeded when the enumeration is too large.
StrongNashCertificate is_strong_nash(const GameConfig& cfg, const StrongNashOptions& opt = {});

/// Applies a coalition deviation found by is_strong_nash.
void apply_coalition(GameConfig& cfg, const Coalition& c);

struct PoaInstance {
  GameConfig P;
  GameConfig P_prime;
  BigInt N;           // copies of U in P
  bool scaled = false;  // N is the smallest valid multiple instead of prod (k-1)^d
  std::size_t P_bins = 0;
  std::size_t P_prime_bins = 0;
  Rat ratio;
  Rat weight;
  std::optional<NashCertificate> nash;
  std::optional<StrongNashCertificate> strong;
};

struct PoaOptions {
  /// Largest number of items to materialize.
  std::size_t item_cap = 200000;
  bool certify = true;
  GameOptions feasibility;
  std::size_t coalition_cap = 3;  // spoa only
};

/// P = N copies of U; P' = the same cubes regrouped into homogeneous bins.
/// Requires 0 < eps <= 1/(k_max - 1).
PoaInstance poa_instance(const TypedPacking& U, const PoaOptions& opt = {});
/// As poa_instance for power-of-two classes, with P' certified strong Nash.
PoaInstance spoa_instance(const TypedPacking& U, const PoaOptions& opt = {});

/// (1 - 1/k)^d + 1/l^d < (1 - 1/l)^d, exactly. Requires d >= 2, l >= k+1, k > 1.
bool prop1_check(int k, int ell, int d);

struct Prop1Sweep {
  std::size_t checked = 0;
  std::size_t failures = 0;
  std::optional<std::tuple<int, int, int>> first_failure;  // (k, l, d)
};
Prop1Sweep prop1_sweep(int kmax, int dmax);

/// sum of volumes <= l^d + (1 - l)^d. Requires 0 < l <= 1.
bool meir_moser_predicate(const std::vector<Rat>& volumes, const Rat& ell, int d);

struct Prop2Report {
  bool conditioned = false;  // config was certified Nash
  std::size_t bins = 0;
  std::size_t low_bins = 0;  // occupied volume < 2^-d
  Rat total_volume;
  Rat bin_bound;  // 2^d * total volume + 1
  bool within_bound = false;
  bool ok = false;  // conditioned implies low_bins <= 1 and within_bound
};

Prop2Report prop2_check(const GameConfig& cfg, bool certified_nash);

/// Random start for the dynamics: items of the given classes, each dropped
/// into a random bin that can take it by insertion, else a new bin.
GameConfig random_config(int d, std::size_t items, const std::vector<int>& classes, const Rat& eps, Rng& rng);

}  // namespace hcp
