#pragma once

#include <cstddef>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "hcpack/errors.hpp"
#include "hcpack/geometry.hpp"
#include "hcpack/packing.hpp"

namespace hcp {

struct Segment {
  int k = 2;
  std::size_t count = 0;
  friend bool operator==(const Segment&, const Segment&) = default;
};

/// An online instance: runs of identical cubes Q_k^d(eps), in order.
struct Instance {
  int d = 1;
  Rat epsilon;
  std::vector<Segment> segments;

  std::size_t size() const;
  /// Class of item `index` (0-based).
  int class_at(std::size_t index) const;
};

/// Throws InputError on d < 1, eps <= 0, or a segment class whose cube does not fit a bin.
void validate_instance(const Instance& inst);

/// prod over K(U) of (k-1)^d.
BigInt adversary_N(const TypedPacking& U);
/// The default scale C = 2MN.
BigInt full_scale(const TypedPacking& U, int M);
/// Throws InputError unless C is a multiple of 2M and C/(2M) is a multiple of
/// (k-1)^d for every class of U.
void check_scale(const TypedPacking& U, int M, const BigInt& C);

struct AdversaryOptions {
  std::optional<BigInt> scale;  // default 2MN
  /// Segment order by class; empty means ascending.
  std::vector<int> order;
};

/// Segment l holds f(l) = C * nu_{k_l}(U) copies of Q_{k_l}^d(eps).
Instance adversarial_instance(const TypedPacking& U, int M, const AdversaryOptions& opt = {});

/// The instance packs offline into C copies of U.
struct OfflineCertificate {
  BigInt bins;
  bool template_ok = false;  // verify_bin on U
  bool counts_ok = false;    // every segment equals C * nu_k
  bool ok() const { return template_ok && counts_ok; }
};

OfflineCertificate offline_certificate(const TypedPacking& U, const Instance& inst, const BigInt& C);

struct SegmentBound {
  int k = 2;
  BigInt items;
  BigInt min_bins;     // ceil(f / (k-1)^d)
  BigInt min_new_bins; // min_bins - M, at least 0
  BigInt counted;      // (C/2) nu_k / (k-1)^d, the share in the total bound
};

struct LowerBound {
  BigInt total;  // (C/2) w(U)
  std::vector<SegmentBound> segments;
};

/// Bins used by any bounded-space algorithm with at most M open bins on the
/// adversarial instance of scale C.
LowerBound lower_bound_certificate(const TypedPacking& U, int M, const BigInt& C);

struct OpenBin {
  std::size_t id = 0;
  Bin bin;
};

/// Stands for the bin that received the item, in Decision::close_after.
inline constexpr std::size_t kThisBin = static_cast<std::size_t>(-1);

/// What an algorithm does with one item. `bin` empty means a new bin.
struct Decision {
  std::optional<std::size_t> bin;
  std::vector<Rat> base;
  std::vector<std::size_t> close_before;
  std::vector<std::size_t> close_after;
};

class OnlineAlgorithm {
 public:
  virtual ~OnlineAlgorithm() = default;
  virtual std::string name() const = 0;
  virtual void reset() {}
  virtual Decision place(const CubeClass& item, std::span<const OpenBin> open) = 0;
  /// Called after the harness accepted the decision; `bin_id` is the id used.
  virtual void placed(const Decision& decision, std::size_t bin_id) {
    (void)decision;
    (void)bin_id;
  }
};

/// Raised by the harness when an algorithm breaks the contract.
class ContractViolation : public VerificationError {
 public:
  ContractViolation(std::size_t step, const std::string& what)
      : VerificationError("step " + std::to_string(step) + ": " + what), step_(step) {}
  std::size_t step() const { return step_; }

 private:
  std::size_t step_;
};

struct Placement {
  std::size_t item = 0;
  std::size_t bin = 0;
  std::vector<Rat> base;
};

struct RunResult {
  std::string algorithm;
  int M = 1;
  std::size_t bins_used = 0;
  std::size_t max_open = 0;
  std::vector<std::size_t> segment_new_bins;
  std::vector<Placement> trace;  // filled when requested
};

/// Feeds the instance to the algorithm one item at a time and checks every
/// step exactly. Throws ContractViolation.
RunResult run_bounded_space(OnlineAlgorithm& alg, const Instance& inst, int M, bool keep_trace = false);

struct RatioReport {
  std::size_t bins_used = 0;
  BigInt opt_upper_bound;
  BigInt certified_lower_bound;
  Rat ratio;  // bins_used / opt_upper_bound
};

RatioReport ratio_report(const RunResult& run, const OfflineCertificate& offline, const LowerBound& lb);

/// One open bin per class, most recently used first; the least recently used
/// bin is closed when a new one would exceed M. Class-k items fill grid slots
/// of the bin and the bin closes when full.
std::unique_ptr<OnlineAlgorithm> make_class_harmonic(int M);

/// Slots per axis of a grid packing of class `cls`: floor(1/side).
std::size_t grid_per_axis(const CubeClass& cls);

struct CapacityProbe {
  std::size_t candidates_per_axis = 0;
  std::size_t best = 0;  // most disjoint cubes found on the candidate grid
  bool limit_holds = false;  // best == (k-1)^d
};

/// Exhaustive search over base points whose coordinates are multiples of the
/// side measured from either wall, for the largest set of pairwise disjoint
/// class-k cubes. Small k and d only.
CapacityProbe capacity_probe(int k, int d, const Rat& eps, std::size_t node_budget = 5000000);

}  // namespace hcp
