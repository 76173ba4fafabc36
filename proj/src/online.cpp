#include "hcpack/online.hpp"

#include <algorithm>
#include <functional>
#include <list>

namespace hcp {

std::size_t Instance::size() const {
  std::size_t n = 0;
  for (const auto& s : segments) n += s.count;
  return n;
}

int Instance::class_at(std::size_t index) const {
  for (const auto& s : segments) {
    if (index < s.count) return s.k;
    index -= s.count;
  }
  throw InputError("item index out of range");
}

void validate_instance(const Instance& inst) {
  if (inst.d < 1) throw InputError("instance requires d >= 1");
  if (inst.epsilon.sign() <= 0) throw InputError("instance requires eps > 0, got " + inst.epsilon.str());
  for (const auto& s : inst.segments) CubeClass(s.k, inst.epsilon, inst.d);
}

BigInt adversary_N(const TypedPacking& U) {
  BigInt N = 1;
  for (int k : U.classes()) N *= ipow(k - 1, static_cast<unsigned>(U.d));
  return N;
}

BigInt full_scale(const TypedPacking& U, int M) { return BigInt(2L * M) * adversary_N(U); }

void check_scale(const TypedPacking& U, int M, const BigInt& C) {
  if (M < 1) throw InputError("M must be at least 1");
  if (C <= 0) throw InputError("scale must be positive");
  const BigInt twoM = 2L * M;
  if (C % twoM != 0) throw InputError("scale " + big_str(C) + " is not a multiple of 2M = " + big_str(twoM));
  const BigInt q = C / twoM;
  for (int k : U.classes()) {
    const BigInt p = ipow(k - 1, static_cast<unsigned>(U.d));
    if (q % p != 0)
      throw InputError("scale/(2M) = " + big_str(q) + " is not a multiple of (k-1)^d = " + big_str(p) +
                       " for k=" + std::to_string(k));
  }
}

Instance adversarial_instance(const TypedPacking& U, int M, const AdversaryOptions& opt) {
  const BigInt C = opt.scale.value_or(full_scale(U, M));
  check_scale(U, M, C);
  auto classes = U.classes();
  std::vector<int> order = opt.order.empty() ? classes : opt.order;
  auto sorted = order;
  std::sort(sorted.begin(), sorted.end());
  if (sorted != classes) throw InputError("segment order must be a permutation of the classes of U");
  Instance inst;
  inst.d = U.d;
  inst.epsilon = U.epsilon;
  for (int k : order) {
    const BigInt f = C * BigInt(static_cast<unsigned long>(U.nu.at(k)));
    inst.segments.push_back({k, to_size(f)});
  }
  return inst;
}

OfflineCertificate offline_certificate(const TypedPacking& U, const Instance& inst, const BigInt& C) {
  OfflineCertificate cert;
  cert.bins = C;
  cert.template_ok = verify_bin(U.bin).ok() && inst.d == U.d && inst.epsilon == U.epsilon;
  std::map<int, BigInt> seen;
  for (const auto& s : inst.segments) seen[s.k] += BigInt(static_cast<unsigned long>(s.count));
  cert.counts_ok = seen.size() == U.classes().size();
  for (const auto& [k, f] : seen) {
    auto it = U.nu.find(k);
    if (it == U.nu.end() || f != C * BigInt(static_cast<unsigned long>(it->second))) cert.counts_ok = false;
  }
  return cert;
}

LowerBound lower_bound_certificate(const TypedPacking& U, int M, const BigInt& C) {
  check_scale(U, M, C);
  LowerBound lb;
  lb.total = 0;
  const BigInt half = C / 2;
  for (int k : U.classes()) {
    const BigInt p = ipow(k - 1, static_cast<unsigned>(U.d));
    const BigInt nu = static_cast<unsigned long>(U.nu.at(k));
    SegmentBound s;
    s.k = k;
    s.items = C * nu;
    s.min_bins = Rat(s.items, p).ceil();
    s.min_new_bins = s.min_bins > M ? BigInt(s.min_bins - M) : BigInt(0);
    s.counted = half * nu / p;
    lb.total += s.counted;
    lb.segments.push_back(std::move(s));
  }
  return lb;
}

namespace {

constexpr std::size_t kNone = kThisBin;

std::size_t find_open(const std::vector<OpenBin>& open, std::size_t id) {
  for (std::size_t i = 0; i < open.size(); ++i)
    if (open[i].id == id) return i;
  return kNone;
}

void close_bins(std::vector<OpenBin>& open, const std::vector<std::size_t>& ids, std::size_t step,
                std::size_t this_bin) {
  for (auto id : ids) {
    if (id == kNone) id = this_bin;
    auto pos = find_open(open, id);
    if (pos == kNone) throw ContractViolation(step, "asked to close bin " + std::to_string(id) + ", which is not open");
    open.erase(open.begin() + static_cast<std::ptrdiff_t>(pos));
  }
}

}  // namespace

RunResult run_bounded_space(OnlineAlgorithm& alg, const Instance& inst, int M, bool keep_trace) {
  if (M < 1) throw InputError("M must be at least 1");
  validate_instance(inst);
  alg.reset();
  RunResult r;
  r.algorithm = alg.name();
  r.M = M;
  std::vector<OpenBin> open;
  std::size_t next_id = 0;
  std::size_t step = 0;
  for (const auto& seg : inst.segments) {
    const CubeClass cls(seg.k, inst.epsilon, inst.d);
    std::size_t new_bins = 0;
    for (std::size_t j = 0; j < seg.count; ++j, ++step) {
      Decision dec = alg.place(cls, open);
      if (std::find(dec.close_before.begin(), dec.close_before.end(), kNone) != dec.close_before.end())
        throw ContractViolation(step, "close_before cannot name the bin being used");
      close_bins(open, dec.close_before, step, kNone);
      std::size_t pos;
      if (dec.bin) {
        pos = find_open(open, *dec.bin);
        if (pos == kNone) {
          if (*dec.bin < next_id) throw ContractViolation(step, "bin " + std::to_string(*dec.bin) + " is closed");
          throw ContractViolation(step, "bin " + std::to_string(*dec.bin) + " does not exist");
        }
      } else {
        open.push_back(OpenBin{next_id++, Bin(inst.d)});
        pos = open.size() - 1;
        ++new_bins;
      }
      if (dec.base.size() != static_cast<std::size_t>(inst.d))
        throw ContractViolation(step, "base point has the wrong dimension");
      PlacedCube cube(cls, dec.base);
      auto& target = open[pos];
      if (!fits_among(cube, target.bin.cubes))
        throw ContractViolation(step, "placement in bin " + std::to_string(target.id) + " overlaps or leaves the bin");
      target.bin.cubes.push_back(std::move(cube));
      const std::size_t used = target.id;
      if (keep_trace) r.trace.push_back({step, used, dec.base});
      close_bins(open, dec.close_after, step, used);
      if (open.size() > static_cast<std::size_t>(M))
        throw ContractViolation(step, std::to_string(open.size()) + " bins open, M = " + std::to_string(M));
      r.max_open = std::max(r.max_open, open.size());
      alg.placed(dec, used);
    }
    r.segment_new_bins.push_back(new_bins);
  }
  r.bins_used = next_id;
  return r;
}

RatioReport ratio_report(const RunResult& run, const OfflineCertificate& offline, const LowerBound& lb) {
  RatioReport rep;
  rep.bins_used = run.bins_used;
  rep.opt_upper_bound = offline.bins;
  rep.certified_lower_bound = lb.total;
  rep.ratio = offline.bins == 0 ? Rat(0) : Rat(BigInt(static_cast<unsigned long>(run.bins_used)), offline.bins);
  return rep;
}

std::size_t grid_per_axis(const CubeClass& cls) { return to_size(cls.side().reciprocal().floor()); }

namespace {

class ClassHarmonic : public OnlineAlgorithm {
 public:
  explicit ClassHarmonic(int M) : M_(static_cast<std::size_t>(M)) {
    if (M < 1) throw InputError("class-harmonic requires M >= 1");
  }

  std::string name() const override { return "class-harmonic"; }
  void reset() override { lru_.clear(); }

  Decision place(const CubeClass& item, std::span<const OpenBin>) override {
    Decision dec;
    const std::size_t m = grid_per_axis(item);
    const auto capacity = to_size(ipow(static_cast<long>(m), static_cast<unsigned>(item.dim())));
    auto it = std::find_if(lru_.begin(), lru_.end(), [&](const Entry& e) { return e.k == item.k(); });
    std::size_t slot = 0;
    if (it != lru_.end()) {
      dec.bin = it->id;
      slot = it->filled;
    } else if (lru_.size() >= M_) {
      dec.close_before.push_back(lru_.back().id);
    }
    dec.base.resize(static_cast<std::size_t>(item.dim()));
    std::size_t index = slot;
    for (std::size_t axis = dec.base.size(); axis-- > 0;) {
      dec.base[axis] = Rat(static_cast<long>(index % m)) * item.side();
      index /= m;
    }
    if (slot + 1 == capacity) dec.close_after.push_back(kThisBin);
    pending_k_ = item.k();
    return dec;
  }

  void placed(const Decision& dec, std::size_t bin_id) override {
    for (auto id : dec.close_before) erase(id);
    auto it = std::find_if(lru_.begin(), lru_.end(), [&](const Entry& e) { return e.id == bin_id; });
    Entry e{bin_id, pending_k_, 0};
    if (it != lru_.end()) {
      e = *it;
      lru_.erase(it);
    }
    ++e.filled;
    if (dec.close_after.empty()) lru_.push_front(e);
  }

 private:
  struct Entry {
    std::size_t id;
    int k;
    std::size_t filled;
  };

  void erase(std::size_t id) {
    lru_.remove_if([&](const Entry& e) { return e.id == id; });
  }

  std::size_t M_;
  std::list<Entry> lru_;
  int pending_k_ = 0;
};

}  // namespace

std::unique_ptr<OnlineAlgorithm> make_class_harmonic(int M) { return std::make_unique<ClassHarmonic>(M); }

CapacityProbe capacity_probe(int k, int d, const Rat& eps, std::size_t node_budget) {
  const CubeClass cls(k, eps, d);
  const Rat& s = cls.side();
  const Rat limit = Rat(1) - s;
  std::vector<Rat> axis;
  for (long j = 0; Rat(j) * s <= limit; ++j) {
    axis.push_back(Rat(j) * s);
    axis.push_back(limit - Rat(j) * s);
  }
  std::sort(axis.begin(), axis.end());
  axis.erase(std::unique(axis.begin(), axis.end()), axis.end());

  CapacityProbe probe;
  probe.candidates_per_axis = axis.size();
  const auto total = to_size(ipow(static_cast<long>(axis.size()), static_cast<unsigned>(d)));
  if (total > 4096) throw BudgetExceeded("capacity probe with " + std::to_string(total) + " candidates");
  std::vector<PlacedCube> cands;
  for (std::size_t idx = 0; idx < total; ++idx) {
    std::vector<Rat> base(static_cast<std::size_t>(d));
    std::size_t r = idx;
    for (std::size_t a = base.size(); a-- > 0;) {
      base[a] = axis[r % axis.size()];
      r /= axis.size();
    }
    cands.emplace_back(cls, std::move(base));
  }
  std::vector<std::vector<bool>> compatible(total, std::vector<bool>(total));
  for (std::size_t i = 0; i < total; ++i)
    for (std::size_t j = i + 1; j < total; ++j) compatible[i][j] = compatible[j][i] = cubes_disjoint(cands[i], cands[j]);

  const auto limit_count = to_size(ipow(k - 1, static_cast<unsigned>(d)));
  std::size_t nodes = 0;
  std::function<void(std::vector<std::size_t>&, std::size_t)> search = [&](std::vector<std::size_t>& pool,
                                                                            std::size_t chosen) {
    if (++nodes > node_budget) throw BudgetExceeded("capacity probe exceeded its node budget");
    probe.best = std::max(probe.best, chosen);
    if (probe.best > limit_count) return;
    if (pool.empty() || chosen + pool.size() <= probe.best) return;
    const std::size_t c = pool.back();
    std::vector<std::size_t> with;
    for (std::size_t i = 0; i + 1 < pool.size(); ++i)
      if (compatible[c][pool[i]]) with.push_back(pool[i]);
    search(with, chosen + 1);
    pool.pop_back();
    search(pool, chosen);
    pool.push_back(c);
  };
  std::vector<std::size_t> pool(total);
  for (std::size_t i = 0; i < total; ++i) pool[i] = i;
  search(pool, 0);
  probe.limit_holds = probe.best == limit_count;
  return probe;
}

}  // namespace hcp
