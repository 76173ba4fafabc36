#include "hcpack/packing.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "hcpack/errors.hpp"

namespace hcp {

namespace {

void check_base_params(int k, int j, const Rat& eps) {
  if (k < 2) throw InputError("base_coordinate requires k >= 2");
  if (j < 1 || j > k) throw InputError("base_coordinate requires 1 <= j <= k, got j=" + std::to_string(j));
  if (eps.sign() <= 0 || !(eps < Rat(1, k - 1)))
    throw InputError("base_coordinate requires 0 < eps < 1/(k-1), got eps=" + eps.str() + " for k=" +
                     std::to_string(k));
}

}  // namespace

Rat base_coordinate(int k, int j, const Rat& eps) {
  check_base_params(k, j, eps);
  const Rat side = (Rat(1) + eps) / Rat(k);
  if (j < k) return Rat(j - 1) * side;
  return Rat(1) - side;
}

Rat end_coordinate(int k, int j, const Rat& eps) { return base_coordinate(k, j, eps) + (Rat(1) + eps) / Rat(k); }

Interval letter_interval(int k, int j, const Rat& eps) {
  return Interval(base_coordinate(k, j, eps), end_coordinate(k, j, eps));
}

bool gap_inequality_holds(int k, int k_prime, const Rat& eps) {
  return end_coordinate(k, k - 1, eps) < base_coordinate(k_prime, k_prime, eps);
}

PlacedCube place_word(const Word& w, const Rat& eps) {
  validate_word(w);
  std::vector<Rat> base;
  base.reserve(w.letters.size());
  for (int letter : w.letters) base.push_back(base_coordinate(w.k, letter, eps));
  return PlacedCube(CubeClass(w.k, eps, w.dim()), std::move(base));
}

std::vector<int> TypedPacking::classes() const {
  std::vector<int> out;
  for (const auto& [k, n] : nu)
    if (n > 0) out.push_back(k);
  return out;
}

int TypedPacking::k_max() const {
  auto ks = classes();
  return ks.empty() ? 0 : ks.back();
}

Rat weight_from_counts(const std::map<int, std::size_t>& nu, int d) {
  Rat w(0);
  for (const auto& [k, n] : nu)
    w += Rat(BigInt(static_cast<unsigned long>(n)), ipow(k - 1, static_cast<unsigned>(d)));
  return w;
}

Rat weight_from_cubes(const Bin& b) {
  Rat w(0);
  for (const auto& c : b.cubes) w += Rat(BigInt(1), ipow(c.cls.k() - 1, static_cast<unsigned>(b.d)));
  return w;
}

namespace {

TypedPacking typed_from_verified(Bin b, const Rat& eps) {
  TypedPacking t;
  t.d = b.d;
  t.epsilon = eps;
  for (const auto& c : b.cubes) {
    if (!(c.cls.epsilon() == eps))
      throw VerificationError("packing mixes epsilons: " + c.cls.epsilon().str() + " vs " + eps.str());
    ++t.nu[c.cls.k()];
  }
  for (const auto& [k, n] : t.nu) {
    if (BigInt(static_cast<unsigned long>(n)) > ipow(k - 1, static_cast<unsigned>(t.d)))
      throw VerificationError("class " + std::to_string(k) + " has " + std::to_string(n) +
                              " copies, more than (k-1)^d");
  }
  t.weight = weight_from_counts(t.nu, t.d);
  t.bin = std::move(b);
  return t;
}

std::string describe_failure(const BinReport& rep) {
  std::ostringstream msg;
  if (!rep.dimension_ok) msg << "dimension mismatch at cube " << *rep.uncontained << "; ";
  if (!rep.containment_ok) msg << "cube " << *rep.uncontained << " leaves the unit bin; ";
  if (rep.offending_pair) msg << "cubes " << rep.offending_pair->first << " and " << rep.offending_pair->second << " overlap";
  return msg.str();
}

}  // namespace

TypedPacking make_typed_packing(Bin b) {
  auto rep = verify_bin(b);
  if (!rep.ok()) throw VerificationError("bin fails verification: " + describe_failure(rep));
  Rat eps = b.cubes.empty() ? Rat(0) : b.cubes.front().cls.epsilon();
  return typed_from_verified(std::move(b), eps);
}

TypedPacking build_U(const SeparatedFamily& family, const Rat& eps, const Selection& sel) {
  if (eps.sign() <= 0) throw InputError("build_U requires eps > 0");
  TypedPacking empty;
  empty.d = family.d;
  empty.epsilon = eps;
  empty.bin = Bin(family.d);
  empty.weight = Rat(0);
  empty.family_weight = Rat(0);
  if (family.classes.empty()) return empty;

  const int kmax = family.classes.back();
  if (eps > Rat(1, static_cast<long>(kmax) * kmax))
    throw InputError("build_U requires eps <= k_max^-2 = 1/" + std::to_string(kmax * kmax) + ", got " + eps.str());
  for (std::size_t i = 0; i < family.classes.size(); ++i)
    for (std::size_t j = i + 1; j < family.classes.size(); ++j)
      if (!gap_inequality_holds(family.classes[i], family.classes[j], eps))
        throw VerificationError("gap inequality fails for classes " + std::to_string(family.classes[i]) + " < " +
                                std::to_string(family.classes[j]));

  Bin bin(family.d);
  Rat family_weight(0);
  std::size_t remaining = sel.cap;
  for (const auto& L : family.languages) {
    family_weight += Rat(L.size(), ipow(L.k() - 1, static_cast<unsigned>(family.d)));
    std::vector<Word> words;
    if (sel.all) {
      words = L.all_words(remaining);
      remaining -= words.size();
    } else {
      words = L.first_words(sel.per_class);
    }
    for (const auto& w : words) bin.cubes.push_back(place_word(w, eps));
  }
  auto rep = verify_bin(bin);
  if (!rep.ok()) throw VerificationError("build_U produced an invalid packing: " + describe_failure(rep));
  auto t = typed_from_verified(std::move(bin), eps);
  t.family_weight = family_weight;
  return t;
}

std::vector<Rat> homogeneous_slot(int k, int d, const Rat& eps, std::size_t index) {
  const Rat side = (Rat(1) + eps) / Rat(k);
  const auto radix = static_cast<std::size_t>(k - 1);
  std::vector<Rat> base(static_cast<std::size_t>(d));
  for (std::size_t axis = base.size(); axis-- > 0;) {
    base[axis] = Rat(static_cast<long>(index % radix)) * side;
    index /= radix;
  }
  if (index != 0) throw InputError("homogeneous slot index out of range");
  return base;
}

HomogeneousBin build_homogeneous(int k, int d, const Rat& eps) {
  if (k < 2 || d < 1) throw InputError("build_homogeneous requires k >= 2 and d >= 1");
  if (eps.sign() <= 0 || eps > Rat(1, k - 1))
    throw InputError("build_homogeneous requires 0 < eps <= 1/(k-1), got " + eps.str() + " for k=" + std::to_string(k));
  const BigInt count = ipow(k - 1, static_cast<unsigned>(d));
  if (count > BigInt(4000000L)) throw BudgetExceeded("homogeneous bin with " + big_str(count) + " cubes is too large");
  HomogeneousBin h{k, d, eps, Bin(d)};
  const CubeClass cls(k, eps, d);
  const auto n = to_size(count);
  h.bin.cubes.reserve(n);
  for (std::size_t i = 0; i < n; ++i) h.bin.cubes.emplace_back(cls, homogeneous_slot(k, d, eps, i));
  auto rep = verify_bin(h.bin);
  if (!rep.ok()) throw VerificationError("homogeneous bin fails verification: " + describe_failure(rep));
  return h;
}

std::string to_string(LogBase b) { return b == LogBase::natural ? "natural" : "2"; }

LogBase parse_log_base(const std::string& s) {
  if (s == "natural" || s == "e" || s == "ln") return LogBase::natural;
  if (s == "2") return LogBase::two;
  throw InputError("log base must be 'natural' or '2', got '" + s + "'");
}

double log_in(LogBase b, double x) { return b == LogBase::natural ? std::log(x) : std::log2(x); }

namespace {

// Ceiling that treats values within rounding noise of an integer as that integer.
int stable_ceil(double v) {
  double r = std::round(v);
  if (std::fabs(v - r) < 1e-9) return static_cast<int>(r);
  return static_cast<int>(std::ceil(v));
}

}  // namespace

int compute_S(int d, LogBase base) {
  if (d < 2) throw InputError("compute_S requires d >= 2");
  return stable_ceil(2.0 * d / (9.0 * log_in(base, d)));
}

int compute_S_prime(int d, LogBase base) {
  if (d < 2) throw InputError("compute_S_prime requires d >= 2");
  return stable_ceil(std::log2(static_cast<double>(d)) - std::log2(log_in(base, d)) - 3.0);
}

namespace {

Rat family_weight_of(const SeparatedFamily& f) {
  Rat w(0);
  for (const auto& L : f.languages) w += Rat(L.size(), ipow(L.k() - 1, static_cast<unsigned>(f.d)));
  return w;
}

BuildMode pick_mode(int d, const std::vector<int>& classes, const FamilyOptions& fo) {
  if (fo.mode == BuildMode::implicit || classes.empty()) return BuildMode::implicit;
  const BigInt candidates = ipow(classes.back() - 1, static_cast<unsigned>((d + 1) / 2));
  return candidates <= BigInt(static_cast<unsigned long>(fo.enumerate_cap)) ? BuildMode::enumerate
                                                                             : BuildMode::implicit;
}

constexpr std::size_t kCoordinateBudget = 2000000;

void finish_report(DriverReport& r, const DriverOptions& opt) {
  r.certificate = certify_family(r.family, 2000, opt.seed);
  if (!r.certificate.ok) throw VerificationError("family certification failed for d=" + std::to_string(r.d));
  BigInt total = 0;
  for (const auto& L : r.family.languages) {
    r.language_sizes[L.k()] = L.size();
    total += L.size();
  }
  r.fully_materialized = total <= BigInt(static_cast<unsigned long>(opt.materialize_cap));
  // Keep the budgeted bin small in total coordinates as well as in cubes.
  const std::size_t classes = std::max<std::size_t>(1, r.family.languages.size());
  const std::size_t per_class = std::max<std::size_t>(
      1, std::min({opt.word_budget, opt.materialize_cap / classes, kCoordinateBudget / (classes * r.d)}));
  Selection sel = r.fully_materialized ? Selection::everything(opt.materialize_cap) : Selection::budget(per_class);
  r.packing = build_U(r.family, r.epsilon, sel);
  r.family_weight = family_weight_of(r.family);
  r.recomputed_weight = weight_from_cubes(r.packing.bin);
  if (!(r.recomputed_weight == r.packing.weight))
    throw VerificationError("weight recomputation disagrees: " + r.recomputed_weight.str() + " vs " +
                            r.packing.weight.str());
  if (r.fully_materialized && !(r.family_weight == r.packing.weight))
    throw VerificationError("materialized weight differs from family weight");
  r.target_met = r.family_weight.to_double() >= r.target;
  r.bad_fraction = bad_fractions(r.family);
  r.asserted = r.d >= opt.d0;
}

}  // namespace

DriverReport lemma_A_driver(int d, const DriverOptions& opt) {
  if (d < 2) throw InputError("lemma_A_driver requires d >= 2");
  DriverReport r;
  r.lemma = "A";
  r.d = d;
  r.log_base = opt.log_base;
  r.S = compute_S(d, opt.log_base);
  r.target = d / (5.0 * log_in(opt.log_base, d));
  const SeedStream stream = SeedStream(opt.seed).sub("lemmaA").sub(static_cast<std::uint64_t>(d));

  bool built = false;
  if (r.S >= 2) {
    std::vector<int> classes;
    for (int k = 2; k <= r.S; ++k) classes.push_back(k);
    try {
      FamilyOptions fo = opt.family;
      fo.mode = pick_mode(d, classes, fo);
      r.family = build_separated_family(d, classes, stream, fo);
      r.epsilon = opt.epsilon_override.value_or(Rat(1, static_cast<long>(r.S) * r.S));
      r.family_label = "randomized";
      built = true;
    } catch (const BudgetExceeded& e) {
      r.fallback_reason = e.what();
    }
  } else {
    r.fallback_reason = "S = " + std::to_string(r.S) + " leaves no classes at d = " + std::to_string(d);
  }
  if (!built) {
    r.family = warmup_family(d);
    r.epsilon = opt.epsilon_override.value_or(Rat(1, static_cast<long>(d) * d));
    r.family_label = "warmup-fallback";
  }
  if (r.S >= 2) r.density_target = Rat(10, 11) * Rat(r.S - 1);

  finish_report(r, opt);
  if (r.density_target) r.density_met = r.family_weight >= *r.density_target;
  if (r.asserted && (!r.target_met || (r.density_target && !r.density_met)))
    throw VerificationError("lemma A targets not met at d=" + std::to_string(d) + " (asserted from d0=" +
                            std::to_string(opt.d0) + ")");
  return r;
}

DriverReport lemma_B_driver(int d, const DriverOptions& opt) {
  if (d < 2) throw InputError("lemma_B_driver requires d >= 2");
  DriverReport r;
  r.lemma = "B";
  r.d = d;
  r.log_base = opt.log_base;
  r.S = compute_S_prime(d, opt.log_base);
  r.target = log_in(opt.log_base, d);
  const SeedStream stream = SeedStream(opt.seed).sub("lemmaB").sub(static_cast<std::uint64_t>(d));

  bool built = false;
  if (r.S >= 2) {
    auto classes = power_of_two_classes(r.S);
    try {
      FamilyOptions fo = opt.family;
      fo.mode = pick_mode(d, classes, fo);
      r.family = build_separated_family(d, classes, stream, fo);
      r.epsilon = opt.epsilon_override.value_or(Rat(BigInt(1), ipow(2, static_cast<unsigned>(2 * (r.S - 1)))));
      r.family_label = "randomized-power-of-two";
      built = true;
    } catch (const BudgetExceeded& e) {
      r.fallback_reason = e.what();
    }
  } else {
    r.fallback_reason = "S' = " + std::to_string(r.S) + " leaves no classes at d = " + std::to_string(d);
  }
  if (!built) {
    // Smallest power-of-two family with two classes, in the warm-up pattern.
    auto classes = power_of_two_classes(3);
    r.family = warmup_family_for(d, classes);
    r.epsilon = opt.epsilon_override.value_or(Rat(1, 16));
    r.family_label = "power-of-two-warmup-fallback";
  }
  finish_report(r, opt);
  if (r.asserted && !r.target_met)
    throw VerificationError("lemma B target not met at d=" + std::to_string(d));
  return r;
}

}  // namespace hcp
