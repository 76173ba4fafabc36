#include <doctest.h>

#include <functional>

#include "hcpack/errors.hpp"
#include "hcpack/online.hpp"

using namespace hcp;

namespace {

TypedPacking warmup_u3() { return build_U(warmup_family(3), Rat(1, 9)); }

// Scripted algorithm for contract tests.
class Scripted : public OnlineAlgorithm {
 public:
  explicit Scripted(std::function<Decision(const CubeClass&, std::span<const OpenBin>)> f) : f_(std::move(f)) {}
  std::string name() const override { return "scripted"; }
  Decision place(const CubeClass& c, std::span<const OpenBin> open) override { return f_(c, open); }

 private:
  std::function<Decision(const CubeClass&, std::span<const OpenBin>)> f_;
};

Instance single(int k, std::size_t n, int d = 2) { return Instance{d, Rat(1, 10), {Segment{k, n}}}; }

}  // namespace

TEST_CASE("adversary on the warm-up packing at d=3") {
  const auto U = warmup_u3();
  CHECK(U.weight == Rat(3, 2));
  CHECK(adversary_N(U) == 8);  // 1^3 * 2^3
}

TEST_CASE("adversary counting for M = 1, 2") {
  const auto U = warmup_u3();
  for (int M : {1, 2}) {
    const BigInt C = full_scale(U, M);
    CHECK(C == 2 * M * adversary_N(U));
    const auto inst = adversarial_instance(U, M);
    CHECK(inst.size() == static_cast<std::size_t>(C.get_ui()) * U.bin.cubes.size());
    const auto lb = lower_bound_certificate(U, M, C);
    // Independent sum of (C/2) nu_k / (k-1)^d.
    Rat expect = 0;
    for (const auto& [k, n] : U.nu) expect += Rat(BigInt(C / 2)) * Rat(static_cast<long>(n)) / Rat(ipow(k - 1, 3));
    CHECK(Rat(lb.total) == expect);
    CHECK(lb.total == 12 * M);
    const auto off = offline_certificate(U, inst, C);
    CHECK(off.ok());
    CHECK(off.bins == 16 * M);
    auto alg = make_class_harmonic(M);
    const auto run = run_bounded_space(*alg, inst, M);
    CHECK(BigInt(static_cast<unsigned long>(run.bins_used)) >= lb.total);
    CHECK(run.max_open <= static_cast<std::size_t>(M));
    const auto ratio = ratio_report(run, off, lb);
    CHECK(ratio.ratio >= Rat(3, 4));
  }
}

TEST_CASE("scale validation") {
  const auto U = warmup_u3();
  CHECK_NOTHROW(check_scale(U, 1, 16));
  CHECK_THROWS_AS(check_scale(U, 1, 8), InputError);
  CHECK_THROWS_AS(check_scale(U, 2, 16), InputError);
  CHECK_THROWS_AS(check_scale(U, 1, 0), InputError);
  CHECK_NOTHROW(check_scale(U, 1, 48));
}

TEST_CASE("offline certificate catches a mismatched instance") {
  const auto U = warmup_u3();
  auto inst = adversarial_instance(U, 1);
  inst.segments[0].count += 1;
  CHECK_FALSE(offline_certificate(U, inst, 16).counts_ok);
}

TEST_CASE("class-harmonic fills ceil(n / (k-1)^d) bins for one class") {
  for (int k = 2; k <= 5; ++k)
    for (std::size_t n : {1, 5, 16, 17, 40}) {
      auto alg = make_class_harmonic(1);
      const auto r = run_bounded_space(*alg, single(k, n), 1);
      const std::size_t cap = static_cast<std::size_t>((k - 1) * (k - 1));
      CHECK(r.bins_used == (n + cap - 1) / cap);
    }
}

TEST_CASE("class-harmonic thrashes with one open bin and alternating classes") {
  Instance inst{2, Rat(1, 10), {}};
  for (int i = 0; i < 6; ++i) inst.segments.push_back(Segment{i % 2 ? 3 : 4, 1});
  auto one = make_class_harmonic(1);
  CHECK(run_bounded_space(*one, inst, 1).bins_used == 6);
  auto two = make_class_harmonic(2);
  CHECK(run_bounded_space(*two, inst, 2).bins_used == 2);
}

TEST_CASE("harness rejects overlapping placements") {
  Scripted alg([](const CubeClass& c, std::span<const OpenBin> open) {
    Decision d;
    if (!open.empty()) d.bin = open[0].id;
    d.base.assign(c.dim(), Rat(0));
    return d;
  });
  try {
    run_bounded_space(alg, single(3, 3), 1);
    FAIL("expected a contract violation");
  } catch (const ContractViolation& e) {
    CHECK(e.step() == 1);
  }
}

TEST_CASE("harness rejects too many open bins") {
  Scripted alg([](const CubeClass& c, std::span<const OpenBin>) {
    Decision d;
    d.base.assign(c.dim(), Rat(0));
    return d;
  });
  CHECK_THROWS_AS(run_bounded_space(alg, single(3, 3), 2), ContractViolation);
  CHECK_NOTHROW(run_bounded_space(alg, single(3, 2), 2));
}

TEST_CASE("harness rejects reuse of a closed bin") {
  int step = 0;
  Scripted alg([&](const CubeClass& c, std::span<const OpenBin>) {
    Decision d;
    d.base.assign(c.dim(), Rat(0));
    if (step == 0) d.close_after.push_back(kThisBin);
    if (step == 1) {
      d.bin = 0;
      d.base.assign(c.dim(), Rat(1, 2));
    }
    ++step;
    return d;
  });
  CHECK_THROWS_WITH_AS(run_bounded_space(alg, single(3, 2), 1), doctest::Contains("closed"), ContractViolation);
}

TEST_CASE("harness rejects cubes leaving the bin") {
  Scripted alg([](const CubeClass& c, std::span<const OpenBin>) {
    Decision d;
    d.base.assign(c.dim(), Rat(9, 10));
    return d;
  });
  CHECK_THROWS_AS(run_bounded_space(alg, single(3, 1), 1), ContractViolation);
}

TEST_CASE("grid slots and capacity probe") {
  CHECK(grid_per_axis(CubeClass(3, Rat(1, 9), 2)) == 2);
  CHECK(grid_per_axis(CubeClass(3, Rat(0), 2)) == 3);
  CHECK(capacity_probe(3, 2, Rat(1, 9)).best == 4);
  CHECK(capacity_probe(4, 2, Rat(1, 16)).best == 9);
  CHECK(capacity_probe(3, 3, Rat(1, 9)).limit_holds);
}

TEST_CASE("instance validation") {
  CHECK_THROWS_AS(validate_instance(Instance{0, Rat(1, 10), {}}), InputError);
  CHECK_THROWS_AS(validate_instance(Instance{2, Rat(0), {}}), InputError);
  CHECK(single(3, 4).class_at(3) == 3);
}
