#include <doctest.h>

#include <cmath>

#include "hcpack/errors.hpp"
#include "hcpack/packing.hpp"

using namespace hcp;

TEST_CASE("letter coordinates") {
  const Rat e(1, 10);
  CHECK(base_coordinate(3, 1, e) == 0);
  CHECK(base_coordinate(3, 2, e) == Rat(11, 30));
  CHECK(base_coordinate(3, 3, e) == Rat(19, 30));
  CHECK(end_coordinate(3, 3, e) == 1);
  CHECK_THROWS_AS(base_coordinate(3, 4, e), InputError);
  CHECK_THROWS_AS(base_coordinate(3, 1, Rat(1, 2)), InputError);
}

TEST_CASE("only letters k-1 and k overlap within a class") {
  const Rat e(1, 144);
  for (int k = 2; k <= 12; ++k)
    for (int a = 1; a <= k; ++a)
      for (int b = a + 1; b <= k; ++b) {
        const bool overlap = !intervals_disjoint(letter_interval(k, a, e), letter_interval(k, b, e));
        CHECK(overlap == (a == k - 1 && b == k));
      }
}

TEST_CASE("gap inequality against a direct evaluation") {
  for (int k = 2; k <= 12; ++k)
    for (int kp = k + 1; kp <= 12; ++kp) {
      const Rat e(1, 144);
      const Rat lhs = Rat(k - 1) * (Rat(1) + e) / Rat(k);
      const Rat rhs = Rat(1) - (Rat(1) + e) / Rat(kp);
      CHECK(gap_inequality_holds(k, kp, e) == (lhs < rhs));
      CHECK(lhs < rhs);
    }
}

TEST_CASE("homogeneous bins hold (k-1)^d cubes") {
  for (int d = 2; d <= 4; ++d)
    for (int k = 2; k <= 5; ++k) {
      const auto H = build_homogeneous(k, d, Rat(1, k - 1));
      CHECK(H.bin.cubes.size() == static_cast<std::size_t>(ipow(k - 1, d).get_ui()));
      CHECK(verify_bin(H.bin).ok());
    }
  CHECK_THROWS_AS(build_homogeneous(3, 2, Rat(2, 3)), InputError);
  CHECK(homogeneous_slot(3, 2, Rat(1, 2), 3) == std::vector<Rat>{Rat(1, 2), Rat(1, 2)});
}

TEST_CASE("typed packing rejects overlaps and overfull classes") {
  CubeClass c(2, Rat(1, 10), 1);
  CHECK_THROWS_AS(make_typed_packing(Bin(1, {PlacedCube(c, {0}), PlacedCube(c, {Rat(1, 5)})})), VerificationError);
  CubeClass z(2, Rat(0), 1);
  CHECK_THROWS_AS(make_typed_packing(Bin(1, {PlacedCube(z, {0}), PlacedCube(z, {Rat(1, 2)})})), VerificationError);
  const auto U = make_typed_packing(Bin(1, {PlacedCube(c, {0})}));
  CHECK(U.weight == 1);
}

TEST_CASE("weights agree by count and by cube") {
  const auto U = build_U(warmup_family(5), Rat(1, 25));
  CHECK(weight_from_counts(U.nu, 5) == weight_from_cubes(U.bin));
  CHECK(U.weight == Rat(1) + Rat(1, 2) + Rat(1, 3) + Rat(1, 4));
}

TEST_CASE("build_U enforces its epsilon bound") {
  CHECK_THROWS_AS(build_U(warmup_family(3), Rat(1, 8)), InputError);
  CHECK_THROWS_AS(build_U(warmup_family(3), Rat(0)), InputError);
  CHECK_NOTHROW(build_U(warmup_family(3), Rat(1, 9)));
}

TEST_CASE("S and S' follow their closed forms") {
  for (int d : {3, 10, 50, 100, 1000, 100000}) {
    const double ln = std::log(static_cast<double>(d));
    CHECK(compute_S(d, LogBase::natural) == static_cast<int>(std::ceil(2.0 * d / (9.0 * ln) - 1e-12)));
    CHECK(compute_S(d, LogBase::two) == static_cast<int>(std::ceil(2.0 * d / (9.0 * std::log2(d)) - 1e-12)));
    CHECK(compute_S_prime(d, LogBase::natural) ==
          static_cast<int>(std::ceil(std::log2(d) - std::log2(ln) - 3 - 1e-12)));
  }
  CHECK_THROWS_AS(parse_log_base("ten"), InputError);
}

TEST_CASE("lemma drivers at small d") {
  const auto A = lemma_A_driver(4);
  CHECK(A.family_label.find("warmup") != std::string::npos);
  CHECK(A.family_weight == Rat(11, 6));
  CHECK(verify_bin(A.packing.bin).ok());
  CHECK_FALSE(A.asserted);

  const auto A12 = lemma_A_driver(12);
  CHECK(A12.S == 2);
  CHECK(A12.certificate.ok);
  CHECK(verify_bin(A12.packing.bin).ok());

  const auto B = lemma_B_driver(20);
  CHECK(B.family.power_of_two());
  CHECK(B.family_weight == Rat(4, 3));
  CHECK(verify_bin(B.packing.bin).ok());

  DriverOptions seeded;
  seeded.seed = 5;
  CHECK(lemma_A_driver(12, seeded).family_weight == lemma_A_driver(12, seeded).family_weight);
}
