#include <doctest.h>

#include <filesystem>

#include "hcpack/errors.hpp"
#include "hcpack/reproduce.hpp"
#include "hcpack/serialize.hpp"

using namespace hcp;

TEST_CASE("rationals round-trip") {
  for (const Rat& r : {Rat(0), Rat(-3, 4), Rat(7), Rat(BigInt("123456789012345678901234567890"), BigInt(7))})
    CHECK(rat_from_json(rat_json(r)) == r);
  CHECK(rat_json(Rat(0)) == "0/1");
  CHECK(rat_from_json(Json(5)) == Rat(5));
  CHECK_THROWS_AS(rat_from_json(Json("a/b")), InputError);
}

TEST_CASE("packing round-trip re-verifies") {
  const auto U = build_U(warmup_family(4), Rat(1, 16));
  const auto back = packing_from_json(Json::parse(dump(packing_json(U))));
  CHECK(back.weight == U.weight);
  CHECK(back.nu == U.nu);
  CHECK(back.bin.cubes.size() == U.bin.cubes.size());

  auto j = packing_json(U);
  j["cubes"][1]["base"] = j["cubes"][0]["base"];
  j["cubes"][1]["k"] = j["cubes"][0]["k"];
  CHECK_THROWS_AS(packing_from_json(j), VerificationError);
}

TEST_CASE("family round-trip") {
  const auto f = warmup_family(5);
  const auto back = family_from_json(family_json(f));
  REQUIRE(back.languages.size() == f.languages.size());
  for (std::size_t i = 0; i < f.languages.size(); ++i) CHECK(back.languages[i].size() == f.languages[i].size());
  CHECK(family_json(back) == family_json(f));

  const auto r = lemma_A_driver(12).family;
  CHECK(family_json(family_from_json(family_json(r))) == family_json(r));
}

TEST_CASE("instance and config round-trip") {
  const auto U = build_U(warmup_family(3), Rat(1, 9));
  const auto inst = adversarial_instance(U, 1);
  const auto back = instance_from_json(instance_json(inst));
  CHECK(back.segments == inst.segments);
  CHECK(back.epsilon == inst.epsilon);

  const auto cfg = homogeneous_mixture(2, {2, 3}, Rat(1, 2));
  CHECK(config_json(config_from_json(config_json(cfg))) == config_json(cfg));
  CHECK_THROWS_AS(config_from_json(Json::object()), InputError);
}

TEST_CASE("dump is stable and sha256 matches a known digest") {
  CHECK(dump(Json{{"b", 1}, {"a", 2}}) == "{\n  \"a\": 2,\n  \"b\": 1\n}\n");
  CHECK(sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST_CASE("manifest has a null timestamp by default") {
  RunManifest m;
  m.command = "x";
  const auto j = manifest_json(m);
  CHECK(j["timestamp"].is_null());
  CHECK(j["version"] == std::string(kToolVersion));
  CHECK(j["rng"] == std::string(kRngName));
}

TEST_CASE("reproduce is byte-identical across runs") {
  const auto tmp = std::filesystem::temp_directory_path() / "hcpack_repro_test";
  std::filesystem::remove_all(tmp);
  ReproduceOptions opt;
  opt.dims = {2};
  const auto a = reproduce(opt, tmp / "a");
  const auto b = reproduce(opt, tmp / "b");
  CHECK(a.files == b.files);
  CHECK(a.failures.empty());
  CHECK(std::filesystem::exists(tmp / "a" / "summary.csv"));
  std::filesystem::remove_all(tmp);
}
