#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "hcpack/game.hpp"
#include "hcpack/online.hpp"
#include "hcpack/packing.hpp"

namespace hcp {

using Json = nlohmann::json;

inline constexpr std::string_view kToolVersion = "0.1.0";

/// Rationals are strings "p/q"; parsing also takes plain integers.
Json rat_json(const Rat& r);
Rat rat_from_json(const Json& j);
Json rats_json(const std::vector<Rat>& v);
std::vector<Rat> rats_from_json(const Json& j);
BigInt big_from_json(const Json& j);

Json bin_json(const Bin& b);
Bin bin_from_json(const Json& j);

/// {"d", "epsilon", "cubes": [{"k", "epsilon", "base"}], "nu", "weight"}.
Json packing_json(const TypedPacking& p);
/// Reads "d" and "cubes", then re-verifies. Other keys are ignored.
TypedPacking packing_from_json(const Json& j);

Json family_json(const SeparatedFamily& f);
SeparatedFamily family_from_json(const Json& j);

/// {"d", "epsilon", "segments": [{"k", "count"}]}.
Json instance_json(const Instance& inst);
Instance instance_from_json(const Json& j);

/// {"d", "bins": [{"id", "cubes": [{"id", "k", "epsilon", "base"}]}]}.
Json config_json(const GameConfig& cfg);
GameConfig config_from_json(const Json& j);

Json certificate_json(const FamilyCertificate& c);
Json driver_json(const DriverReport& r);
Json lower_bound_json(const LowerBound& lb);
Json run_json(const RunResult& r, const RatioReport& ratio);
Json move_json(const MoveProposal& m);
Json nash_json(const NashCertificate& c);
Json coalition_json(const Coalition& c);
Json strong_nash_json(const StrongNashCertificate& c);
Json poa_json(const PoaInstance& p);
Json prop2_json(const Prop2Report& r);

/// Run metadata embedded in every emitted file. The timestamp stays null unless
/// requested so that reruns are byte-identical.
struct RunManifest {
  std::string command;
  std::uint64_t seed = 0;
  LogBase log_base = LogBase::natural;
  std::optional<std::string> timestamp;
  std::map<std::string, std::string> inputs;  // path -> sha256
};

Json manifest_json(const RunManifest& m);

/// Pretty-printed with sorted keys and a trailing newline.
std::string dump(const Json& j);
Json read_json_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, const std::string& text);

std::string sha256_hex(std::string_view data);
std::string sha256_file(const std::filesystem::path& path);

}  // namespace hcp
