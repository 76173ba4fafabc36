#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "hcpack/packing.hpp"
#include "hcpack/serialize.hpp"

namespace hcp {

struct ReproduceOptions {
  std::vector<int> dims{2, 3, 4};
  std::uint64_t seed = 1;
  LogBase log_base = LogBase::natural;
  int M = 1;
  /// Adversarial instances larger than this are skipped.
  std::size_t online_item_cap = 200000;
  /// PoA/SPoA instances are scaled down to fit this many items.
  std::size_t game_item_cap = 1000;
  std::size_t coalition_cap = 3;
  /// Config files are written only up to this many items.
  std::size_t config_file_cap = 2000;
  std::string command = "reproduce";
  std::optional<std::string> timestamp;
};

struct StageFailure {
  int d = 0;
  std::string stage;
  std::string error;
};

struct SummaryRow {
  int d = 0;
  int S = 0;
  int S_prime = 0;
  Rat epsilon;
  std::string family;
  std::map<int, BigInt> language_sizes;
  Rat weight;
  bool target_met = false;
  std::optional<BigInt> lower_bound;
  std::optional<std::size_t> measured_bins;
  std::optional<BigInt> offline_bins;
  std::optional<Rat> poa_ratio;
  std::optional<bool> poa_nash;
  std::optional<Rat> spoa_ratio;
  std::optional<bool> spoa_strong;
};

struct ReproduceResult {
  std::vector<SummaryRow> rows;
  std::vector<StageFailure> failures;
  std::map<std::string, std::string> files;  // relative path -> sha256
};

/// Runs every stage for every dimension, writing one JSON file per artifact
/// plus summary.json, summary.csv and manifest.json (file hashes) into
/// `out_dir`. A failing stage is recorded and the pipeline moves on.
ReproduceResult reproduce(const ReproduceOptions& opt, const std::filesystem::path& out_dir);

Json summary_row_json(const SummaryRow& r);
std::string summary_csv(const std::vector<SummaryRow>& rows);

}  // namespace hcp
