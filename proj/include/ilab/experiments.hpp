#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "ilab/common.hpp"

namespace ilab {

enum class Verdict { pass, fail, inconclusive };

std::string verdict_name(Verdict v);

// Seeded, hashed, persisted experiment result. Rerunning with the same config
// reproduces everything byte for byte except the wall time.
struct RunRecord {
  std::string experiment;
  nlohmann::json config;     // fully resolved, including the seed
  std::uint64_t seed = 0;
  std::string config_hash;   // hex fingerprint of {experiment, config}
  Verdict verdict = Verdict::inconclusive;
  nlohmann::json evidence;   // numbers sufficient to recompute the verdict
  std::vector<std::string> series_files;  // sibling CSV paths, relative
  double wall_ms = 0.0;
  std::string code_version;

  nlohmann::json to_json() const;
  static RunRecord from_json(const nlohmann::json& j);
};

// Known experiment names, in a fixed order.
std::vector<std::string> experiment_names();

nlohmann::json default_experiment_config(const std::string& name);

// Runs one named experiment. `config` overrides defaults key-by-key (unknown
// keys are rejected); record + series land under out_dir/<name>/. Writes are
// atomic (temp file + rename).
RunRecord run_experiment(const std::string& name, const nlohmann::json& config_overrides,
                         std::uint64_t seed, const std::string& out_dir);

struct ReportRow {
  std::string name;
  std::string hash;
  std::string verdict;
  std::string key_numbers;
  bool corrupt = false;
};

// One line per persisted record, sorted by hash. Corrupt files are flagged.
std::vector<ReportRow> report_runs(const std::string& dir);

}  // namespace ilab
