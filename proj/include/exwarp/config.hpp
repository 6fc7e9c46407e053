#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "exwarp/families.hpp"
#include "exwarp/predictor.hpp"
#include "exwarp/scheduler.hpp"

namespace exwarp {

/// Effective settings of one command. Every key is optional in the file; see README for
/// the full key list.
struct RunConfig {
  std::uint64_t seed = 1;
  std::filesystem::path out = "exwarp-out";
  std::string policy = "S6";
  std::vector<std::filesystem::path> dataset_paths;  // empty: generate the scene families
  std::vector<SceneFamily> families = all_families();
  FamilyOptions scenes;
  SchedulerConfig scheduler;
  TrainConfig train;
  std::vector<std::string> compare_policies = {"S1", "S2", "S3", "S4", "S5", "S6", "oracle"};
  std::optional<std::filesystem::path> train_checkpoint;  // policy for compare's "trained" row
};

/// Parses a JSON document whose keys may be nested objects or dotted paths ("train.gamma").
/// Throws ValidationError naming every unknown or invalid key.
RunConfig parse_config(const std::string& json_text);
RunConfig load_config(const std::filesystem::path& path);

/// Checks that referenced files and directories exist; throws ValidationError naming the keys.
void validate_paths(const RunConfig& config);

/// Sorted "key = value" lines of every effective setting except the output directory.
std::string canonical_config(const RunConfig& config);
/// 16 hex digits of FNV-1a over canonical_config.
std::string config_hash(const RunConfig& config);

/// "S1".."S6", "oracle", or "trained:<checkpoint>".
bool is_valid_policy_name(const std::string& name);

}  // namespace exwarp
