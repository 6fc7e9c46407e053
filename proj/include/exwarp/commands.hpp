#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "exwarp/config.hpp"
#include "exwarp/training.hpp"

namespace exwarp {

/// Command-line overrides applied on top of the config file.
struct CommandOptions {
  std::optional<std::filesystem::path> config;
  std::optional<std::uint64_t> seed;
  std::optional<std::filesystem::path> out;
  std::optional<std::string> policy;
};

/// Loads the config (defaults when no file is given), applies overrides and checks paths.
RunConfig resolve_config(const CommandOptions& options);

/// Episodes named "<family>/epNNN": loaded from dataset.paths, or rendered from the families.
std::vector<EpisodeSet> gather_episodes(const RunConfig& config);

/// Builds a policy by name ("S1".."S6", "oracle", "trained:<checkpoint>").
std::unique_ptr<Policy> make_policy(const std::string& name);

// Each command writes its outputs atomically under config.out, then run_manifest.json.
void cmd_generate(const RunConfig& config);
void cmd_run(const RunConfig& config);
void cmd_train(const RunConfig& config);
void cmd_evaluate(const RunConfig& config);
void cmd_compare(const RunConfig& config);

}  // namespace exwarp
