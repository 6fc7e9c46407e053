#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "exwarp/scenegen.hpp"

namespace exwarp {

/// Preset scene families ordered from static to high motion.
enum class SceneFamily { static_scene, low_motion, camera_pan, medium_motion, high_motion };

std::string to_string(SceneFamily family);
SceneFamily parse_family(const std::string& text);
std::vector<SceneFamily> all_families();

struct FamilyOptions {
  int width = 64;
  int height = 64;
  int episode_len = 16;
  double base_fps = 30.0;
  int episodes = 4;  // specs per family
};

/// Path that moves at a constant speed and reflects off the box [lo, hi], sampled exactly
/// at every bounce up to `duration` base frames.
Trajectory bouncing_path(Vec2d start, Vec2d velocity_per_frame, Vec2d lo, Vec2d hi,
                         double duration);

/// Randomised members of a family; deterministic in `seed`.
std::vector<SceneSpec> family_specs(SceneFamily family, const FamilyOptions& options,
                                    std::uint64_t seed);

/// Objects sliding horizontally at `speed` pixels per quarter-slot over a textured background.
SceneSpec speed_sweep_spec(double speed, const FamilyOptions& options, std::uint64_t seed);

}  // namespace exwarp
