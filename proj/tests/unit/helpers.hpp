#pragma once

#include <cstdlib>
#include <filesystem>
#include <random>
#include <string>

#include "exwarp/scenegen.hpp"

namespace testing {

inline std::filesystem::path scratch_dir(const std::string& name) {
  const char* root = std::getenv("EXWARP_TEST_TMP");
  std::filesystem::path dir =
      std::filesystem::path(root ? root : std::filesystem::temp_directory_path() / "exwarp-tests") / name;
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

inline exwarp::ObjectSpec rect(std::uint8_t id, double size, exwarp::Trajectory path,
                               double depth = 1.0) {
  exwarp::ObjectSpec o;
  o.shape = exwarp::ShapeKind::rect;
  o.size = size;
  o.trajectory = std::move(path);
  o.depth = depth;
  o.object_id = id;
  o.color = {static_cast<std::uint8_t>(40 * id), 200, 60};
  return o;
}

inline exwarp::SceneSpec empty_scene(int w = 64, int h = 64, int len = 6) {
  exwarp::SceneSpec s;
  s.width = w;
  s.height = h;
  s.episode_len = len;
  return s;
}

/// One rect crossing a textured background at `speed` px per base frame.
inline exwarp::SceneSpec moving_rect_scene(double speed, int len = 6, std::uint64_t seed = 3) {
  exwarp::SceneSpec s = empty_scene(64, 64, len);
  s.background.kind = exwarp::BackgroundKind::textured_noise;
  s.background.seed = seed;
  s.objects.push_back(rect(1, 16, exwarp::Trajectory::linear({12, 32}, {speed, 0})));
  return s;
}

inline exwarp::Frame random_frame(int w, int h, std::mt19937_64& rng, std::int64_t ts = 0) {
  exwarp::Frame f(w, h, ts);
  std::uniform_int_distribution<int> d(0, 255);
  for (auto& b : f.bytes()) b = static_cast<std::uint8_t>(d(rng));
  return f;
}

}  // namespace testing
