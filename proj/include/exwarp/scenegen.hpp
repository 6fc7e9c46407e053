#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "exwarp/grid.hpp"

namespace exwarp {

inline constexpr int kBlockSize = 16;
/// Depth assigned to the static background; objects must sit strictly in front of it.
inline constexpr float kBackgroundDepth = 10.0f;

enum class BackgroundKind { flat, gradient, textured_noise };
enum class ShapeKind { rect, circle, textured_sprite };
enum class NormalProfile { flat, spherical };

struct BackgroundSpec {
  BackgroundKind kind = BackgroundKind::flat;
  std::uint64_t seed = 0;
  Rgb8 color{96, 112, 128};
};

struct Keyframe {
  double time = 0.0;  // base frames
  Vec2d position;     // world pixels
};

/// Analytic object path in world pixels, parameterised by time in base frames.
/// Piecewise-linear paths continue with their last segment's velocity past the final key.
class Trajectory {
 public:
  enum class Kind { piecewise_linear, sinusoidal };

  static Trajectory fixed(Vec2d position);
  static Trajectory linear(Vec2d start, Vec2d velocity_per_frame);
  static Trajectory piecewise(std::vector<Keyframe> keys);
  static Trajectory sinusoidal(Vec2d center, Vec2d amplitude, double period_frames,
                               double phase = 0.0);

  Vec2d position(double t) const;

  Kind kind() const { return kind_; }
  const std::vector<Keyframe>& keys() const { return keys_; }
  Vec2d center() const { return center_; }
  Vec2d amplitude() const { return amplitude_; }
  double period() const { return period_; }
  double phase() const { return phase_; }

 private:
  Kind kind_ = Kind::piecewise_linear;
  std::vector<Keyframe> keys_{Keyframe{}};
  Vec2d center_;
  Vec2d amplitude_;
  double period_ = 1.0;
  double phase_ = 0.0;
};

struct ObjectSpec {
  ShapeKind shape = ShapeKind::rect;
  double size = 16.0;  // edge length (rect, sprite) or diameter (circle)
  Trajectory trajectory;
  double depth = 1.0;  // smaller is nearer
  std::uint8_t object_id = 1;
  NormalProfile normal_profile = NormalProfile::flat;
  Rgb8 color{220, 60, 40};
};

struct CameraSpec {
  Vec2d pan_velocity;      // world pixels per base frame
  double zoom_rate = 1.0;  // scale factor per base frame
};

struct SceneSpec {
  int width = 64;
  int height = 64;
  double base_fps = 30.0;
  int episode_len = 8;
  BackgroundSpec background;
  std::vector<ObjectSpec> objects;
  CameraSpec camera;
  std::uint64_t rng_seed = 0;

  /// Throws ValidationError listing every violated invariant.
  void validate() const;
};

/// Auxiliary rasters for one base frame.
struct GBufferSet {
  Grid<Vec2f> motion_dense;   // per quarter-slot; previous base position is p - 4 * motion
  Grid<Vec2f> motion_blocks;  // 16x16 tile means of motion_dense
  Grid<std::uint8_t> stencil;
  Grid<Vec3f> world_normal;
  Grid<Vec3f> world_position;  // (world x, world y, depth)

  bool operator==(const GBufferSet&) const = default;
};

/// Ground truth for one episode: a frame at every quarter-slot and G-buffers at base slots.
struct Episode {
  int width = 0;
  int height = 0;
  double base_fps = 30.0;
  std::uint64_t rng_seed = 0;
  std::vector<Frame> frames;
  std::vector<GBufferSet> gbuffers;

  int base_frame_count() const { return static_cast<int>(gbuffers.size()); }
  const Frame& base_frame(int k) const { return frames.at(static_cast<std::size_t>(4 * k)); }
  const Frame& quarter_frame(std::int64_t q) const {
    return frames.at(static_cast<std::size_t>(q));
  }
};

Episode render_episode(const SceneSpec& spec);

/// Renders the frame at quarter-slot q (time q/4 base frames).
Frame render_frame(const SceneSpec& spec, std::int64_t quarter_slot);

/// G-buffers for base frame k.
GBufferSet render_gbuffers(const SceneSpec& spec, int base_frame);

Grid<Vec2f> block_means(const Grid<Vec2f>& motion, int block = kBlockSize);

std::string to_string(BackgroundKind kind);
std::string to_string(ShapeKind kind);
std::string to_string(NormalProfile profile);

}  // namespace exwarp
