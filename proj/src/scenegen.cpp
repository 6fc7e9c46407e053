#include "exwarp/scenegen.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <set>
#include <sstream>

#include "exwarp/errors.hpp"
#include "hash.hpp"

namespace exwarp {

// ---------------------------------------------------------------------------
// Trajectory

Trajectory Trajectory::fixed(Vec2d position) { return piecewise({Keyframe{0.0, position}}); }

Trajectory Trajectory::linear(Vec2d start, Vec2d velocity_per_frame) {
  return piecewise({Keyframe{0.0, start},
                    Keyframe{1.0, {start.x + velocity_per_frame.x, start.y + velocity_per_frame.y}}});
}

Trajectory Trajectory::piecewise(std::vector<Keyframe> keys) {
  Trajectory t;
  t.kind_ = Kind::piecewise_linear;
  t.keys_ = std::move(keys);
  return t;
}

Trajectory Trajectory::sinusoidal(Vec2d center, Vec2d amplitude, double period_frames,
                                  double phase) {
  Trajectory t;
  t.kind_ = Kind::sinusoidal;
  t.keys_.clear();
  t.center_ = center;
  t.amplitude_ = amplitude;
  t.period_ = period_frames;
  t.phase_ = phase;
  return t;
}

Vec2d Trajectory::position(double t) const {
  if (kind_ == Kind::sinusoidal) {
    const double s = std::sin(2.0 * std::numbers::pi * t / period_ + phase_);
    return {center_.x + amplitude_.x * s, center_.y + amplitude_.y * s};
  }
  if (keys_.size() == 1) return keys_.front().position;
  // Segment [i, i+1] containing t; the first and last segments extend to infinity.
  std::size_t i = 0;
  while (i + 2 < keys_.size() && t > keys_[i + 1].time) ++i;
  const Keyframe& a = keys_[i];
  const Keyframe& b = keys_[i + 1];
  const double u = (t - a.time) / (b.time - a.time);
  return {a.position.x + u * (b.position.x - a.position.x),
          a.position.y + u * (b.position.y - a.position.y)};
}

// ---------------------------------------------------------------------------
// Validation

void SceneSpec::validate() const {
  std::vector<std::string> bad;
  auto complain = [&](auto&&... parts) {
    std::ostringstream os;
    (os << ... << parts);
    bad.push_back(os.str());
  };

  if (width <= 0 || width % kBlockSize != 0)
    complain("width ", width, " must be a positive multiple of ", kBlockSize);
  if (height <= 0 || height % kBlockSize != 0)
    complain("height ", height, " must be a positive multiple of ", kBlockSize);
  if (!(base_fps > 0.0)) complain("base_fps must be positive");
  if (episode_len < 4) complain("episode_len ", episode_len, " must be at least 4");

  if (!(camera.zoom_rate > 0.0)) {
    complain("camera.zoom_rate must be positive");
  } else if (width > 0 && height > 0) {
    const double per_quarter = std::pow(camera.zoom_rate, 0.25);
    const double shrink = std::min(per_quarter, 1.0 / per_quarter);
    const double disoccluded = std::abs(camera.pan_velocity.x) / 4.0 / width +
                               std::abs(camera.pan_velocity.y) / 4.0 / height +
                               (1.0 - shrink * shrink);
    if (disoccluded > 0.5)
      complain("camera motion disoccludes ", disoccluded * 100.0,
               "% of the frame per quarter-slot (limit 50%)");
  }

  std::set<int> ids;
  for (std::size_t i = 0; i < objects.size(); ++i) {
    const ObjectSpec& o = objects[i];
    if (o.object_id == 0) complain("objects[", i, "].object_id must be nonzero");
    if (!ids.insert(o.object_id).second)
      complain("objects[", i, "].object_id ", int(o.object_id), " is not unique");
    if (!(o.size > 0.0)) complain("objects[", i, "].size must be positive");
    if (!(o.depth > 0.0 && o.depth < kBackgroundDepth))
      complain("objects[", i, "].depth must lie in (0, ", kBackgroundDepth, ")");
    const Trajectory& tr = o.trajectory;
    if (tr.kind() == Trajectory::Kind::piecewise_linear) {
      if (tr.keys().empty()) complain("objects[", i, "].trajectory has no keyframes");
      for (std::size_t k = 1; k < tr.keys().size(); ++k)
        if (!(tr.keys()[k].time > tr.keys()[k - 1].time))
          complain("objects[", i, "].trajectory keyframe times must strictly increase");
    } else if (!(tr.period() > 0.0)) {
      complain("objects[", i, "].trajectory period must be positive");
    }
  }

  if (!bad.empty()) throw ValidationError(std::move(bad));
}

// ---------------------------------------------------------------------------
// Rendering

namespace {

struct CameraPose {
  double scale = 1.0;
  Vec2d offset;
  Vec2d center;

  Vec2d to_world(Vec2d screen) const {
    return {center.x + offset.x + (screen.x - center.x) / scale,
            center.y + offset.y + (screen.y - center.y) / scale};
  }
  Vec2d to_screen(Vec2d world) const {
    return {center.x + scale * (world.x - center.x - offset.x),
            center.y + scale * (world.y - center.y - offset.y)};
  }
};

CameraPose camera_pose(const SceneSpec& spec, double t) {
  CameraPose pose;
  pose.scale = std::pow(spec.camera.zoom_rate, t);
  pose.offset = {spec.camera.pan_velocity.x * t, spec.camera.pan_velocity.y * t};
  pose.center = {spec.width / 2.0, spec.height / 2.0};
  return pose;
}

std::uint8_t to_u8(double v) {
  return static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L));
}

bool covers(const ObjectSpec& o, Vec2d local) {
  const double half = o.size / 2.0;
  if (o.shape == ShapeKind::circle) return local.x * local.x + local.y * local.y < half * half;
  return local.x >= -half && local.x < half && local.y >= -half && local.y < half;
}

Vec3f surface_normal(const ObjectSpec& o, Vec2d local) {
  if (o.normal_profile == NormalProfile::flat) return {0.0f, 0.0f, 1.0f};
  double radius = o.size / 2.0;
  if (o.shape != ShapeKind::circle) radius *= std::numbers::sqrt2;
  const double ux = local.x / radius;
  const double uy = local.y / radius;
  const double nz = std::sqrt(std::max(0.0, 1.0 - ux * ux - uy * uy));
  const double len = std::sqrt(ux * ux + uy * uy + nz * nz);
  if (len == 0.0) return {0.0f, 0.0f, 1.0f};
  return {static_cast<float>(ux / len), static_cast<float>(uy / len),
          static_cast<float>(nz / len)};
}

struct Hit {
  const ObjectSpec* object = nullptr;
  Vec2d local;
};

class SceneSampler {
 public:
  SceneSampler(const SceneSpec& spec, double t) : spec_(spec), pose_(camera_pose(spec, t)) {
    positions_.reserve(spec.objects.size());
    for (const ObjectSpec& o : spec.objects) positions_.push_back(o.trajectory.position(t));
  }

  const CameraPose& pose() const { return pose_; }

  Hit trace(Vec2d world) const {
    Hit best;
    for (std::size_t i = 0; i < spec_.objects.size(); ++i) {
      const ObjectSpec& o = spec_.objects[i];
      const Vec2d local{world.x - positions_[i].x, world.y - positions_[i].y};
      if (!covers(o, local)) continue;
      if (best.object == nullptr || o.depth < best.object->depth ||
          (o.depth == best.object->depth && o.object_id < best.object->object_id)) {
        best.object = &o;
        best.local = local;
      }
    }
    return best;
  }

  Rgb8 shade(const Hit& hit, Vec2d world) const {
    if (hit.object == nullptr) return background(world);
    const ObjectSpec& o = *hit.object;
    double gain = 1.0;
    if (o.shape == ShapeKind::textured_sprite) {
      const double half = o.size / 2.0;
      const auto cx = static_cast<std::int64_t>(std::floor((hit.local.x + half) / 2.0));
      const auto cy = static_cast<std::int64_t>(std::floor((hit.local.y + half) / 2.0));
      const std::uint64_t h = detail::hash_coords(spec_.rng_seed ^ o.object_id, cx, cy, 7);
      gain = 0.55 + 0.45 * detail::unit_interval(h);
    }
    if (o.normal_profile == NormalProfile::spherical)
      gain *= 0.55 + 0.45 * surface_normal(o, hit.local).z;
    return {to_u8(o.color[0] * gain), to_u8(o.color[1] * gain), to_u8(o.color[2] * gain)};
  }

  Rgb8 background(Vec2d world) const {
    const BackgroundSpec& bg = spec_.background;
    switch (bg.kind) {
      case BackgroundKind::flat:
        return bg.color;
      case BackgroundKind::gradient: {
        const double gx = world.x / spec_.width - 0.5;
        const double gy = world.y / spec_.height - 0.5;
        return {to_u8(bg.color[0] + 80.0 * gx), to_u8(bg.color[1] + 80.0 * gy),
                to_u8(bg.color[2] - 40.0 * (gx + gy))};
      }
      case BackgroundKind::textured_noise: {
        // Value noise on a 6-pixel lattice, bilinearly interpolated in world space.
        constexpr double kLattice = 6.0;
        const double fx = world.x / kLattice;
        const double fy = world.y / kLattice;
        const auto ix = static_cast<std::int64_t>(std::floor(fx));
        const auto iy = static_cast<std::int64_t>(std::floor(fy));
        const double ax = fx - static_cast<double>(ix);
        const double ay = fy - static_cast<double>(iy);
        Rgb8 out{};
        for (int c = 0; c < 3; ++c) {
          auto lattice = [&](std::int64_t x, std::int64_t y) {
            return 30.0 + 195.0 * detail::unit_interval(detail::hash_coords(bg.seed, x, y, c));
          };
          const double top = lattice(ix, iy) * (1 - ax) + lattice(ix + 1, iy) * ax;
          const double bottom = lattice(ix, iy + 1) * (1 - ax) + lattice(ix + 1, iy + 1) * ax;
          out[c] = to_u8(top * (1 - ay) + bottom * ay);
        }
        return out;
      }
    }
    return bg.color;
  }

  Vec2d object_position(const ObjectSpec& o) const {
    return positions_[static_cast<std::size_t>(&o - spec_.objects.data())];
  }

 private:
  const SceneSpec& spec_;
  CameraPose pose_;
  std::vector<Vec2d> positions_;
};

}  // namespace

Frame render_frame(const SceneSpec& spec, std::int64_t quarter_slot) {
  const SceneSampler sampler(spec, static_cast<double>(quarter_slot) / 4.0);
  Frame frame(spec.width, spec.height, quarter_slot);
  for (int y = 0; y < spec.height; ++y) {
    for (int x = 0; x < spec.width; ++x) {
      const Vec2d world = sampler.pose().to_world({double(x), double(y)});
      frame.pixels(x, y) = sampler.shade(sampler.trace(world), world);
    }
  }
  return frame;
}

GBufferSet render_gbuffers(const SceneSpec& spec, int base_frame) {
  const double t = base_frame;
  const SceneSampler now(spec, t);
  const SceneSampler before(spec, t - 1.0);

  GBufferSet g;
  g.motion_dense = Grid<Vec2f>(spec.width, spec.height);
  g.stencil = Grid<std::uint8_t>(spec.width, spec.height, 0);
  g.world_normal = Grid<Vec3f>(spec.width, spec.height, Vec3f{0, 0, 1});
  g.world_position = Grid<Vec3f>(spec.width, spec.height);

  for (int y = 0; y < spec.height; ++y) {
    for (int x = 0; x < spec.width; ++x) {
      const Vec2d world = now.pose().to_world({double(x), double(y)});
      const Hit hit = now.trace(world);
      Vec2d previous_world = world;
      float depth = kBackgroundDepth;
      if (hit.object != nullptr) {
        const Vec2d prev_center = before.object_position(*hit.object);
        previous_world = {prev_center.x + hit.local.x, prev_center.y + hit.local.y};
        depth = static_cast<float>(hit.object->depth);
        g.stencil(x, y) = hit.object->object_id;
        g.world_normal(x, y) = surface_normal(*hit.object, hit.local);
      }
      const Vec2d previous_screen = before.pose().to_screen(previous_world);
      g.motion_dense(x, y) = {static_cast<float>((x - previous_screen.x) / 4.0),
                              static_cast<float>((y - previous_screen.y) / 4.0)};
      g.world_position(x, y) = {static_cast<float>(world.x), static_cast<float>(world.y), depth};
    }
  }
  g.motion_blocks = block_means(g.motion_dense);
  return g;
}

Episode render_episode(const SceneSpec& spec) {
  spec.validate();
  Episode ep;
  ep.width = spec.width;
  ep.height = spec.height;
  ep.base_fps = spec.base_fps;
  ep.rng_seed = spec.rng_seed;
  const std::int64_t quarter_slots = 4LL * spec.episode_len - 3;
  ep.frames.reserve(static_cast<std::size_t>(quarter_slots));
  for (std::int64_t q = 0; q < quarter_slots; ++q) ep.frames.push_back(render_frame(spec, q));
  ep.gbuffers.reserve(static_cast<std::size_t>(spec.episode_len));
  for (int k = 0; k < spec.episode_len; ++k) ep.gbuffers.push_back(render_gbuffers(spec, k));
  return ep;
}

Grid<Vec2f> block_means(const Grid<Vec2f>& motion, int block) {
  if (block <= 0 || motion.width() % block != 0 || motion.height() % block != 0)
    throw DimensionError("motion raster is not tiled by the block size");
  Grid<Vec2f> out(motion.width() / block, motion.height() / block);
  const double area = static_cast<double>(block) * block;
  for (int by = 0; by < out.height(); ++by) {
    for (int bx = 0; bx < out.width(); ++bx) {
      double sx = 0.0;
      double sy = 0.0;
      for (int y = by * block; y < (by + 1) * block; ++y) {
        for (int x = bx * block; x < (bx + 1) * block; ++x) {
          sx += motion(x, y).x;
          sy += motion(x, y).y;
        }
      }
      out(bx, by) = {static_cast<float>(sx / area), static_cast<float>(sy / area)};
    }
  }
  return out;
}

std::string to_string(BackgroundKind kind) {
  switch (kind) {
    case BackgroundKind::flat: return "flat";
    case BackgroundKind::gradient: return "gradient";
    case BackgroundKind::textured_noise: return "textured-noise";
  }
  return "?";
}

std::string to_string(ShapeKind kind) {
  switch (kind) {
    case ShapeKind::rect: return "rect";
    case ShapeKind::circle: return "circle";
    case ShapeKind::textured_sprite: return "textured-sprite";
  }
  return "?";
}

std::string to_string(NormalProfile profile) {
  return profile == NormalProfile::flat ? "flat" : "spherical";
}

}  // namespace exwarp
