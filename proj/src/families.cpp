#include "exwarp/families.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "exwarp/errors.hpp"

namespace exwarp {

std::string to_string(SceneFamily family) {
  switch (family) {
    case SceneFamily::static_scene: return "static";
    case SceneFamily::low_motion: return "low_motion";
    case SceneFamily::camera_pan: return "camera_pan";
    case SceneFamily::medium_motion: return "medium_motion";
    case SceneFamily::high_motion: return "high_motion";
  }
  return "?";
}

SceneFamily parse_family(const std::string& text) {
  for (SceneFamily f : all_families())
    if (to_string(f) == text) return f;
  throw Error("unknown scene family '" + text + "'");
}

std::vector<SceneFamily> all_families() {
  return {SceneFamily::static_scene, SceneFamily::low_motion, SceneFamily::camera_pan,
          SceneFamily::medium_motion, SceneFamily::high_motion};
}

namespace {

double fold(double x, double lo, double hi) {
  const double span = hi - lo;
  if (span <= 0.0) return lo;
  double u = std::fmod(x - lo, 2.0 * span);
  if (u < 0.0) u += 2.0 * span;
  return lo + (u <= span ? u : 2.0 * span - u);
}

void bounce_times(double x0, double v, double lo, double hi, double duration,
                  std::vector<double>& out) {
  const double span = hi - lo;
  if (v == 0.0 || span <= 0.0) return;
  // Walls are crossed whenever the unfolded coordinate hits lo + k * span.
  const double speed = std::abs(v);
  const double offset = v > 0.0 ? hi - x0 : x0 - lo;
  for (double t = offset / speed; t < duration; t += span / speed)
    if (t > 0.0) out.push_back(t);
}

}  // namespace

Trajectory bouncing_path(Vec2d start, Vec2d velocity, Vec2d lo, Vec2d hi, double duration) {
  std::vector<double> times = {0.0, duration};
  bounce_times(start.x, velocity.x, lo.x, hi.x, duration, times);
  bounce_times(start.y, velocity.y, lo.y, hi.y, duration, times);
  std::sort(times.begin(), times.end());
  std::vector<Keyframe> keys;
  for (double t : times) {
    if (!keys.empty() && t - keys.back().time < 1e-9) continue;
    keys.push_back({t, {fold(start.x + velocity.x * t, lo.x, hi.x),
                        fold(start.y + velocity.y * t, lo.y, hi.y)}});
  }
  return Trajectory::piecewise(std::move(keys));
}

namespace {

struct Ranges {
  double speed_lo, speed_hi;  // pixels per quarter-slot, relative to the screen
  double pan_lo, pan_hi;      // pixels per quarter-slot
  int objects_lo, objects_hi;
  double size_lo, size_hi;
};

Ranges ranges_for(SceneFamily f) {
  switch (f) {
    case SceneFamily::static_scene: return {0.0, 0.0, 0.0, 0.0, 2, 3, 12.0, 20.0};
    case SceneFamily::low_motion: return {0.5, 1.0, 0.0, 0.0, 2, 3, 12.0, 20.0};
    case SceneFamily::camera_pan: return {0.0, 0.0, 1.5, 2.5, 2, 3, 12.0, 20.0};
    case SceneFamily::medium_motion: return {1.5, 2.5, 0.0, 0.5, 2, 3, 12.0, 20.0};
    case SceneFamily::high_motion: return {4.0, 5.0, 5.0, 6.0, 3, 4, 16.0, 24.0};
  }
  throw Error("invalid scene family");
}

Rgb8 random_color(std::mt19937_64& rng) {
  std::uniform_int_distribution<int> c(40, 240);
  return {static_cast<std::uint8_t>(c(rng)), static_cast<std::uint8_t>(c(rng)),
          static_cast<std::uint8_t>(c(rng))};
}

SceneSpec base_spec(const FamilyOptions& o, std::uint64_t seed) {
  SceneSpec s;
  s.width = o.width;
  s.height = o.height;
  s.base_fps = o.base_fps;
  s.episode_len = o.episode_len;
  s.rng_seed = seed;
  s.background.kind = BackgroundKind::textured_noise;
  s.background.seed = seed ^ 0x5bd1e995ULL;
  return s;
}

}  // namespace

std::vector<SceneSpec> family_specs(SceneFamily family, const FamilyOptions& o,
                                    std::uint64_t seed) {
  const Ranges r = ranges_for(family);
  std::mt19937_64 rng(seed * 0x9e3779b97f4a7c15ULL + static_cast<std::uint64_t>(family) + 1);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  auto between = [&](double a, double b) { return a + (b - a) * unit(rng); };
  const std::array<ShapeKind, 3> shapes = {ShapeKind::rect, ShapeKind::circle,
                                           ShapeKind::textured_sprite};

  std::vector<SceneSpec> specs;
  for (int e = 0; e < o.episodes; ++e) {
    SceneSpec s = base_spec(o, seed * 1000003ULL + static_cast<std::uint64_t>(family) * 131 +
                                   static_cast<std::uint64_t>(e));
    const double duration = o.episode_len + 1.0;
    if (r.pan_hi > 0.0) {
      const double pan = 4.0 * between(r.pan_lo, r.pan_hi);
      const double angle = between(-0.4, 0.4) + (unit(rng) < 0.5 ? 0.0 : M_PI);
      s.camera.pan_velocity = {pan * std::cos(angle), pan * std::sin(angle)};
    }
    const int count = std::uniform_int_distribution<int>(r.objects_lo, r.objects_hi)(rng);
    for (int i = 0; i < count; ++i) {
      ObjectSpec obj;
      obj.object_id = static_cast<std::uint8_t>(i + 1);
      obj.shape = shapes[static_cast<std::size_t>(std::uniform_int_distribution<int>(0, 2)(rng))];
      obj.size = between(r.size_lo, r.size_hi);
      obj.depth = 1.0 + i + between(0.0, 0.5);
      obj.normal_profile = obj.shape == ShapeKind::circle ? NormalProfile::spherical : NormalProfile::flat;
      obj.color = random_color(rng);
      const double half = obj.size / 2.0;
      const Vec2d box_lo = {half, half};
      const Vec2d box_hi = {o.width - half, o.height - half};
      const Vec2d start = {between(box_lo.x, box_hi.x), between(box_lo.y, box_hi.y)};
      const double speed = 4.0 * between(r.speed_lo, r.speed_hi);
      const double angle = between(0.0, 2.0 * M_PI);
      // Bounce on screen, then ride along with the camera so objects stay in view.
      Trajectory screen = speed == 0.0
                              ? Trajectory::fixed(start)
                              : bouncing_path(start, {speed * std::cos(angle), speed * std::sin(angle)},
                                              box_lo, box_hi, duration);
      std::vector<Keyframe> keys = screen.keys();
      if (keys.size() == 1) keys.push_back({duration, keys[0].position});
      for (Keyframe& k : keys) {
        k.position.x += s.camera.pan_velocity.x * k.time;
        k.position.y += s.camera.pan_velocity.y * k.time;
      }
      obj.trajectory = Trajectory::piecewise(std::move(keys));
      s.objects.push_back(std::move(obj));
    }
    specs.push_back(std::move(s));
  }
  return specs;
}

SceneSpec speed_sweep_spec(double speed, const FamilyOptions& o, std::uint64_t seed) {
  if (!(speed >= 0.0)) throw Error("sweep speed must be non-negative");
  SceneSpec s = base_spec(o, seed);
  const double duration = o.episode_len + 1.0;
  const double rows = 3.0;
  for (int i = 0; i < 3; ++i) {
    ObjectSpec obj;
    obj.object_id = static_cast<std::uint8_t>(i + 1);
    obj.shape = ShapeKind::rect;
    obj.size = 14.0;
    obj.depth = 1.0 + i;
    obj.color = {static_cast<std::uint8_t>(200 - 50 * i), static_cast<std::uint8_t>(60 + 60 * i), 90};
    const double y = (i + 0.5) * o.height / rows;
    const double half = obj.size / 2.0;
    const double x0 = half + (o.width - obj.size) * (0.2 + 0.3 * i);
    const double v = (i % 2 == 0 ? 4.0 : -4.0) * speed;
    obj.trajectory = speed == 0.0 ? Trajectory::fixed({x0, y})
                                  : bouncing_path({x0, y}, {v, 0.0}, {half, y},
                                                  {o.width - half, y}, duration);
    s.objects.push_back(std::move(obj));
  }
  return s;
}

}  // namespace exwarp
