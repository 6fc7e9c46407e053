#include <cmath>
#include <vector>

#include "doctest.h"
#include "exwarp/errors.hpp"
#include "exwarp/warp.hpp"
#include "helpers.hpp"

using namespace exwarp;

namespace {

struct Layers {
  Frame frame;
  Grid<Vec2f> motion;
  Grid<float> depth;
};

Layers textured(int w, int h, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  return {testing::random_frame(w, h, rng), Grid<Vec2f>(w, h), Grid<float>(w, h, kBackgroundDepth)};
}

// Square of `size` at x0,y0 moving by v per quarter-slot in front of a still background.
Layers square_scene(int x0, int y0, int size, Vec2f v) {
  Layers s = textured(64, 64, 11);
  for (int y = y0; y < y0 + size; ++y)
    for (int x = x0; x < x0 + size; ++x) {
      s.frame.pixels(x, y) = {250, 10, 10};
      s.motion(x, y) = v;
      s.depth(x, y) = 1.0f;
    }
  return s;
}

// Independent recount: which targets receive at least one splat.
Grid<std::uint8_t> covered_targets(const Grid<Vec2f>& motion, int steps) {
  Grid<std::uint8_t> hit(motion.width(), motion.height());
  for (int y = 0; y < motion.height(); ++y)
    for (int x = 0; x < motion.width(); ++x) {
      const int tx = x + static_cast<int>(std::floor(steps * double(motion(x, y).x) + 0.5));
      const int ty = y + static_cast<int>(std::floor(steps * double(motion(x, y).y) + 0.5));
      if (hit.contains(tx, ty)) hit(tx, ty) = 1;
    }
  return hit;
}

}  // namespace

TEST_CASE("zero motion warps to the source for every step count") {
  const Layers s = textured(32, 16, 3);
  for (int steps = 1; steps <= 3; ++steps) {
    const WarpedFrame w = warp_frame(s.frame, s.motion, s.depth, steps);
    CHECK(w.pixels.same_pixels(s.frame));
    CHECK(w.hole_fraction == 0.0);
    CHECK(w.hole_count() == 0);
    CHECK(w.pixels.timestamp == s.frame.timestamp + steps);
  }
}

TEST_CASE("translating square leaves a 16x4 hole strip behind it") {
  const Layers s = square_scene(20, 24, 16, {4, 0});
  const WarpedFrame w = warp_frame(s.frame, s.motion, s.depth, 1);
  for (int y = 0; y < 64; ++y)
    for (int x = 0; x < 64; ++x) {
      const bool strip = y >= 24 && y < 40 && x >= 20 && x < 24;
      CHECK(bool(w.hole_mask(x, y)) == strip);
    }
  CHECK(w.hole_count() == 64);
  CHECK(w.hole_fraction == 64.0 / (64 * 64));
  // the square occludes the background it moved over
  CHECK(w.pixels.pixels(38, 30) == Rgb8{250, 10, 10});
  // the hole pixel next to the background is filled from it
  CHECK(w.pixels.pixels(20, 30) == s.frame.pixels(19, 30));
}

TEST_CASE("full-frame pan of 8 px opens a column of width 8 at the leading edge") {
  Layers s = textured(48, 32, 5);
  s.motion.fill({8, 0});
  const WarpedFrame w = warp_frame(s.frame, s.motion, s.depth, 1);
  CHECK(std::abs(w.hole_fraction - 8.0 / 48) <= 1e-12);
  for (int y = 0; y < 32; ++y)
    for (int x = 0; x < 48; ++x) {
      CHECK(bool(w.hole_mask(x, y)) == (x < 8));
      if (x >= 8) CHECK(w.pixels.pixels(x, y) == s.frame.pixels(x - 8, y));
    }
}

TEST_CASE("hole mask matches an independent splat recount") {
  std::mt19937_64 rng(21);
  std::uniform_real_distribution<float> v(-3.0f, 3.0f);
  std::uniform_real_distribution<float> d(0.5f, 9.0f);
  for (int trial = 0; trial < 20; ++trial) {
    Layers s = textured(32, 32, 100 + trial);
    for (auto& m : s.motion.cells()) m = {v(rng), v(rng)};
    for (auto& z : s.depth.cells()) z = d(rng);
    const int steps = 1 + trial % 3;
    const WarpedFrame w = warp_frame(s.frame, s.motion, s.depth, steps);
    const Grid<std::uint8_t> hit = covered_targets(s.motion, steps);
    std::size_t pop = 0;
    for (std::size_t i = 0; i < hit.size(); ++i) {
      CHECK(bool(w.hole_mask[i]) == !hit[i]);
      pop += w.hole_mask[i] ? 1 : 0;
    }
    CHECK(w.hole_fraction == double(pop) / double(hit.size()));
  }
}

TEST_CASE("nearer depth wins a collision") {
  Layers s = textured(16, 16, 8);
  s.frame.pixels(4, 4) = {1, 2, 3};
  s.motion(4, 4) = {2, 0};
  s.depth(4, 4) = 5.0f;
  s.frame.pixels(8, 4) = {9, 9, 9};
  s.motion(8, 4) = {-2, 0};
  s.depth(8, 4) = 2.0f;
  // both land on (6, 4); the still background pixel there is farthest
  const WarpedFrame w = warp_frame(s.frame, s.motion, s.depth, 1);
  CHECK(w.pixels.pixels(6, 4) == Rgb8{9, 9, 9});
  s.depth(4, 4) = 1.0f;
  CHECK(warp_frame(s.frame, s.motion, s.depth, 1).pixels.pixels(6, 4) == Rgb8{1, 2, 3});
}

TEST_CASE("two single steps match one double step on a translating scene") {
  const Layers s = square_scene(10, 10, 14, {3, 1});
  const WarpedFrame twice = warp_frame(s.frame, s.motion, s.depth, 2);
  const WarpedFrame once = warp_frame(s.frame, s.motion, s.depth, 1);
  const WarpedFrame again = warp_surface(once.as_surface(), 1);
  for (std::size_t i = 0; i < twice.pixels.pixels.size(); ++i) {
    if (twice.hole_mask[i] || again.hole_mask[i]) continue;
    for (int c = 0; c < 3; ++c)
      CHECK(std::abs(int(twice.pixels.pixels[i][c]) - int(again.pixels.pixels[i][c])) <= 2);
  }
}

TEST_CASE("invalid surface pixels are not splatted") {
  const Layers s = textured(16, 16, 2);
  Surface surf{s.frame, s.motion, s.depth, Grid<std::uint8_t>(16, 16, 1)};
  surf.valid(3, 3) = 0;
  const WarpedFrame w = warp_surface(surf, 0);
  CHECK(w.hole_count() == 1);
  CHECK(w.hole_mask(3, 3) == 1);
}

TEST_CASE("step count is range checked") {
  const Layers s = textured(16, 16, 1);
  CHECK_THROWS_AS(warp_frame(s.frame, s.motion, s.depth, 0), Error);
  CHECK_THROWS_AS(warp_frame(s.frame, s.motion, s.depth, 4), Error);
}

TEST_CASE("hole histogram buckets") {
  const std::vector<double> thresholds{0.1, 0.2};
  const std::vector<double> none(10, 0.0);
  CHECK(hole_histogram(none, thresholds).counts == std::vector<std::size_t>{10, 0, 0});
  const std::vector<double> spread{0.05, 0.15, 0.25};
  const HoleHistogram h = hole_histogram(spread, thresholds);
  CHECK(h.counts == std::vector<std::size_t>{1, 1, 1});
  CHECK(h.total() == 3);

  const Layers s = textured(16, 16, 4);
  std::vector<WarpedFrame> warps;
  for (int i = 0; i < 10; ++i) warps.push_back(warp_frame(s.frame, s.motion, s.depth, 1));
  CHECK(hole_histogram(std::span<const WarpedFrame>(warps), thresholds).counts ==
        std::vector<std::size_t>{10, 0, 0});
  const std::vector<double> unsorted{0.2, 0.1};
  CHECK_THROWS_AS(hole_histogram(spread, unsorted), Error);
}
