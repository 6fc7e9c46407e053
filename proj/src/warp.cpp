#include "exwarp/warp.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>

#include "exwarp/errors.hpp"

namespace exwarp {

Grid<float> depth_of(const GBufferSet& gbuffers) {
  const auto& wp = gbuffers.world_position;
  Grid<float> depth(wp.width(), wp.height());
  for (std::size_t i = 0; i < wp.size(); ++i) depth[i] = wp[i].z;
  return depth;
}

Surface Surface::from_rendered(const Frame& frame, const GBufferSet& gbuffers) {
  if (!gbuffers.motion_dense.same_shape(frame.width(), frame.height()))
    throw DimensionError("G-buffers do not match the frame dimensions");
  Surface s;
  s.frame = frame;
  s.motion = gbuffers.motion_dense;
  s.depth = depth_of(gbuffers);
  s.valid = Grid<std::uint8_t>(frame.width(), frame.height(), 1);
  return s;
}

std::size_t WarpedFrame::hole_count() const {
  return static_cast<std::size_t>(std::count(hole_mask.cells().begin(), hole_mask.cells().end(), 1));
}

Surface WarpedFrame::as_surface() const {
  Surface s;
  s.frame = pixels;
  s.motion = motion;
  s.depth = depth;
  s.valid = Grid<std::uint8_t>(hole_mask.width(), hole_mask.height());
  for (std::size_t i = 0; i < hole_mask.size(); ++i) s.valid[i] = hole_mask[i] ? 0 : 1;
  return s;
}

namespace {

int splat_target(int coord, float velocity, int steps) {
  return coord + static_cast<int>(std::floor(static_cast<double>(steps) * velocity + 0.5));
}

WarpedFrame splat(const Frame& source, const Grid<Vec2f>& motion, const Grid<float>& depth,
                  const Grid<std::uint8_t>* valid, int steps) {
  const int w = source.width();
  const int h = source.height();
  if (!motion.same_shape(w, h) || !depth.same_shape(w, h) || (valid && !valid->same_shape(w, h)))
    throw DimensionError("warp inputs have mismatched dimensions");

  WarpedFrame out;
  out.source_timestamp = source.timestamp;
  out.pixels = Frame(w, h, source.timestamp + steps);
  out.motion = Grid<Vec2f>(w, h);
  out.depth = Grid<float>(w, h, std::numeric_limits<float>::infinity());
  out.hole_mask = Grid<std::uint8_t>(w, h, 1);

  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      if (valid && !(*valid)(x, y)) continue;
      const Vec2f m = motion(x, y);
      const int tx = splat_target(x, m.x, steps);
      const int ty = splat_target(y, m.y, steps);
      if (!out.pixels.pixels.contains(tx, ty)) continue;
      if (!(depth(x, y) < out.depth(tx, ty))) continue;
      out.depth(tx, ty) = depth(x, y);
      out.pixels.pixels(tx, ty) = source.pixels(x, y);
      out.motion(tx, ty) = m;
      out.hole_mask(tx, ty) = 0;
    }
  }

  // Multi-source BFS from every covered pixel, seeded in row-major order.
  std::deque<std::size_t> queue;
  std::vector<std::uint8_t> reached(out.hole_mask.size(), 0);
  std::size_t holes = 0;
  for (std::size_t i = 0; i < out.hole_mask.size(); ++i) {
    if (out.hole_mask[i]) {
      ++holes;
    } else {
      reached[i] = 1;
      queue.push_back(i);
    }
  }
  out.hole_fraction = static_cast<double>(holes) / static_cast<double>(out.hole_mask.size());
  if (queue.empty()) {
    // Nothing landed: leave black pixels, zero motion, background depth.
    std::fill(out.depth.cells().begin(), out.depth.cells().end(), kBackgroundDepth);
    return out;
  }
  constexpr int kDx[4] = {1, -1, 0, 0};
  constexpr int kDy[4] = {0, 0, 1, -1};
  while (!queue.empty()) {
    const std::size_t i = queue.front();
    queue.pop_front();
    const int x = static_cast<int>(i % static_cast<std::size_t>(w));
    const int y = static_cast<int>(i / static_cast<std::size_t>(w));
    for (int d = 0; d < 4; ++d) {
      const int nx = x + kDx[d];
      const int ny = y + kDy[d];
      if (!out.hole_mask.contains(nx, ny)) continue;
      const std::size_t j = out.hole_mask.index(nx, ny);
      if (reached[j]) continue;
      reached[j] = 1;
      out.pixels.pixels[j] = out.pixels.pixels[i];
      out.motion[j] = out.motion[i];
      out.depth[j] = out.depth[i];
      queue.push_back(j);
    }
  }
  return out;
}

}  // namespace

WarpedFrame warp_frame(const Frame& source, const Grid<Vec2f>& motion, const Grid<float>& depth,
                       int steps) {
  if (steps < 1 || steps > 3) throw Error("warp steps must be 1, 2 or 3");
  return splat(source, motion, depth, nullptr, steps);
}

WarpedFrame warp_frame(const Frame& source, const GBufferSet& gbuffers, int steps) {
  return warp_frame(source, gbuffers.motion_dense, depth_of(gbuffers), steps);
}

WarpedFrame warp_surface(const Surface& source, int steps) {
  if (steps < 0) throw Error("warp steps must be non-negative");
  return splat(source.frame, source.motion, source.depth, &source.valid, steps);
}

std::size_t HoleHistogram::total() const {
  std::size_t n = 0;
  for (std::size_t c : counts) n += c;
  return n;
}

HoleHistogram hole_histogram(std::span<const double> hole_fractions,
                             std::span<const double> thresholds) {
  for (std::size_t i = 0; i < thresholds.size(); ++i) {
    if (thresholds[i] < 0.0 || thresholds[i] > 1.0)
      throw Error("hole histogram thresholds must lie in [0, 1]");
    if (i > 0 && !(thresholds[i] > thresholds[i - 1]))
      throw Error("hole histogram thresholds must be strictly increasing");
  }
  HoleHistogram hist;
  hist.thresholds.assign(thresholds.begin(), thresholds.end());
  hist.counts.assign(thresholds.size() + 1, 0);
  for (double f : hole_fractions) {
    const auto bucket = std::upper_bound(thresholds.begin(), thresholds.end(), f) - thresholds.begin();
    ++hist.counts[static_cast<std::size_t>(bucket)];
  }
  return hist;
}

HoleHistogram hole_histogram(std::span<const WarpedFrame> warped,
                             std::span<const double> thresholds) {
  std::vector<double> fractions;
  fractions.reserve(warped.size());
  for (const auto& w : warped) fractions.push_back(w.hole_fraction);
  return hole_histogram(fractions, thresholds);
}

}  // namespace exwarp
