#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "exwarp/grid.hpp"
#include "exwarp/scenegen.hpp"

namespace exwarp {

/// A displayable frame together with the per-pixel fields needed to warp it again:
/// motion (pixels per quarter-slot), depth, and validity. Invalid pixels hold a
/// placeholder value (e.g. hole fill) and are never splatted.
struct Surface {
  Frame frame;
  Grid<Vec2f> motion;
  Grid<float> depth;
  Grid<std::uint8_t> valid;

  static Surface from_rendered(const Frame& frame, const GBufferSet& gbuffers);
  std::int64_t timestamp() const { return frame.timestamp; }
};

struct WarpedFrame {
  Frame pixels;                  // timestamp = source timestamp + steps
  Grid<std::uint8_t> hole_mask;  // 1 where no source pixel landed
  double hole_fraction = 0.0;
  std::int64_t source_timestamp = 0;
  // Fields carried along the splat (holes take their fill neighbour's values).
  Grid<Vec2f> motion;
  Grid<float> depth;

  std::size_t hole_count() const;
  Surface as_surface() const;
};

/// Forward-splats `source` by `steps` quarter-slots along `motion`: each pixel lands at
/// round(p + steps * motion[p]); nearer depth wins collisions; uncovered targets are holes,
/// filled from the nearest covered pixel by 4-neighbour breadth-first search.
/// `steps` must be 1, 2 or 3.
WarpedFrame warp_frame(const Frame& source, const Grid<Vec2f>& motion, const Grid<float>& depth,
                       int steps);
WarpedFrame warp_frame(const Frame& source, const GBufferSet& gbuffers, int steps);

/// Same splat for any non-negative step count, honouring the surface's validity mask.
WarpedFrame warp_surface(const Surface& source, int steps);

Grid<float> depth_of(const GBufferSet& gbuffers);

struct HoleHistogram {
  std::vector<double> thresholds;
  std::vector<std::size_t> counts;  // thresholds.size() + 1 buckets

  std::size_t total() const;
};

/// Bucket i holds fractions in [thresholds[i-1], thresholds[i]); the last bucket is open above.
HoleHistogram hole_histogram(std::span<const double> hole_fractions,
                             std::span<const double> thresholds);
HoleHistogram hole_histogram(std::span<const WarpedFrame> warped,
                             std::span<const double> thresholds);

}  // namespace exwarp
