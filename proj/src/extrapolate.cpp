#include "exwarp/extrapolate.hpp"

#include <cmath>
#include <vector>

#include "exwarp/errors.hpp"

namespace exwarp {

std::string to_string(ResolutionClass cls) {
  switch (cls) {
    case ResolutionClass::p480: return "480p";
    case ResolutionClass::p720: return "720p";
    case ResolutionClass::p1080: return "1080p";
  }
  return "?";
}

ResolutionClass parse_resolution_class(const std::string& text) {
  if (text == "480p") return ResolutionClass::p480;
  if (text == "720p") return ResolutionClass::p720;
  if (text == "1080p") return ResolutionClass::p1080;
  throw Error("unknown resolution class '" + text + "'");
}

ResolutionClass classify_resolution(int /*width*/, int height) {
  if (height <= 480) return ResolutionClass::p480;
  if (height <= 720) return ResolutionClass::p720;
  return ResolutionClass::p1080;
}

LatencyModel LatencyModel::defaults() {
  LatencyModel m;
  m.set(ResolutionClass::p480, {0.17, 0.95, 1.94, 3.67});
  m.set(ResolutionClass::p720, {1.24, 1.67, 2.59, 7.09});
  m.set(ResolutionClass::p1080, {2.1, 2.91, 4.63, 13.78});
  return m;
}

void LatencyModel::set(ResolutionClass cls, const StageLatency& s) {
  if (!(s.gbuffer_ms > 0.0 && s.warp_ms > 0.0 && s.hole_mark_ms > 0.0 && s.inference_ms > 0.0))
    throw ValidationError({"latency." + to_string(cls) + ": every stage latency must be > 0"});
  stages_[cls] = s;
}

const StageLatency& LatencyModel::at(ResolutionClass cls) const {
  auto it = stages_.find(cls);
  if (it == stages_.end())
    throw Error("latency model has no entry for resolution class " + to_string(cls));
  return it->second;
}

double total_latency(const LatencyModel& model, ResolutionClass cls) {
  const StageLatency& s = model.at(cls);
  return s.warp_ms + s.hole_mark_ms + s.inference_ms;
}

double quarter_slot_ms(double base_fps) { return 1000.0 / (4.0 * base_fps); }

int latency_slots(double latency_ms, double base_fps) {
  // Relative slack keeps e.g. exactly 2 * quarter_slot_ms from rounding up to 3.
  const double slots = latency_ms / quarter_slot_ms(base_fps);
  return std::max(1, static_cast<int>(std::ceil(slots - 1e-9)));
}

Surface ExtrapolatedFrame::as_surface() const {
  return Surface{pixels, motion, depth, valid};
}

ExtrapolatedFrame extrapolate_frame(std::span<const Surface> history, int steps,
                                    int latency_in_slots) {
  if (history.size() != 3)
    throw Error("extrapolation needs exactly 3 history frames, got " +
                std::to_string(history.size()));
  if (steps < 1 || steps > 3) throw Error("extrapolation steps must be 1, 2 or 3");
  if (latency_in_slots < 1) throw Error("extrapolation latency must be at least one slot");
  const Surface& newest = history[2];
  for (const Surface& s : history)
    if (!s.frame.same_size(newest.frame)) throw DimensionError("history frames differ in size");
  if (history[0].timestamp() > history[1].timestamp() ||
      history[1].timestamp() > history[2].timestamp())
    throw Error("extrapolation history must be ordered oldest first");

  const WarpedFrame base = warp_surface(newest, steps);
  const std::int64_t target = newest.timestamp() + steps;

  ExtrapolatedFrame out;
  out.source_timestamp = newest.timestamp();
  out.issue_slot = newest.timestamp();
  out.available_at = out.issue_slot + latency_in_slots;
  out.pixels = base.pixels;
  out.motion = base.motion;
  out.depth = base.depth;
  const int w = base.pixels.width();
  const int h = base.pixels.height();
  out.valid = Grid<std::uint8_t>(w, h, 1);

  std::vector<std::uint8_t> defined(base.hole_mask.size());
  std::size_t missing = 0;
  for (std::size_t i = 0; i < defined.size(); ++i) {
    defined[i] = base.hole_mask[i] ? 0 : 1;
    if (!defined[i]) ++missing;
  }
  out.warped_pixels = defined.size() - missing;

  // Older frames, newest-older first, each warped to the same target slot.
  for (int k = 1; k >= 0 && missing > 0; --k) {
    const Surface& older = history[static_cast<std::size_t>(k)];
    const WarpedFrame candidate =
        warp_surface(older, static_cast<int>(target - older.timestamp()));
    for (std::size_t i = 0; i < defined.size(); ++i) {
      if (defined[i] || candidate.hole_mask[i]) continue;
      out.pixels.pixels[i] = candidate.pixels.pixels[i];
      out.motion[i] = candidate.motion[i];
      out.depth[i] = candidate.depth[i];
      defined[i] = 1;
      ++out.history_filled;
      --missing;
    }
  }

  // Jacobi-style diffusion: each sweep fills holes touching at least one defined pixel.
  for (int iter = 0; iter < kMaxDiffusionIterations && missing > 0; ++iter) {
    std::vector<std::size_t> filled;
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        const std::size_t i = out.pixels.pixels.index(x, y);
        if (defined[i]) continue;
        int n = 0;
        int sum[3] = {0, 0, 0};
        double mx = 0.0, my = 0.0, depth = 0.0;
        for (int dy = -1; dy <= 1; ++dy) {
          for (int dx = -1; dx <= 1; ++dx) {
            if ((dx == 0 && dy == 0) || !out.valid.contains(x + dx, y + dy)) continue;
            const std::size_t j = out.pixels.pixels.index(x + dx, y + dy);
            if (!defined[j]) continue;
            for (int c = 0; c < 3; ++c) sum[c] += out.pixels.pixels[j][c];
            mx += out.motion[j].x;
            my += out.motion[j].y;
            depth += out.depth[j];
            ++n;
          }
        }
        if (n == 0) continue;
        for (int c = 0; c < 3; ++c)
          out.pixels.pixels[i][c] = static_cast<std::uint8_t>((sum[c] + n / 2) / n);
        out.motion[i] = {static_cast<float>(mx / n), static_cast<float>(my / n)};
        out.depth[i] = static_cast<float>(depth / n);
        out.valid[i] = 0;
        filled.push_back(i);
      }
    }
    if (filled.empty()) break;
    for (std::size_t i : filled) defined[i] = 1;
    missing -= filled.size();
    out.diffused += filled.size();
  }
  if (missing > 0) {
    for (std::size_t i = 0; i < defined.size(); ++i) {
      if (defined[i]) continue;
      out.pixels.pixels[i] = {128, 128, 128};
      out.motion[i] = {};
      out.depth[i] = kBackgroundDepth;
      out.valid[i] = 0;
      ++out.diffused;
    }
  }
  out.pixels.timestamp = target;
  return out;
}

}  // namespace exwarp
