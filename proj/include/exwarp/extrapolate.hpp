#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <span>
#include <string>

#include "exwarp/grid.hpp"
#include "exwarp/warp.hpp"

namespace exwarp {

enum class ResolutionClass { p480, p720, p1080 };

std::string to_string(ResolutionClass cls);
ResolutionClass parse_resolution_class(const std::string& text);
/// Smallest class whose height is at least the frame's height.
ResolutionClass classify_resolution(int width, int height);

/// Per-stage cost of one extrapolation request, in milliseconds.
struct StageLatency {
  double gbuffer_ms = 0.0;
  double warp_ms = 0.0;
  double hole_mark_ms = 0.0;
  double inference_ms = 0.0;
};

/// Stage latencies per resolution class. Every stored entry is strictly positive.
class LatencyModel {
 public:
  LatencyModel() = default;

  /// Built-in stage costs for 480p, 720p and 1080p.
  static LatencyModel defaults();

  void set(ResolutionClass cls, const StageLatency& stages);
  bool contains(ResolutionClass cls) const { return stages_.contains(cls); }
  const StageLatency& at(ResolutionClass cls) const;
  const std::map<ResolutionClass, StageLatency>& entries() const { return stages_; }

 private:
  std::map<ResolutionClass, StageLatency> stages_;
};

/// Warp + hole marking + inference. G-buffer generation is charged to the renderer.
double total_latency(const LatencyModel& model, ResolutionClass cls);

double quarter_slot_ms(double base_fps);
/// Quarter-slots between issue and availability: ceil(latency / quarter slot), at least 1.
int latency_slots(double latency_ms, double base_fps);

struct ExtrapolatedFrame {
  Frame pixels;
  std::int64_t issue_slot = 0;
  std::int64_t available_at = 0;
  std::int64_t source_timestamp = 0;
  Grid<Vec2f> motion;
  Grid<float> depth;
  Grid<std::uint8_t> valid;  // 0 where the value came from diffusion

  std::size_t warped_pixels = 0;
  std::size_t history_filled = 0;
  std::size_t diffused = 0;

  Surface as_surface() const;
};

inline constexpr int kMaxDiffusionIterations = 64;

/// Multi-frame hole-filling extrapolator. `history` holds exactly three surfaces, oldest
/// first. The newest is warped by `steps`; each hole is then taken from the older surfaces
/// warped to the same target slot (newest-older first), and anything still missing is filled
/// by 8-neighbour mean diffusion.
ExtrapolatedFrame extrapolate_frame(std::span<const Surface> history, int steps,
                                    int latency_in_slots = 1);

}  // namespace exwarp
