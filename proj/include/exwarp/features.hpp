#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <utility>
#include <vector>

#include "exwarp/grid.hpp"
#include "exwarp/scenegen.hpp"

namespace exwarp {

enum class NodeId : std::uint8_t { d1 = 0, d2 = 1, d3 = 2, d4 = 3, d5 = 4 };
inline constexpr int kNodeCount = 5;

/// Per-frame environment features.
struct EnvVector {
  double n_d = 0.0;     // dynamic objects (stencil components)
  double emd_wn = 0.0;  // world-normal EMD against the previous base frame
  double emd_wp = 0.0;  // world-position EMD against the previous base frame
  double var_x = 0.0;   // pixels^2
  double var_y = 0.0;
  double r = 0.0;       // height * width

  bool operator==(const EnvVector&) const = default;
};

/// One-hot over decision nodes; all-zero marks a padded history entry.
using TemporalVector = std::array<std::uint8_t, kNodeCount>;
TemporalVector one_hot(NodeId node);

struct StateEntry {
  EnvVector env;
  TemporalVector temporal{};
};

inline constexpr int kStateEntries = 4;
inline constexpr int kEntryWidth = 11;
inline constexpr int kStateWidth = kStateEntries * kEntryWidth;  // 44

/// Q16.16 fixed-point predictor input.
class StateVector {
 public:
  static constexpr double kScale = 65536.0;

  StateVector() { raw_.fill(0); }

  static std::int32_t encode(double value);
  static double decode(std::int32_t raw) { return raw / kScale; }

  void set(int i, double value) { raw_.at(static_cast<std::size_t>(i)) = encode(value); }
  double value(int i) const { return decode(raw_.at(static_cast<std::size_t>(i))); }
  std::span<const std::int32_t, kStateWidth> raw() const { return raw_; }
  std::array<float, kStateWidth> decoded() const;

  bool operator==(const StateVector&) const = default;

 private:
  std::array<std::int32_t, kStateWidth> raw_{};
};

/// Normalisation applied before fixed-point encoding; each feature is clamped to [0, clamp_max].
/// Motion terms are scaled so the slowest moving scenes still register well above the
/// fixed-point resolution.
struct FeatureScales {
  double n_d = 16.0;
  double emd_wn = 0.005;
  double emd_wp = 0.02;            // 0: use the mean world-position channel range
  double variance = 0.01;          // (pixels per quarter-slot)^2
  double resolution = 1920.0 * 1080.0;
  double clamp_max = 4.0;
};

/// Population variance of the block motion components.
std::pair<double, double> motion_variance(const Grid<Vec2f>& blocks);

inline constexpr int kEmdBins = 64;

struct ChannelRange {
  double lo = 0.0;
  double hi = 1.0;
};

/// Mean over channels of the 1-D EMD between per-channel 64-bin histograms over a fixed range.
template <class V>
double buffer_emd(const Grid<V>& current, const Grid<V>& previous,
                  std::span<const ChannelRange> ranges);

/// Single-channel histogram EMD over interleaved-free values.
double histogram_emd(std::span<const float> a, std::span<const float> b, ChannelRange range);

/// 4-connected components of nonzero stencil pixels with area >= min_area.
int count_dynamic_objects(const Grid<std::uint8_t>& stencil, int min_area = 4);

std::array<ChannelRange, 3> world_normal_ranges();
std::array<ChannelRange, 3> world_position_ranges(int width, int height);

/// Environment vector of `current`; `previous` may be null (first frame: EMD terms 0).
EnvVector compute_env(const GBufferSet& current, const GBufferSet* previous);

/// Features for every base frame of an episode.
std::vector<EnvVector> episode_features(const Episode& episode);

/// Layout: four entries newest first, each [n_d, emd_wn, emd_wp, var_x, var_y, r, T0..T4].
StateVector assemble_state(std::span<const StateEntry, kStateEntries> history,
                           const FeatureScales& scales, int width, int height);

/// CSV with columns frame,n_d,emd_wn,emd_wp,var_x,var_y,r.
void write_features_csv(std::ostream& out, std::span<const EnvVector> features);

}  // namespace exwarp
