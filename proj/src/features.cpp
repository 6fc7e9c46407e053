#include "exwarp/features.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <tuple>
#include <type_traits>

#include "exwarp/errors.hpp"

namespace exwarp {

TemporalVector one_hot(NodeId node) {
  TemporalVector t{};
  t[static_cast<std::size_t>(node)] = 1;
  return t;
}

std::int32_t StateVector::encode(double value) {
  return static_cast<std::int32_t>(std::lround(value * kScale));
}

std::array<float, kStateWidth> StateVector::decoded() const {
  std::array<float, kStateWidth> out{};
  for (int i = 0; i < kStateWidth; ++i) out[static_cast<std::size_t>(i)] = static_cast<float>(value(i));
  return out;
}

std::pair<double, double> motion_variance(const Grid<Vec2f>& blocks) {
  if (blocks.empty()) throw Error("motion_variance needs a non-empty block buffer");
  const double n = static_cast<double>(blocks.size());
  double mx = 0.0, my = 0.0;
  for (const Vec2f& v : blocks.cells()) {
    mx += v.x;
    my += v.y;
  }
  mx /= n;
  my /= n;
  double vx = 0.0, vy = 0.0;
  for (const Vec2f& v : blocks.cells()) {
    vx += (v.x - mx) * (v.x - mx);
    vy += (v.y - my) * (v.y - my);
  }
  return {vx / n, vy / n};
}

namespace {

std::array<double, kEmdBins> normalized_histogram(std::span<const float> values, ChannelRange range) {
  std::array<double, kEmdBins> hist{};
  const double width = range.hi - range.lo;
  for (float v : values) {
    const double u = (v - range.lo) / width * kEmdBins;
    const int bin = std::clamp(static_cast<int>(std::floor(u)), 0, kEmdBins - 1);
    hist[static_cast<std::size_t>(bin)] += 1.0;
  }
  if (!values.empty())
    for (double& h : hist) h /= static_cast<double>(values.size());
  return hist;
}

template <class V>
constexpr int channel_count() {
  if constexpr (std::is_same_v<V, Vec3f>) return 3;
  else if constexpr (std::is_same_v<V, Vec2f>) return 2;
  else return 1;
}

template <class V>
float channel(const V& v, int c) {
  if constexpr (std::is_same_v<V, Vec3f>) return c == 0 ? v.x : (c == 1 ? v.y : v.z);
  else if constexpr (std::is_same_v<V, Vec2f>) return c == 0 ? v.x : v.y;
  else return static_cast<float>(v);
}

}  // namespace

double histogram_emd(std::span<const float> a, std::span<const float> b, ChannelRange range) {
  if (!(range.hi > range.lo)) throw Error("EMD channel range must be non-empty");
  const auto ha = normalized_histogram(a, range);
  const auto hb = normalized_histogram(b, range);
  const double bin_width = (range.hi - range.lo) / kEmdBins;
  double ca = 0.0, cb = 0.0, emd = 0.0;
  for (int i = 0; i < kEmdBins; ++i) {
    ca += ha[static_cast<std::size_t>(i)];
    cb += hb[static_cast<std::size_t>(i)];
    emd += std::abs(ca - cb);
  }
  return emd * bin_width;
}

template <class V>
double buffer_emd(const Grid<V>& current, const Grid<V>& previous,
                  std::span<const ChannelRange> ranges) {
  constexpr int kChannels = channel_count<V>();
  if (!current.same_shape(previous)) throw DimensionError("EMD buffers differ in size");
  if (static_cast<int>(ranges.size()) != kChannels)
    throw DimensionError("EMD needs one range per channel");
  std::vector<float> a(current.size()), b(previous.size());
  double total = 0.0;
  for (int c = 0; c < kChannels; ++c) {
    for (std::size_t i = 0; i < current.size(); ++i) {
      a[i] = channel(current[i], c);
      b[i] = channel(previous[i], c);
    }
    total += histogram_emd(a, b, ranges[static_cast<std::size_t>(c)]);
  }
  return total / kChannels;
}

template double buffer_emd<Vec3f>(const Grid<Vec3f>&, const Grid<Vec3f>&, std::span<const ChannelRange>);
template double buffer_emd<Vec2f>(const Grid<Vec2f>&, const Grid<Vec2f>&, std::span<const ChannelRange>);
template double buffer_emd<float>(const Grid<float>&, const Grid<float>&, std::span<const ChannelRange>);

int count_dynamic_objects(const Grid<std::uint8_t>& stencil, int min_area) {
  std::vector<std::uint8_t> seen(stencil.size(), 0);
  std::vector<std::size_t> stack;
  int components = 0;
  const int w = stencil.width();
  for (std::size_t start = 0; start < stencil.size(); ++start) {
    if (seen[start] || stencil[start] == 0) continue;
    int area = 0;
    seen[start] = 1;
    stack.push_back(start);
    while (!stack.empty()) {
      const std::size_t i = stack.back();
      stack.pop_back();
      ++area;
      const int x = static_cast<int>(i % static_cast<std::size_t>(w));
      const int y = static_cast<int>(i / static_cast<std::size_t>(w));
      const int nbr[4][2] = {{x + 1, y}, {x - 1, y}, {x, y + 1}, {x, y - 1}};
      for (const auto& n : nbr) {
        if (!stencil.contains(n[0], n[1])) continue;
        const std::size_t j = stencil.index(n[0], n[1]);
        if (seen[j] || stencil[j] == 0) continue;
        seen[j] = 1;
        stack.push_back(j);
      }
    }
    if (area >= min_area) ++components;
  }
  return components;
}

std::array<ChannelRange, 3> world_normal_ranges() {
  return {ChannelRange{-1.0, 1.0}, ChannelRange{-1.0, 1.0}, ChannelRange{-1.0, 1.0}};
}

std::array<ChannelRange, 3> world_position_ranges(int width, int height) {
  // A frame's worth of margin on each side absorbs camera travel.
  return {ChannelRange{-double(width), 2.0 * width}, ChannelRange{-double(height), 2.0 * height},
          ChannelRange{0.0, kBackgroundDepth}};
}

EnvVector compute_env(const GBufferSet& current, const GBufferSet* previous) {
  EnvVector e;
  const int w = current.stencil.width();
  const int h = current.stencil.height();
  e.n_d = count_dynamic_objects(current.stencil);
  if (previous != nullptr) {
    e.emd_wn = buffer_emd(current.world_normal, previous->world_normal,
                          std::span<const ChannelRange>(world_normal_ranges()));
    e.emd_wp = buffer_emd(current.world_position, previous->world_position,
                          std::span<const ChannelRange>(world_position_ranges(w, h)));
  }
  std::tie(e.var_x, e.var_y) = motion_variance(current.motion_blocks);
  e.r = static_cast<double>(w) * static_cast<double>(h);
  return e;
}

std::vector<EnvVector> episode_features(const Episode& episode) {
  std::vector<EnvVector> out;
  out.reserve(episode.gbuffers.size());
  for (std::size_t k = 0; k < episode.gbuffers.size(); ++k)
    out.push_back(compute_env(episode.gbuffers[k], k > 0 ? &episode.gbuffers[k - 1] : nullptr));
  return out;
}

StateVector assemble_state(std::span<const StateEntry, kStateEntries> history,
                           const FeatureScales& scales, int width, int height) {
  double wp_scale = scales.emd_wp;
  if (wp_scale <= 0.0) {
    double sum = 0.0;
    for (const ChannelRange& r : world_position_ranges(width, height)) sum += r.hi - r.lo;
    wp_scale = sum / 3.0;
  }
  auto norm = [&](double v, double scale) { return std::clamp(v / scale, 0.0, scales.clamp_max); };

  StateVector s;
  for (int k = 0; k < kStateEntries; ++k) {
    const StateEntry& entry = history[static_cast<std::size_t>(k)];
    const int base = k * kEntryWidth;
    s.set(base + 0, norm(entry.env.n_d, scales.n_d));
    s.set(base + 1, norm(entry.env.emd_wn, scales.emd_wn));
    s.set(base + 2, norm(entry.env.emd_wp, wp_scale));
    s.set(base + 3, norm(entry.env.var_x, scales.variance));
    s.set(base + 4, norm(entry.env.var_y, scales.variance));
    s.set(base + 5, norm(entry.env.r, scales.resolution));
    for (int t = 0; t < kNodeCount; ++t) s.set(base + 6 + t, entry.temporal[static_cast<std::size_t>(t)]);
  }
  return s;
}

void write_features_csv(std::ostream& out, std::span<const EnvVector> features) {
  out << "frame,n_d,emd_wn,emd_wp,var_x,var_y,r\n";
  char line[256];
  for (std::size_t k = 0; k < features.size(); ++k) {
    const EnvVector& e = features[k];
    std::snprintf(line, sizeof(line), "%zu,%.0f,%.9g,%.9g,%.9g,%.9g,%.0f\n", k, e.n_d, e.emd_wn,
                  e.emd_wp, e.var_x, e.var_y, e.r);
    out << line;
  }
}

}  // namespace exwarp
