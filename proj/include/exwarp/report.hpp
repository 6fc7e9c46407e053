#pragma once

#include <array>
#include <cstddef>
#include <ostream>
#include <span>
#include <string>

#include "exwarp/scheduler.hpp"

namespace exwarp {

/// Mergeable sums behind every reported mean.
struct QualityTotals {
  std::size_t intervals = 0;
  std::size_t inserted_frames = 0;
  std::size_t slots = 0;  // display slots with ground-truth quality
  double psnr_sum = 0.0;
  double ssim_sum = 0.0;
  std::size_t decisions = 0;
  std::size_t warp_decisions = 0;
  std::size_t annotated = 0;  // intervals contributing to slot_psnr_sum
  std::array<double, 3> slot_psnr_sum{};

  void add(const DecisionTrace& trace);
  void merge(const QualityTotals& other);

  double mean_psnr() const;
  double mean_ssim() const;
  /// Mean PSNR of one display slot (0..2 for P1..P3), so policies compare like for like.
  double mean_psnr_at(int slot) const;
  /// Share of node decisions that chose Warp.
  double warp_ratio() const;
  double effective_fps(double base_fps) const;
};

struct QualitySummary {
  std::string policy;
  double base_fps = 30.0;
  QualityTotals all;
  std::array<QualityTotals, kScenarioCount> by_scenario{};

  void add(const DecisionTrace& trace);
  /// Exact merge of partial aggregates; base rates must agree.
  void merge(const QualitySummary& other);
};

/// Means are taken over every intermediate display slot (P1..P3) of annotated intervals.
QualitySummary aggregate_report(std::span<const DecisionTrace> traces, std::string policy,
                                double base_fps);

/// Columns: policy,scenario,count,mean_psnr,mean_ssim,warp_ratio,effective_fps. One "all" row
/// per policy followed by one row per scenario that occurred.
void write_report_csv(std::ostream& out, std::span<const QualitySummary> summaries);
std::string report_json(std::span<const QualitySummary> summaries);

}  // namespace exwarp
