#pragma once

#include <cstddef>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "exwarp/predictor.hpp"
#include "exwarp/report.hpp"
#include "exwarp/scheduler.hpp"

namespace exwarp {

/// One Experience per decision node, chained to the next node of the episode; the last
/// node is terminal. Nodes without a reward (no ground truth) are rejected.
std::vector<Experience> experiences_from(std::span<const DecisionTrace> traces);

struct TrainingResult {
  QNetwork net;
  std::vector<TrainLogRow> log;
  std::size_t points = 0;  // experiences collected
  std::size_t steps = 0;   // SGD steps taken
  std::size_t rollouts = 0;
};

/// Epsilon-greedy rollouts cycle over `episodes` until `train_points` experiences are
/// collected; after each rollout, `updates_per_point` SGD steps run per new experience.
TrainingResult train_policy(std::span<const Episode* const> episodes, const TrainConfig& train,
                            const SchedulerConfig& scheduler);

struct EpisodeSet {
  std::string name;
  std::vector<Episode> episodes;
};

struct FoldResult {
  std::string family;
  std::size_t test_points = 0;
  double test_loss = 0.0;
  double mean_reward = 0.0;
  double mean_psnr = 0.0;
  double mean_ssim = 0.0;
  double warp_ratio = 0.0;
  double effective_fps = 0.0;
};

struct CrossValidation {
  std::vector<FoldResult> folds;
  FoldResult mean;  // family = "mean"
};

/// Greedy traces of `net` over every episode of a set.
std::vector<DecisionTrace> evaluate_policy(const QNetwork& net, std::span<const Episode> episodes,
                                           const SchedulerConfig& scheduler);

/// Leave-one-family-out: train on the others, test on the held-out family. Throws
/// ValidationError up front when a family cannot supply `test_points` decisions.
CrossValidation cross_validate(std::span<const EpisodeSet> families, const TrainConfig& train,
                               const SchedulerConfig& scheduler);

/// Columns: family,test_points,test_loss,mean_reward,mean_psnr,mean_ssim,warp_ratio,effective_fps.
void write_cross_validation_csv(std::ostream& out, const CrossValidation& cv);

}  // namespace exwarp
