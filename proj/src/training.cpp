#include "exwarp/training.hpp"

#include <algorithm>
#include <cstdio>
#include <numeric>
#include <random>

#include "exwarp/errors.hpp"

namespace exwarp {

std::vector<Experience> experiences_from(std::span<const DecisionTrace> traces) {
  std::vector<const NodeRecord*> nodes;
  for (const DecisionTrace& t : traces)
    for (const NodeRecord& n : t.nodes) nodes.push_back(&n);
  std::vector<Experience> out;
  out.reserve(nodes.size());
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    const NodeRecord& n = *nodes[i];
    if (!n.has_reward) throw SchedulerError("decision at " + to_string(n.node) + " has no reward");
    Experience e;
    e.state = n.state;
    e.action = n.action;
    e.reward = n.reward;
    e.terminal = i + 1 == nodes.size();
    if (!e.terminal) e.next_state = nodes[i + 1]->state;
    out.push_back(std::move(e));
  }
  return out;
}

namespace {

/// Epsilon follows the number of decisions taken so far.
class ExplorationPolicy final : public Policy {
 public:
  ExplorationPolicy(const QNetwork& net, const TrainConfig& config, std::size_t& decisions,
                    std::mt19937_64& rng)
      : net_(net), config_(config), decisions_(decisions), rng_(rng) {}

  Action choose(const NodeView& view) override {
    const double epsilon = config_.epsilon_at(decisions_++);
    return select_action(net_, view.state, epsilon, rng_);
  }
  std::string name() const override { return "explore"; }

 private:
  const QNetwork& net_;
  const TrainConfig& config_;
  std::size_t& decisions_;
  std::mt19937_64& rng_;
};

}  // namespace

TrainingResult train_policy(std::span<const Episode* const> episodes, const TrainConfig& config,
                            const SchedulerConfig& scheduler) {
  config.validate();
  if (episodes.empty()) throw Error("training needs at least one episode");

  TrainingResult result;
  result.net = QNetwork::initialized(config.rng_seed);
  QNetwork target = result.net;
  ReplayBuffer replay(config.replay_capacity);
  std::mt19937_64 rng(config.rng_seed);
  std::mt19937_64 explore_rng(config.rng_seed ^ 0xa5a5a5a5a5a5a5a5ULL);
  std::size_t decisions = 0;
  ExplorationPolicy policy(result.net, config, decisions, explore_rng);

  SchedulerConfig sched = scheduler;
  sched.keep_frames = false;

  std::vector<std::size_t> order(episodes.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::size_t cursor = order.size();
  double loss_sum = 0.0;
  std::size_t loss_count = 0;

  while (result.points < config.train_points) {
    if (cursor == order.size()) {
      std::shuffle(order.begin(), order.end(), rng);
      cursor = 0;
    }
    const Episode& episode = *episodes[order[cursor++]];
    const std::size_t epsilon_point = result.points;
    const EpisodeResult rollout = run_episode(episode, policy, sched);
    ++result.rollouts;
    std::vector<Experience> fresh = experiences_from(rollout.traces);
    const std::size_t take = std::min(fresh.size(), config.train_points - result.points);
    for (std::size_t i = 0; i < take; ++i) replay.push(std::move(fresh[i]));
    result.points += take;
    decisions = result.points;

    const std::size_t updates = take * static_cast<std::size_t>(config.updates_per_point);
    for (std::size_t u = 0; u < updates; ++u) {
      if (replay.size() < static_cast<std::size_t>(config.batch_size)) break;
      const TrainStepResult r = train_step(result.net, target, replay, config, rng, result.steps);
      loss_sum += r.loss;
      ++loss_count;
      if (result.steps % static_cast<std::size_t>(config.log_every) == 0) {
        result.log.push_back({result.steps, loss_sum / static_cast<double>(loss_count),
                              config.epsilon_at(epsilon_point), r.mean_q_warp,
                              r.mean_q_extrapolate});
        loss_sum = 0.0;
        loss_count = 0;
      }
    }
  }
  return result;
}

std::vector<DecisionTrace> evaluate_policy(const QNetwork& net, std::span<const Episode> episodes,
                                           const SchedulerConfig& scheduler) {
  QNetworkPolicy policy(net, "trained", 0.0);
  SchedulerConfig sched = scheduler;
  sched.keep_frames = false;
  std::vector<DecisionTrace> traces;
  for (const Episode& e : episodes) {
    EpisodeResult r = run_episode(e, policy, sched);
    for (DecisionTrace& t : r.traces) traces.push_back(std::move(t));
  }
  return traces;
}

namespace {

std::size_t max_decisions(const EpisodeSet& set) {
  std::size_t n = 0;
  for (const Episode& e : set.episodes) {
    const int intervals = e.base_frame_count() - 1 - kFirstInterval;
    if (intervals > 0) n += 3 * static_cast<std::size_t>(intervals);
  }
  return n;
}

}  // namespace

CrossValidation cross_validate(std::span<const EpisodeSet> families, const TrainConfig& train,
                               const SchedulerConfig& scheduler) {
  train.validate();
  std::vector<std::string> bad;
  if (families.size() < 2) bad.push_back("cross-validation needs at least 2 scene families");
  for (const EpisodeSet& f : families) {
    const std::size_t available = max_decisions(f);
    if (available < train.test_points)
      bad.push_back("family '" + f.name + "' supplies at most " + std::to_string(available) +
                    " test points, fewer than " + std::to_string(train.test_points));
  }
  if (!bad.empty()) throw ValidationError(std::move(bad));

  CrossValidation cv;
  for (std::size_t k = 0; k < families.size(); ++k) {
    std::vector<const Episode*> pool;
    for (std::size_t j = 0; j < families.size(); ++j)
      if (j != k)
        for (const Episode& e : families[j].episodes) pool.push_back(&e);
    const TrainingResult trained = train_policy(pool, train, scheduler);

    const EpisodeSet& held = families[k];
    const std::vector<DecisionTrace> traces = evaluate_policy(trained.net, held.episodes, scheduler);
    std::vector<Experience> test = experiences_from(traces);
    if (test.size() < train.test_points)
      throw ValidationError({"family '" + held.name + "' produced " + std::to_string(test.size()) +
                             " test points, fewer than " + std::to_string(train.test_points)});
    test.resize(train.test_points);

    FoldResult fold;
    fold.family = held.name;
    fold.test_points = test.size();
    fold.test_loss = td_loss(trained.net, trained.net, test, train.gamma);
    double reward = 0.0;
    for (const Experience& e : test) reward += e.reward;
    fold.mean_reward = reward / static_cast<double>(test.size());
    const QualitySummary s = aggregate_report(traces, "trained", held.episodes.front().base_fps);
    fold.mean_psnr = s.all.mean_psnr();
    fold.mean_ssim = s.all.mean_ssim();
    fold.warp_ratio = s.all.warp_ratio();
    fold.effective_fps = s.all.effective_fps(s.base_fps);
    cv.folds.push_back(std::move(fold));
  }

  cv.mean.family = "mean";
  const double n = static_cast<double>(cv.folds.size());
  for (const FoldResult& f : cv.folds) {
    cv.mean.test_points += f.test_points;
    cv.mean.test_loss += f.test_loss / n;
    cv.mean.mean_reward += f.mean_reward / n;
    cv.mean.mean_psnr += f.mean_psnr / n;
    cv.mean.mean_ssim += f.mean_ssim / n;
    cv.mean.warp_ratio += f.warp_ratio / n;
    cv.mean.effective_fps += f.effective_fps / n;
  }
  return cv;
}

void write_cross_validation_csv(std::ostream& out, const CrossValidation& cv) {
  out << "family,test_points,test_loss,mean_reward,mean_psnr,mean_ssim,warp_ratio,effective_fps\n";
  char line[512];
  auto row = [&](const FoldResult& f) {
    std::snprintf(line, sizeof(line), "%s,%zu,%.9g,%.9g,%.6f,%.8f,%.6f,%.6f\n", f.family.c_str(),
                  f.test_points, f.test_loss, f.mean_reward, f.mean_psnr, f.mean_ssim,
                  f.warp_ratio, f.effective_fps);
    out << line;
  };
  for (const FoldResult& f : cv.folds) row(f);
  row(cv.mean);
}

}  // namespace exwarp
