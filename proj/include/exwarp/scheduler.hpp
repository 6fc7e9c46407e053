#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "exwarp/extrapolate.hpp"
#include "exwarp/features.hpp"
#include "exwarp/metrics.hpp"
#include "exwarp/predictor.hpp"
#include "exwarp/warp.hpp"

namespace exwarp {

enum class Scenario : std::uint8_t { S1 = 0, S2, S3, S4, S5, S6 };
inline constexpr int kScenarioCount = 6;

/// What a display slot shows: a repeat of the previous frame, a warp, or an extrapolation.
enum class Provenance : std::uint8_t { repeat, warped, extrapolated };

std::string to_string(NodeId node);
std::string to_string(Scenario s);
std::string to_string(Provenance p);
Scenario parse_scenario(const std::string& text);

/// Upsampling factor of a decision path: 2x for S1, 3x for S2, 4x otherwise.
int upsampling_factor(Scenario s);
/// Repeated slots of a decision path when no extrapolation is downgraded.
int nominal_dropped_slots(Scenario s);

struct Decision {
  NodeId node = NodeId::d1;
  Action action = Action::warp;
  bool operator==(const Decision&) const = default;
};

/// Maps one of the six legal decision paths to its scenario; throws SchedulerError otherwise.
/// At d3, Action::extrapolate stands for "no new frame".
Scenario classify_scenario(std::span<const Decision> decisions);
/// The legal path that realises a scenario.
std::vector<Decision> scenario_path(Scenario s);

/// Everything a policy may look at when deciding one node.
struct NodeView {
  NodeId node;
  const StateVector& state;
  const Frame& warp_option;
  const Frame& extrapolate_option;
  bool warp_drops = false;
  bool extrapolate_drops = false;
  const Frame* ground_truth = nullptr;  // frame for the node's target slot, if known
};

class Policy {
 public:
  virtual ~Policy() = default;
  virtual Action choose(const NodeView& view) = 0;
  virtual std::string name() const = 0;
};

/// Follows one decision path of the scenario table.
class FixedScenarioPolicy final : public Policy {
 public:
  explicit FixedScenarioPolicy(Scenario scenario);
  Action choose(const NodeView& view) override;
  std::string name() const override { return to_string(scenario_); }

 private:
  Scenario scenario_;
  std::array<Action, kNodeCount> actions_{};
};

/// Upper-bound baseline: extrapolate iff its frame has strictly higher PSNR against ground truth.
class OraclePolicy final : public Policy {
 public:
  Action choose(const NodeView& view) override;
  std::string name() const override { return "oracle"; }
};

/// Epsilon-greedy over Q-network outputs (epsilon 0 for evaluation).
class QNetworkPolicy final : public Policy {
 public:
  QNetworkPolicy(const QNetwork& net, std::string name, double epsilon = 0.0,
                 std::uint64_t seed = 0);
  Action choose(const NodeView& view) override;
  std::string name() const override { return name_; }
  void set_epsilon(double epsilon) { epsilon_ = epsilon; }

 private:
  const QNetwork* net_;
  std::string name_;
  double epsilon_;
  std::mt19937_64 rng_;
};

struct NodeRecord {
  NodeId node = NodeId::d1;
  Action action = Action::warp;
  StateVector state;
  bool dropped = false;
  bool has_reward = false;
  double reward = 0.0;
};

struct DecisionTrace {
  int interval_index = 0;  // base frame t; slots are 4t+1 .. 4t+3
  std::vector<NodeRecord> nodes;
  std::array<Frame, 3> displayed;  // empty when frames are not kept
  std::array<Provenance, 3> provenance{};
  int dropped_slots = 0;
  Scenario scenario = Scenario::S6;
  bool quality_annotated = false;
  std::array<QualityPair, 3> quality{};
  int downgraded = 0;
  int discarded_extrapolations = 0;

  std::vector<Decision> decisions() const;
  int inserted_frames() const { return 3 - dropped_slots; }
};

struct SchedulerConfig {
  LatencyModel latency = LatencyModel::defaults();
  std::optional<ResolutionClass> resolution;  // unset: classify from frame size
  RewardConfig reward;
  FeatureScales scales;
  bool keep_frames = true;
};

struct IntervalInput {
  int interval_index = 0;
  double base_fps = 30.0;
  const Surface* current = nullptr;                    // F_t
  std::array<const Surface*, 2> older{};               // F_{t-2}, F_{t-1}
  std::array<const Frame*, 3> ground_truth{};          // slots 4t+1..4t+3, may be null
  std::function<StateVector(NodeId)> state_for;        // predictor input at each node
};

/// Walks d1..d5 for one inter-frame interval and returns the displayed slots.
DecisionTrace run_interval(const IntervalInput& input, Policy& policy, const SchedulerConfig& config);

struct FpsReport {
  double base_fps = 30.0;
  std::size_t intervals = 0;
  std::size_t inserted_frames = 0;
  std::size_t dropped_slots = 0;
  std::size_t downgraded = 0;
  std::size_t discarded_extrapolations = 0;
  std::array<std::size_t, kScenarioCount> scenario_counts{};

  double effective_fps() const;
};

FpsReport make_fps_report(std::span<const DecisionTrace> traces, double base_fps);

/// First interval run_episode processes; earlier base frames only serve as history.
inline constexpr int kFirstInterval = 2;

struct EpisodeResult {
  std::vector<DecisionTrace> traces;
  FpsReport fps;
};

/// Runs every interval t = 2 .. L-2 in order. Requires at least 4 base frames.
EpisodeResult run_episode(const Episode& episode, Policy& policy, const SchedulerConfig& config);

/// One JSON object per line; `episode`, when non-empty, is emitted as the first field.
void write_trace_jsonl(std::ostream& out, std::span<const DecisionTrace> traces,
                       const std::string& episode = "");
std::string fps_report_json(const FpsReport& report);
void write_quality_csv(std::ostream& out, std::span<const DecisionTrace> traces);

}  // namespace exwarp
