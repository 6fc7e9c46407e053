#include "exwarp/scheduler.hpp"

#include <cstdio>
#include <ostream>
#include <utility>

#include "exwarp/errors.hpp"
#include "json.hpp"

namespace exwarp {

std::string to_string(NodeId node) {
  return "d" + std::to_string(static_cast<int>(node) + 1);
}

std::string to_string(Scenario s) { return "S" + std::to_string(static_cast<int>(s) + 1); }

std::string to_string(Provenance p) {
  switch (p) {
    case Provenance::repeat: return "rendered-repeat";
    case Provenance::warped: return "warped";
    case Provenance::extrapolated: return "extrapolated";
  }
  return "?";
}

Scenario parse_scenario(const std::string& text) {
  if (text.size() == 2 && (text[0] == 'S' || text[0] == 's') && text[1] >= '1' && text[1] <= '6')
    return static_cast<Scenario>(text[1] - '1');
  throw Error("unknown scenario '" + text + "'");
}

int upsampling_factor(Scenario s) {
  switch (s) {
    case Scenario::S1: return 2;
    case Scenario::S2: return 3;
    default: return 4;
  }
}

int nominal_dropped_slots(Scenario s) { return 4 - upsampling_factor(s); }

std::vector<Decision> scenario_path(Scenario s) {
  constexpr Action W = Action::warp;
  constexpr Action E = Action::extrapolate;
  switch (s) {
    case Scenario::S1: return {{NodeId::d1, E}, {NodeId::d3, E}};
    case Scenario::S2: return {{NodeId::d1, E}, {NodeId::d3, W}};
    case Scenario::S3: return {{NodeId::d1, W}, {NodeId::d2, E}, {NodeId::d4, E}};
    case Scenario::S4: return {{NodeId::d1, W}, {NodeId::d2, E}, {NodeId::d4, W}};
    case Scenario::S5: return {{NodeId::d1, W}, {NodeId::d2, W}, {NodeId::d5, E}};
    case Scenario::S6: return {{NodeId::d1, W}, {NodeId::d2, W}, {NodeId::d5, W}};
  }
  throw Error("invalid scenario");
}

Scenario classify_scenario(std::span<const Decision> decisions) {
  for (int k = 0; k < kScenarioCount; ++k) {
    const auto s = static_cast<Scenario>(k);
    const std::vector<Decision> path = scenario_path(s);
    if (decisions.size() == path.size() && std::equal(path.begin(), path.end(), decisions.begin()))
      return s;
  }
  std::string text;
  for (const Decision& d : decisions)
    text += (text.empty() ? "" : ", ") + to_string(d.node) + "=" + to_string(d.action);
  throw SchedulerError("illegal decision path (" + text + ")");
}

std::vector<Decision> DecisionTrace::decisions() const {
  std::vector<Decision> out;
  out.reserve(nodes.size());
  for (const NodeRecord& n : nodes) out.push_back({n.node, n.action});
  return out;
}

// ---------------------------------------------------------------------------
// Policies

FixedScenarioPolicy::FixedScenarioPolicy(Scenario scenario) : scenario_(scenario) {
  actions_.fill(Action::warp);
  for (const Decision& d : scenario_path(scenario))
    actions_[static_cast<std::size_t>(d.node)] = d.action;
}

Action FixedScenarioPolicy::choose(const NodeView& view) {
  return actions_[static_cast<std::size_t>(view.node)];
}

Action OraclePolicy::choose(const NodeView& view) {
  if (view.ground_truth == nullptr)
    throw SchedulerError("oracle policy needs ground truth at " + to_string(view.node));
  return psnr(view.extrapolate_option, *view.ground_truth) > psnr(view.warp_option, *view.ground_truth)
             ? Action::extrapolate
             : Action::warp;
}

QNetworkPolicy::QNetworkPolicy(const QNetwork& net, std::string name, double epsilon,
                               std::uint64_t seed)
    : net_(&net), name_(std::move(name)), epsilon_(epsilon), rng_(seed) {}

Action QNetworkPolicy::choose(const NodeView& view) {
  return select_action(*net_, view.state, epsilon_, rng_);
}

// ---------------------------------------------------------------------------
// One interval

namespace {

struct Option {
  Surface surface;
  Provenance provenance = Provenance::repeat;
  bool downgraded = false;
};

Surface warp_to(const Surface& source, std::int64_t target) {
  const auto steps = target - source.timestamp();
  if (steps < 0) throw SchedulerError("cannot warp a frame backwards in time");
  return warp_surface(source, static_cast<int>(steps)).as_surface();
}

Option repeat_of(const Surface& shown) { return Option{shown, Provenance::repeat, false}; }

Action checked(Action a, NodeId node) {
  const auto v = static_cast<int>(a);
  if (v != static_cast<int>(Action::warp) && v != static_cast<int>(Action::extrapolate))
    throw SchedulerError("policy returned an illegal action at " + to_string(node));
  return a;
}

class IntervalRunner {
 public:
  IntervalRunner(const IntervalInput& in, Policy& policy, const SchedulerConfig& config)
      : in_(in), policy_(policy), config_(config) {
    if (in.current == nullptr || in.older[0] == nullptr || in.older[1] == nullptr)
      throw SchedulerError("interval needs the current frame and two history frames");
    if (!in.state_for) throw SchedulerError("interval needs a state provider");
    const Frame& f = in.current->frame;
    const ResolutionClass cls =
        config.resolution.value_or(classify_resolution(f.width(), f.height()));
    latency_ = latency_slots(total_latency(config.latency, cls), in.base_fps);
    feasible_ = latency_ <= 2;
    base_ = in.current->timestamp();
    trace_.interval_index = in.interval_index;
  }

  DecisionTrace run() {
    const Surface& ft = *in_.current;

    // d1 at offset 0: warp F_t into P1, or repeat F_t and extrapolate it for P2.
    Option w1{warp_to(ft, base_ + 1), Provenance::warped};
    const Action a1 = decide(NodeId::d1, 0, w1, repeat_of(ft));
    if (a1 == Action::extrapolate) {
      show(0, repeat_of(ft));
      if (!feasible_) ++trace_.downgraded;
      show(1, extrapolate_current());
      // d3 at offset 2: Extrapolate means no new frame, P3 repeats P2.
      Option w3{warp_to(shown_[1], base_ + 3), Provenance::warped};
      const Action a3 = decide(NodeId::d3, 2, w3, repeat_of(shown_[1]));
      show(2, a3 == Action::warp ? std::move(w3) : repeat_of(shown_[1]));
    } else {
      show(0, std::move(w1));
      // d2 at offset 1; E(F_t) was issued speculatively at t.
      Option w2{warp_to(shown_[0], base_ + 2), Provenance::warped};
      Option e2 = extrapolate_current();
      const Action a2 = decide(NodeId::d2, 1, w2, e2);
      if (a2 == Action::extrapolate) {
        if (e2.downgraded) ++trace_.downgraded;
        show(1, std::move(e2));
      } else {
        if (feasible_) ++trace_.discarded_extrapolations;
        show(1, std::move(w2));
      }
      // d4 / d5 at offset 2: warp P2, or extrapolate P1 issued at offset 1.
      const NodeId node = a2 == Action::extrapolate ? NodeId::d4 : NodeId::d5;
      Option w3{warp_to(shown_[1], base_ + 3), Provenance::warped};
      Option e3 = extrapolate_first();
      const Action a3 = decide(node, 2, w3, e3);
      if (a3 == Action::extrapolate && e3.downgraded) ++trace_.downgraded;
      show(2, a3 == Action::warp ? std::move(w3) : std::move(e3));
    }

    trace_.scenario = classify_scenario(trace_.decisions());
    trace_.quality_annotated = true;
    for (int i = 0; i < 3; ++i) {
      const Frame* gt = in_.ground_truth[static_cast<std::size_t>(i)];
      if (gt == nullptr) {
        trace_.quality_annotated = false;
        continue;
      }
      trace_.quality[static_cast<std::size_t>(i)] = quality(shown_[i].frame, *gt);
    }
    if (!trace_.quality_annotated) trace_.quality = {};
    if (config_.keep_frames)
      for (int i = 0; i < 3; ++i) trace_.displayed[static_cast<std::size_t>(i)] = shown_[i].frame;
    return std::move(trace_);
  }

 private:
  // E(F_t) from [F_{t-2}, F_{t-1}, F_t] targeting offset 2; a repeat of the slot before when late.
  Option extrapolate_current() {
    if (!feasible_) return Option{shown_[0], Provenance::repeat, true};
    const std::array<Surface, 3> history = {*in_.older[0], *in_.older[1], *in_.current};
    return Option{extrapolate_frame(history, 2, latency_).as_surface(), Provenance::extrapolated};
  }

  // E(P1) from [F_{t-1}, F_t, P1] targeting offset 3.
  Option extrapolate_first() {
    if (!feasible_) return Option{shown_[1], Provenance::repeat, true};
    const std::array<Surface, 3> history = {*in_.older[1], *in_.current, shown_[0]};
    const auto steps = static_cast<int>(base_ + 3 - shown_[0].timestamp());
    return Option{extrapolate_frame(history, steps, latency_).as_surface(),
                  Provenance::extrapolated};
  }

  Action decide(NodeId node, int offset, const Option& warp, const Option& extrapolate) {
    const StateVector state = in_.state_for(node);
    const Frame* gt = in_.ground_truth[static_cast<std::size_t>(offset)];
    const bool warp_drops = warp.provenance == Provenance::repeat;
    const bool extrapolate_drops = extrapolate.provenance == Provenance::repeat;
    const NodeView view{node, state, warp.surface.frame, extrapolate.surface.frame, warp_drops,
                        extrapolate_drops, gt};
    const Action a = checked(policy_.choose(view), node);

    NodeRecord rec;
    rec.node = node;
    rec.action = a;
    rec.state = state;
    rec.dropped = a == Action::warp ? warp_drops : extrapolate_drops;
    if (gt != nullptr) {
      const Frame& chosen = a == Action::warp ? warp.surface.frame : extrapolate.surface.frame;
      const Frame& other = a == Action::warp ? extrapolate.surface.frame : warp.surface.frame;
      rec.reward = compute_reward(chosen, other, *gt, rec.dropped, config_.reward);
      if (a == Action::extrapolate && node != NodeId::d3) rec.reward -= config_.reward.extrapolate_cost;
      rec.has_reward = true;
    }
    trace_.nodes.push_back(std::move(rec));
    return a;
  }

  void show(int slot, Option option) {
    const auto i = static_cast<std::size_t>(slot);
    trace_.provenance[i] = option.provenance;
    if (option.provenance == Provenance::repeat) ++trace_.dropped_slots;
    shown_[i] = std::move(option.surface);
  }

  const IntervalInput& in_;
  Policy& policy_;
  const SchedulerConfig& config_;
  int latency_ = 1;
  bool feasible_ = true;
  std::int64_t base_ = 0;
  std::array<Surface, 3> shown_;
  DecisionTrace trace_;
};

}  // namespace

DecisionTrace run_interval(const IntervalInput& input, Policy& policy,
                           const SchedulerConfig& config) {
  return IntervalRunner(input, policy, config).run();
}

// ---------------------------------------------------------------------------
// Episodes and reports

double FpsReport::effective_fps() const {
  if (intervals == 0) return base_fps;
  return base_fps * (1.0 + static_cast<double>(inserted_frames) / static_cast<double>(intervals));
}

FpsReport make_fps_report(std::span<const DecisionTrace> traces, double base_fps) {
  FpsReport r;
  r.base_fps = base_fps;
  for (const DecisionTrace& t : traces) {
    ++r.intervals;
    r.inserted_frames += static_cast<std::size_t>(t.inserted_frames());
    r.dropped_slots += static_cast<std::size_t>(t.dropped_slots);
    r.downgraded += static_cast<std::size_t>(t.downgraded);
    r.discarded_extrapolations += static_cast<std::size_t>(t.discarded_extrapolations);
    ++r.scenario_counts[static_cast<std::size_t>(t.scenario)];
  }
  return r;
}

EpisodeResult run_episode(const Episode& episode, Policy& policy, const SchedulerConfig& config) {
  const int n = episode.base_frame_count();
  if (n < 4) throw SchedulerError("episode needs at least 4 base frames, got " + std::to_string(n));
  if (episode.frames.size() != static_cast<std::size_t>(4 * n - 3))
    throw SchedulerError("episode lacks ground truth at every quarter-slot");

  std::vector<Surface> surfaces;
  surfaces.reserve(static_cast<std::size_t>(n));
  for (int k = 0; k < n; ++k)
    surfaces.push_back(Surface::from_rendered(episode.base_frame(k), episode.gbuffers[static_cast<std::size_t>(k)]));
  const std::vector<EnvVector> env = episode_features(episode);
  std::vector<TemporalVector> last_node(static_cast<std::size_t>(n), TemporalVector{});

  EpisodeResult result;
  for (int t = kFirstInterval; t <= n - 2; ++t) {
    IntervalInput in;
    in.interval_index = t;
    in.base_fps = episode.base_fps;
    in.current = &surfaces[static_cast<std::size_t>(t)];
    in.older = {&surfaces[static_cast<std::size_t>(t - 2)], &surfaces[static_cast<std::size_t>(t - 1)]};
    for (int i = 0; i < 3; ++i)
      in.ground_truth[static_cast<std::size_t>(i)] = &episode.quarter_frame(4 * t + 1 + i);
    in.state_for = [&, t](NodeId node) {
      std::array<StateEntry, kStateEntries> entries{};
      entries[0] = {env[static_cast<std::size_t>(t)], one_hot(node)};
      for (int k = 1; k < kStateEntries; ++k) {
        if (t - k < 0) continue;
        entries[static_cast<std::size_t>(k)] = {env[static_cast<std::size_t>(t - k)],
                                                last_node[static_cast<std::size_t>(t - k)]};
      }
      return assemble_state(entries, config.scales, episode.width, episode.height);
    };
    DecisionTrace trace = run_interval(in, policy, config);
    last_node[static_cast<std::size_t>(t)] = one_hot(trace.nodes.back().node);
    result.traces.push_back(std::move(trace));
  }
  result.fps = make_fps_report(result.traces, episode.base_fps);
  return result;
}

void write_trace_jsonl(std::ostream& out, std::span<const DecisionTrace> traces,
                       const std::string& episode) {
  for (const DecisionTrace& t : traces) {
    nlohmann::ordered_json j;
    if (!episode.empty()) j["episode"] = episode;
    j["interval_index"] = t.interval_index;
    nlohmann::ordered_json decisions = nlohmann::ordered_json::array();
    for (const NodeRecord& n : t.nodes) {
      nlohmann::ordered_json d;
      d["node"] = to_string(n.node);
      d["action"] = n.node == NodeId::d3 && n.action == Action::extrapolate ? "no-new-frame"
                                                                           : to_string(n.action);
      if (n.has_reward) d["reward"] = n.reward;
      decisions.push_back(std::move(d));
    }
    j["decisions"] = std::move(decisions);
    nlohmann::ordered_json provenance = nlohmann::ordered_json::array();
    for (Provenance p : t.provenance) provenance.push_back(to_string(p));
    j["provenance"] = std::move(provenance);
    j["dropped_slots"] = t.dropped_slots;
    j["scenario"] = to_string(t.scenario);
    j["downgraded"] = t.downgraded;
    j["discarded_extrapolations"] = t.discarded_extrapolations;
    j["quality_annotated"] = t.quality_annotated;
    if (t.quality_annotated) {
      nlohmann::ordered_json psnrs = nlohmann::ordered_json::array();
      nlohmann::ordered_json ssims = nlohmann::ordered_json::array();
      for (const QualityPair& q : t.quality) {
        psnrs.push_back(q.psnr);
        ssims.push_back(q.ssim);
      }
      j["psnr"] = std::move(psnrs);
      j["ssim"] = std::move(ssims);
    }
    out << j.dump() << '\n';
  }
}

std::string fps_report_json(const FpsReport& report) {
  nlohmann::ordered_json j;
  j["base_fps"] = report.base_fps;
  j["intervals"] = report.intervals;
  j["inserted_frames"] = report.inserted_frames;
  j["dropped_slots"] = report.dropped_slots;
  j["effective_fps"] = report.effective_fps();
  j["downgraded"] = report.downgraded;
  j["discarded_extrapolations"] = report.discarded_extrapolations;
  nlohmann::ordered_json counts;
  for (int k = 0; k < kScenarioCount; ++k)
    counts[to_string(static_cast<Scenario>(k))] = report.scenario_counts[static_cast<std::size_t>(k)];
  j["scenario_counts"] = std::move(counts);
  return j.dump(2) + "\n";
}

void write_quality_csv(std::ostream& out, std::span<const DecisionTrace> traces) {
  out << "interval,scenario,psnr_p1,psnr_p2,psnr_p3,ssim_p1,ssim_p2,ssim_p3,dropped\n";
  char line[512];
  for (const DecisionTrace& t : traces) {
    const auto& q = t.quality;
    if (t.quality_annotated) {
      std::snprintf(line, sizeof(line), "%d,%s,%.6f,%.6f,%.6f,%.8f,%.8f,%.8f,%d\n", t.interval_index,
                    to_string(t.scenario).c_str(), q[0].psnr, q[1].psnr, q[2].psnr, q[0].ssim,
                    q[1].ssim, q[2].ssim, t.dropped_slots);
    } else {
      std::snprintf(line, sizeof(line), "%d,%s,,,,,,,%d\n", t.interval_index,
                    to_string(t.scenario).c_str(), t.dropped_slots);
    }
    out << line;
  }
}

}  // namespace exwarp
