#include <algorithm>
#include <set>
#include <sstream>

#include "doctest.h"
#include "exwarp/errors.hpp"
#include "exwarp/scheduler.hpp"
#include "json.hpp"
#include "scheduler_fixture.hpp"

using namespace exwarp;

namespace {

constexpr Action W = Action::warp;
constexpr Action E = Action::extrapolate;

class AlwaysPolicy final : public Policy {
 public:
  explicit AlwaysPolicy(Action a) : a_(a) {}
  Action choose(const NodeView&) override { return a_; }
  std::string name() const override { return "always"; }

 private:
  Action a_;
};

SchedulerConfig at_resolution(ResolutionClass cls) {
  SchedulerConfig c;
  c.resolution = cls;
  return c;
}

}  // namespace

TEST_CASE("scenario classification examples") {
  const std::vector<Decision> s1{{NodeId::d1, E}, {NodeId::d3, E}};
  const std::vector<Decision> s2{{NodeId::d1, E}, {NodeId::d3, W}};
  const std::vector<Decision> s5{{NodeId::d1, W}, {NodeId::d2, W}, {NodeId::d5, E}};
  CHECK(classify_scenario(s1) == Scenario::S1);
  CHECK(classify_scenario(s2) == Scenario::S2);
  CHECK(classify_scenario(s5) == Scenario::S5);
}

TEST_CASE("classification is a bijection with the six legal paths") {
  // every sequence of up to three (node, action) pairs
  std::vector<std::vector<Decision>> all{{}};
  for (int len = 0; len < 3; ++len) {
    std::vector<std::vector<Decision>> grown;
    for (const auto& p : all) {
      if (static_cast<int>(p.size()) != len) continue;
      for (int n = 0; n < kNodeCount; ++n)
        for (Action a : {W, E}) {
          auto q = p;
          q.push_back({static_cast<NodeId>(n), a});
          grown.push_back(q);
        }
    }
    all.insert(all.end(), grown.begin(), grown.end());
  }
  std::set<int> seen;
  int legal = 0;
  for (const auto& path : all) {
    try {
      const Scenario s = classify_scenario(path);
      CHECK(scenario_path(s) == path);
      seen.insert(static_cast<int>(s));
      ++legal;
    } catch (const SchedulerError&) {
    }
  }
  CHECK(legal == 6);
  CHECK(seen.size() == 6);
}

TEST_CASE("fixed policies reproduce the scenario table") {
  const testing::IntervalFixture fx(testing::moving_rect_scene(4.0, 5));
  const int factors[] = {2, 3, 4, 4, 4, 4};
  const int dropped[] = {2, 1, 0, 0, 0, 0};
  for (int k = 0; k < kScenarioCount; ++k) {
    const auto s = static_cast<Scenario>(k);
    FixedScenarioPolicy policy(s);
    const DecisionTrace t = run_interval(fx.input(2), policy, SchedulerConfig{});
    CHECK(t.scenario == s);
    CHECK(upsampling_factor(t.scenario) == factors[k]);
    CHECK(t.dropped_slots == dropped[k]);
    CHECK(t.dropped_slots == nominal_dropped_slots(s));
    CHECK(t.downgraded == 0);
    CHECK(1 + t.inserted_frames() == factors[k]);
    const auto repeats = std::count(t.provenance.begin(), t.provenance.end(), Provenance::repeat);
    CHECK(repeats == t.dropped_slots);
  }
}

TEST_CASE("always-extrapolate shows F_t, E(F_t), E(F_t)") {
  const testing::IntervalFixture fx(testing::moving_rect_scene(4.0, 5));
  AlwaysPolicy policy(E);
  const DecisionTrace t = run_interval(fx.input(2), policy, SchedulerConfig{});
  CHECK(t.scenario == Scenario::S1);
  const std::array<Surface, 3> history = {fx.surfaces[0], fx.surfaces[1], fx.surfaces[2]};
  const ExtrapolatedFrame e = extrapolate_frame(history, 2);
  CHECK(t.displayed[0].same_pixels(fx.surfaces[2].frame));
  CHECK(t.displayed[1].same_pixels(e.pixels));
  CHECK(t.displayed[2].same_pixels(e.pixels));
  CHECK(t.provenance == std::array{Provenance::repeat, Provenance::extrapolated, Provenance::repeat});
}

TEST_CASE("always-warp shows W(F_t), W(P1), W(P2)") {
  const testing::IntervalFixture fx(testing::moving_rect_scene(4.0, 5));
  AlwaysPolicy policy(W);
  const DecisionTrace t = run_interval(fx.input(2), policy, SchedulerConfig{});
  CHECK(t.scenario == Scenario::S6);
  const WarpedFrame p1 = warp_surface(fx.surfaces[2], 1);
  const WarpedFrame p2 = warp_surface(p1.as_surface(), 1);
  const WarpedFrame p3 = warp_surface(p2.as_surface(), 1);
  CHECK(t.displayed[0].same_pixels(p1.pixels));
  CHECK(t.displayed[1].same_pixels(p2.pixels));
  CHECK(t.displayed[2].same_pixels(p3.pixels));
  CHECK(t.dropped_slots == 0);
  CHECK(t.discarded_extrapolations == 1);  // the speculative E(F_t)
}

TEST_CASE("warp, extrapolate, warp is S4") {
  const testing::IntervalFixture fx(testing::moving_rect_scene(4.0, 5));
  class Path final : public Policy {
   public:
    Action choose(const NodeView& v) override { return v.node == NodeId::d2 ? E : W; }
    std::string name() const override { return "path"; }
  } policy;
  const DecisionTrace t = run_interval(fx.input(2), policy, SchedulerConfig{});
  CHECK(t.scenario == Scenario::S4);
  CHECK(t.nodes.size() == 3);
  CHECK(t.nodes[2].node == NodeId::d4);
  CHECK(t.provenance == std::array{Provenance::warped, Provenance::extrapolated, Provenance::warped});
}

TEST_CASE("latency budget: 480p never downgrades, 1080p always does") {
  const testing::IntervalFixture fx(testing::moving_rect_scene(4.0, 5));
  for (int k = 0; k < kScenarioCount; ++k) {
    const auto s = static_cast<Scenario>(k);
    FixedScenarioPolicy policy(s);
    const std::vector<Decision> path = scenario_path(s);
    const int extrapolations = static_cast<int>(std::count_if(
        path.begin(), path.end(),
        [](const Decision& d) { return d.action == E && d.node != NodeId::d3; }));
    const DecisionTrace fast = run_interval(fx.input(2), policy, at_resolution(ResolutionClass::p480));
    CHECK(fast.downgraded == 0);
    const DecisionTrace slow = run_interval(fx.input(2), policy, at_resolution(ResolutionClass::p1080));
    CHECK(slow.downgraded == extrapolations);
    CHECK(std::count(slow.provenance.begin(), slow.provenance.end(), Provenance::extrapolated) == 0);
    CHECK(slow.dropped_slots == fast.dropped_slots + extrapolations);
    CHECK(slow.discarded_extrapolations == 0);
  }
}

TEST_CASE("fixed warp and extrapolate policies give 4x and 2x") {
  const Episode ep = render_episode(testing::moving_rect_scene(3.0, 8));
  AlwaysPolicy warp(W), extrapolate(E);
  const EpisodeResult w = run_episode(ep, warp, SchedulerConfig{});
  const EpisodeResult e = run_episode(ep, extrapolate, SchedulerConfig{});
  CHECK(w.traces.size() == 8 - 3);
  CHECK(w.fps.effective_fps() == doctest::Approx(4 * ep.base_fps));
  CHECK(e.fps.effective_fps() == doctest::Approx(2 * ep.base_fps));
  CHECK(w.fps.scenario_counts[5] == w.traces.size());
  CHECK(e.fps.scenario_counts[0] == e.traces.size());
}

TEST_CASE("effective fps is the scenario-weighted mean of the upsampling factors") {
  const Episode ep = render_episode(testing::moving_rect_scene(3.0, 12));
  std::mt19937_64 rng(3);
  class Random final : public Policy {
   public:
    explicit Random(std::mt19937_64& r) : r_(r) {}
    Action choose(const NodeView&) override { return std::bernoulli_distribution(0.5)(r_) ? E : W; }
    std::string name() const override { return "random"; }

   private:
    std::mt19937_64& r_;
  } policy(rng);
  const EpisodeResult res = run_episode(ep, policy, SchedulerConfig{});
  double weighted = 0;
  for (int k = 0; k < kScenarioCount; ++k)
    weighted += res.fps.scenario_counts[static_cast<std::size_t>(k)] * upsampling_factor(static_cast<Scenario>(k));
  CHECK(res.fps.effective_fps() == doctest::Approx(ep.base_fps * weighted / res.fps.intervals));
  CHECK(res.fps.effective_fps() >= ep.base_fps);
  CHECK(res.fps.effective_fps() <= 4 * ep.base_fps);
}

TEST_CASE("displayed frames never depend on later rendered frames") {
  const SceneSpec spec = testing::moving_rect_scene(4.0, 8);
  const Episode ep = render_episode(spec);
  Episode tampered = ep;
  const int cut = 4;  // everything after base frame 4 is replaced
  std::mt19937_64 rng(1);
  for (std::size_t q = 4 * cut + 1; q < tampered.frames.size(); ++q)
    tampered.frames[q] = testing::random_frame(64, 64, rng, static_cast<std::int64_t>(q));
  for (std::size_t k = cut + 1; k < tampered.gbuffers.size(); ++k)
    tampered.gbuffers[k] = tampered.gbuffers[0];
  for (int s = 0; s < kScenarioCount; ++s) {
    FixedScenarioPolicy policy(static_cast<Scenario>(s));
    const auto a = run_episode(ep, policy, SchedulerConfig{}).traces;
    const auto b = run_episode(tampered, policy, SchedulerConfig{}).traces;
    for (std::size_t i = 0; i < a.size() && a[i].interval_index <= cut; ++i)
      for (int j = 0; j < 3; ++j) CHECK(a[i].displayed[static_cast<std::size_t>(j)] == b[i].displayed[static_cast<std::size_t>(j)]);
  }
}

TEST_CASE("oracle prefers warp on ties and extrapolates when it is strictly better") {
  SceneSpec still = testing::empty_scene(64, 64, 5);
  still.background.kind = BackgroundKind::textured_noise;
  still.objects.push_back(testing::rect(1, 12, Trajectory::fixed({20, 20})));
  OraclePolicy oracle;
  for (const DecisionTrace& t : run_episode(render_episode(still), oracle, SchedulerConfig{}).traces)
    CHECK(t.scenario == Scenario::S6);

  const testing::IntervalFixture fx(testing::moving_rect_scene(8.0, 5));
  const DecisionTrace t = run_interval(fx.input(2), oracle, SchedulerConfig{});
  const Frame& gt = fx.episode.quarter_frame(4 * 2 + 2);
  const std::array<Surface, 3> history = {fx.surfaces[0], fx.surfaces[1], fx.surfaces[2]};
  const double pe = psnr(extrapolate_frame(history, 2).pixels, gt);
  const double pw = psnr(warp_surface(warp_surface(fx.surfaces[2], 1).as_surface(), 1).pixels, gt);
  REQUIRE(t.nodes[0].action == W);
  CHECK((t.nodes[1].action == E) == (pe > pw));

  IntervalInput blind = fx.input(2);
  blind.ground_truth = {};
  CHECK_THROWS_AS(run_interval(blind, oracle, SchedulerConfig{}), SchedulerError);
}

TEST_CASE("node rewards follow the reward definition") {
  const testing::IntervalFixture fx(testing::moving_rect_scene(4.0, 5));
  AlwaysPolicy policy(E);
  SchedulerConfig cfg;
  const DecisionTrace t = run_interval(fx.input(2), policy, cfg);
  REQUIRE(t.nodes.size() == 2);
  // d1 extrapolate: repeat of F_t at P1 against W(F_t), dropped, minus the extrapolation cost
  const Frame w1 = warp_surface(fx.surfaces[2], 1).pixels;
  const double want = compute_reward(fx.surfaces[2].frame, w1, fx.episode.quarter_frame(9), true, cfg.reward) -
                      cfg.reward.extrapolate_cost;
  CHECK(t.nodes[0].reward == doctest::Approx(want));
  CHECK(t.nodes[0].dropped);
  CHECK(t.nodes[1].dropped);  // no new frame
}

TEST_CASE("episodes shorter than four base frames are rejected") {
  AlwaysPolicy policy(W);
  Episode short_ep = render_episode(testing::moving_rect_scene(1.0, 4));
  CHECK(run_episode(short_ep, policy, SchedulerConfig{}).traces.size() == 1);
  short_ep.gbuffers.pop_back();
  CHECK_THROWS_AS(run_episode(short_ep, policy, SchedulerConfig{}), SchedulerError);
}

TEST_CASE("trace, fps and quality exports") {
  const Episode ep = render_episode(testing::moving_rect_scene(3.0, 5));
  FixedScenarioPolicy policy(Scenario::S1);
  const EpisodeResult res = run_episode(ep, policy, SchedulerConfig{});
  std::ostringstream jsonl;
  write_trace_jsonl(jsonl, res.traces, "demo/ep000");
  std::istringstream lines(jsonl.str());
  std::string line;
  int n = 0;
  while (std::getline(lines, line)) {
    const auto j = nlohmann::json::parse(line);
    CHECK(j["episode"] == "demo/ep000");
    CHECK(j["scenario"] == "S1");
    CHECK(j["decisions"][1]["action"] == "no-new-frame");
    CHECK(j["provenance"][0] == "rendered-repeat");
    CHECK(j["psnr"].size() == 3);
    ++n;
  }
  CHECK(n == static_cast<int>(res.traces.size()));

  const auto fps = nlohmann::json::parse(fps_report_json(res.fps));
  CHECK(fps["effective_fps"].get<double>() == doctest::Approx(60.0));
  CHECK(fps["scenario_counts"]["S1"] == res.traces.size());

  std::ostringstream csv;
  write_quality_csv(csv, res.traces);
  CHECK(csv.str().rfind("interval,scenario,psnr_p1,psnr_p2,psnr_p3,ssim_p1,ssim_p2,ssim_p3,dropped\n", 0) == 0);
  CHECK(csv.str().find("\n2,S1,") != std::string::npos);
}

TEST_CASE("names parse back") {
  for (int k = 0; k < kScenarioCount; ++k)
    CHECK(parse_scenario(to_string(static_cast<Scenario>(k))) == static_cast<Scenario>(k));
  CHECK_THROWS_AS(parse_scenario("S7"), Error);
  CHECK(to_string(NodeId::d4) == "d4");
}
