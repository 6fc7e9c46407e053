#include "exwarp/commands.hpp"

#include <algorithm>
#include <cstdio>
#include <map>
#include <sstream>

#include "exwarp/dataset.hpp"
#include "exwarp/errors.hpp"
#include "exwarp/features.hpp"
#include "exwarp/parallel.hpp"
#include "exwarp/report.hpp"
#include "json.hpp"

#ifndef EXWARP_VERSION
#define EXWARP_VERSION "0.0.0"
#endif

namespace exwarp {

namespace fs = std::filesystem;

RunConfig resolve_config(const CommandOptions& options) {
  RunConfig config = options.config ? load_config(*options.config) : RunConfig{};
  if (options.seed) config.seed = *options.seed;
  if (options.out) config.out = *options.out;
  if (options.policy) {
    if (!is_valid_policy_name(*options.policy))
      throw ValidationError({"--policy: unknown policy '" + *options.policy + "'"});
    config.policy = *options.policy;
  }
  config.train.rng_seed = config.seed;
  validate_paths(config);
  return config;
}

namespace {

std::string episode_label(std::size_t i) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "ep%03zu", i);
  return buf;
}

std::vector<fs::path> dataset_dirs(const fs::path& root) {
  if (fs::exists(root / "manifest.json")) return {root};
  std::vector<fs::path> dirs;
  for (const auto& entry : fs::directory_iterator(root))
    if (entry.is_directory() && fs::exists(entry.path() / "manifest.json")) dirs.push_back(entry.path());
  std::sort(dirs.begin(), dirs.end());
  if (dirs.empty()) throw FormatError("no datasets found under " + root.string());
  return dirs;
}

/// Writes outputs into the out directory and remembers their checksums for the manifest.
class OutputDir {
 public:
  OutputDir(const RunConfig& config, std::string command)
      : config_(config), command_(std::move(command)) {
    fs::create_directories(config.out);
  }

  void write(const std::string& rel, const std::string& text) {
    write(rel, std::vector<std::uint8_t>(text.begin(), text.end()));
  }

  void write(const std::string& rel, const std::vector<std::uint8_t>& bytes) {
    const fs::path path = config_.out / rel;
    fs::create_directories(path.parent_path());
    write_file_atomic(path, bytes);
    checksums_[rel] = crc32(bytes);
  }

  void record(const std::string& rel, std::uint32_t crc) { checksums_[rel] = crc; }

  void finish() {
    nlohmann::ordered_json j;
    j["tool"] = "exwarp";
    j["version"] = EXWARP_VERSION;
    j["command"] = command_;
    j["seed"] = config_.seed;
    j["config_hash"] = config_hash(config_);
    nlohmann::ordered_json outputs = nlohmann::ordered_json::object();
    for (const auto& [rel, crc] : checksums_) {
      char hex[9];
      std::snprintf(hex, sizeof(hex), "%08x", crc);
      outputs[rel] = hex;
    }
    j["outputs"] = std::move(outputs);
    write_file_atomic(config_.out / "run_manifest.json", j.dump(2) + "\n");
  }

 private:
  const RunConfig& config_;
  std::string command_;
  std::map<std::string, std::uint32_t> checksums_;
};

template <class Fn>
std::string to_text(Fn&& fn) {
  std::ostringstream os;
  fn(os);
  return os.str();
}

struct Labeled {
  std::string name;  // "<family>/epNNN"
  const Episode* episode;
};

std::vector<Labeled> flatten_sets(const std::vector<EpisodeSet>& sets) {
  std::vector<Labeled> out;
  for (const EpisodeSet& s : sets)
    for (std::size_t i = 0; i < s.episodes.size(); ++i)
      out.push_back({s.name + "/" + episode_label(i), &s.episodes[i]});
  return out;
}

struct PolicyRun {
  std::string policy;
  std::vector<std::vector<DecisionTrace>> per_episode;
  QualitySummary summary;
};

PolicyRun run_policy(const std::string& name, const std::vector<Labeled>& episodes,
                     const SchedulerConfig& scheduler, bool keep_frames) {
  SchedulerConfig sched = scheduler;
  sched.keep_frames = keep_frames;
  PolicyRun run;
  run.policy = name;
  run.per_episode.resize(episodes.size());
  // Stateless policies are rebuilt per episode so workers share nothing mutable.
  parallel_for(episodes.size(), thread_budget(), [&](std::size_t i) {
    std::unique_ptr<Policy> policy = make_policy(name);
    run.per_episode[i] = run_episode(*episodes[i].episode, *policy, sched).traces;
  });
  run.summary.policy = name;
  run.summary.base_fps = episodes.empty() ? 30.0 : episodes.front().episode->base_fps;
  for (const auto& traces : run.per_episode)
    for (const DecisionTrace& t : traces) run.summary.add(t);
  return run;
}

std::string policy_label(const std::string& name) {
  return name.rfind("trained:", 0) == 0 ? "trained" : name;
}

}  // namespace

std::vector<EpisodeSet> gather_episodes(const RunConfig& config) {
  std::vector<EpisodeSet> sets;
  if (!config.dataset_paths.empty()) {
    for (const fs::path& root : config.dataset_paths) {
      EpisodeSet set;
      set.name = fs::absolute(root).lexically_normal().filename().string();
      if (set.name.empty()) set.name = fs::absolute(root).lexically_normal().parent_path().filename().string();
      const std::vector<fs::path> dirs = dataset_dirs(root);
      set.episodes.resize(dirs.size());
      parallel_for(dirs.size(), thread_budget(),
                   [&](std::size_t i) { set.episodes[i] = load_dataset(dirs[i]); });
      sets.push_back(std::move(set));
    }
    return sets;
  }
  for (SceneFamily family : config.families) {
    EpisodeSet set;
    set.name = to_string(family);
    const std::vector<SceneSpec> specs = family_specs(family, config.scenes, config.seed);
    set.episodes.resize(specs.size());
    parallel_for(specs.size(), thread_budget(),
                 [&](std::size_t i) { set.episodes[i] = render_episode(specs[i]); });
    sets.push_back(std::move(set));
  }
  return sets;
}

std::unique_ptr<Policy> make_policy(const std::string& name) {
  if (name == "oracle") return std::make_unique<OraclePolicy>();
  if (name.rfind("trained:", 0) == 0) {
    // The policy keeps a pointer to the network, so it owns a copy alongside.
    struct Owned final : Policy {
      explicit Owned(QNetwork n) : net(std::move(n)), inner(net, "trained") {}
      Action choose(const NodeView& v) override { return inner.choose(v); }
      std::string name() const override { return "trained"; }
      QNetwork net;
      QNetworkPolicy inner;
    };
    return std::make_unique<Owned>(load_checkpoint(name.substr(8)));
  }
  return std::make_unique<FixedScenarioPolicy>(parse_scenario(name));
}

void cmd_generate(const RunConfig& config) {
  OutputDir out(config, "generate");
  const std::vector<EpisodeSet> sets = gather_episodes(config);
  for (const EpisodeSet& set : sets) {
    for (std::size_t i = 0; i < set.episodes.size(); ++i) {
      const Episode& ep = set.episodes[i];
      const std::string rel = "datasets/" + set.name + "/" + episode_label(i);
      save_dataset(config.out / rel, ep);
      out.record(rel + "/manifest.json", crc32(read_file(config.out / rel / "manifest.json")));
      const std::vector<EnvVector> features = episode_features(ep);
      out.write("features/" + set.name + "_" + episode_label(i) + ".csv",
                to_text([&](std::ostream& os) { write_features_csv(os, features); }));
    }
  }
  out.finish();
}

void cmd_run(const RunConfig& config) {
  OutputDir out(config, "run");
  const std::vector<EpisodeSet> sets = gather_episodes(config);
  const std::vector<Labeled> episodes = flatten_sets(sets);
  PolicyRun run = run_policy(config.policy, episodes, config.scheduler, false);
  run.summary.policy = policy_label(config.policy);

  std::vector<DecisionTrace> all;
  std::ostringstream traces;
  for (std::size_t i = 0; i < episodes.size(); ++i) {
    const auto& t = run.per_episode[i];
    write_trace_jsonl(traces, t, episodes[i].name);
    std::string flat = episodes[i].name;
    std::replace(flat.begin(), flat.end(), '/', '_');
    out.write("quality/" + flat + ".csv", to_text([&](std::ostream& os) { write_quality_csv(os, t); }));
    all.insert(all.end(), t.begin(), t.end());
  }
  out.write("traces.jsonl", traces.str());
  out.write("fps.json", fps_report_json(make_fps_report(all, run.summary.base_fps)));
  const std::vector<QualitySummary> summaries = {run.summary};
  out.write("report.csv", to_text([&](std::ostream& os) { write_report_csv(os, summaries); }));
  out.write("report.json", report_json(summaries));
  out.finish();
}

void cmd_train(const RunConfig& config) {
  OutputDir out(config, "train");
  const std::vector<EpisodeSet> sets = gather_episodes(config);
  std::vector<const Episode*> pool;
  for (const EpisodeSet& s : sets)
    for (const Episode& e : s.episodes) pool.push_back(&e);
  const TrainingResult result = train_policy(pool, config.train, config.scheduler);
  out.write("checkpoint.exwq", encode_checkpoint(result.net));
  out.write("train_log.csv",
            to_text([&](std::ostream& os) { write_train_log_csv(os, result.log); }));
  out.finish();
}

void cmd_evaluate(const RunConfig& config) {
  OutputDir out(config, "evaluate");
  const std::vector<EpisodeSet> sets = gather_episodes(config);
  const CrossValidation cv = cross_validate(sets, config.train, config.scheduler);
  out.write("loocv.csv", to_text([&](std::ostream& os) { write_cross_validation_csv(os, cv); }));
  out.finish();
}

void cmd_compare(const RunConfig& config) {
  OutputDir out(config, "compare");
  std::vector<std::string> policies = config.compare_policies;
  auto add = [&](const std::string& p) {
    if (std::find(policies.begin(), policies.end(), p) == policies.end()) policies.push_back(p);
  };
  if (config.policy.rfind("trained:", 0) == 0) add(config.policy);
  if (config.train_checkpoint) add("trained:" + config.train_checkpoint->string());

  const std::vector<EpisodeSet> sets = gather_episodes(config);
  const std::vector<Labeled> episodes = flatten_sets(sets);
  std::vector<QualitySummary> summaries;
  for (const std::string& p : policies) {
    PolicyRun run = run_policy(p, episodes, config.scheduler, false);
    run.summary.policy = policy_label(p);
    summaries.push_back(std::move(run.summary));
  }
  out.write("compare.csv", to_text([&](std::ostream& os) { write_report_csv(os, summaries); }));
  out.write("compare.json", report_json(summaries));
  out.finish();
}

}  // namespace exwarp
