#include "exwarp/config.hpp"

#include <cstdio>
#include <functional>
#include <map>
#include <sstream>

#include "exwarp/dataset.hpp"
#include "exwarp/errors.hpp"
#include "json.hpp"

namespace exwarp {

using nlohmann::json;

namespace {

void flatten(const json& node, const std::string& prefix, std::map<std::string, json>& out) {
  if (node.is_object() && !node.empty()) {
    for (const auto& [key, value] : node.items())
      flatten(value, prefix.empty() ? key : prefix + "." + key, out);
  } else {
    out[prefix] = node;
  }
}

using Setter = std::function<void(RunConfig&, const json&)>;

struct Bad : std::runtime_error {
  using std::runtime_error::runtime_error;
};

double number(const json& v) {
  if (!v.is_number()) throw Bad("expected a number");
  return v.get<double>();
}

double positive(const json& v) {
  const double d = number(v);
  if (!(d > 0.0)) throw Bad("must be positive");
  return d;
}

long long integer(const json& v) {
  if (!v.is_number_integer()) throw Bad("expected an integer");
  return v.get<long long>();
}

int positive_int(const json& v) {
  const long long i = integer(v);
  if (i <= 0 || i > 1'000'000'000) throw Bad("must be a positive integer");
  return static_cast<int>(i);
}

std::string text(const json& v) {
  if (!v.is_string()) throw Bad("expected a string");
  return v.get<std::string>();
}

std::vector<std::string> text_list(const json& v) {
  if (!v.is_array()) throw Bad("expected a list of strings");
  std::vector<std::string> out;
  for (const json& item : v) out.push_back(text(item));
  return out;
}

std::map<std::string, Setter> setters() {
  std::map<std::string, Setter> s;
  s["seed"] = [](RunConfig& c, const json& v) {
    if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<long long>() >= 0))
      throw Bad("expected a non-negative integer");
    c.seed = v.get<std::uint64_t>();
  };
  s["out"] = [](RunConfig& c, const json& v) { c.out = text(v); };
  s["policy"] = [](RunConfig& c, const json& v) {
    c.policy = text(v);
    if (!is_valid_policy_name(c.policy)) throw Bad("unknown policy '" + c.policy + "'");
  };
  s["dataset.paths"] = [](RunConfig& c, const json& v) {
    c.dataset_paths.clear();
    for (const std::string& p : text_list(v)) c.dataset_paths.emplace_back(p);
  };
  s["scenes.families"] = [](RunConfig& c, const json& v) {
    c.families.clear();
    for (const std::string& name : text_list(v)) {
      try {
        c.families.push_back(parse_family(name));
      } catch (const Error& e) {
        throw Bad(e.what());
      }
    }
    if (c.families.empty()) throw Bad("needs at least one family");
  };
  s["scenes.width"] = [](RunConfig& c, const json& v) { c.scenes.width = positive_int(v); };
  s["scenes.height"] = [](RunConfig& c, const json& v) { c.scenes.height = positive_int(v); };
  s["scenes.episode_len"] = [](RunConfig& c, const json& v) {
    c.scenes.episode_len = positive_int(v);
    if (c.scenes.episode_len < 4) throw Bad("must be at least 4");
  };
  s["scenes.base_fps"] = [](RunConfig& c, const json& v) { c.scenes.base_fps = positive(v); };
  s["scenes.episodes_per_family"] = [](RunConfig& c, const json& v) {
    c.scenes.episodes = positive_int(v);
  };

  for (ResolutionClass cls : {ResolutionClass::p480, ResolutionClass::p720, ResolutionClass::p1080}) {
    const std::string base = "latency." + to_string(cls) + ".";
    auto stage = [cls](double StageLatency::*field) {
      return [cls, field](RunConfig& c, const json& v) {
        StageLatency st = c.scheduler.latency.at(cls);
        st.*field = positive(v);
        c.scheduler.latency.set(cls, st);
      };
    };
    s[base + "gbuffer_ms"] = stage(&StageLatency::gbuffer_ms);
    s[base + "warp_ms"] = stage(&StageLatency::warp_ms);
    s[base + "hole_mark_ms"] = stage(&StageLatency::hole_mark_ms);
    s[base + "inference_ms"] = stage(&StageLatency::inference_ms);
  }
  s["scheduler.resolution"] = [](RunConfig& c, const json& v) {
    const std::string r = text(v);
    if (r == "auto") {
      c.scheduler.resolution.reset();
      return;
    }
    try {
      c.scheduler.resolution = parse_resolution_class(r);
    } catch (const Error& e) {
      throw Bad(e.what());
    }
  };

  s["reward.psnr_scale"] = [](RunConfig& c, const json& v) { c.scheduler.reward.psnr_scale = positive(v); };
  s["reward.drop_penalty"] = [](RunConfig& c, const json& v) {
    c.scheduler.reward.drop_penalty = number(v);
    if (c.scheduler.reward.drop_penalty > 0.0) throw Bad("must not be positive");
  };
  s["reward.extrapolate_cost"] = [](RunConfig& c, const json& v) {
    c.scheduler.reward.extrapolate_cost = number(v);
    if (c.scheduler.reward.extrapolate_cost < 0.0) throw Bad("must not be negative");
  };

  s["features.scale.n_d"] = [](RunConfig& c, const json& v) { c.scheduler.scales.n_d = positive(v); };
  s["features.scale.emd_wn"] = [](RunConfig& c, const json& v) { c.scheduler.scales.emd_wn = positive(v); };
  s["features.scale.emd_wp"] = [](RunConfig& c, const json& v) {
    c.scheduler.scales.emd_wp = number(v);
    if (c.scheduler.scales.emd_wp < 0.0) throw Bad("must not be negative (0 derives it)");
  };
  s["features.scale.variance"] = [](RunConfig& c, const json& v) { c.scheduler.scales.variance = positive(v); };
  s["features.scale.resolution"] = [](RunConfig& c, const json& v) { c.scheduler.scales.resolution = positive(v); };
  s["features.scale.clamp_max"] = [](RunConfig& c, const json& v) { c.scheduler.scales.clamp_max = positive(v); };

  s["train.gamma"] = [](RunConfig& c, const json& v) { c.train.gamma = number(v); };
  s["train.learning_rate"] = [](RunConfig& c, const json& v) { c.train.learning_rate = number(v); };
  s["train.batch_size"] = [](RunConfig& c, const json& v) { c.train.batch_size = positive_int(v); };
  s["train.replay_capacity"] = [](RunConfig& c, const json& v) { c.train.replay_capacity = static_cast<std::size_t>(positive_int(v)); };
  s["train.target_sync_every"] = [](RunConfig& c, const json& v) { c.train.target_sync_every = positive_int(v); };
  s["train.epsilon_start"] = [](RunConfig& c, const json& v) { c.train.epsilon_start = number(v); };
  s["train.epsilon_end"] = [](RunConfig& c, const json& v) { c.train.epsilon_end = number(v); };
  s["train.epsilon_anneal_fraction"] = [](RunConfig& c, const json& v) { c.train.epsilon_anneal_fraction = number(v); };
  s["train.train_points"] = [](RunConfig& c, const json& v) { c.train.train_points = static_cast<std::size_t>(positive_int(v)); };
  s["train.test_points"] = [](RunConfig& c, const json& v) { c.train.test_points = static_cast<std::size_t>(positive_int(v)); };
  s["train.updates_per_point"] = [](RunConfig& c, const json& v) { c.train.updates_per_point = positive_int(v); };
  s["train.log_every"] = [](RunConfig& c, const json& v) { c.train.log_every = positive_int(v); };
  s["train.checkpoint"] = [](RunConfig& c, const json& v) { c.train_checkpoint = text(v); };

  s["compare.policies"] = [](RunConfig& c, const json& v) {
    c.compare_policies = text_list(v);
    if (c.compare_policies.empty()) throw Bad("needs at least one policy");
    for (const std::string& p : c.compare_policies)
      if (!is_valid_policy_name(p)) throw Bad("unknown policy '" + p + "'");
  };
  return s;
}

}  // namespace

bool is_valid_policy_name(const std::string& name) {
  if (name == "oracle") return true;
  if (name.rfind("trained:", 0) == 0) return name.size() > 8;
  try {
    parse_scenario(name);
    return true;
  } catch (const Error&) {
    return false;
  }
}

RunConfig parse_config(const std::string& json_text) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ValidationError({std::string("config is not valid JSON: ") + e.what()});
  }
  if (!doc.is_object()) throw ValidationError({"config must be a JSON object"});
  std::map<std::string, json> flat;
  if (!doc.empty()) flatten(doc, "", flat);

  const std::map<std::string, Setter> table = setters();
  RunConfig config;
  std::vector<std::string> bad;
  for (const auto& [key, value] : flat) {
    auto it = table.find(key);
    if (it == table.end()) {
      bad.push_back(key + ": unknown key");
      continue;
    }
    try {
      it->second(config, value);
    } catch (const Bad& e) {
      bad.push_back(key + ": " + e.what());
    } catch (const ValidationError& e) {
      bad.push_back(key + ": " + e.what());
    }
  }
  try {
    config.train.validate();
  } catch (const ValidationError& e) {
    for (const std::string& v : e.violations()) bad.push_back(v);
  }
  if (config.scenes.width % kBlockSize != 0)
    bad.push_back("scenes.width: must be a multiple of " + std::to_string(kBlockSize));
  if (config.scenes.height % kBlockSize != 0)
    bad.push_back("scenes.height: must be a multiple of " + std::to_string(kBlockSize));
  if (!bad.empty()) throw ValidationError(std::move(bad));
  return config;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::vector<std::uint8_t> bytes;
  try {
    bytes = read_file(path);
  } catch (const Error& e) {
    throw ValidationError({"--config: cannot read " + path.string() + ": " + e.what()});
  }
  return parse_config(std::string(bytes.begin(), bytes.end()));
}

void validate_paths(const RunConfig& config) {
  namespace fs = std::filesystem;
  std::vector<std::string> bad;
  for (std::size_t i = 0; i < config.dataset_paths.size(); ++i)
    if (!fs::is_directory(config.dataset_paths[i]))
      bad.push_back("dataset.paths[" + std::to_string(i) + "]: no such directory: " +
                    config.dataset_paths[i].string());
  auto check_policy = [&](const std::string& key, const std::string& name) {
    if (name.rfind("trained:", 0) == 0 && !fs::is_regular_file(name.substr(8)))
      bad.push_back(key + ": checkpoint not found: " + name.substr(8));
  };
  check_policy("policy", config.policy);
  for (std::size_t i = 0; i < config.compare_policies.size(); ++i)
    check_policy("compare.policies[" + std::to_string(i) + "]", config.compare_policies[i]);
  if (config.train_checkpoint && !fs::is_regular_file(*config.train_checkpoint))
    bad.push_back("train.checkpoint: checkpoint not found: " + config.train_checkpoint->string());
  if (!bad.empty()) throw ValidationError(std::move(bad));
}

std::string canonical_config(const RunConfig& c) {
  std::map<std::string, std::string> kv;
  auto num = [](double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return std::string(buf);
  };
  auto list = [](const std::vector<std::string>& items) {
    std::string s = "[";
    for (std::size_t i = 0; i < items.size(); ++i) s += (i ? "," : "") + items[i];
    return s + "]";
  };
  kv["seed"] = std::to_string(c.seed);
  kv["policy"] = c.policy;
  std::vector<std::string> paths, fams;
  for (const auto& p : c.dataset_paths) paths.push_back(p.generic_string());
  for (SceneFamily f : c.families) fams.push_back(to_string(f));
  kv["dataset.paths"] = list(paths);
  kv["scenes.families"] = list(fams);
  kv["scenes.width"] = std::to_string(c.scenes.width);
  kv["scenes.height"] = std::to_string(c.scenes.height);
  kv["scenes.episode_len"] = std::to_string(c.scenes.episode_len);
  kv["scenes.base_fps"] = num(c.scenes.base_fps);
  kv["scenes.episodes_per_family"] = std::to_string(c.scenes.episodes);
  for (const auto& [cls, st] : c.scheduler.latency.entries()) {
    const std::string base = "latency." + to_string(cls) + ".";
    kv[base + "gbuffer_ms"] = num(st.gbuffer_ms);
    kv[base + "warp_ms"] = num(st.warp_ms);
    kv[base + "hole_mark_ms"] = num(st.hole_mark_ms);
    kv[base + "inference_ms"] = num(st.inference_ms);
  }
  kv["scheduler.resolution"] = c.scheduler.resolution ? to_string(*c.scheduler.resolution) : "auto";
  kv["reward.psnr_scale"] = num(c.scheduler.reward.psnr_scale);
  kv["reward.drop_penalty"] = num(c.scheduler.reward.drop_penalty);
  kv["reward.extrapolate_cost"] = num(c.scheduler.reward.extrapolate_cost);
  const FeatureScales& f = c.scheduler.scales;
  kv["features.scale.n_d"] = num(f.n_d);
  kv["features.scale.emd_wn"] = num(f.emd_wn);
  kv["features.scale.emd_wp"] = num(f.emd_wp);
  kv["features.scale.variance"] = num(f.variance);
  kv["features.scale.resolution"] = num(f.resolution);
  kv["features.scale.clamp_max"] = num(f.clamp_max);
  const TrainConfig& t = c.train;
  kv["train.gamma"] = num(t.gamma);
  kv["train.learning_rate"] = num(t.learning_rate);
  kv["train.batch_size"] = std::to_string(t.batch_size);
  kv["train.replay_capacity"] = std::to_string(t.replay_capacity);
  kv["train.target_sync_every"] = std::to_string(t.target_sync_every);
  kv["train.epsilon_start"] = num(t.epsilon_start);
  kv["train.epsilon_end"] = num(t.epsilon_end);
  kv["train.epsilon_anneal_fraction"] = num(t.epsilon_anneal_fraction);
  kv["train.train_points"] = std::to_string(t.train_points);
  kv["train.test_points"] = std::to_string(t.test_points);
  kv["train.updates_per_point"] = std::to_string(t.updates_per_point);
  kv["train.log_every"] = std::to_string(t.log_every);
  kv["train.checkpoint"] = c.train_checkpoint ? c.train_checkpoint->generic_string() : "";
  kv["compare.policies"] = list(c.compare_policies);

  std::ostringstream os;
  for (const auto& [k, v] : kv) os << k << " = " << v << "\n";
  return os.str();
}

std::string config_hash(const RunConfig& config) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : canonical_config(config)) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace exwarp
