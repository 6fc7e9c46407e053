#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <memory>

#include "exwarp/commands.hpp"
#include "exwarp/dataset.hpp"
#include "exwarp/errors.hpp"
#include "exwarp/extrapolate.hpp"
#include "exwarp/families.hpp"
#include "exwarp/features.hpp"
#include "exwarp/metrics.hpp"
#include "exwarp/report.hpp"
#include "exwarp/training.hpp"
#include "exwarp/warp.hpp"

namespace py = pybind11;
using namespace exwarp;

namespace {

using ByteArray = py::array_t<std::uint8_t, py::array::c_style | py::array::forcecast>;

ByteArray to_array(const Frame& f) {
  ByteArray a({f.height(), f.width(), 3});
  const auto src = f.bytes();
  std::copy(src.begin(), src.end(), a.mutable_data());
  return a;
}

ByteArray mask_array(const Grid<std::uint8_t>& g) {
  ByteArray a({g.height(), g.width()});
  std::copy(g.cells().begin(), g.cells().end(), a.mutable_data());
  return a;
}

Frame to_frame(const ByteArray& a) {
  if (a.ndim() != 3 || a.shape(2) != 3) throw DimensionError("expected an (height, width, 3) uint8 array");
  Frame f(static_cast<int>(a.shape(1)), static_cast<int>(a.shape(0)));
  std::copy(a.data(), a.data() + a.size(), f.bytes().begin());
  return f;
}

Surface surface_at(const Episode& ep, int k) {
  if (k < 0 || k >= ep.base_frame_count()) throw py::index_error("base frame out of range");
  return Surface::from_rendered(ep.base_frame(k), ep.gbuffers[static_cast<std::size_t>(k)]);
}

py::dict summary_dict(const QualitySummary& s, const FpsReport& fps) {
  py::dict d;
  d["policy"] = s.policy;
  d["intervals"] = s.all.intervals;
  d["mean_psnr"] = s.all.mean_psnr();
  d["mean_ssim"] = s.all.mean_ssim();
  d["slot_psnr"] = std::vector<double>{s.all.mean_psnr_at(0), s.all.mean_psnr_at(1), s.all.mean_psnr_at(2)};
  d["warp_ratio"] = s.all.warp_ratio();
  d["effective_fps"] = fps.effective_fps();
  d["downgraded"] = fps.downgraded;
  d["discarded_extrapolations"] = fps.discarded_extrapolations;
  py::dict counts;
  for (int k = 0; k < kScenarioCount; ++k)
    counts[py::str(to_string(static_cast<Scenario>(k)))] = fps.scenario_counts[static_cast<std::size_t>(k)];
  d["scenario_counts"] = counts;
  return d;
}

// Holds the network a QNetworkPolicy points at.
struct CheckpointPolicy final : Policy {
  explicit CheckpointPolicy(QNetwork n) : net(std::move(n)), inner(net, "trained") {}
  Action choose(const NodeView& v) override { return inner.choose(v); }
  std::string name() const override { return "trained"; }
  QNetwork net;
  QNetworkPolicy inner;
};

}  // namespace

PYBIND11_MODULE(_exwarp, m) {
  m.doc() = "Warp/extrapolate frame scheduling: scene generation, metrics, policies and training.";

  auto base = py::register_exception<Error>(m, "ExwarpError", PyExc_RuntimeError);
  py::register_exception<ValidationError>(m, "ValidationError", base.ptr());
  py::register_exception<DimensionError>(m, "DimensionError", base.ptr());
  py::register_exception<FormatError>(m, "FormatError", base.ptr());
  py::register_exception<SchedulerError>(m, "SchedulerError", base.ptr());

  py::class_<Episode, std::shared_ptr<Episode>>(m, "Episode")
      .def_readonly("width", &Episode::width)
      .def_readonly("height", &Episode::height)
      .def_readonly("base_fps", &Episode::base_fps)
      .def_property_readonly("base_frame_count", &Episode::base_frame_count)
      .def_property_readonly("quarter_frame_count", [](const Episode& e) { return e.frames.size(); })
      .def("base_frame", [](const Episode& e, int k) { return to_array(e.base_frame(k)); }, py::arg("k"))
      .def("quarter_frame", [](const Episode& e, std::int64_t q) { return to_array(e.quarter_frame(q)); },
           py::arg("q"))
      .def(
          "warp",
          [](const Episode& e, int k, int steps) {
            const WarpedFrame w = warp_surface(surface_at(e, k), steps);
            py::dict d;
            d["pixels"] = to_array(w.pixels);
            d["hole_mask"] = mask_array(w.hole_mask);
            d["hole_fraction"] = w.hole_fraction;
            return d;
          },
          py::arg("k"), py::arg("steps"), "Forward-warps base frame k by `steps` quarter-slots.")
      .def(
          "extrapolate",
          [](const Episode& e, int k, int steps) {
            if (k < 2) throw py::index_error("extrapolation needs base frames k-2 .. k");
            const std::vector<Surface> history = {surface_at(e, k - 2), surface_at(e, k - 1), surface_at(e, k)};
            const double ms = total_latency(LatencyModel::defaults(), classify_resolution(e.width, e.height));
            const ExtrapolatedFrame x = extrapolate_frame(history, steps, latency_slots(ms, e.base_fps));
            py::dict d;
            d["pixels"] = to_array(x.pixels);
            d["history_filled"] = x.history_filled;
            d["diffused"] = x.diffused;
            d["available_at"] = x.available_at;
            return d;
          },
          py::arg("k"), py::arg("steps"), "Extrapolates from base frames k-2, k-1, k at the latency of the episode's resolution.")
      .def("features", [](const Episode& e) {
        std::vector<py::dict> rows;
        for (const EnvVector& v : episode_features(e)) {
          py::dict d;
          d["n_d"] = v.n_d;
          d["emd_wn"] = v.emd_wn;
          d["emd_wp"] = v.emd_wp;
          d["var_x"] = v.var_x;
          d["var_y"] = v.var_y;
          d["r"] = v.r;
          rows.push_back(std::move(d));
        }
        return rows;
      });

  m.def("families", [] {
    std::vector<std::string> names;
    for (SceneFamily f : all_families()) names.push_back(to_string(f));
    return names;
  });

  m.def(
      "render_family",
      [](const std::string& family, std::uint64_t seed, int episodes, int episode_len, int width, int height) {
        FamilyOptions o;
        o.episodes = episodes;
        o.episode_len = episode_len;
        o.width = width;
        o.height = height;
        std::vector<std::shared_ptr<Episode>> out;
        for (const SceneSpec& s : family_specs(parse_family(family), o, seed))
          out.push_back(std::make_shared<Episode>(render_episode(s)));
        return out;
      },
      py::arg("family"), py::arg("seed") = 1, py::arg("episodes") = 4, py::arg("episode_len") = 16,
      py::arg("width") = 64, py::arg("height") = 64);

  m.def(
      "speed_sweep_episode",
      [](double speed, std::uint64_t seed) {
        return std::make_shared<Episode>(render_episode(speed_sweep_spec(speed, FamilyOptions{}, seed)));
      },
      py::arg("speed"), py::arg("seed") = 1);

  m.def("load_dataset", [](const std::filesystem::path& p) { return std::make_shared<Episode>(load_dataset(p)); });
  m.def("save_dataset", [](const std::filesystem::path& p, const Episode& e) { save_dataset(p, e); });

  m.def("psnr", [](const ByteArray& a, const ByteArray& b) { return psnr(to_frame(a), to_frame(b)); });
  m.def("ssim", [](const ByteArray& a, const ByteArray& b) { return ssim(to_frame(a), to_frame(b)); });

  m.def(
      "total_latency_ms",
      [](const std::string& resolution) {
        return total_latency(LatencyModel::defaults(), parse_resolution_class(resolution));
      },
      py::arg("resolution"));
  m.def("latency_slots", &latency_slots, py::arg("latency_ms"), py::arg("base_fps") = 30.0);

  m.def(
      "run_episode",
      [](const Episode& e, const std::string& policy, std::optional<py::bytes> checkpoint,
         std::optional<std::string> resolution) {
        std::unique_ptr<Policy> p;
        if (checkpoint) {
          const std::string raw = *checkpoint;
          p = std::make_unique<CheckpointPolicy>(
              decode_checkpoint(std::span(reinterpret_cast<const std::uint8_t*>(raw.data()), raw.size())));
        } else {
          p = make_policy(policy);
        }
        SchedulerConfig c;
        c.keep_frames = false;
        if (resolution) c.resolution = parse_resolution_class(*resolution);
        EpisodeResult r;
        {
          py::gil_scoped_release release;
          r = run_episode(e, *p, c);
        }
        return summary_dict(aggregate_report(r.traces, p->name(), e.base_fps), r.fps);
      },
      py::arg("episode"), py::arg("policy") = "S6", py::arg("checkpoint") = py::none(),
      py::arg("resolution") = py::none(),
      "Runs one policy (S1..S6, oracle) or a checkpoint over an episode and summarises it.");

  m.def(
      "train",
      [](const std::vector<std::shared_ptr<Episode>>& episodes, const std::string& config_json) {
        const RunConfig config = parse_config(config_json);
        std::vector<const Episode*> pool;
        for (const auto& e : episodes) pool.push_back(e.get());
        std::vector<std::uint8_t> bytes;
        {
          py::gil_scoped_release release;
          bytes = encode_checkpoint(train_policy(pool, config.train, config.scheduler).net);
        }
        return py::bytes(reinterpret_cast<const char*>(bytes.data()), bytes.size());
      },
      py::arg("episodes"), py::arg("config_json") = "{}",
      "Trains a Q-network policy; returns the checkpoint bytes.");

  m.def(
      "run_command",
      [](const std::string& command, std::optional<std::filesystem::path> config, std::optional<std::uint64_t> seed,
         std::optional<std::filesystem::path> out, std::optional<std::string> policy) {
        CommandOptions o{config, seed, out, policy};
        const RunConfig c = resolve_config(o);
        py::gil_scoped_release release;
        if (command == "generate") cmd_generate(c);
        else if (command == "run") cmd_run(c);
        else if (command == "train") cmd_train(c);
        else if (command == "evaluate") cmd_evaluate(c);
        else if (command == "compare") cmd_compare(c);
        else throw ValidationError({"command: unknown command '" + command + "'"});
      },
      py::arg("command"), py::arg("config") = py::none(), py::arg("seed") = py::none(), py::arg("out") = py::none(),
      py::arg("policy") = py::none());

  m.def("config_hash", [](const std::string& json) { return config_hash(parse_config(json)); });
}
