// Python bindings: numpy in, numpy out. Files use the same formats as the CLI.

#include <pybind11/eigen.h>
#include <pybind11/functional.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <cmath>

#include "json.hpp"
#include "longdance/config.hpp"
#include "longdance/dataset.hpp"
#include "longdance/diffusion.hpp"
#include "longdance/error.hpp"
#include "longdance/io.hpp"
#include "longdance/longgen.hpp"
#include "longdance/metrics.hpp"
#include "longdance/model.hpp"
#include "longdance/training.hpp"

namespace py = pybind11;
namespace fs = std::filesystem;
using namespace longdance;
using nlohmann::json;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

torch::Tensor as_tensor(const Array& a) {
  std::vector<int64_t> shape(a.shape(), a.shape() + a.ndim());
  return torch::from_blob(const_cast<double*>(a.data()), shape, torch::kFloat64).clone();
}

Array as_array(const torch::Tensor& t) {
  const auto c = t.to(torch::kFloat64).contiguous();
  std::vector<py::ssize_t> shape(c.sizes().begin(), c.sizes().end());
  Array out(shape);
  std::memcpy(out.mutable_data(), c.data_ptr<double>(), sizeof(double) * c.numel());
  return out;
}

Skeleton resolve_skeleton(const std::string& s) {
  if (s == "smpl24") return Skeleton::smpl24();
  if (s == "toy5") return Skeleton::toy5();
  return read_skeleton(s);
}

Array positions_array(const JointTrack& track) {
  Array out({static_cast<py::ssize_t>(track.num_frames()), static_cast<py::ssize_t>(track.num_joints), py::ssize_t{3}});
  auto v = out.mutable_unchecked<3>();
  for (int f = 0; f < track.num_frames(); ++f) {
    for (int j = 0; j < track.num_joints; ++j) {
      for (int k = 0; k < 3; ++k) v(f, j, k) = track.at(f, j)[k];
    }
  }
  return out;
}

JointTrack track_from(const Array& positions, double fps) {
  if (positions.ndim() != 3 || positions.shape(2) != 3) throw ShapeError("positions must be [frames, joints, 3]");
  JointTrack t{fps, static_cast<int>(positions.shape(1)), {}};
  const auto v = positions.unchecked<3>();
  for (py::ssize_t f = 0; f < positions.shape(0); ++f) {
    for (py::ssize_t j = 0; j < positions.shape(1); ++j) t.xyz.emplace_back(v(f, j, 0), v(f, j, 1), v(f, j, 2));
  }
  return t;
}

py::dict loss_dict(const LossRecord& r) {
  py::dict d;
  d["step"] = r.step;
  d["t"] = r.t;
  d["recon"] = r.recon;
  d["mi"] = r.mi;
  d["pos"] = r.pos;
  d["vel"] = r.vel;
  d["contact"] = r.contact;
  d["total"] = r.total;
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Music-conditioned long-term dance generation";

  auto base = py::register_exception<Error>(m, "LongdanceError", PyExc_RuntimeError);
  py::register_exception<ParseError>(m, "ParseError", base.ptr());
  py::register_exception<ConfigError>(m, "ConfigError", base.ptr());
  py::register_exception<ShapeError>(m, "ShapeError", base.ptr());
  py::register_exception<InvalidArgument>(m, "InvalidArgument", base.ptr());
  py::register_exception<TrainingDivergedError>(m, "TrainingDivergedError", base.ptr());

  m.def(
      "noise_schedule",
      [](int T, const std::string& kind) {
        const auto s = make_schedule(T, parse_schedule_kind(kind));
        return py::make_tuple(s.alpha, s.alpha_bar);
      },
      py::arg("steps") = 50, py::arg("kind") = "cosine", "Returns (alpha, alpha_bar), index 0 is the clean step.");

  m.def(
      "q_sample",
      [](const Array& x0, int t, const Array& noise, int T, const std::string& kind) {
        return as_array(q_sample(as_tensor(x0), t, as_tensor(noise), make_schedule(T, parse_schedule_kind(kind))));
      },
      py::arg("x0"), py::arg("t"), py::arg("noise"), py::arg("steps") = 50, py::arg("kind") = "cosine");

  m.def(
      "synth_dataset",
      [](const fs::path& out, int sequences, int genres, uint64_t seed, double duration_s, double test_fraction) {
        const auto man = synth_dataset(out, {.sequences = sequences,
                                             .genres = genres,
                                             .seed = seed,
                                             .duration_s = duration_s,
                                             .test_fraction = test_fraction});
        py::list entries;
        for (const auto& e : man.entries) {
          py::dict d;
          d["name"] = e.name;
          d["motion"] = (man.root / e.motion).string();
          d["music"] = (man.root / e.music).string();
          d["split"] = e.split;
          d["genre"] = e.genre;
          entries.append(d);
        }
        return entries;
      },
      py::arg("out"), py::arg("sequences") = 64, py::arg("genres") = 2, py::arg("seed") = 0,
      py::arg("duration_s") = 20.0, py::arg("test_fraction") = 0.05);

  m.def(
      "read_motion",
      [](const fs::path& path) {
        const auto seq = read_motion(path);
        return py::make_tuple(Eigen::MatrixXd(seq.frames.cast<double>()), seq.fps);
      },
      py::arg("path"), "Returns (frames [T, D], fps).");

  m.def(
      "joint_positions",
      [](const fs::path& motion, const std::string& skeleton) {
        return positions_array(fk_track(resolve_skeleton(skeleton), read_motion(motion)));
      },
      py::arg("motion"), py::arg("skeleton") = "smpl24", "World joint positions [T, J, 3] of a motion file.");

  m.def(
      "read_beats",
      [](const fs::path& music) -> std::optional<std::vector<int>> {
        const auto b = read_beats(music);
        if (!b) return std::nullopt;
        return b->beat_frames;
      },
      py::arg("music"));

  m.def(
      "beat_align",
      [](const Array& positions, std::vector<int> beat_frames, double fps, double sigma) {
        BeatGrid g;
        g.beat_frames = std::move(beat_frames);
        return beat_align(track_from(positions, fps), g, {.sigma = sigma}).score;
      },
      py::arg("positions"), py::arg("beat_frames"), py::arg("fps") = 60.0, py::arg("sigma") = 3.0);

  m.def(
      "kinematic_features",
      [](const Array& positions, double fps) { return kinematic_features(track_from(positions, fps)).values; },
      py::arg("positions"), py::arg("fps") = 60.0);

  m.def(
      "freezing_rate",
      [](const fs::path& motion, std::optional<double> tau_pose, std::optional<double> tau_trans, int chunk) {
        FreezingThresholds th = default_freezing_thresholds();
        if (tau_pose) th.tau_pose = *tau_pose;
        if (tau_trans) th.tau_trans = *tau_trans;
        th.chunk = chunk;
        return freezing_rate(read_motion(motion), th);
      },
      py::arg("motion"), py::arg("tau_pose") = py::none(), py::arg("tau_trans") = py::none(), py::arg("chunk") = 60);

  m.def("frechet_distance", py::overload_cast<const Eigen::MatrixXd&, const Eigen::MatrixXd&>(&frechet_distance),
        py::arg("a"), py::arg("b"), "Frechet distance between the Gaussians fitted to two [N, D] sets.");
  m.def("diversity", py::overload_cast<const Eigen::MatrixXd&>(&diversity), py::arg("features"));

  m.def(
      "default_config", [](bool large) { return (large ? RunConfig::large() : RunConfig{}).to_json().dump(); },
      py::arg("large") = false, "Run config as a JSON string.");

  m.def(
      "train",
      [](const std::string& config_json, const fs::path& out, const std::function<void(py::dict)>& on_step) {
        const RunConfig cfg = RunConfig::merge({}, json::parse(config_json));
        cfg.validate();
        if (cfg.data.manifest.empty()) throw ConfigError("data.manifest is required");
        const auto manifest = read_manifest(cfg.data.manifest);
        manifest.validate(true);
        std::vector<TrainingPair> pairs;
        for (auto& e : load_split(manifest, "train")) pairs.push_back(std::move(e.pair));
        if (pairs.empty()) throw InvalidArgument("the manifest has no training sequences");
        auto model = DanceModel::create(cfg, load_skeleton(manifest), pairs.front().music.dim());
        TrainOptions opts{.out_dir = out};
        if (on_step) {
          opts.on_step = [&](const LossRecord& r) {
            py::gil_scoped_acquire gil;
            on_step(loss_dict(r));
          };
        }
        TrainResult result;
        {
          py::gil_scoped_release nogil;
          result = train(model, pairs, opts);
        }
        py::list log;
        for (const auto& r : result.log) log.append(loss_dict(r));
        return log;
      },
      py::arg("config_json"), py::arg("out"), py::arg("on_step") = nullptr,
      "Trains on the manifest's train split; writes loss_log.csv and model.pt under out.");

  m.def(
      "generate",
      [](const fs::path& checkpoint, const fs::path& music, const fs::path& seed_motion, double length_s, uint64_t seed,
         std::optional<fs::path> out) {
        MotionSequence result;
        {
          py::gil_scoped_release nogil;
          const auto loaded = load_checkpoint(checkpoint);
          MotionSequence past = read_motion(seed_motion);
          const int need = static_cast<int>(loaded.model.config.windows.past);
          if (past.num_frames() < need) throw ShapeError("seed motion is shorter than the past window");
          past.frames = past.frames.topRows(need).eval();
          if (!(length_s > 0)) throw InvalidArgument("length_s must be positive");
          GenerationRequest req;
          req.music = ingest_features(music);
          req.seed_motion = past;
          req.target_frames = std::llround(length_s * past.fps);
          req.seed = seed;
          result = generate_long(loaded.model, req);
          if (out) {
            fs::create_directories(out->parent_path());
            write_motion(*out, result);
          }
        }
        return Eigen::MatrixXd(result.frames.cast<double>());
      },
      py::arg("checkpoint"), py::arg("music"), py::arg("seed_motion"), py::arg("length_s") = 20.0, py::arg("seed") = 0,
      py::arg("out") = py::none(), "Long-term generation; returns frames [T, D].");

  m.def(
      "evaluate",
      [](const std::vector<fs::path>& generated, const std::vector<fs::path>& reference,
         const std::vector<std::optional<fs::path>>& music, const std::string& skeleton) {
        if (!music.empty() && music.size() != generated.size()) {
          throw InvalidArgument("music must be empty or match generated one to one");
        }
        std::vector<MotionSequence> gen, ref;
        std::vector<std::optional<BeatGrid>> beats;
        for (size_t i = 0; i < generated.size(); ++i) {
          gen.push_back(read_motion(generated[i]));
          beats.push_back(music.empty() || !music[i] ? std::nullopt : read_beats(*music[i]));
        }
        for (const auto& r : reference) ref.push_back(read_motion(r));
        std::vector<EvalItem> items;
        for (size_t i = 0; i < gen.size(); ++i) {
          items.push_back({generated[i].filename().string(), &gen[i], beats[i] ? &*beats[i] : nullptr});
        }
        std::vector<const MotionSequence*> refs;
        for (const auto& r : ref) refs.push_back(&r);
        py::gil_scoped_release nogil;
        return evaluate(resolve_skeleton(skeleton), items, refs, default_freezing_thresholds()).to_json().dump();
      },
      py::arg("generated"), py::arg("reference"), py::arg("music") = std::vector<std::optional<fs::path>>{},
      py::arg("skeleton") = "smpl24", "Metrics report as a JSON string.");
}
