// longdance: dataset synthesis, training, generation, evaluation and export.

#include <fmt/format.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>

#include "CLI11.hpp"
#include "json.hpp"
#include "longdance/config.hpp"
#include "longdance/dataset.hpp"
#include "longdance/error.hpp"
#include "longdance/export.hpp"
#include "longdance/io.hpp"
#include "longdance/longgen.hpp"
#include "longdance/metrics.hpp"
#include "longdance/model.hpp"
#include "longdance/training.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace longdance;

namespace {

struct Common {
  std::string config;
  std::optional<uint64_t> seed;
  std::string out;
  bool large = false;
};

void add_common(CLI::App* cmd, Common& c, bool with_config = true) {
  if (with_config) {
    cmd->add_option("--config", c.config, "JSON run config");
    cmd->add_flag("--paper-config", c.large, "start from the large-scale preset");
  }
  cmd->add_option("--seed", c.seed, "random seed");
  cmd->add_option("--out", c.out, "output directory");
}

RunConfig resolve_config(const Common& c) {
  RunConfig cfg = c.large ? RunConfig::large() : RunConfig{};
  if (!c.config.empty()) cfg = load_config(c.config, cfg);
  if (c.seed) cfg.seed = *c.seed;
  if (!c.out.empty()) cfg.out = c.out;
  cfg.validate();
  return cfg;
}

void echo(const fs::path& path, const json& j) {
  fs::create_directories(path.parent_path());
  write_file_atomic(path, j.dump(2) + "\n");
}

std::string sequence_name(const fs::path& p) {
  std::string s = p.filename().string();
  for (const char* suffix : {".music.json", ".motion.json", ".json"}) {
    const std::string suf(suffix);
    if (s.size() > suf.size() && s.compare(s.size() - suf.size(), suf.size(), suf) == 0) {
      return s.substr(0, s.size() - suf.size());
    }
  }
  return p.stem().string();
}

// ---- synth-data

struct SynthArgs {
  Common common;
  SynthDataOptions opts;
};

void run_synth(const SynthArgs& a) {
  SynthDataOptions o = a.opts;
  if (a.common.seed) o.seed = *a.common.seed;
  const fs::path out = a.common.out.empty() ? "data" : a.common.out;
  const auto m = synth_dataset(out, o);
  fmt::print("wrote {} sequences ({} test) to {}\n", m.entries.size(), m.split("test").size(), out.string());
}

// ---- train

struct TrainArgs {
  Common common;
  std::string manifest;
};

void run_train(const TrainArgs& a) {
  RunConfig cfg = resolve_config(a.common);
  if (!a.manifest.empty()) cfg.data.manifest = a.manifest;
  if (cfg.data.manifest.empty()) throw ConfigError("no dataset: pass --manifest or set data.manifest");
  const auto manifest = read_manifest(cfg.data.manifest);
  manifest.validate(true);
  const Skeleton skel = load_skeleton(manifest);
  std::vector<TrainingPair> pairs;
  for (auto& e : load_split(manifest, "train")) pairs.push_back(std::move(e.pair));
  if (pairs.empty()) throw InvalidArgument("the manifest has no training sequences");

  auto model = DanceModel::create(cfg, skel, pairs.front().music.dim());
  const int every = std::max(1, cfg.training.steps / 20);
  const auto result =
      train(model, pairs, {.out_dir = cfg.out, .on_step = [&](const LossRecord& r) {
                             if (r.step % every == 0 || r.step == cfg.training.steps) {
                               fmt::print("step {:>6}  recon {:.4f}  total {:.4f}\n", r.step, r.recon, r.total);
                               std::fflush(stdout);
                             }
                           }});
  fmt::print("checkpoint: {}\n", result.final_checkpoint.string());
}

// ---- generate

struct GenerateArgs {
  Common common;
  std::string checkpoint, music, seed_motion;
  double length_s = 20.0;
};

void run_generate(const GenerateArgs& a) {
  auto loaded = load_checkpoint(a.checkpoint);
  const DanceModel& model = loaded.model;
  const auto music = ingest_features(a.music);
  MotionSequence seed = read_motion(a.seed_motion);
  const int past = static_cast<int>(model.config.windows.past);
  if (seed.num_frames() < past) {
    throw ShapeError(fmt::format("seed motion has {} frames, {} are needed", seed.num_frames(), past));
  }
  seed.frames = seed.frames.topRows(past).eval();
  if (!(a.length_s > 0)) throw InvalidArgument("--length-s must be positive");

  GenerationRequest req;
  req.music = music;
  req.seed_motion = seed;
  req.target_frames = std::llround(a.length_s * seed.fps);
  req.seed = a.common.seed.value_or(0);
  const auto motion = generate_long(model, req);

  const fs::path out = a.common.out.empty() ? "generated" : a.common.out;
  const std::string name = sequence_name(a.music);
  const fs::path file = out / (name + ".motion.json");
  fs::create_directories(out);
  write_motion(file, motion);
  echo(out / (name + ".generate.json"), {{"checkpoint", a.checkpoint},
                                         {"music", a.music},
                                         {"seed_motion", a.seed_motion},
                                         {"length_s", a.length_s},
                                         {"seed", req.seed},
                                         {"target_frames", req.target_frames},
                                         {"model_config", model.config.to_json()}});
  fmt::print("wrote {} ({} frames)\n", file.string(), motion.num_frames());
}

// ---- evaluate

struct EvaluateArgs {
  Common common;
  std::string manifest, generated;
};

void run_evaluate(const EvaluateArgs& a) {
  const RunConfig cfg = resolve_config(a.common);
  const std::string manifest_path = a.manifest.empty() ? cfg.data.manifest : a.manifest;
  if (manifest_path.empty()) throw ConfigError("no reference set: pass --manifest or set data.manifest");
  const auto manifest = read_manifest(manifest_path);
  const Skeleton skel = load_skeleton(manifest);
  const auto test = load_split(manifest, "test");

  std::map<std::string, std::optional<BeatGrid>> beats_by_name;
  for (const auto& e : test) beats_by_name[e.pair.name] = e.beats;
  for (const auto& e : manifest.entries) {
    if (!beats_by_name.count(e.name)) beats_by_name[e.name] = read_beats(manifest.root / e.music);
  }

  std::vector<std::string> names;
  std::vector<MotionSequence> gen;
  std::vector<std::optional<BeatGrid>> gen_beats;
  if (!a.generated.empty()) {
    std::vector<fs::path> files;
    for (const auto& f : fs::directory_iterator(a.generated)) {
      const auto n = f.path().filename().string();
      if (n.size() > 12 && n.ends_with(".motion.json")) files.push_back(f.path());
    }
    std::sort(files.begin(), files.end());
    if (files.empty()) throw InvalidArgument(fmt::format("no *.motion.json files in '{}'", a.generated));
    for (const auto& f : files) {
      names.push_back(sequence_name(f));
      gen.push_back(read_motion(f));
      const auto it = beats_by_name.find(names.back());
      gen_beats.push_back(it == beats_by_name.end() ? std::nullopt : it->second);
    }
  } else {
    // held-out ground truth scored against the training split
    for (const auto& e : test) {
      names.push_back(e.pair.name);
      gen.push_back(e.pair.motion);
      gen_beats.push_back(e.beats);
    }
  }
  std::vector<EvalItem> items;
  for (size_t i = 0; i < gen.size(); ++i) {
    items.push_back({names[i], &gen[i], gen_beats[i] ? &*gen_beats[i] : nullptr});
  }

  std::vector<MotionSequence> ref_store;
  if (!a.generated.empty()) {
    for (const auto& e : test) ref_store.push_back(e.pair.motion);
  } else {
    for (auto& e : load_split(manifest, "train")) ref_store.push_back(std::move(e.pair.motion));
  }
  std::vector<const MotionSequence*> refs;
  for (const auto& r : ref_store) refs.push_back(&r);

  const auto report = evaluate(skel, items, refs, cfg.metrics.freezing, cfg.metrics.beat);
  json j = report.to_json();
  j["run_config"] = cfg.to_json();
  j["manifest"] = manifest_path;
  j["generated"] = a.generated;
  const fs::path out = a.common.out.empty() ? "eval" : a.common.out;
  echo(out / "metrics.json", j);
  fmt::print("FID_k {:.4f}  FID_g {:.4f}  Dist_k {:.4f}  Dist_g {:.4f}  BeatAlign {:.4f}  freezing {:.4f}\n",
             report.fid_k, report.fid_g, report.dist_k, report.dist_g, report.beat_align, report.freezing_rate);
  for (const auto& w : report.warnings) fmt::print(stderr, "warning: {}\n", w);
}

// ---- export

struct ExportArgs {
  Common common;
  std::string motion, format = "positions-csv", skeleton;
};

void run_export(const ExportArgs& a) {
  const auto seq = read_motion(a.motion);
  const Skeleton skel = a.skeleton.empty() ? Skeleton::smpl24() : read_skeleton(a.skeleton);
  if (FrameLayout::for_skeleton(skel) != seq.layout) {
    throw ShapeError("motion layout does not match the skeleton; pass --skeleton");
  }
  const fs::path out = a.common.out.empty() ? "export" : a.common.out;
  const std::string name = sequence_name(a.motion);
  if (a.format == "positions-csv") {
    fs::create_directories(out);
    export_positions_csv(out / (name + ".positions.csv"), skel, seq);
  } else {
    export_preview_svg(out / (name + "_svg"), skel, seq);
  }
  echo(out / (name + ".export.json"), {{"motion", a.motion}, {"format", a.format}, {"skeleton", a.skeleton}});
  fmt::print("exported {} frames as {} into {}\n", seq.num_frames(), a.format, out.string());
}

// ---- calibrate-freezing

struct CalibrateArgs {
  Common common;
  std::string manifest;
  double target = 0.187;
  int chunk = 60;
};

void run_calibrate(const CalibrateArgs& a) {
  std::vector<MotionSequence> ref;
  std::string source;
  if (!a.manifest.empty()) {
    const auto m = read_manifest(a.manifest);
    for (const std::string split : {"train", "test"}) {
      for (auto& e : load_split(m, split)) ref.push_back(std::move(e.pair.motion));
    }
    source = a.manifest;
  } else {
    ref = calibration_fixture(Skeleton::smpl24(), a.common.seed.value_or(0));
    source = "built-in mixed fixture";
  }
  const auto r = calibrate_freezing(ref, a.target, a.chunk);
  const fs::path out = a.common.out.empty() ? "calibration" : a.common.out;
  echo(out / "freezing_thresholds.json", {{"tau_pose", r.thresholds.tau_pose},
                                          {"tau_trans", r.thresholds.tau_trans},
                                          {"freezing_chunk", r.thresholds.chunk},
                                          {"target_rate", a.target},
                                          {"achieved_rate", r.achieved_rate},
                                          {"median_scale", r.scale},
                                          {"reference", source},
                                          {"seed", a.common.seed.value_or(0)}});
  fmt::print("tau_pose {:.9g}  tau_trans {:.9g}  achieved {:.4f} (target {:.4f})\n", r.thresholds.tau_pose,
             r.thresholds.tau_trans, r.achieved_rate, a.target);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Music-conditioned long-term dance generation"};
  app.require_subcommand(1);

  SynthArgs synth;
  auto* c_synth = app.add_subcommand("synth-data", "write a procedural paired music/dance dataset");
  add_common(c_synth, synth.common, false);
  c_synth->add_option("--sequences", synth.opts.sequences, "number of sequences")->capture_default_str();
  c_synth->add_option("--genres", synth.opts.genres, "number of genres")->capture_default_str();
  c_synth->add_option("--duration-s", synth.opts.duration_s, "seconds per sequence")->capture_default_str();
  c_synth->add_option("--test-fraction", synth.opts.test_fraction, "held-out share")->capture_default_str();

  TrainArgs tr;
  auto* c_train = app.add_subcommand("train", "train a model on a dataset manifest");
  add_common(c_train, tr.common);
  c_train->add_option("--manifest", tr.manifest, "dataset manifest (overrides data.manifest)");

  GenerateArgs ge;
  auto* c_gen = app.add_subcommand("generate", "generate a long dance for a music track");
  add_common(c_gen, ge.common, false);
  c_gen->add_option("--checkpoint", ge.checkpoint, "trained model")->required();
  c_gen->add_option("--music", ge.music, "music feature file")->required();
  c_gen->add_option("--seed-motion", ge.seed_motion, "motion file; its first past-window frames seed generation")
      ->required();
  c_gen->add_option("--length-s", ge.length_s, "output length in seconds")->capture_default_str();

  EvaluateArgs ev;
  auto* c_eval = app.add_subcommand("evaluate", "score generated motion against held-out data");
  add_common(c_eval, ev.common);
  c_eval->add_option("--manifest", ev.manifest, "dataset manifest");
  c_eval->add_option("--generated", ev.generated, "directory of generated *.motion.json files");

  ExportArgs ex;
  auto* c_exp = app.add_subcommand("export", "joint positions as CSV or per-frame SVG previews");
  add_common(c_exp, ex.common, false);
  c_exp->add_option("motion", ex.motion, "motion file")->required();
  c_exp->add_option("--format", ex.format, "output format")
      ->check(CLI::IsMember({"positions-csv", "preview-svg"}))
      ->capture_default_str();
  c_exp->add_option("--skeleton", ex.skeleton, "skeleton file (default: bundled SMPL-24)");

  CalibrateArgs ca;
  auto* c_cal = app.add_subcommand("calibrate-freezing", "fit freezing thresholds to a target rate");
  add_common(c_cal, ca.common, false);
  c_cal->add_option("--manifest", ca.manifest, "reference dataset (default: built-in mixed fixture)");
  c_cal->add_option("--target", ca.target, "target freezing rate")->capture_default_str();
  c_cal->add_option("--chunk", ca.chunk, "chunk length in frames")->capture_default_str();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*c_synth) run_synth(synth);
    if (*c_train) run_train(tr);
    if (*c_gen) run_generate(ge);
    if (*c_eval) run_evaluate(ev);
    if (*c_exp) run_export(ex);
    if (*c_cal) run_calibrate(ca);
  } catch (const Error& e) {
    fmt::print(stderr, "{}: {}\n", e.kind(), e.what());
    return 2;
  } catch (const c10::Error& e) {
    fmt::print(stderr, "torch-error: {}\n", e.what_without_backtrace());
    return 3;
  } catch (const std::exception& e) {
    fmt::print(stderr, "error: {}\n", e.what());
    return 1;
  }
  return 0;
}
