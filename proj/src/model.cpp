#include "longdance/model.hpp"

#include <fmt/format.h>

#include "longdance/error.hpp"
#include "longdance/io.hpp"

namespace longdance {

namespace fs = std::filesystem;
using torch::serialize::InputArchive;
using torch::serialize::OutputArchive;

DenoiserConfig DanceModel::denoiser_config() const {
  DenoiserConfig d;
  d.model_width = config.model.width;
  d.num_heads = config.model.heads;
  d.num_blocks = config.model.blocks;
  d.ffn_mult = config.model.ffn_mult;
  d.temporal_conv_kernel = config.model.temporal_conv_kernel;
  d.music_window = config.windows.music;
  d.past_window = config.windows.past;
  d.future_window = config.windows.future;
  d.motion_dim = layout.dim();
  d.music_dim = music_dim;
  d.trajectory_offset = layout.root_begin();
  d.max_step = config.diffusion.steps;
  return d;
}

DanceModel DanceModel::create(const RunConfig& config, const Skeleton& skeleton, int64_t music_dim) {
  config.validate();
  skeleton.validate();
  DanceModel m;
  m.config = config;
  m.skeleton = skeleton;
  m.skeleton_tensors = SkeletonTensors::from(skeleton);
  m.layout = FrameLayout::for_skeleton(skeleton);
  m.music_dim = music_dim;
  torch::manual_seed(config.seed);
  m.net = DenoiserNet(m.denoiser_config());
  m.schedule = make_schedule(config.diffusion.steps, config.diffusion.schedule);
  m.motion_norm = Normalizer::identity(m.layout.dim());
  m.music_norm = Normalizer::identity(music_dim);
  return m;
}

Denoiser DanceModel::denoiser(const DenoiseOptions& opts) const {
  auto net_copy = net;
  return [net_copy, opts](const ConditioningContext& ctx) mutable {
    torch::NoGradGuard ng;
    return net_copy->forward(ctx, opts);
  };
}

void save_checkpoint(const fs::path& path, const DanceModel& model, const torch::optim::Optimizer* optimizer,
                     int64_t step) {
  OutputArchive ar;
  ar.write("format_version", torch::tensor(kCheckpointVersion));
  ar.write("config", c10::IValue(model.config.to_json().dump()));
  ar.write("skeleton", c10::IValue(skeleton_to_json(model.skeleton)));
  ar.write("music_dim", torch::tensor(model.music_dim));
  ar.write("step", torch::tensor(step));
  ar.write("motion_mean", model.motion_norm.mean);
  ar.write("motion_std", model.motion_norm.std);
  ar.write("music_mean", model.music_norm.mean);
  ar.write("music_std", model.music_norm.std);
  ar.write("schedule_alpha_bar", torch::tensor(model.schedule.alpha_bar, torch::kFloat64));

  OutputArchive params(ar.compilation_unit());
  model.net->save(params);
  ar.write("model", params);
  if (optimizer) {
    OutputArchive opt(ar.compilation_unit());
    optimizer->save(opt);
    ar.write("optimizer", opt);
  }

  if (!path.parent_path().empty()) fs::create_directories(path.parent_path());
  const fs::path tmp = path.string() + ".tmp";
  ar.save_to(tmp.string());
  fs::rename(tmp, path);
}

namespace {

InputArchive open_archive(const fs::path& path) {
  if (!fs::exists(path)) throw ParseError(fmt::format("checkpoint '{}' does not exist", path.string()));
  InputArchive ar;
  try {
    ar.load_from(path.string());
  } catch (const c10::Error& e) {
    throw ParseError(fmt::format("cannot read checkpoint '{}': {}", path.string(), e.what_without_backtrace()));
  }
  torch::Tensor version;
  if (!ar.try_read("format_version", version) || version.item<int64_t>() != kCheckpointVersion) {
    throw HeaderError(fmt::format("checkpoint '{}' has an unsupported format version", path.string()));
  }
  return ar;
}

std::string read_string(InputArchive& ar, const char* key, const fs::path& path) {
  c10::IValue v;
  if (!ar.try_read(key, v) || !v.isString()) {
    throw HeaderError(fmt::format("checkpoint '{}' lacks '{}'", path.string(), key));
  }
  return v.toStringRef();
}

torch::Tensor read_tensor(InputArchive& ar, const char* key, const fs::path& path) {
  torch::Tensor t;
  if (!ar.try_read(key, t)) throw HeaderError(fmt::format("checkpoint '{}' lacks '{}'", path.string(), key));
  return t;
}

}  // namespace

LoadedCheckpoint load_checkpoint(const fs::path& path) {
  InputArchive ar = open_archive(path);
  const RunConfig cfg = RunConfig::merge({}, nlohmann::json::parse(read_string(ar, "config", path)));
  const Skeleton skel = skeleton_from_json(read_string(ar, "skeleton", path), path.string());
  const int64_t music_dim = read_tensor(ar, "music_dim", path).item<int64_t>();

  LoadedCheckpoint out{DanceModel::create(cfg, skel, music_dim)};
  auto& m = out.model;
  out.step = read_tensor(ar, "step", path).item<int64_t>();
  m.motion_norm = {read_tensor(ar, "motion_mean", path), read_tensor(ar, "motion_std", path)};
  m.music_norm = {read_tensor(ar, "music_mean", path), read_tensor(ar, "music_std", path)};
  InputArchive params;
  if (!ar.try_read("model", params)) throw HeaderError(fmt::format("checkpoint '{}' lacks parameters", path.string()));
  try {
    m.net->load(params);
  } catch (const c10::Error& e) {
    throw HeaderError(fmt::format("checkpoint '{}' parameters do not match its config: {}", path.string(),
                                  e.what_without_backtrace()));
  }
  InputArchive opt;
  out.has_optimizer = ar.try_read("optimizer", opt);
  return out;
}

bool restore_optimizer(const fs::path& path, torch::optim::Optimizer& optimizer) {
  InputArchive ar = open_archive(path);
  InputArchive opt;
  if (!ar.try_read("optimizer", opt)) return false;
  optimizer.load(opt);
  return true;
}

std::unique_ptr<torch::optim::Optimizer> make_optimizer(const DanceModel& model) {
  const auto& t = model.config.training;
  if (t.optimizer == "adamw") {
    return std::make_unique<torch::optim::AdamW>(model.net->parameters(), torch::optim::AdamWOptions(t.lr));
  }
  return std::make_unique<torch::optim::Adam>(model.net->parameters(), torch::optim::AdamOptions(t.lr));
}

}  // namespace longdance
