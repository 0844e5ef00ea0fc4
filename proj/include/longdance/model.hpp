#pragma once

#include <torch/torch.h>

#include <filesystem>
#include <optional>

#include "longdance/config.hpp"
#include "longdance/denoiser.hpp"
#include "longdance/diffusion.hpp"
#include "longdance/losses.hpp"
#include "longdance/motion.hpp"
#include "longdance/tensor_kinematics.hpp"

namespace longdance {

/// A denoiser together with everything needed to run it on raw data:
/// skeleton, frame layout, schedule and the per-channel normalizers. The
/// network works in normalized units.
struct DanceModel {
  RunConfig config;
  Skeleton skeleton;
  SkeletonTensors skeleton_tensors;
  FrameLayout layout;
  int64_t music_dim = 0;
  DenoiserNet net{nullptr};
  NoiseSchedule schedule;
  Normalizer motion_norm;
  Normalizer music_norm;

  /// Fresh parameters; reseeds the global torch generator with config.seed.
  /// Normalizers start as the identity.
  static DanceModel create(const RunConfig& config, const Skeleton& skeleton, int64_t music_dim);

  DenoiserConfig denoiser_config() const;

  /// Inference closure over the network (no autograd).
  Denoiser denoiser(const DenoiseOptions& opts = {}) const;
};

constexpr int64_t kCheckpointVersion = 1;

/// Self-describing archive: format version, config echo, skeleton, music
/// width, normalizers, schedule, parameters, optimizer state and step.
/// Written to a temporary sibling first, then renamed.
void save_checkpoint(const std::filesystem::path& path, const DanceModel& model,
                     const torch::optim::Optimizer* optimizer = nullptr, int64_t step = 0);

struct LoadedCheckpoint {
  DanceModel model;
  int64_t step = 0;
  bool has_optimizer = false;
};

/// Throws ParseError when the file is missing, unreadable or of another
/// format version.
LoadedCheckpoint load_checkpoint(const std::filesystem::path& path);

/// Restores optimizer state saved alongside the parameters. Returns false
/// when the archive has none.
bool restore_optimizer(const std::filesystem::path& path, torch::optim::Optimizer& optimizer);

/// Optimizer configured from the training section.
std::unique_ptr<torch::optim::Optimizer> make_optimizer(const DanceModel& model);

}  // namespace longdance
