#pragma once

#include <torch/torch.h>

#include <filesystem>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "longdance/losses.hpp"
#include "longdance/model.hpp"
#include "longdance/music.hpp"

namespace longdance {

struct TrainingPair {
  std::string name;
  MotionSequence motion;
  MusicFeatureSequence music;  // one feature row per motion frame
};

/// Fits the model's motion and music normalizers on all frames of `pairs`.
void fit_normalizers(DanceModel& model, const std::vector<TrainingPair>& pairs);

/// Random (past, future, music) windows in normalized units. Music rows past
/// the end of a track are zeros before normalization.
class WindowDataset {
 public:
  /// Throws InvalidArgument when no pair is long enough for one window.
  WindowDataset(const std::vector<TrainingPair>& pairs, const DanceModel& model);

  struct Batch {
    ConditioningContext clean;  // step left undefined
    torch::Tensor contacts;     // [B, future, C] ground-truth foot labels
  };

  /// Window of pair `index` whose past starts at frame `start`.
  Batch window(size_t index, int64_t start) const;
  Batch sample(int batch, std::mt19937_64& rng) const;
  size_t size() const { return motion_.size(); }

 private:
  int64_t music_window_, past_window_, future_window_;
  FrameLayout layout_;
  std::vector<torch::Tensor> motion_;    // [N, D] normalized
  std::vector<torch::Tensor> music_;     // [N + music_window, Dm] normalized, zero-padded raw
  std::vector<torch::Tensor> contacts_;  // [N, C]
};

/// All loss terms for one noised batch.
LossTerms compute_loss_terms(DanceModel& model, const WindowDataset::Batch& batch, const torch::Tensor& t,
                             const torch::Tensor& noise);

struct LossRecord {
  int step = 0;
  double t = 0.0;  // mean diffusion step of the batch
  double recon = 0.0;
  double mi = 0.0;
  double pos = 0.0;
  double vel = 0.0;
  double contact = 0.0;
  double total = 0.0;
};

struct TrainOptions {
  /// Receives loss_log.csv, config.json, checkpoints/ and model.pt. Empty
  /// disables all file output.
  std::filesystem::path out_dir;
  std::function<void(const LossRecord&)> on_step;
};

struct TrainResult {
  std::vector<LossRecord> log;
  std::filesystem::path final_checkpoint;
};

/// Fits the normalizers, then runs config.training.steps optimizer steps.
/// Throws TrainingDivergedError (naming step, t and every term) on a
/// non-finite loss.
TrainResult train(DanceModel& model, const std::vector<TrainingPair>& pairs, const TrainOptions& opts = {});

/// "step,t,L_recon,L_MI,L_pos,L_vel,L_contact,total"
std::string loss_log_header();
std::string format_loss_record(const LossRecord& r);

}  // namespace longdance
