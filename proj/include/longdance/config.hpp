#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "json.hpp"
#include "longdance/diffusion.hpp"
#include "longdance/losses.hpp"
#include "longdance/metrics.hpp"

namespace longdance {

/// Every setting of a run. All fields have desk-scale defaults; JSON documents
/// override them section by section and unknown keys are rejected.
///
///   {"model": {"width", "heads", "blocks", "ffn_mult", "temporal_conv_kernel"},
///    "windows": {"music", "past", "future"},
///    "diffusion": {"steps", "schedule"},
///    "training": {"lr", "batch", "steps", "optimizer", "checkpoint_every", "normalizer_min_std"},
///    "loss": {"mi", "mp", "pos", "vel", "contact", "mi_clamp"},
///    "metrics": {"beat_sigma", "beat_smooth_window", "beat_min_gap",
///                "tau_pose", "tau_trans", "freezing_chunk"},
///    "data": {"manifest"},
///    "out": "...", "seed": 0}
struct RunConfig {
  struct Model {
    int64_t width = 64;
    int64_t heads = 4;
    int64_t blocks = 4;
    int64_t ffn_mult = 2;
    int64_t temporal_conv_kernel = 3;
  } model;
  struct Windows {
    int64_t music = 240;
    int64_t past = 120;
    int64_t future = 20;
  } windows;
  struct Diffusion {
    int steps = 50;
    ScheduleKind schedule = ScheduleKind::kCosine;
  } diffusion;
  struct Training {
    double lr = 1e-4;
    int batch = 16;
    int steps = 2000;
    std::string optimizer = "adam";  // adam | adamw
    int checkpoint_every = 500;
    double normalizer_min_std = 1e-3;
  } training;
  LossWeights loss;
  struct Metrics {
    BeatAlignOptions beat;
    FreezingThresholds freezing = default_freezing_thresholds();
  } metrics;
  struct Data {
    std::string manifest;
  } data;
  std::string out = "run";
  uint64_t seed = 0;

  /// Large-scale settings: width 512, 4 heads, T = 1000, batch 126, lr 1e-4.
  static RunConfig large();

  /// Applies the keys present in `j` on top of `base`. Throws ConfigError on
  /// unknown keys, wrong types or invalid values.
  static RunConfig merge(const RunConfig& base, const nlohmann::json& j);

  nlohmann::json to_json() const;
  /// Throws ConfigError.
  void validate() const;
};

/// Reads a JSON config file on top of `base`.
RunConfig load_config(const std::filesystem::path& path, const RunConfig& base = {});

}  // namespace longdance
