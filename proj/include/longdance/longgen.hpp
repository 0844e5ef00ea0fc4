#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "longdance/config.hpp"
#include "longdance/diffusion.hpp"
#include "longdance/model.hpp"
#include "longdance/motion.hpp"
#include "longdance/music.hpp"

namespace longdance {

struct FrameRange {
  int64_t begin = 0;
  int64_t end = 0;  // exclusive
  int64_t size() const { return end - begin; }
  bool operator==(const FrameRange&) const = default;
};

struct GenerationWindow {
  FrameRange past;
  FrameRange future;
  /// Requested music frames, anchored at the past window's first frame.
  FrameRange music;
  /// Part of `music` inside the track; the remainder is zero padding.
  FrameRange music_available;
};

/// Windows after the seed, stride = future window, until `target_frames` are
/// covered. The last future range may run past target_frames; generation
/// truncates it. Throws InvalidArgument when target_frames < past window.
std::vector<GenerationWindow> window_plan(int64_t target_frames, const RunConfig::Windows& w, int64_t music_frames);

struct GenerationRequest {
  MusicFeatureSequence music;
  MotionSequence seed_motion;  // exactly the past window long
  int64_t target_frames = 0;
  uint64_t seed = 0;
  /// Called once per sampled window, before sampling.
  std::function<void(const GenerationWindow&)> on_window;
};

/// Autoregressive synthesis: the most recent past window (seed first, then
/// generated frames) conditions each new future window. Frames [0, past) are
/// the seed, copied verbatim. Throws ShapeError on a seed length or layout
/// mismatch and InvalidArgument on empty music.
MotionSequence generate_long(const DanceModel& model, const GenerationRequest& req);
/// Same, with an arbitrary denoiser working in the model's normalized units.
MotionSequence generate_long(const DanceModel& model, const Denoiser& denoiser, const GenerationRequest& req);

}  // namespace longdance
