#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "longdance/motion.hpp"

namespace longdance {

/// Named half-open channel range [begin, end) inside a music feature vector.
struct ChannelSpan {
  std::string name;
  int begin = 0;
  int end = 0;

  int size() const { return end - begin; }
  bool operator==(const ChannelSpan&) const = default;
};

struct MusicFeatureSequence {
  double fps = 60.0;
  FrameMatrix frames;  // frame_count x dim
  std::vector<ChannelSpan> channel_map;

  int dim() const { return static_cast<int>(frames.cols()); }
  int num_frames() const { return static_cast<int>(frames.rows()); }
  const ChannelSpan* span(const std::string& name) const;

  /// Throws SpanOverlapError for overlapping spans and HeaderError for gaps,
  /// out-of-range spans or a non-positive fps.
  void validate() const;
};

struct BeatGrid {
  std::vector<int> beat_frames;  // strictly increasing
  double bpm = 120.0;

  void validate() const;
};

/// Fixture channel sizes: mfcc 20, mfcc_delta 20, chroma 12, tempogram 30, onset 1.
std::vector<ChannelSpan> default_channel_map();

struct SynthMusicOptions {
  double bpm = 120.0;
  double duration_s = 10.0;
  double fps = 60.0;
  uint64_t seed = 0;
  double min_bpm = 80.0;
  double max_bpm = 135.0;
  /// Optional additive offset for the mfcc channels (a crude timbre signature).
  std::vector<float> mfcc_offset;
};

struct SynthMusic {
  MusicFeatureSequence features;
  BeatGrid beats;
};

/// Procedural music features. Beats fall at round(k * 60 * fps / bpm) for
/// k = 0 .. floor(duration * bpm / 60) - 1; the onset channel holds unit
/// impulses exactly on those frames and zero elsewhere.
SynthMusic synth_music(const SynthMusicOptions& opts);

/// Onset peak picking: local maxima above mean + std of the onset channel
/// (floored at 1e-6), greedily thinned so beats are at least `min_gap_frames` apart.
/// Throws InvalidArgument when the sequence has no onset span.
BeatGrid extract_beats(const MusicFeatureSequence& seq, int min_gap_frames = 10);

}  // namespace longdance
