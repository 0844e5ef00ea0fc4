#include "longdance/music.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <random>

#include "longdance/error.hpp"

namespace longdance {

const ChannelSpan* MusicFeatureSequence::span(const std::string& name) const {
  for (const auto& s : channel_map) {
    if (s.name == name) return &s;
  }
  return nullptr;
}

void MusicFeatureSequence::validate() const {
  if (!(fps > 0)) throw HeaderError("music fps must be positive");
  std::vector<ChannelSpan> sorted = channel_map;
  std::sort(sorted.begin(), sorted.end(), [](const auto& a, const auto& b) { return a.begin < b.begin; });
  for (const auto& s : sorted) {
    if (s.begin < 0 || s.end > dim() || s.begin >= s.end) {
      throw HeaderError(fmt::format("channel span '{}' [{}, {}) is invalid for dim {}", s.name, s.begin, s.end, dim()));
    }
  }
  int cursor = 0;
  for (const auto& s : sorted) {
    if (s.begin < cursor) {
      throw SpanOverlapError(fmt::format("channel span '{}' starts at {} inside a previous span", s.name, s.begin));
    }
    if (s.begin > cursor) throw HeaderError(fmt::format("channels [{}, {}) belong to no span", cursor, s.begin));
    cursor = s.end;
  }
  if (cursor != dim()) throw HeaderError(fmt::format("channels [{}, {}) belong to no span", cursor, dim()));
}

void BeatGrid::validate() const {
  if (!(bpm > 0 && bpm < 400)) throw InvalidArgument(fmt::format("bpm {} outside (0, 400)", bpm));
  for (size_t i = 1; i < beat_frames.size(); ++i) {
    if (beat_frames[i] <= beat_frames[i - 1]) throw InvalidArgument("beat frames must be strictly increasing");
  }
}

std::vector<ChannelSpan> default_channel_map() {
  return {{"mfcc", 0, 20}, {"mfcc_delta", 20, 40}, {"chroma", 40, 52}, {"tempogram", 52, 82}, {"onset", 82, 83}};
}

SynthMusic synth_music(const SynthMusicOptions& opts) {
  if (!(opts.duration_s > 0)) throw InvalidArgument("duration must be positive");
  if (!(opts.fps > 0)) throw InvalidArgument("fps must be positive");
  if (opts.bpm < opts.min_bpm || opts.bpm > opts.max_bpm) {
    throw InvalidArgument(fmt::format("bpm {} outside [{}, {}]", opts.bpm, opts.min_bpm, opts.max_bpm));
  }
  const int n = static_cast<int>(std::lround(opts.duration_s * opts.fps));
  const double period = 60.0 * opts.fps / opts.bpm;
  const int beat_count = static_cast<int>(std::floor(opts.duration_s * opts.bpm / 60.0 + 1e-9));

  SynthMusic out;
  out.beats.bpm = opts.bpm;
  for (int k = 0; k < beat_count; ++k) {
    const int f = static_cast<int>(std::lround(k * period));
    if (f < n) out.beats.beat_frames.push_back(f);
  }

  auto& seq = out.features;
  seq.fps = opts.fps;
  seq.channel_map = default_channel_map();
  seq.frames = FrameMatrix::Zero(n, 83);

  std::mt19937_64 rng(opts.seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_real_distribution<double> unif(0.0, 2.0 * std::numbers::pi);
  constexpr double kTwoPi = 2.0 * std::numbers::pi;

  // Band-limited noise: white noise through a 9-tap moving average.
  auto smooth_noise = [&](int len) {
    std::vector<double> raw(len + 8);
    for (auto& v : raw) v = gauss(rng);
    std::vector<double> out_noise(len);
    for (int i = 0; i < len; ++i) {
      out_noise[i] = std::accumulate(raw.begin() + i, raw.begin() + i + 9, 0.0) / 3.0;
    }
    return out_noise;
  };

  auto beat_phase = [&](int f) { return f / period; };

  // mfcc: per-channel level, beat-locked harmonic, noise.
  for (int c = 0; c < 20; ++c) {
    const double level = gauss(rng) * 2.0;
    const double phase = unif(rng);
    const int harmonic = 1 << (c % 3);
    const double offset = c < static_cast<int>(opts.mfcc_offset.size()) ? opts.mfcc_offset[c] : 0.0;
    const auto noise = smooth_noise(n);
    for (int f = 0; f < n; ++f) {
      seq.frames(f, c) = static_cast<float>(level + offset + 0.8 * std::sin(kTwoPi * harmonic * beat_phase(f) + phase) +
                                            0.3 * noise[f]);
    }
  }
  // mfcc delta: frame difference of mfcc.
  for (int c = 0; c < 20; ++c) {
    for (int f = 0; f < n; ++f) {
      const int prev = std::max(f - 1, 0);
      seq.frames(f, 20 + c) = seq.frames(f, c) - seq.frames(prev, c);
    }
  }
  // chroma: a seeded key profile, pulsing with the beat.
  const int root_note = static_cast<int>(rng() % 12);
  for (int c = 0; c < 12; ++c) {
    const int interval = (c - root_note + 12) % 12;
    const double weight = (interval == 0 || interval == 4 || interval == 7) ? 0.8 : 0.15;
    const auto noise = smooth_noise(n);
    for (int f = 0; f < n; ++f) {
      const double pulse = 0.5 + 0.5 * std::cos(kTwoPi * beat_phase(f));
      seq.frames(f, 40 + c) = static_cast<float>(std::clamp(weight * (0.6 + 0.4 * pulse) + 0.05 * noise[f], 0.0, 1.0));
    }
  }
  // tempogram: 30 bins over 60..240 bpm with a bump at the tempo and its double.
  for (int b = 0; b < 30; ++b) {
    const double bin_bpm = 60.0 + 180.0 * b / 29.0;
    const double w = std::exp(-0.5 * std::pow((bin_bpm - opts.bpm) / 8.0, 2)) +
                     0.5 * std::exp(-0.5 * std::pow((bin_bpm - 2 * opts.bpm) / 8.0, 2));
    const auto noise = smooth_noise(n);
    for (int f = 0; f < n; ++f) seq.frames(f, 52 + b) = static_cast<float>(w + 0.03 * noise[f]);
  }
  for (int f : out.beats.beat_frames) seq.frames(f, 82) = 1.0f;
  return out;
}

BeatGrid extract_beats(const MusicFeatureSequence& seq, int min_gap_frames) {
  const ChannelSpan* onset = seq.span("onset");
  if (onset == nullptr || onset->size() < 1) throw InvalidArgument("music features have no onset span");
  const int n = seq.num_frames();
  const int ch = onset->begin;
  BeatGrid grid;
  if (n == 0) return grid;

  double mean = 0.0;
  for (int f = 0; f < n; ++f) mean += seq.frames(f, ch);
  mean /= n;
  double var = 0.0;
  for (int f = 0; f < n; ++f) var += std::pow(seq.frames(f, ch) - mean, 2);
  const double threshold = std::max(mean + std::sqrt(var / n), 1e-6);

  struct Peak {
    int frame;
    float value;
  };
  std::vector<Peak> peaks;
  for (int f = 0; f < n; ++f) {
    const float v = seq.frames(f, ch);
    const float left = f > 0 ? seq.frames(f - 1, ch) : -std::numeric_limits<float>::infinity();
    const float right = f + 1 < n ? seq.frames(f + 1, ch) : -std::numeric_limits<float>::infinity();
    if (v > left && v >= right && v > threshold) peaks.push_back({f, v});
  }
  std::stable_sort(peaks.begin(), peaks.end(), [](const Peak& a, const Peak& b) { return a.value > b.value; });
  std::vector<int> kept;
  for (const auto& p : peaks) {
    const bool clear =
        std::none_of(kept.begin(), kept.end(), [&](int k) { return std::abs(k - p.frame) < min_gap_frames; });
    if (clear) kept.push_back(p.frame);
  }
  std::sort(kept.begin(), kept.end());
  grid.beat_frames = std::move(kept);
  if (grid.beat_frames.size() >= 2) {
    const double span = grid.beat_frames.back() - grid.beat_frames.front();
    grid.bpm = 60.0 * seq.fps * static_cast<double>(grid.beat_frames.size() - 1) / span;
  }
  return grid;
}

}  // namespace longdance
