#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "longdance/metrics.hpp"
#include "longdance/motion.hpp"
#include "longdance/music.hpp"
#include "longdance/training.hpp"

namespace longdance {

namespace fs = std::filesystem;

struct ManifestEntry {
  std::string name;
  fs::path motion;  // relative to the manifest directory
  fs::path music;
  std::string split;  // train | test
  int genre = 0;
};

struct DatasetManifest {
  fs::path root;      // directory holding the manifest; not serialized
  fs::path skeleton;  // relative to root
  double fps = 60.0;
  std::vector<ManifestEntry> entries;

  std::vector<const ManifestEntry*> split(const std::string& tag) const;
  /// Structural checks: known split tags, unique names, disjoint splits.
  /// With `check_files`, every referenced file must exist and parse.
  /// Throws HeaderError.
  void validate(bool check_files = true) const;
};

DatasetManifest read_manifest(const fs::path& path);
void write_manifest(const fs::path& path, const DatasetManifest& m);

struct LoadedEntry {
  TrainingPair pair;
  std::optional<BeatGrid> beats;
  int genre = 0;
};

Skeleton load_skeleton(const DatasetManifest& m);
std::vector<LoadedEntry> load_split(const DatasetManifest& m, const std::string& split);

struct SynthDanceOptions {
  int genre = 0;
  uint64_t seed = 0;
  /// Multiplies every oscillator amplitude.
  double energy = 1.0;
  /// Optional per-chunk multiplier on top of `energy` (chunk = 60 frames).
  std::vector<double> chunk_energy;
  int chunk = 60;
};

/// Procedural dance whose limb and root oscillators complete one stroke per
/// beat, with zero velocity on every beat frame. The genre picks the
/// oscillator family; the seed jitters amplitudes.
MotionSequence synth_dance(const Skeleton& skel, const BeatGrid& beats, int num_frames, double fps,
                           const SynthDanceOptions& opts);

/// Genre timbre signature added to the mfcc channels.
std::vector<float> genre_mfcc_offset(int genre);

struct SynthDataOptions {
  int sequences = 64;
  int genres = 2;
  uint64_t seed = 0;
  double duration_s = 20.0;
  double fps = 60.0;
  double test_fraction = 0.05;
};

/// Writes skeleton, paired music/motion files and manifest.json into
/// `out_dir`; returns the manifest. Every genre appears in the test split
/// when there are enough test slots.
DatasetManifest synth_dataset(const fs::path& out_dir, const SynthDataOptions& opts);

/// Reference set for threshold calibration: vigorous dances with a graded
/// share of low-activity chunks.
std::vector<MotionSequence> calibration_fixture(const Skeleton& skel, uint64_t seed = 0, int sequences = 16,
                                                double duration_s = 20.0);

struct CalibrationResult {
  FreezingThresholds thresholds;
  double achieved_rate = 0.0;
  double scale = 0.0;  // thresholds = scale * median chunk activity
};

/// Smallest thresholds (a common multiple of the median chunk pose and
/// translation activity) whose freezing rate on `reference` reaches `target_rate`.
CalibrationResult calibrate_freezing(const std::vector<MotionSequence>& reference, double target_rate, int chunk = 60);

}  // namespace longdance
