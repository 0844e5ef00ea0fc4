#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "json.hpp"
#include "longdance/motion.hpp"
#include "longdance/music.hpp"

namespace longdance {

enum class FeatureKind { kKinematic, kGeometric };

struct FeatureVector {
  FeatureKind kind = FeatureKind::kKinematic;
  Eigen::VectorXd values;
};

/// Per-joint mean speed (J), per-joint mean acceleration magnitude (J) and the
/// mean over frames of sum_j 0.5 |v_j|^2, from finite differences of positions.
FeatureVector kinematic_features(const JointTrack& positions);

/// Names of the boolean relations, in feature order. Left/right relations
/// come in adjacent pairs.
const std::vector<std::string>& geometric_feature_names();

/// Fraction of frames on which each relation holds; y-up, facing +z.
/// Needs the SMPL joint names. Throws InvalidArgument when one is missing.
FeatureVector geometric_features(const Skeleton& skel, const JointTrack& positions);

/// Gaussian Frechet distance between two sample sets (rows are samples).
/// Throws InvalidArgument for fewer than 2 samples and ShapeError on a
/// dimension mismatch.
double frechet_distance(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b);
double frechet_distance(const std::vector<FeatureVector>& a, const std::vector<FeatureVector>& b);

/// Mean Euclidean distance over all unordered pairs.
double diversity(const Eigen::MatrixXd& set);
double diversity(const std::vector<FeatureVector>& set);

/// Stacks feature vectors as rows.
Eigen::MatrixXd stack_features(const std::vector<FeatureVector>& set);

struct BeatAlignOptions {
  double sigma = 3.0;     // frames
  int smooth_window = 5;  // moving average over total joint speed
  int min_gap = 10;       // frames between kinematic beats
};

/// Local minima of the smoothed total joint speed (central differences).
std::vector<int> kinematic_beats(const JointTrack& positions, const BeatAlignOptions& opts = {});

struct BeatAlignResult {
  double score = 0.0;
  /// Mean frame distance to the nearest music beat (unbounded form).
  double mean_distance = 0.0;
  int kinematic_beats = 0;
  bool no_kinematic_beats = false;
};

/// Mean over kinematic beats of exp(-d^2 / (2 sigma^2)), d the frame distance
/// to the nearest music beat. No kinematic beats (or no music beats) gives 0
/// with the flag set.
BeatAlignResult beat_align(const JointTrack& positions, const BeatGrid& beats, const BeatAlignOptions& opts = {});

struct FreezingThresholds {
  double tau_pose = 0.0;
  double tau_trans = 0.0;
  int chunk = 60;
};

/// Calibrated on procedural reference dances; see the calibrate-freezing command.
FreezingThresholds default_freezing_thresholds();

/// Mean absolute frame-to-frame change of the rotation channels and of the
/// root translation, per non-overlapping chunk.
struct ChunkActivity {
  std::vector<double> pose;
  std::vector<double> trans;
};

/// Throws InvalidArgument when the sequence is shorter than one chunk.
ChunkActivity chunk_activity(const MotionSequence& seq, int chunk = 60);

/// Fraction of chunks with pose change <= tau_pose and translation change <= tau_trans.
double freezing_rate(const MotionSequence& seq, const FreezingThresholds& th);
double freezing_rate(const ChunkActivity& act, const FreezingThresholds& th);

struct SequenceMetrics {
  std::string name;
  double beat_align = 0.0;
  double beat_distance = 0.0;
  bool no_kinematic_beats = false;
  double freezing_rate = 0.0;
};

struct MetricsReport {
  double fid_k = 0.0;
  double fid_g = 0.0;
  double dist_k = 0.0;
  double dist_g = 0.0;
  double beat_align = 0.0;
  double beat_distance = 0.0;
  double freezing_rate = 0.0;
  FreezingThresholds thresholds;
  BeatAlignOptions beat_options;
  std::vector<SequenceMetrics> sequences;
  std::vector<std::string> warnings;

  nlohmann::json to_json() const;
};

struct EvalItem {
  std::string name;
  const MotionSequence* motion = nullptr;
  const BeatGrid* beats = nullptr;  // optional
};

/// Full report for a generated set against a reference set. Per-sequence work
/// runs on a worker pool (see worker_count()); reductions keep input order.
MetricsReport evaluate(const Skeleton& skel, const std::vector<EvalItem>& generated,
                       const std::vector<const MotionSequence*>& reference, const FreezingThresholds& th,
                       const BeatAlignOptions& beat_opts = {});

/// Worker pool size: hardware concurrency capped by LONGDANCE_NUM_WORKERS.
int worker_count();

}  // namespace longdance
