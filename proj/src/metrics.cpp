#include "longdance/metrics.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <functional>
#include <mutex>
#include <numeric>
#include <thread>

#include "longdance/error.hpp"

namespace longdance {

namespace {

void parallel_for(int n, const std::function<void(int)>& fn) {
  const int workers = std::min(worker_count(), n);
  if (workers <= 1) {
    for (int i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<int> next{0};
  std::exception_ptr failure;
  std::mutex failure_mu;
  std::vector<std::thread> pool;
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (int i = next++; i < n; i = next++) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard lk(failure_mu);
          if (!failure) failure = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

int joint(const Skeleton& skel, const char* name) {
  const int j = skel.index_of(name);
  if (j < 0) throw InvalidArgument(fmt::format("geometric features need joint '{}'", name));
  return j;
}

double angle_at(const Vec3& a, const Vec3& b, const Vec3& c) {
  const Vec3 u = a - b, v = c - b;
  const double d = u.norm() * v.norm();
  if (d < 1e-12) return M_PI;
  return std::acos(std::clamp(u.dot(v) / d, -1.0, 1.0));
}

}  // namespace

int worker_count() {
  int n = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  if (const char* env = std::getenv("LONGDANCE_NUM_WORKERS")) {
    const int cap = std::atoi(env);
    if (cap > 0) n = std::min(n, cap);
  }
  return n;
}

FeatureVector kinematic_features(const JointTrack& p) {
  const int n = p.num_frames(), J = p.num_joints;
  if (n < 3) throw InvalidArgument("kinematic features need at least 3 frames");
  FeatureVector f{FeatureKind::kKinematic, Eigen::VectorXd::Zero(2 * J + 1)};
  double energy = 0.0;
  for (int t = 0; t + 1 < n; ++t) {
    double frame_energy = 0.0;
    for (int j = 0; j < J; ++j) {
      const Vec3 v = (p.at(t + 1, j) - p.at(t, j)) * p.fps;
      f.values[j] += v.norm();
      frame_energy += 0.5 * v.squaredNorm();
    }
    energy += frame_energy;
  }
  for (int t = 1; t + 1 < n; ++t) {
    for (int j = 0; j < J; ++j) {
      const Vec3 a = (p.at(t + 1, j) - 2.0 * p.at(t, j) + p.at(t - 1, j)) * p.fps * p.fps;
      f.values[J + j] += a.norm();
    }
  }
  f.values.head(J) /= n - 1;
  f.values.segment(J, J) /= n - 2;
  f.values[2 * J] = energy / (n - 1);
  return f;
}

const std::vector<std::string>& geometric_feature_names() {
  static const std::vector<std::string> names{
      "left_foot_in_front", "right_foot_in_front", "left_hand_above_neck", "right_hand_above_neck",
      "left_knee_bent",     "right_knee_bent",     "left_elbow_bent",      "right_elbow_bent",
      "left_foot_raised",   "right_foot_raised",   "feet_crossed",         "hands_wide_apart",
  };
  return names;
}

FeatureVector geometric_features(const Skeleton& skel, const JointTrack& p) {
  const int pelvis = joint(skel, "pelvis"), neck = joint(skel, "neck");
  const int hip[2] = {joint(skel, "left_hip"), joint(skel, "right_hip")};
  const int knee[2] = {joint(skel, "left_knee"), joint(skel, "right_knee")};
  const int ankle[2] = {joint(skel, "left_ankle"), joint(skel, "right_ankle")};
  const int shoulder[2] = {joint(skel, "left_shoulder"), joint(skel, "right_shoulder")};
  const int elbow[2] = {joint(skel, "left_elbow"), joint(skel, "right_elbow")};
  const int wrist[2] = {joint(skel, "left_wrist"), joint(skel, "right_wrist")};

  constexpr double kFront = 0.15;                   // m ahead of the pelvis plane
  constexpr double kRaised = 0.05;                  // m above the other ankle
  constexpr double kKneeBent = 150.0 * M_PI / 180;  // inner angle
  constexpr double kElbowBent = 120.0 * M_PI / 180;
  constexpr double kWide = 2.5;  // wrist gap over shoulder gap
  const Vec3 up(0, 1, 0);

  const int n = p.num_frames();
  if (n < 1) throw InvalidArgument("geometric features need at least one frame");
  FeatureVector f{FeatureKind::kGeometric, Eigen::VectorXd::Zero(12)};
  for (int t = 0; t < n; ++t) {
    Vec3 side = p.at(t, hip[0]) - p.at(t, hip[1]);
    side[1] = 0.0;
    const Vec3 fwd = side.cross(up).normalized();
    const Vec3 side_n = side.normalized();
    for (int s = 0; s < 2; ++s) {
      const int o = 1 - s;
      f.values[0 + s] += (p.at(t, ankle[s]) - p.at(t, pelvis)).dot(fwd) > kFront;
      f.values[2 + s] += p.at(t, wrist[s])[1] > p.at(t, neck)[1];
      f.values[4 + s] += angle_at(p.at(t, hip[s]), p.at(t, knee[s]), p.at(t, ankle[s])) < kKneeBent;
      f.values[6 + s] += angle_at(p.at(t, shoulder[s]), p.at(t, elbow[s]), p.at(t, wrist[s])) < kElbowBent;
      f.values[8 + s] += p.at(t, ankle[s])[1] > p.at(t, ankle[o])[1] + kRaised;
    }
    f.values[10] += (p.at(t, ankle[0]) - p.at(t, ankle[1])).dot(side_n) < 0.0;
    f.values[11] +=
        (p.at(t, wrist[0]) - p.at(t, wrist[1])).norm() > kWide * (p.at(t, shoulder[0]) - p.at(t, shoulder[1])).norm();
  }
  f.values /= n;
  return f;
}

Eigen::MatrixXd stack_features(const std::vector<FeatureVector>& set) {
  if (set.empty()) return {};
  Eigen::MatrixXd m(set.size(), set.front().values.size());
  for (size_t i = 0; i < set.size(); ++i) {
    if (set[i].values.size() != m.cols()) throw ShapeError("feature vectors differ in length");
    m.row(i) = set[i].values.transpose();
  }
  return m;
}

namespace {

Eigen::MatrixXd sqrtm_psd(const Eigen::MatrixXd& m) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (m + m.transpose()));
  const Eigen::VectorXd ev = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().transpose();
}

void moments(const Eigen::MatrixXd& x, Eigen::VectorXd& mu, Eigen::MatrixXd& cov) {
  mu = x.colwise().mean().transpose();
  const Eigen::MatrixXd c = x.rowwise() - mu.transpose();
  cov = c.transpose() * c / static_cast<double>(x.rows() - 1);
}

}  // namespace

double frechet_distance(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  if (a.rows() < 2 || b.rows() < 2) throw InvalidArgument("frechet distance needs at least 2 samples per set");
  if (a.cols() != b.cols()) {
    throw ShapeError(fmt::format("feature dimensions differ: {} vs {}", a.cols(), b.cols()));
  }
  Eigen::VectorXd mu_a, mu_b;
  Eigen::MatrixXd cov_a, cov_b;
  moments(a, mu_a, cov_a);
  moments(b, mu_b, cov_b);
  // tr sqrt(Ca Cb) = tr sqrt(Ca^1/2 Cb Ca^1/2), the inner product being symmetric PSD
  const Eigen::MatrixXd s = sqrtm_psd(cov_a);
  const Eigen::MatrixXd inner = s * cov_b * s;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (inner + inner.transpose()), Eigen::EigenvaluesOnly);
  const double tr_sqrt = es.eigenvalues().cwiseMax(0.0).cwiseSqrt().sum();
  return (mu_a - mu_b).squaredNorm() + cov_a.trace() + cov_b.trace() - 2.0 * tr_sqrt;
}

double frechet_distance(const std::vector<FeatureVector>& a, const std::vector<FeatureVector>& b) {
  return frechet_distance(stack_features(a), stack_features(b));
}

double diversity(const Eigen::MatrixXd& set) {
  const Eigen::Index n = set.rows();
  if (n < 2) throw InvalidArgument("diversity needs at least 2 samples");
  double total = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i + 1; j < n; ++j) total += (set.row(i) - set.row(j)).norm();
  }
  return total / (0.5 * static_cast<double>(n) * static_cast<double>(n - 1));
}

double diversity(const std::vector<FeatureVector>& set) { return diversity(stack_features(set)); }

std::vector<int> kinematic_beats(const JointTrack& p, const BeatAlignOptions& opts) {
  const int n = p.num_frames();
  if (n < 3) return {};
  std::vector<double> speed(n, 0.0);
  for (int t = 0; t < n; ++t) {
    const int lo = std::max(t - 1, 0), hi = std::min(t + 1, n - 1);
    for (int j = 0; j < p.num_joints; ++j) speed[t] += (p.at(hi, j) - p.at(lo, j)).norm() * p.fps / (hi - lo);
  }
  const int half = std::max(opts.smooth_window, 1) / 2;
  std::vector<double> smooth(n);
  for (int t = 0; t < n; ++t) {
    const int lo = std::max(t - half, 0), hi = std::min(t + half, n - 1);
    smooth[t] = std::accumulate(speed.begin() + lo, speed.begin() + hi + 1, 0.0) / (hi - lo + 1);
  }
  std::vector<int> cand;
  for (int t = 1; t + 1 < n; ++t) {
    if (smooth[t] < smooth[t - 1] && smooth[t] <= smooth[t + 1]) cand.push_back(t);
  }
  std::stable_sort(cand.begin(), cand.end(), [&](int a, int b) { return smooth[a] < smooth[b]; });
  std::vector<int> kept;
  for (int c : cand) {
    const bool clear = std::none_of(kept.begin(), kept.end(), [&](int k) { return std::abs(k - c) < opts.min_gap; });
    if (clear) kept.push_back(c);
  }
  std::sort(kept.begin(), kept.end());
  return kept;
}

BeatAlignResult beat_align(const JointTrack& positions, const BeatGrid& beats, const BeatAlignOptions& opts) {
  if (!(opts.sigma > 0.0)) throw InvalidArgument("beat alignment sigma must be positive");
  BeatAlignResult r;
  const auto kin = kinematic_beats(positions, opts);
  r.kinematic_beats = static_cast<int>(kin.size());
  if (kin.empty() || beats.beat_frames.empty()) {
    r.no_kinematic_beats = kin.empty();
    return r;
  }
  const auto& mb = beats.beat_frames;
  for (int k : kin) {
    const auto it = std::lower_bound(mb.begin(), mb.end(), k);
    int d = std::numeric_limits<int>::max();
    if (it != mb.end()) d = *it - k;
    if (it != mb.begin()) d = std::min(d, k - *std::prev(it));
    r.score += std::exp(-static_cast<double>(d) * d / (2.0 * opts.sigma * opts.sigma));
    r.mean_distance += d;
  }
  r.score /= static_cast<double>(kin.size());
  r.mean_distance /= static_cast<double>(kin.size());
  return r;
}

FreezingThresholds default_freezing_thresholds() { return {5.16019e-4, 1.71122e-4, 60}; }

ChunkActivity chunk_activity(const MotionSequence& seq, int chunk) {
  if (chunk < 2) throw InvalidArgument("freezing chunks need at least 2 frames");
  const int n = seq.num_frames();
  if (n < chunk)
    throw InvalidArgument(fmt::format("sequence of {} frames is shorter than one {}-frame chunk", n, chunk));
  const auto& L = seq.layout;
  const int rb = L.rotations_begin(), rn = 6 * L.joints, tb = L.root_begin();
  ChunkActivity act;
  for (int c = 0; c < n / chunk; ++c) {
    double dp = 0.0, dt = 0.0;
    for (int t = c * chunk; t + 1 < (c + 1) * chunk; ++t) {
      const auto a = seq.frames.row(t), b = seq.frames.row(t + 1);
      dp += (b.segment(rb, rn) - a.segment(rb, rn)).cast<double>().cwiseAbs().mean();
      dt += (b.segment(tb, 3) - a.segment(tb, 3)).cast<double>().cwiseAbs().mean();
    }
    act.pose.push_back(dp / (chunk - 1));
    act.trans.push_back(dt / (chunk - 1));
  }
  return act;
}

double freezing_rate(const ChunkActivity& act, const FreezingThresholds& th) {
  if (act.pose.empty()) throw InvalidArgument("no chunks to score");
  int frozen = 0;
  for (size_t c = 0; c < act.pose.size(); ++c) frozen += act.pose[c] <= th.tau_pose && act.trans[c] <= th.tau_trans;
  return static_cast<double>(frozen) / static_cast<double>(act.pose.size());
}

double freezing_rate(const MotionSequence& seq, const FreezingThresholds& th) {
  return freezing_rate(chunk_activity(seq, th.chunk), th);
}

nlohmann::json MetricsReport::to_json() const {
  nlohmann::json seqs = nlohmann::json::array();
  for (const auto& s : sequences) {
    seqs.push_back({{"name", s.name},
                    {"beat_align", s.beat_align},
                    {"beat_distance_frames", s.beat_distance},
                    {"no_kinematic_beats", s.no_kinematic_beats},
                    {"freezing_rate", s.freezing_rate}});
  }
  return {
      {"fid_k", fid_k},
      {"fid_g", fid_g},
      {"dist_k", dist_k},
      {"dist_g", dist_g},
      {"beat_align", beat_align},
      {"beat_distance_frames", beat_distance},
      {"freezing_rate", freezing_rate},
      {"config",
       {{"tau_pose", thresholds.tau_pose},
        {"tau_trans", thresholds.tau_trans},
        {"freezing_chunk", thresholds.chunk},
        {"freezing_aggregation", "mean absolute frame difference; pose = rotation channels"},
        {"beat_sigma", beat_options.sigma},
        {"beat_smooth_window", beat_options.smooth_window},
        {"beat_min_gap", beat_options.min_gap}}},
      {"sequences", seqs},
      {"warnings", warnings},
  };
}

MetricsReport evaluate(const Skeleton& skel, const std::vector<EvalItem>& generated,
                       const std::vector<const MotionSequence*>& reference, const FreezingThresholds& th,
                       const BeatAlignOptions& beat_opts) {
  const int ng = static_cast<int>(generated.size()), nr = static_cast<int>(reference.size());
  std::vector<FeatureVector> gk(ng), gg(ng), rk(nr), rg(nr);
  MetricsReport rep;
  rep.thresholds = th;
  rep.beat_options = beat_opts;
  rep.sequences.resize(ng);

  parallel_for(ng, [&](int i) {
    const auto& item = generated[i];
    const JointTrack pos = fk_track(skel, *item.motion);
    gk[i] = kinematic_features(pos);
    gg[i] = geometric_features(skel, pos);
    auto& s = rep.sequences[i];
    s.name = item.name;
    s.freezing_rate = freezing_rate(*item.motion, th);
    if (item.beats) {
      const auto ba = beat_align(pos, *item.beats, beat_opts);
      s.beat_align = ba.score;
      s.beat_distance = ba.mean_distance;
      s.no_kinematic_beats = ba.no_kinematic_beats;
    }
  });
  parallel_for(nr, [&](int i) {
    const JointTrack pos = fk_track(skel, *reference[i]);
    rk[i] = kinematic_features(pos);
    rg[i] = geometric_features(skel, pos);
  });

  int with_beats = 0;
  for (int i = 0; i < ng; ++i) {
    const auto& s = rep.sequences[i];
    rep.freezing_rate += s.freezing_rate / ng;
    if (generated[i].beats) {
      ++with_beats;
      rep.beat_align += s.beat_align;
      rep.beat_distance += s.beat_distance;
      if (s.no_kinematic_beats) rep.warnings.push_back(fmt::format("{}: no kinematic beats", s.name));
    }
  }
  if (with_beats > 0) {
    rep.beat_align /= with_beats;
    rep.beat_distance /= with_beats;
  } else {
    rep.warnings.push_back("no music beats given; beat alignment not scored");
  }
  if (ng >= 2) {
    rep.dist_k = diversity(gk);
    rep.dist_g = diversity(gg);
  } else {
    rep.warnings.push_back("diversity needs at least 2 generated sequences");
  }
  if (ng >= 2 && nr >= 2) {
    rep.fid_k = frechet_distance(gk, rk);
    rep.fid_g = frechet_distance(gg, rg);
  } else {
    rep.warnings.push_back("FID needs at least 2 sequences per set");
  }
  return rep;
}

}  // namespace longdance
