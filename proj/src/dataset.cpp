#include "longdance/dataset.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <random>
#include <set>

#include "json.hpp"
#include "longdance/error.hpp"
#include "longdance/io.hpp"

namespace longdance {

using nlohmann::json;

namespace {

constexpr const char* kManifestFormat = "longdance-manifest";

enum class Shape { kStroke, kFlex };  // A (2s - 1) or A s

struct JointOsc {
  const char* joint;
  Vec3 axis;
  double amplitude;  // radians
  Shape shape;
};

struct RootOsc {
  int axis;
  double amplitude;  // meters
  Shape shape;
};

struct Family {
  std::vector<JointOsc> joints;
  std::vector<RootOsc> root;
};

const Vec3 kX(1, 0, 0), kY(0, 1, 0), kZ(0, 0, 1);

Family bounce_family() {
  return {{{"left_hip", kX, -0.45, Shape::kFlex},
           {"right_hip", kX, -0.45, Shape::kFlex},
           {"left_knee", kX, 0.9, Shape::kFlex},
           {"right_knee", kX, 0.9, Shape::kFlex},
           {"left_ankle", kX, -0.45, Shape::kFlex},
           {"right_ankle", kX, -0.45, Shape::kFlex},
           {"spine1", kX, 0.15, Shape::kFlex},
           {"left_shoulder", kZ, 0.7, Shape::kStroke},
           {"right_shoulder", kZ, -0.7, Shape::kStroke},
           {"left_elbow", kY, 0.9, Shape::kFlex},
           {"right_elbow", kY, -0.9, Shape::kFlex},
           {"head", kX, 0.2, Shape::kStroke}},
          {{1, -0.08, Shape::kFlex}}};
}

Family sway_family() {
  return {{{"pelvis", kZ, 0.12, Shape::kStroke},
           {"spine3", kZ, -0.2, Shape::kStroke},
           {"left_hip", kZ, -0.12, Shape::kStroke},
           {"right_hip", kZ, -0.12, Shape::kStroke},
           {"left_shoulder", kY, 0.8, Shape::kStroke},
           {"right_shoulder", kY, 0.8, Shape::kStroke},
           {"left_shoulder", kZ, -0.9, Shape::kFlex},
           {"right_shoulder", kZ, 0.9, Shape::kFlex},
           {"head", kY, 0.35, Shape::kStroke}},
          {{0, 0.12, Shape::kStroke}}};
}

Family random_family(int genre) {
  const std::vector<JointOsc> pool{
      {"left_knee", kX, 0.8, Shape::kFlex},       {"right_knee", kX, 0.8, Shape::kFlex},
      {"left_hip", kX, -0.6, Shape::kStroke},     {"right_hip", kX, 0.6, Shape::kStroke},
      {"left_shoulder", kZ, 0.8, Shape::kStroke}, {"right_shoulder", kZ, -0.8, Shape::kStroke},
      {"left_shoulder", kY, 0.7, Shape::kStroke}, {"right_shoulder", kY, -0.7, Shape::kStroke},
      {"left_elbow", kY, 1.0, Shape::kFlex},      {"right_elbow", kY, -1.0, Shape::kFlex},
      {"spine2", kY, 0.3, Shape::kStroke},        {"spine1", kZ, 0.2, Shape::kStroke},
      {"head", kY, 0.4, Shape::kStroke},          {"pelvis", kY, 0.3, Shape::kStroke},
  };
  std::mt19937_64 rng(7919ULL * static_cast<uint64_t>(genre) + 13);
  std::vector<size_t> idx(pool.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::shuffle(idx.begin(), idx.end(), rng);
  std::uniform_real_distribution<double> amp(0.6, 1.3);
  Family f;
  for (size_t i = 0; i < 7; ++i) {
    auto o = pool[idx[i]];
    o.amplitude *= amp(rng);
    f.joints.push_back(o);
  }
  std::bernoulli_distribution coin(0.5);
  f.root.push_back({coin(rng) ? 0 : 2, 0.1 * amp(rng), Shape::kStroke});
  f.root.push_back({1, -0.05 * amp(rng), Shape::kFlex});
  return f;
}

Family family_for(int genre) {
  if (genre == 0) return bounce_family();
  if (genre == 1) return sway_family();
  return random_family(genre);
}

// Beat frames extended by the mean period so every frame sits between two beats.
std::vector<double> covering_beats(const BeatGrid& beats, int num_frames, double fps) {
  const double period = 60.0 * fps / beats.bpm;
  std::vector<double> b(beats.beat_frames.begin(), beats.beat_frames.end());
  if (b.empty()) b.push_back(0.0);
  while (b.front() > 0.0) b.insert(b.begin(), b.front() - period);
  while (b.back() <= num_frames) b.push_back(b.back() + period);
  return b;
}

// Stroke position in [0, 1]: rises over even beats and falls over odd ones,
// with zero slope on the beats themselves.
double stroke(const std::vector<double>& beats, double f) {
  const auto it = std::upper_bound(beats.begin(), beats.end(), f);
  const size_t k = static_cast<size_t>(std::distance(beats.begin(), it)) - 1;
  const double u = (f - beats[k]) / (beats[k + 1] - beats[k]);
  const double g = u - std::sin(2.0 * std::numbers::pi * u) / (2.0 * std::numbers::pi);
  return k % 2 == 0 ? g : 1.0 - g;
}

double shaped(Shape shape, double amplitude, double s) {
  return shape == Shape::kStroke ? amplitude * (2.0 * s - 1.0) : amplitude * s;
}

fs::path rel(const fs::path& p, const fs::path& root) { return p.is_absolute() ? p : root / p; }

}  // namespace

MotionSequence synth_dance(const Skeleton& skel, const BeatGrid& beats, int num_frames, double fps,
                           const SynthDanceOptions& opts) {
  if (num_frames < 2) throw InvalidArgument("a dance needs at least 2 frames");
  Family fam = family_for(opts.genre);
  std::mt19937_64 rng(opts.seed);
  std::uniform_real_distribution<double> jitter(0.8, 1.2);
  std::vector<int> joint_index;
  for (auto& o : fam.joints) {
    o.amplitude *= jitter(rng) * opts.energy;
    const int j = skel.index_of(o.joint);
    if (j < 0) throw InvalidArgument(fmt::format("skeleton lacks joint '{}'", o.joint));
    joint_index.push_back(j);
  }
  for (auto& r : fam.root) r.amplitude *= jitter(rng) * opts.energy;

  const auto grid = covering_beats(beats, num_frames, fps);
  const Vec3 base(0.0, 0.92, 0.0);
  std::vector<Vec3> roots(num_frames);
  std::vector<std::vector<Rotation6D>> rots(num_frames, std::vector<Rotation6D>(skel.num_joints()));
  for (int f = 0; f < num_frames; ++f) {
    const double s = stroke(grid, f);
    double e = 1.0;
    if (!opts.chunk_energy.empty()) {
      e = opts.chunk_energy[std::min<size_t>(f / opts.chunk, opts.chunk_energy.size() - 1)];
    }
    std::vector<Mat3> local(skel.num_joints(), Mat3::Identity());
    for (size_t i = 0; i < fam.joints.size(); ++i) {
      const auto& o = fam.joints[i];
      local[joint_index[i]] = local[joint_index[i]] * axis_angle_matrix(o.axis, e * shaped(o.shape, o.amplitude, s));
    }
    for (int j = 0; j < skel.num_joints(); ++j) rots[f][j] = rot6d_encode(local[j]);
    roots[f] = base;
    for (const auto& r : fam.root) roots[f][r.axis] += e * shaped(r.shape, r.amplitude, s);
  }
  return build_motion(skel, fps, roots, rots);
}

std::vector<float> genre_mfcc_offset(int genre) {
  std::mt19937_64 rng(1000 + static_cast<uint64_t>(genre));
  std::normal_distribution<float> g(0.0f, 2.0f);
  std::vector<float> v(20);
  for (auto& x : v) x = g(rng);
  return v;
}

std::vector<const ManifestEntry*> DatasetManifest::split(const std::string& tag) const {
  std::vector<const ManifestEntry*> out;
  for (const auto& e : entries) {
    if (e.split == tag) out.push_back(&e);
  }
  return out;
}

void DatasetManifest::validate(bool check_files) const {
  if (!(fps > 0)) throw HeaderError("manifest fps must be positive");
  std::set<std::string> names;
  std::set<fs::path> train_files, test_files;
  for (const auto& e : entries) {
    if (e.split != "train" && e.split != "test") {
      throw HeaderError(fmt::format("entry '{}' has unknown split '{}'", e.name, e.split));
    }
    if (!names.insert(e.name).second) throw HeaderError(fmt::format("duplicate entry '{}'", e.name));
    auto& files = e.split == "train" ? train_files : test_files;
    files.insert(e.motion);
    files.insert(e.music);
  }
  for (const auto& f : train_files) {
    if (test_files.count(f)) throw HeaderError(fmt::format("'{}' appears in both splits", f.string()));
  }
  if (!check_files) return;
  const Skeleton skel = read_skeleton(rel(skeleton, root));
  for (const auto& e : entries) {
    const auto motion = read_motion(rel(e.motion, root));
    const auto music = ingest_features(rel(e.music, root));
    if (motion.layout != FrameLayout::for_skeleton(skel)) {
      throw HeaderError(fmt::format("entry '{}': motion layout does not match the skeleton", e.name));
    }
    if (music.num_frames() != motion.num_frames()) {
      throw HeaderError(fmt::format("entry '{}': {} music frames for {} motion frames", e.name, music.num_frames(),
                                    motion.num_frames()));
    }
  }
}

DatasetManifest read_manifest(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError(fmt::format("cannot open manifest '{}'", path.string()));
  DatasetManifest m;
  try {
    const json j = json::parse(in);
    if (j.at("format").get<std::string>() != kManifestFormat) {
      throw HeaderError(fmt::format("{}: not a dataset manifest", path.string()));
    }
    m.fps = j.at("fps").get<double>();
    m.skeleton = j.at("skeleton").get<std::string>();
    for (const auto& e : j.at("entries")) {
      m.entries.push_back({e.at("name").get<std::string>(), e.at("motion").get<std::string>(),
                           e.at("music").get<std::string>(), e.at("split").get<std::string>(), e.value("genre", 0)});
    }
  } catch (const json::exception& e) {
    throw HeaderError(fmt::format("{}: {}", path.string(), e.what()));
  }
  m.root = path.parent_path();
  m.validate(false);
  return m;
}

void write_manifest(const fs::path& path, const DatasetManifest& m) {
  json entries = json::array();
  for (const auto& e : m.entries) {
    entries.push_back({{"name", e.name},
                       {"motion", e.motion.generic_string()},
                       {"music", e.music.generic_string()},
                       {"split", e.split},
                       {"genre", e.genre}});
  }
  const json j{
      {"format", kManifestFormat}, {"fps", m.fps}, {"skeleton", m.skeleton.generic_string()}, {"entries", entries}};
  write_file_atomic(path, j.dump(2) + "\n");
}

Skeleton load_skeleton(const DatasetManifest& m) { return read_skeleton(rel(m.skeleton, m.root)); }

std::vector<LoadedEntry> load_split(const DatasetManifest& m, const std::string& split) {
  std::vector<LoadedEntry> out;
  for (const auto* e : m.split(split)) {
    LoadedEntry le;
    le.pair.name = e->name;
    le.pair.motion = read_motion(rel(e->motion, m.root));
    const fs::path music = rel(e->music, m.root);
    le.pair.music = ingest_features(music);
    le.beats = read_beats(music);
    le.genre = e->genre;
    out.push_back(std::move(le));
  }
  return out;
}

DatasetManifest synth_dataset(const fs::path& out_dir, const SynthDataOptions& opts) {
  if (opts.sequences < 1 || opts.genres < 1) throw InvalidArgument("need at least one sequence and one genre");
  if (opts.test_fraction < 0 || opts.test_fraction >= 1) throw InvalidArgument("test_fraction must be in [0, 1)");
  const Skeleton skel = Skeleton::smpl24();
  fs::create_directories(out_dir / "motion");
  fs::create_directories(out_dir / "music");
  write_skeleton(out_dir / "skeleton.json", skel);

  const int n = opts.sequences;
  const int n_test = std::min(n - 1, static_cast<int>(std::ceil(n * opts.test_fraction)));
  std::set<int> test;
  for (int j = 0; j < n_test; ++j) test.insert(std::min(n - 1, j * n / n_test + j % opts.genres));

  DatasetManifest m;
  m.root = out_dir;
  m.skeleton = "skeleton.json";
  m.fps = opts.fps;
  std::mt19937_64 rng(opts.seed);
  for (int i = 0; i < n; ++i) {
    const int genre = i % opts.genres;
    // the handcrafted families keep to separate tempo bands
    const double lo = genre == 0 ? 110.0 : genre == 1 ? 80.0 : 80.0;
    const double hi = genre == 0 ? 135.0 : genre == 1 ? 105.0 : 135.0;
    SynthMusicOptions mo;
    mo.bpm = std::uniform_real_distribution<double>(lo, hi)(rng);
    mo.duration_s = opts.duration_s;
    mo.fps = opts.fps;
    mo.seed = rng();
    mo.mfcc_offset = genre_mfcc_offset(genre);
    const SynthMusic music = synth_music(mo);
    const MotionSequence dance = synth_dance(skel, music.beats, music.features.num_frames(), opts.fps,
                                             {.genre = genre, .seed = rng(), .chunk_energy = {}});
    const std::string name = fmt::format("seq_{:03d}", i);
    const fs::path motion_rel = fs::path("motion") / (name + ".motion.json");
    const fs::path music_rel = fs::path("music") / (name + ".music.json");
    write_motion(out_dir / motion_rel, dance);
    write_features(out_dir / music_rel, music.features, music.beats);
    m.entries.push_back({name, motion_rel, music_rel, test.count(i) ? "test" : "train", genre});
  }
  write_manifest(out_dir / "manifest.json", m);
  const json echo{{"sequences", opts.sequences},   {"genres", opts.genres}, {"seed", opts.seed},
                  {"duration_s", opts.duration_s}, {"fps", opts.fps},       {"test_fraction", opts.test_fraction}};
  write_file_atomic(out_dir / "synth_config.json", echo.dump(2) + "\n");
  return m;
}

std::vector<MotionSequence> calibration_fixture(const Skeleton& skel, uint64_t seed, int sequences, double duration_s) {
  std::mt19937_64 rng(seed);
  std::bernoulli_distribution quiet(0.25);
  std::uniform_real_distribution<double> level(-2.5, -1.0), vigor(0.8, 1.2);
  std::vector<MotionSequence> out;
  for (int i = 0; i < sequences; ++i) {
    SynthMusicOptions mo;
    mo.bpm = std::uniform_real_distribution<double>(80.0, 135.0)(rng);
    mo.duration_s = duration_s;
    mo.seed = rng();
    const SynthMusic music = synth_music(mo);
    const int frames = music.features.num_frames();
    SynthDanceOptions o;
    o.genre = i % 2;
    o.seed = rng();
    for (int c = 0; c < (frames + o.chunk - 1) / o.chunk; ++c) {
      o.chunk_energy.push_back(quiet(rng) ? std::pow(10.0, level(rng)) : vigor(rng));
    }
    out.push_back(synth_dance(skel, music.beats, frames, mo.fps, o));
  }
  return out;
}

CalibrationResult calibrate_freezing(const std::vector<MotionSequence>& reference, double target_rate, int chunk) {
  if (target_rate < 0.0 || target_rate > 1.0) throw InvalidArgument("target freezing rate must be in [0, 1]");
  std::vector<double> pose, trans;
  std::vector<ChunkActivity> acts;
  for (const auto& seq : reference) {
    acts.push_back(chunk_activity(seq, chunk));
    pose.insert(pose.end(), acts.back().pose.begin(), acts.back().pose.end());
    trans.insert(trans.end(), acts.back().trans.begin(), acts.back().trans.end());
  }
  if (pose.empty()) throw InvalidArgument("no reference chunks");
  auto median = [](std::vector<double> v) {
    std::nth_element(v.begin(), v.begin() + v.size() / 2, v.end());
    return std::max(v[v.size() / 2], 1e-12);
  };
  const double mp = median(pose), mt = median(trans);

  // a chunk freezes once the common scale reaches max(pose / mp, trans / mt)
  std::vector<double> needed(pose.size());
  for (size_t c = 0; c < pose.size(); ++c) needed[c] = std::max(pose[c] / mp, trans[c] / mt);
  std::sort(needed.begin(), needed.end());
  const size_t k = static_cast<size_t>(std::ceil(target_rate * static_cast<double>(needed.size()) - 1e-9));

  CalibrationResult r;
  r.scale = k == 0 ? 0.0 : needed[k - 1];
  r.thresholds = {r.scale * mp, r.scale * mt, chunk};
  size_t frozen = 0;
  for (const auto& a : acts) {
    frozen += static_cast<size_t>(std::llround(freezing_rate(a, r.thresholds) * static_cast<double>(a.pose.size())));
  }
  r.achieved_rate = static_cast<double>(frozen) / static_cast<double>(needed.size());
  return r;
}

}  // namespace longdance
