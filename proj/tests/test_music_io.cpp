#include <cmath>
#include <fstream>

#include "doctest.h"
#include "json.hpp"
#include "longdance/error.hpp"
#include "longdance/io.hpp"
#include "longdance/music.hpp"
#include "test_util.hpp"

using namespace longdance;
using longdance::testing::scratch_dir;

TEST_CASE("synth_music beat grid arithmetic") {
  SynthMusicOptions o;
  o.bpm = 120;
  o.duration_s = 10;
  const SynthMusic m = synth_music(o);
  CHECK(m.features.num_frames() == 600);
  CHECK(m.features.dim() == 83);
  REQUIRE(m.beats.beat_frames.size() == 20);
  for (size_t k = 0; k < m.beats.beat_frames.size(); ++k) CHECK(m.beats.beat_frames[k] == 30 * static_cast<int>(k));

  o.bpm = 90;
  o.duration_s = 4;
  const SynthMusic m90 = synth_music(o);
  CHECK(m90.beats.beat_frames.size() == 6);  // floor(4 * 90 / 60)

  const auto* onset = m.features.span("onset");
  REQUIRE(onset != nullptr);
  int impulses = 0;
  for (int f = 0; f < m.features.num_frames(); ++f) {
    const float v = m.features.frames(f, onset->begin);
    CHECK((v == 0.0f || v == 1.0f));
    impulses += v == 1.0f;
  }
  CHECK(impulses == 20);
}

TEST_CASE("synth_music is deterministic per seed and rejects bad input") {
  SynthMusicOptions o;
  o.seed = 42;
  const auto a = synth_music(o), b = synth_music(o);
  CHECK(a.features.frames == b.features.frames);
  o.seed = 43;
  CHECK(synth_music(o).features.frames != a.features.frames);
  o.duration_s = 0;
  CHECK_THROWS_AS(synth_music(o), InvalidArgument);
  o.duration_s = 4;
  o.fps = -1;
  CHECK_THROWS_AS(synth_music(o), InvalidArgument);
  o.fps = 60;
  o.bpm = 150;
  CHECK_THROWS_AS(synth_music(o), InvalidArgument);
  o.max_bpm = 160;
  CHECK_NOTHROW(synth_music(o));
}

TEST_CASE("extract_beats recovers synthesized beats for many tempos") {
  for (double bpm = 80; bpm <= 135; bpm += 5) {
    for (uint64_t seed : {0u, 1u, 7u}) {
      SynthMusicOptions o;
      o.bpm = bpm;
      o.duration_s = 9.5;
      o.seed = seed;
      const SynthMusic m = synth_music(o);
      const BeatGrid g = extract_beats(m.features, 10);
      CHECK(g.beat_frames == m.beats.beat_frames);
      CHECK(g.bpm == doctest::Approx(bpm).epsilon(0.02));
    }
  }
}

TEST_CASE("extract_beats edge cases") {
  MusicFeatureSequence seq;
  seq.channel_map = {{"mfcc", 0, 2}, {"onset", 2, 3}};
  seq.frames = FrameMatrix::Zero(100, 3);
  CHECK(extract_beats(seq, 10).beat_frames.empty());

  seq.frames(40, 2) = 0.6f;
  seq.frames(43, 2) = 0.9f;
  const BeatGrid g = extract_beats(seq, 10);
  REQUIRE(g.beat_frames.size() == 1);
  CHECK(g.beat_frames[0] == 43);

  seq.channel_map = {{"mfcc", 0, 3}};
  CHECK_THROWS_AS(extract_beats(seq, 10), InvalidArgument);
}

TEST_CASE("music feature file round trip is bit exact") {
  const auto dir = scratch_dir("music_io");
  SynthMusicOptions o;
  o.duration_s = 4;
  o.seed = 3;
  const SynthMusic m = synth_music(o);
  write_features(dir / "a.music.json", m.features, m.beats);
  const MusicFeatureSequence back = ingest_features(dir / "a.music.json");
  CHECK(back.num_frames() == 240);
  CHECK(back.dim() == 83);
  CHECK((back.channel_map == m.features.channel_map));
  CHECK(std::memcmp(back.frames.data(), m.features.frames.data(), sizeof(float) * back.frames.size()) == 0);
  const auto beats = read_beats(dir / "a.music.json");
  REQUIRE(beats.has_value());
  CHECK(beats->beat_frames == m.beats.beat_frames);
}

TEST_CASE("music ingestion rejects malformed files with typed errors") {
  const auto dir = scratch_dir("music_bad");
  MusicFeatureSequence seq;
  seq.channel_map = {{"mfcc", 0, 20}, {"chroma", 20, 30}, {"onset", 30, 35}};
  seq.frames = FrameMatrix::Random(240, 35);
  write_features(dir / "ok.music.json", seq);
  CHECK(ingest_features(dir / "ok.music.json").num_frames() == 240);

  auto header = nlohmann::json::parse(std::ifstream(dir / "ok.music.json"));
  auto write_header = [&](const std::string& name, const nlohmann::json& h) {
    std::ofstream(dir / name) << h.dump();
    return dir / name;
  };

  auto overlap = header;
  overlap["channel_map"]["chroma"] = {15, 30};
  CHECK_THROWS_AS(ingest_features(write_header("overlap.json", overlap)), SpanOverlapError);

  auto gap = header;
  gap["channel_map"]["chroma"] = {21, 30};
  CHECK_THROWS_AS(ingest_features(write_header("gap.json", gap)), HeaderError);

  auto missing = header;
  missing.erase("fps");
  CHECK_THROWS_AS(ingest_features(write_header("missing.json", missing)), HeaderError);

  auto wrong_count = header;
  wrong_count["frame_count"] = 241;
  CHECK_THROWS_AS(ingest_features(write_header("count.json", wrong_count)), FrameLengthError);

  std::ofstream(dir / "garbage.json") << "{not json";
  CHECK_THROWS_AS(ingest_features(dir / "garbage.json"), HeaderError);
}

TEST_CASE("motion files round trip in both payload variants") {
  const auto dir = scratch_dir("motion_io");
  MotionSequence seq{30.0, FrameLayout{5, 2}, FrameMatrix::Random(17, FrameLayout{5, 2}.dim())};
  write_motion(dir / "m.motion.json", seq);
  write_motion(dir / "j.motion.json", seq, PayloadFormat::kJson);
  CHECK(std::filesystem::exists(dir / "m.motion.bin"));
  for (const char* name : {"m.motion.json", "j.motion.json"}) {
    const MotionSequence back = read_motion(dir / name);
    CHECK(back.fps == 30.0);
    CHECK(back.layout == seq.layout);
    CHECK(back.frames == seq.frames);
  }
  // truncated payload
  std::filesystem::resize_file(dir / "m.motion.bin", 100);
  CHECK_THROWS_AS(read_motion(dir / "m.motion.json"), FrameLengthError);
}

TEST_CASE("skeleton files round trip and the bundled file matches the built-in body") {
  const auto dir = scratch_dir("skeleton_io");
  write_skeleton(dir / "s.json", Skeleton::toy5());
  const Skeleton back = read_skeleton(dir / "s.json");
  CHECK(back.parents == Skeleton::toy5().parents);
  CHECK(back.joint_names == Skeleton::toy5().joint_names);

  const Skeleton bundled = read_skeleton(LONGDANCE_DATA_DIR "/skeletons/smpl24.json");
  const Skeleton builtin = Skeleton::smpl24();
  CHECK(bundled.parents == builtin.parents);
  CHECK(bundled.foot_joints == builtin.foot_joints);
  for (int j = 0; j < builtin.num_joints(); ++j) CHECK((bundled.offsets[j] - builtin.offsets[j]).norm() < 1e-12);
}
