#include "doctest.h"
#include "longdance/error.hpp"
#include "longdance/longgen.hpp"
#include "toy_data.hpp"

using namespace longdance;

TEST_CASE("window plan arithmetic") {
  const RunConfig::Windows w;
  const auto plan = window_plan(1200, w, 1200);
  REQUIRE(plan.size() == 54);
  CHECK(plan.front().past == FrameRange{0, 120});
  CHECK(plan.front().future == FrameRange{120, 140});
  CHECK(plan.front().music == FrameRange{0, 240});
  for (size_t i = 1; i < plan.size(); ++i) {
    CHECK(plan[i].future.begin == plan[i - 1].future.end);
    CHECK(plan[i].past.end == plan[i].future.begin);
    CHECK(plan[i].past.size() == 120);
    CHECK(plan[i].music.begin == plan[i].past.begin);
  }
  CHECK(plan.back().future.end == 1200);
  CHECK(plan.back().music_available == FrameRange{1060, 1200});

  CHECK(window_plan(120, w, 500).empty());
  CHECK(window_plan(160, w, 500).size() == 2);
  CHECK(window_plan(161, w, 500).size() == 3);
  CHECK(window_plan(150, w, 500).back().future.end == 160);
  CHECK_THROWS_AS(window_plan(119, w, 500), InvalidArgument);
}

TEST_CASE("autoregressive generation") {
  const auto pairs = testing::toy_pairs(1, 4.0);
  auto model = DanceModel::create(testing::toy_config(0), Skeleton::smpl24(), pairs[0].music.dim());
  fit_normalizers(model, pairs);
  MotionSequence seed = pairs[0].motion;
  seed.frames = seed.frames.topRows(120).eval();

  GenerationRequest req{pairs[0].music, seed, 120, 7, {}};
  int calls = 0;
  req.on_window = [&](const GenerationWindow&) { ++calls; };
  const auto same = generate_long(model, req);
  CHECK(calls == 0);
  CHECK(same.frames == seed.frames);

  // past windows seen by the denoiser: seed first, then generated frames
  std::vector<torch::Tensor> pasts;
  Denoiser spy = [&](const ConditioningContext& ctx) {
    pasts.push_back(ctx.past.clone());
    return torch::zeros_like(ctx.future);
  };
  req.target_frames = 160;
  calls = 0;
  const auto out = generate_long(model, spy, req);
  CHECK(calls == 2);
  CHECK(out.num_frames() == 160);
  CHECK(out.frames.topRows(120) == seed.frames);
  REQUIRE(pasts.size() == 2 * model.schedule.T);
  const auto first = model.motion_norm.denormalize(pasts.front()[0]);
  CHECK(torch::allclose(first, to_tensor(seed.frames), 1e-4, 1e-4));
  // x0 = 0 in normalized units is the per-channel mean
  const auto second = model.motion_norm.denormalize(pasts.back()[0]);
  const auto mean = model.motion_norm.mean.unsqueeze(0).expand({20, -1});
  CHECK(torch::allclose(second.narrow(0, 100, 20), mean, 1e-4, 1e-4));
  CHECK(torch::allclose(second.narrow(0, 0, 100), to_tensor(seed.frames).narrow(0, 20, 100), 1e-4, 1e-4));

  // long request past the end of the music: zero padding, fixed length
  req.target_frames = 300;
  const auto a = generate_long(model, req);
  const auto b = generate_long(model, req);
  CHECK(a.num_frames() == 300);
  CHECK(a.frames == b.frames);
  CHECK(a.frames.allFinite());
  req.seed = 8;
  CHECK(generate_long(model, req).frames != a.frames);
}

TEST_CASE("generation errors") {
  const auto pairs = testing::toy_pairs(1, 4.0);
  auto model = DanceModel::create(testing::toy_config(0), Skeleton::smpl24(), pairs[0].music.dim());
  MotionSequence seed = pairs[0].motion;
  seed.frames = seed.frames.topRows(100).eval();
  CHECK_THROWS_AS(generate_long(model, {pairs[0].music, seed, 200, 0, {}}), ShapeError);
  seed.frames = pairs[0].motion.frames.topRows(120).eval();
  MusicFeatureSequence empty = pairs[0].music;
  empty.frames.resize(0, empty.frames.cols());
  CHECK_THROWS_AS(generate_long(model, {empty, seed, 200, 0, {}}), InvalidArgument);
}
