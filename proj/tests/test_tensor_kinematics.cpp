#include <random>

#include "doctest.h"
#include "longdance/tensor_kinematics.hpp"
#include "test_util.hpp"

using namespace longdance;

TEST_CASE("tensor forward kinematics agrees with the scalar implementation") {
  const Skeleton skel = Skeleton::smpl24();
  const auto st = SkeletonTensors::from(skel);
  std::mt19937_64 rng(21);
  std::normal_distribution<double> g;
  const int batch = 6;
  auto root = torch::empty({batch, 3}, torch::kFloat64);
  auto rots = torch::empty({batch, skel.num_joints(), 6}, torch::kFloat64);
  for (int b = 0; b < batch; ++b) {
    for (int k = 0; k < 3; ++k) root[b][k] = g(rng);
    for (int j = 0; j < skel.num_joints(); ++j) {
      for (int k = 0; k < 6; ++k) rots[b][j][k] = g(rng);
    }
  }
  const auto pos = forward_kinematics(st, root, rots);
  REQUIRE((pos.sizes() == std::vector<int64_t>{batch, skel.num_joints(), 3}));
  for (int b = 0; b < batch; ++b) {
    std::vector<Rotation6D> r(skel.num_joints());
    for (int j = 0; j < skel.num_joints(); ++j) {
      for (int k = 0; k < 6; ++k) r[j].v[k] = rots[b][j][k].item<double>();
    }
    const Vec3 rt(root[b][0].item<double>(), root[b][1].item<double>(), root[b][2].item<double>());
    const auto ref = forward_kinematics(skel, rt, r);
    for (int j = 0; j < skel.num_joints(); ++j) {
      for (int k = 0; k < 3; ++k) CHECK(pos[b][j][k].item<double>() == doctest::Approx(ref[j][k]).epsilon(1e-10));
    }
  }
}

TEST_CASE("fk_from_frames reads root and rotation channels") {
  const Skeleton skel = Skeleton::toy5();
  const auto st = SkeletonTensors::from(skel);
  const FrameLayout layout = FrameLayout::for_skeleton(skel);
  std::vector<Vec3> roots{{0, 1, 0}, {0.5, 1, 0}};
  std::vector<std::vector<Rotation6D>> rots(2, std::vector<Rotation6D>(5));
  const MotionSequence seq = build_motion(skel, 60.0, roots, rots);
  const auto frames = to_tensor(seq.frames).to(torch::kFloat64);
  const auto pos = fk_from_frames(st, layout, frames);
  const auto stored = frames.narrow(1, layout.positions_begin(), 3 * layout.joints).reshape({2, 5, 3});
  CHECK(torch::allclose(pos, stored, 1e-6, 1e-6));
}

TEST_CASE("frame matrix tensor conversion round trip") {
  FrameMatrix m = FrameMatrix::Random(7, 4);
  CHECK(to_frame_matrix(to_tensor(m)) == m);
}
