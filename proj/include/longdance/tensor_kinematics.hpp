#pragma once

#include <torch/torch.h>

#include <vector>

#include "longdance/motion.hpp"

namespace longdance {

/// Skeleton data in tensor form for batched, differentiable kinematics.
struct SkeletonTensors {
  std::vector<int64_t> parents;
  torch::Tensor offsets;  // [J, 3], float64
  std::vector<int64_t> foot_joints;

  static SkeletonTensors from(const Skeleton& skel);
  int64_t num_joints() const { return static_cast<int64_t>(parents.size()); }
};

/// [..., 6] -> [..., 3, 3] with columns (b1, b2, b1 x b2). Norms are clamped
/// at 1e-8 instead of throwing so the op stays total inside training graphs.
torch::Tensor rot6d_to_matrix(const torch::Tensor& r6);

/// root [..., 3], rotations [..., J, 6] -> joint positions [..., J, 3].
torch::Tensor forward_kinematics(const SkeletonTensors& skel, const torch::Tensor& root,
                                 const torch::Tensor& rotations);

/// Runs forward kinematics on flat frames [..., D] laid out per `layout`.
torch::Tensor fk_from_frames(const SkeletonTensors& skel, const FrameLayout& layout, const torch::Tensor& frames);

/// Copies a frame matrix into a float32 tensor [rows, cols].
torch::Tensor to_tensor(const FrameMatrix& m);
/// Copies a 2-D tensor back into a frame matrix.
FrameMatrix to_frame_matrix(const torch::Tensor& t);

}  // namespace longdance
