#include "longdance/tensor_kinematics.hpp"

#include "longdance/error.hpp"

namespace longdance {

using torch::indexing::Slice;

SkeletonTensors SkeletonTensors::from(const Skeleton& skel) {
  skel.validate();
  SkeletonTensors st;
  st.parents.assign(skel.parents.begin(), skel.parents.end());
  st.foot_joints.assign(skel.foot_joints.begin(), skel.foot_joints.end());
  st.offsets = torch::empty({skel.num_joints(), 3}, torch::kFloat64);
  auto acc = st.offsets.accessor<double, 2>();
  for (int j = 0; j < skel.num_joints(); ++j) {
    for (int k = 0; k < 3; ++k) acc[j][k] = skel.offsets[j][k];
  }
  return st;
}

torch::Tensor rot6d_to_matrix(const torch::Tensor& r6) {
  if (r6.size(-1) != 6) throw ShapeError("6D rotations need a trailing dimension of 6");
  const auto a1 = r6.index({"...", Slice(0, 3)});
  const auto a2 = r6.index({"...", Slice(3, 6)});
  const auto b1 = a1 / a1.norm(2, -1, true).clamp_min(1e-8);
  const auto u2 = a2 - (b1 * a2).sum(-1, true) * b1;
  const auto b2 = u2 / u2.norm(2, -1, true).clamp_min(1e-8);
  const auto b3 = torch::linalg_cross(b1, b2, -1);
  return torch::stack({b1, b2, b3}, -1);
}

torch::Tensor forward_kinematics(const SkeletonTensors& skel, const torch::Tensor& root,
                                 const torch::Tensor& rotations) {
  const int64_t j = skel.num_joints();
  if (rotations.dim() < 2 || rotations.size(-2) != j || rotations.size(-1) != 6) {
    throw ShapeError("rotations must be [..., J, 6] for the skeleton's J");
  }
  if (root.size(-1) != 3) throw ShapeError("root translation must be [..., 3]");
  const auto local = rot6d_to_matrix(rotations);  // [..., J, 3, 3]
  const auto offsets = skel.offsets.to(rotations.dtype());
  std::vector<torch::Tensor> global(j), pos(j);
  global[0] = local.select(-3, 0);
  pos[0] = root;
  for (int64_t i = 1; i < j; ++i) {
    const int64_t p = skel.parents[i];
    global[i] = torch::matmul(global[p], local.select(-3, i));
    pos[i] = pos[p] + torch::matmul(global[p], offsets[i]);
  }
  return torch::stack(pos, -2);
}

torch::Tensor fk_from_frames(const SkeletonTensors& skel, const FrameLayout& layout, const torch::Tensor& frames) {
  if (frames.size(-1) != layout.dim()) throw ShapeError("frame width disagrees with the layout");
  const auto root = frames.index({"...", Slice(layout.root_begin(), layout.root_begin() + 3)});
  auto rot_flat = frames.index({"...", Slice(layout.rotations_begin(), layout.positions_begin())});
  auto shape = rot_flat.sizes().vec();
  shape.back() = layout.joints;
  shape.push_back(6);
  return forward_kinematics(skel, root, rot_flat.reshape(shape));
}

torch::Tensor to_tensor(const FrameMatrix& m) {
  return torch::from_blob(const_cast<float*>(m.data()), {m.rows(), m.cols()}, torch::kFloat32).clone();
}

FrameMatrix to_frame_matrix(const torch::Tensor& t) {
  const auto c = t.detach().to(torch::kFloat32).contiguous();
  if (c.dim() != 2) throw ShapeError("expected a 2-D tensor");
  FrameMatrix m(c.size(0), c.size(1));
  std::memcpy(m.data(), c.data_ptr<float>(), sizeof(float) * static_cast<size_t>(m.size()));
  return m;
}

}  // namespace longdance
