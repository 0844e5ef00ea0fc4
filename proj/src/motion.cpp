#include "longdance/motion.hpp"

#include <fmt/format.h>

#include <Eigen/Geometry>
#include <cmath>

#include "longdance/error.hpp"

namespace longdance {

namespace {

constexpr double kDegenerateNorm = 1e-8;

}  // namespace

int Skeleton::index_of(std::string_view name) const {
  for (size_t i = 0; i < joint_names.size(); ++i) {
    if (joint_names[i] == name) return static_cast<int>(i);
  }
  return -1;
}

void Skeleton::validate() const {
  const int j = num_joints();
  if (j == 0) throw InvalidArgument("skeleton has no joints");
  if (static_cast<int>(joint_names.size()) != j || static_cast<int>(offsets.size()) != j) {
    throw InvalidArgument(fmt::format("skeleton arrays disagree: {} names, {} parents, {} offsets", joint_names.size(),
                                      j, offsets.size()));
  }
  if (parents[0] != -1) throw InvalidArgument("joint 0 must be the root (parent -1)");
  if (!offsets[0].isZero()) throw InvalidArgument("root offset must be zero");
  for (int i = 1; i < j; ++i) {
    if (parents[i] < 0 || parents[i] >= i) {
      throw InvalidArgument(fmt::format("joint {} has parent {}; parents must precede children", i, parents[i]));
    }
  }
  if (foot_joints.empty()) throw InvalidArgument("skeleton needs at least one foot joint");
  for (int f : foot_joints) {
    if (f < 0 || f >= j) throw InvalidArgument(fmt::format("foot joint index {} out of range", f));
  }
}

Skeleton Skeleton::smpl24() {
  Skeleton s;
  s.joint_names = {"pelvis",     "left_hip",    "right_hip",    "spine1",      "left_knee",     "right_knee",
                   "spine2",     "left_ankle",  "right_ankle",  "spine3",      "left_foot",     "right_foot",
                   "neck",       "left_collar", "right_collar", "head",        "left_shoulder", "right_shoulder",
                   "left_elbow", "right_elbow", "left_wrist",   "right_wrist", "left_hand",     "right_hand"};
  s.parents = {-1, 0, 0, 0, 1, 2, 3, 4, 5, 6, 7, 8, 9, 9, 9, 12, 13, 14, 16, 17, 18, 19, 20, 21};
  s.offsets = {
      {0.0, 0.0, 0.0},
      {0.05858135, -0.08228004, -0.01766408},
      {-0.06030973, -0.09051332, -0.01354254},
      {0.00443945, 0.12440352, -0.03838522},
      {0.04345142, -0.38646945, 0.00803700},
      {-0.04325663, -0.38368791, -0.00484304},
      {0.00448844, 0.13795640, 0.02682033},
      {-0.01479032, -0.42687458, -0.03742800},
      {0.01905555, -0.42004550, -0.03456167},
      {-0.00226458, 0.05603239, 0.00285505},
      {0.04105436, -0.06028581, 0.12204243},
      {-0.03483987, -0.06210566, 0.13032329},
      {-0.01339020, 0.21163553, -0.03346758},
      {0.07170245, 0.11399969, -0.01889817},
      {-0.08295366, 0.11247234, -0.02370739},
      {0.01011321, 0.08893734, 0.05040987},
      {0.12292141, 0.04520509, -0.01904600},
      {-0.11322832, 0.04685326, -0.00847207},
      {0.25533190, -0.01564902, -0.02294649},
      {-0.26012748, -0.01436928, -0.03126873},
      {0.26570925, 0.01269811, -0.00737473},
      {-0.26910836, 0.00679372, -0.00602676},
      {0.08669055, -0.01063603, -0.01559429},
      {-0.08875370, -0.00865157, -0.01010708},
  };
  s.foot_joints = {7, 8, 10, 11};
  return s;
}

Skeleton Skeleton::toy5() {
  Skeleton s;
  s.joint_names = {"root", "spine", "head", "left_foot", "right_foot"};
  s.parents = {-1, 0, 1, 0, 0};
  s.offsets = {{0, 0, 0}, {0, 0.3, 0}, {0, 0.3, 0}, {0.1, -0.5, 0}, {-0.1, -0.5, 0}};
  s.foot_joints = {3, 4};
  return s;
}

Mat3 rot6d_decode(const Rotation6D& r) {
  const Vec3 a1(r.v[0], r.v[1], r.v[2]);
  const Vec3 a2(r.v[3], r.v[4], r.v[5]);
  const double n1 = a1.norm();
  if (!(n1 >= kDegenerateNorm)) throw DegenerateRotationError("first 6D column is near zero");
  const Vec3 b1 = a1 / n1;
  const Vec3 u2 = a2 - b1.dot(a2) * b1;
  const double n2 = u2.norm();
  if (!(n2 >= kDegenerateNorm)) {
    throw DegenerateRotationError("6D columns are parallel or the second column is near zero");
  }
  const Vec3 b2 = u2 / n2;
  Mat3 m;
  m.col(0) = b1;
  m.col(1) = b2;
  m.col(2) = b1.cross(b2);
  return m;
}

Rotation6D rot6d_encode(const Mat3& m) {
  const double err = (m.transpose() * m - Mat3::Identity()).cwiseAbs().maxCoeff();
  if (!(err < 1e-4) || !(m.determinant() > 0)) {
    throw InvalidRotationError(
        fmt::format("matrix is not a rotation (orthonormality error {:.3g}, det {:.3g})", err, m.determinant()));
  }
  return {{m(0, 0), m(1, 0), m(2, 0), m(0, 1), m(1, 1), m(2, 1)}};
}

Mat3 axis_angle_matrix(const Vec3& axis, double angle) {
  return Eigen::AngleAxisd(angle, axis.normalized()).toRotationMatrix();
}

std::vector<Vec3> forward_kinematics(const Skeleton& skel, const Vec3& root_translation,
                                     std::span<const Rotation6D> joint_rotations) {
  const int j = skel.num_joints();
  if (static_cast<int>(joint_rotations.size()) != j) {
    throw ShapeError(fmt::format("expected {} joint rotations, got {}", j, joint_rotations.size()));
  }
  std::vector<Mat3> global(j);
  std::vector<Vec3> pos(j);
  global[0] = rot6d_decode(joint_rotations[0]);
  pos[0] = root_translation;
  for (int i = 1; i < j; ++i) {
    const int p = skel.parents[i];
    global[i] = global[p] * rot6d_decode(joint_rotations[i]);
    pos[i] = pos[p] + global[p] * skel.offsets[i];
  }
  return pos;
}

Eigen::VectorXf assemble_frame(const MotionFrame& frame, const FrameLayout& layout) {
  if (frame.contacts.size() != layout.contacts || static_cast<int>(frame.joint_rotations.size()) != layout.joints ||
      static_cast<int>(frame.joint_positions.size()) != layout.joints ||
      static_cast<int>(frame.joint_velocities.size()) != layout.joints) {
    throw ShapeError("motion frame parts do not match the layout");
  }
  Eigen::VectorXf out(layout.dim());
  for (int c = 0; c < layout.contacts; ++c) out[c] = static_cast<float>(frame.contacts[c]);
  for (int k = 0; k < 3; ++k) out[layout.root_begin() + k] = static_cast<float>(frame.root_translation[k]);
  for (int jt = 0; jt < layout.joints; ++jt) {
    for (int k = 0; k < 6; ++k) {
      out[layout.rotations_begin() + 6 * jt + k] = static_cast<float>(frame.joint_rotations[jt].v[k]);
    }
    for (int k = 0; k < 3; ++k) {
      out[layout.positions_begin() + 3 * jt + k] = static_cast<float>(frame.joint_positions[jt][k]);
      out[layout.velocities_begin() + 3 * jt + k] = static_cast<float>(frame.joint_velocities[jt][k]);
    }
  }
  return out;
}

MotionFrame disassemble_frame(std::span<const float> flat, const FrameLayout& layout) {
  if (static_cast<int>(flat.size()) != layout.dim()) {
    throw ShapeError(fmt::format("flat frame has {} values, layout expects {}", flat.size(), layout.dim()));
  }
  MotionFrame f;
  f.contacts.resize(layout.contacts);
  for (int c = 0; c < layout.contacts; ++c) f.contacts[c] = flat[c];
  for (int k = 0; k < 3; ++k) f.root_translation[k] = flat[layout.root_begin() + k];
  f.joint_rotations.resize(layout.joints);
  f.joint_positions.resize(layout.joints);
  f.joint_velocities.resize(layout.joints);
  for (int jt = 0; jt < layout.joints; ++jt) {
    for (int k = 0; k < 6; ++k) f.joint_rotations[jt].v[k] = flat[layout.rotations_begin() + 6 * jt + k];
    for (int k = 0; k < 3; ++k) {
      f.joint_positions[jt][k] = flat[layout.positions_begin() + 3 * jt + k];
      f.joint_velocities[jt][k] = flat[layout.velocities_begin() + 3 * jt + k];
    }
  }
  return f;
}

Vec3 MotionSequence::root_translation(int i) const {
  const float* row = frames.data() + static_cast<std::ptrdiff_t>(i) * frames.cols() + layout.root_begin();
  return {row[0], row[1], row[2]};
}

Rotation6D MotionSequence::rotation(int i, int joint) const {
  const float* row =
      frames.data() + static_cast<std::ptrdiff_t>(i) * frames.cols() + layout.rotations_begin() + 6 * joint;
  return {{row[0], row[1], row[2], row[3], row[4], row[5]}};
}

void MotionSequence::validate() const {
  if (!(fps > 0)) throw InvalidArgument("fps must be positive");
  if (frames.cols() != layout.dim()) {
    throw InvalidArgument(fmt::format("frames have {} channels, layout expects {}", frames.cols(), layout.dim()));
  }
}

JointTrack JointTrack::select_joints(std::span<const int> joints) const {
  JointTrack out{fps, static_cast<int>(joints.size()), {}};
  const int n = num_frames();
  out.xyz.reserve(static_cast<size_t>(n) * joints.size());
  for (int f = 0; f < n; ++f) {
    for (int j : joints) out.xyz.push_back(at(f, j));
  }
  return out;
}

JointTrack compute_velocities(const JointTrack& positions) {
  const int n = positions.num_frames();
  if (n < 2) throw InvalidArgument("velocities need at least two frames");
  JointTrack vel{positions.fps, positions.num_joints, std::vector<Vec3>(positions.xyz.size())};
  for (int f = 0; f + 1 < n; ++f) {
    for (int j = 0; j < positions.num_joints; ++j) {
      vel.at(f, j) = (positions.at(f + 1, j) - positions.at(f, j)) * positions.fps;
    }
  }
  for (int j = 0; j < positions.num_joints; ++j) vel.at(n - 1, j) = vel.at(n - 2, j);
  return vel;
}

JointTrack compute_velocities(const MotionSequence& seq) { return compute_velocities(positions_track(seq)); }

JointTrack positions_track(const MotionSequence& seq) {
  const FrameLayout& l = seq.layout;
  JointTrack t{seq.fps, l.joints, {}};
  t.xyz.reserve(static_cast<size_t>(seq.num_frames()) * l.joints);
  for (int f = 0; f < seq.num_frames(); ++f) {
    const auto row = seq.frame(f);
    for (int j = 0; j < l.joints; ++j) {
      const int o = l.positions_begin() + 3 * j;
      t.xyz.emplace_back(row[o], row[o + 1], row[o + 2]);
    }
  }
  return t;
}

JointTrack fk_track(const Skeleton& skel, const MotionSequence& seq) {
  if (seq.layout.joints != skel.num_joints()) throw ShapeError("sequence and skeleton joint counts differ");
  JointTrack t{seq.fps, skel.num_joints(), {}};
  t.xyz.reserve(static_cast<size_t>(seq.num_frames()) * skel.num_joints());
  std::vector<Rotation6D> rots(skel.num_joints());
  for (int f = 0; f < seq.num_frames(); ++f) {
    for (int j = 0; j < skel.num_joints(); ++j) rots[j] = seq.rotation(f, j);
    const auto pos = forward_kinematics(skel, seq.root_translation(f), rots);
    t.xyz.insert(t.xyz.end(), pos.begin(), pos.end());
  }
  return t;
}

Eigen::MatrixXi label_foot_contacts(const JointTrack& feet, const ContactOptions& opts) {
  const int n = feet.num_frames();
  Eigen::MatrixXi out = Eigen::MatrixXi::Zero(n, feet.num_joints);
  for (int f = 0; f < n; ++f) {
    for (int j = 0; j < feet.num_joints; ++j) {
      double speed = 0.0;
      if (n >= 2) {
        const int a = std::min(f, n - 2);
        speed = (feet.at(a + 1, j) - feet.at(a, j)).norm() * feet.fps;
      }
      const double height = feet.at(f, j)[opts.up_axis];
      out(f, j) = (height < opts.height_thresh && speed < opts.speed_thresh) ? 1 : 0;
    }
  }
  return out;
}

MotionSequence build_motion(const Skeleton& skel, double fps, std::span<const Vec3> roots,
                            std::span<const std::vector<Rotation6D>> rotations, const ContactOptions& contact_opts) {
  if (roots.size() != rotations.size()) throw ShapeError("root and rotation frame counts differ");
  const int n = static_cast<int>(roots.size());
  const FrameLayout layout = FrameLayout::for_skeleton(skel);
  JointTrack pos{fps, skel.num_joints(), {}};
  pos.xyz.reserve(static_cast<size_t>(n) * skel.num_joints());
  for (int f = 0; f < n; ++f) {
    const auto p = forward_kinematics(skel, roots[f], rotations[f]);
    pos.xyz.insert(pos.xyz.end(), p.begin(), p.end());
  }
  const JointTrack vel = compute_velocities(pos);
  const Eigen::MatrixXi contacts = label_foot_contacts(pos.select_joints(skel.foot_joints), contact_opts);

  MotionSequence seq{fps, layout, FrameMatrix(n, layout.dim())};
  MotionFrame frame;
  frame.contacts.resize(layout.contacts);
  frame.joint_positions.resize(layout.joints);
  frame.joint_velocities.resize(layout.joints);
  for (int f = 0; f < n; ++f) {
    frame.contacts = contacts.row(f).cast<double>().transpose();
    frame.root_translation = roots[f];
    frame.joint_rotations = rotations[f];
    for (int j = 0; j < layout.joints; ++j) {
      frame.joint_positions[j] = pos.at(f, j);
      frame.joint_velocities[j] = vel.at(f, j);
    }
    seq.frames.row(f) = assemble_frame(frame, layout).transpose();
  }
  return seq;
}

}  // namespace longdance
