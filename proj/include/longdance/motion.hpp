#pragma once

#include <Eigen/Core>
#include <array>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace longdance {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

/// Row-major frame matrix: one row per frame, one column per feature channel.
using FrameMatrix = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Joint hierarchy. Joints are stored in topological order: every joint's
/// parent has a smaller index, and joint 0 is the root (parent -1).
struct Skeleton {
  std::vector<std::string> joint_names;
  std::vector<int> parents;
  std::vector<Vec3> offsets;  // meters, relative to the parent joint
  std::vector<int> foot_joints;

  int num_joints() const { return static_cast<int>(parents.size()); }
  int num_contacts() const { return static_cast<int>(foot_joints.size()); }

  /// Index of the named joint, or -1.
  int index_of(std::string_view name) const;

  /// Throws InvalidArgument when the hierarchy, offsets or foot list are inconsistent.
  void validate() const;

  /// SMPL-style 24-joint body, y-up, facing +z, heels and toes as feet.
  static Skeleton smpl24();

  /// Five-joint chain used by small tests: root, spine, head, left_foot, right_foot.
  static Skeleton toy5();
};

/// First two columns of a rotation matrix, column-major:
/// (c1.x, c1.y, c1.z, c2.x, c2.y, c2.z).
struct Rotation6D {
  std::array<double, 6> v{1, 0, 0, 0, 1, 0};

  static Rotation6D identity() { return {}; }
  bool operator==(const Rotation6D&) const = default;
};

/// Gram-Schmidt decode. Throws DegenerateRotationError when either implied
/// column (after removing the projection on the first) has norm below 1e-8.
Mat3 rot6d_decode(const Rotation6D& r);

/// Throws InvalidRotationError unless `m` is orthonormal with det +1 (to 1e-4).
Rotation6D rot6d_encode(const Mat3& m);

Mat3 axis_angle_matrix(const Vec3& axis, double angle);

/// World joint positions from the root translation and per-joint local rotations.
std::vector<Vec3> forward_kinematics(const Skeleton& skel, const Vec3& root_translation,
                                     std::span<const Rotation6D> joint_rotations);

/// Flat per-frame layout:
///   contacts | root translation | 6D rotations | positions | velocities
struct FrameLayout {
  int joints = 0;
  int contacts = 0;

  static constexpr int kVersion = 1;

  static FrameLayout for_skeleton(const Skeleton& skel) { return {skel.num_joints(), skel.num_contacts()}; }

  int contacts_begin() const { return 0; }
  int root_begin() const { return contacts; }
  int rotations_begin() const { return contacts + 3; }
  int positions_begin() const { return contacts + 3 + 6 * joints; }
  int velocities_begin() const { return contacts + 3 + 9 * joints; }
  int dim() const { return contacts + 3 + 12 * joints; }

  bool operator==(const FrameLayout&) const = default;
};

struct MotionFrame {
  Eigen::VectorXd contacts;
  Vec3 root_translation = Vec3::Zero();
  std::vector<Rotation6D> joint_rotations;
  std::vector<Vec3> joint_positions;
  std::vector<Vec3> joint_velocities;
};

/// Throws ShapeError when the parts do not match the layout.
Eigen::VectorXf assemble_frame(const MotionFrame& frame, const FrameLayout& layout);
/// Throws ShapeError when `flat` is not `layout.dim()` long.
MotionFrame disassemble_frame(std::span<const float> flat, const FrameLayout& layout);

struct MotionSequence {
  double fps = 60.0;
  FrameLayout layout;
  FrameMatrix frames;

  int num_frames() const { return static_cast<int>(frames.rows()); }
  std::span<const float> frame(int i) const {
    return {frames.data() + static_cast<std::ptrdiff_t>(i) * frames.cols(), static_cast<size_t>(frames.cols())};
  }
  Vec3 root_translation(int i) const;
  Rotation6D rotation(int i, int joint) const;

  /// Throws InvalidArgument when fps <= 0 or the column count disagrees with the layout.
  void validate() const;
};

/// Dense per-frame, per-joint 3-vectors (positions or velocities).
struct JointTrack {
  double fps = 60.0;
  int num_joints = 0;
  std::vector<Vec3> xyz;  // frame-major

  int num_frames() const { return num_joints == 0 ? 0 : static_cast<int>(xyz.size()) / num_joints; }
  const Vec3& at(int frame, int joint) const { return xyz[static_cast<size_t>(frame) * num_joints + joint]; }
  Vec3& at(int frame, int joint) { return xyz[static_cast<size_t>(frame) * num_joints + joint]; }

  JointTrack select_joints(std::span<const int> joints) const;
};

/// Forward differences scaled by fps; the last frame repeats the previous
/// velocity. Throws InvalidArgument for fewer than two frames.
JointTrack compute_velocities(const JointTrack& positions);
JointTrack compute_velocities(const MotionSequence& seq);

/// Stored joint-position channels of a sequence.
JointTrack positions_track(const MotionSequence& seq);
/// Positions recomputed by forward kinematics from the root and rotation channels.
JointTrack fk_track(const Skeleton& skel, const MotionSequence& seq);

struct ContactOptions {
  double height_thresh = 0.05;  // meters above the ground plane
  double speed_thresh = 0.15;   // m/s
  int up_axis = 1;
};

/// contact = 1 iff height < height_thresh and speed < speed_thresh.
/// Rows are frames, columns are the joints of `feet`.
Eigen::MatrixXi label_foot_contacts(const JointTrack& feet, const ContactOptions& opts = {});

/// Builds a complete sequence (positions, velocities, contact labels) from
/// root translations and per-joint rotations.
MotionSequence build_motion(const Skeleton& skel, double fps, std::span<const Vec3> roots,
                            std::span<const std::vector<Rotation6D>> rotations,
                            const ContactOptions& contact_opts = {});

}  // namespace longdance
