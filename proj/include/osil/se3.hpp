#pragma once

#include <Eigen/Dense>
#include <nlohmann/json.hpp>
#include <utility>

namespace osil {

/// Rigid transform. rotation is expected orthonormal (|R^T R - I| <= 1e-9,
/// det +1); operations re-orthonormalize when accumulated drift exceeds
/// 1e-12 so long compositions stay on the manifold.
struct Pose {
  Eigen::Matrix3d rotation = Eigen::Matrix3d::Identity();
  Eigen::Vector3d translation = Eigen::Vector3d::Zero();

  static Pose identity() { return {}; }

  Eigen::Matrix4d matrix() const;
  static Pose from_matrix(const Eigen::Matrix4d& m);

  Eigen::Vector3d apply(const Eigen::Vector3d& p) const {
    return rotation * p + translation;
  }

  bool operator==(const Pose& other) const {
    return rotation == other.rotation && translation == other.translation;
  }
};

/// Relative transform between two poses; strong type so absolute poses and
/// deltas cannot be mixed up at call sites.
struct PoseDelta {
  Pose value;

  bool operator==(const PoseDelta& other) const { return value == other.value; }
};

Pose compose(const Pose& a, const Pose& b);
Pose compose(const Pose& a, const PoseDelta& d);
Pose inverse(const Pose& p);

/// Delta taking `from` to `to`: compose(from, relative(from, to)) == to.
PoseDelta relative(const Pose& from, const Pose& to);

/// Conjugates a camera-frame delta into the end-effector frame:
/// hand_eye * delta * hand_eye^-1, where hand_eye is the camera pose
/// expressed in the end-effector frame.
PoseDelta cam_delta_to_ee(const PoseDelta& delta_cam, const Pose& hand_eye);

/// Frobenius norm of (T - I) over the full 4x4 homogeneous matrix. Mixes
/// rotation (unitless) and translation (meters) into one magnitude; used as
/// the alignment termination metric.
double frobenius_deviation(const PoseDelta& delta);

/// (translation error in meters, rotation angle error in degrees).
std::pair<double, double> pose_error(const Pose& estimate, const Pose& truth);

/// Orthonormality drift |R^T R - I|_inf.
double rotation_drift(const Eigen::Matrix3d& R);

/// Nearest rotation matrix (polar factor via SVD, det corrected to +1).
Eigen::Matrix3d orthonormalized(const Eigen::Matrix3d& R);

bool is_valid_rotation(const Eigen::Matrix3d& R, double tol = 1e-9);

Eigen::Matrix3d rot_x(double rad);
Eigen::Matrix3d rot_y(double rad);
Eigen::Matrix3d rot_z(double rad);

/// Rodrigues exponential of a rotation vector.
Eigen::Matrix3d exp_so3(const Eigen::Vector3d& omega);

/// Rotation vector (axis * angle, angle in [0, pi]) of a rotation matrix.
Eigen::Vector3d log_so3(const Eigen::Matrix3d& R);

/// Scales a delta toward identity: translation * s, rotation angle * s.
/// s = 1 returns the delta unchanged, s = 0 the identity.
PoseDelta scale_delta(const PoseDelta& delta, double s);

/// Row-major 4x4 nested JSON array. Doubles are emitted in the shortest
/// decimal form that parses back to the identical IEEE-754 value (never more
/// than 17 significant digits), so reload is bit-exact.
nlohmann::json pose_to_json(const Pose& p);
Pose pose_from_json(const nlohmann::json& j);

}  // namespace osil
