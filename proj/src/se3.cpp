#include "osil/se3.hpp"

#include <algorithm>
#include <cmath>

#include "osil/error.hpp"

namespace osil {

namespace {
constexpr double kPi = 3.14159265358979323846;
constexpr double kReorthDrift = 1e-12;
}  // namespace

Eigen::Matrix4d Pose::matrix() const {
  Eigen::Matrix4d m = Eigen::Matrix4d::Identity();
  m.topLeftCorner<3, 3>() = rotation;
  m.topRightCorner<3, 1>() = translation;
  return m;
}

Pose Pose::from_matrix(const Eigen::Matrix4d& m) {
  Pose p;
  p.rotation = m.topLeftCorner<3, 3>();
  p.translation = m.topRightCorner<3, 1>();
  return p;
}

double rotation_drift(const Eigen::Matrix3d& R) {
  return (R.transpose() * R - Eigen::Matrix3d::Identity())
      .cwiseAbs()
      .maxCoeff();
}

Eigen::Matrix3d orthonormalized(const Eigen::Matrix3d& R) {
  Eigen::JacobiSVD<Eigen::Matrix3d> svd(
      R, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Eigen::Matrix3d out = svd.matrixU() * svd.matrixV().transpose();
  if (out.determinant() < 0) {
    Eigen::Matrix3d flip = Eigen::Matrix3d::Identity();
    flip(2, 2) = -1.0;
    out = svd.matrixU() * flip * svd.matrixV().transpose();
  }
  return out;
}

bool is_valid_rotation(const Eigen::Matrix3d& R, double tol) {
  return rotation_drift(R) <= tol && R.determinant() > 0.0;
}

Pose compose(const Pose& a, const Pose& b) {
  Pose out;
  out.rotation = a.rotation * b.rotation;
  out.translation = a.rotation * b.translation + a.translation;
  if (rotation_drift(out.rotation) > kReorthDrift)
    out.rotation = orthonormalized(out.rotation);
  return out;
}

Pose compose(const Pose& a, const PoseDelta& d) { return compose(a, d.value); }

Pose inverse(const Pose& p) {
  Pose out;
  out.rotation = p.rotation.transpose();
  out.translation = -(out.rotation * p.translation);
  return out;
}

PoseDelta relative(const Pose& from, const Pose& to) {
  return PoseDelta{compose(inverse(from), to)};
}

PoseDelta cam_delta_to_ee(const PoseDelta& delta_cam, const Pose& hand_eye) {
  return PoseDelta{
      compose(compose(hand_eye, delta_cam.value), inverse(hand_eye))};
}

double frobenius_deviation(const PoseDelta& delta) {
  const Eigen::Matrix4d m =
      delta.value.matrix() - Eigen::Matrix4d::Identity();
  return m.norm();
}

std::pair<double, double> pose_error(const Pose& estimate, const Pose& truth) {
  const double et = (estimate.translation - truth.translation).norm();
  const Eigen::Matrix3d rel = truth.rotation.transpose() * estimate.rotation;
  const double c = std::clamp((rel.trace() - 1.0) * 0.5, -1.0, 1.0);
  return {et, std::acos(c) * 180.0 / kPi};
}

Eigen::Matrix3d rot_x(double rad) {
  return Eigen::AngleAxisd(rad, Eigen::Vector3d::UnitX()).toRotationMatrix();
}

Eigen::Matrix3d rot_y(double rad) {
  return Eigen::AngleAxisd(rad, Eigen::Vector3d::UnitY()).toRotationMatrix();
}

Eigen::Matrix3d rot_z(double rad) {
  return Eigen::AngleAxisd(rad, Eigen::Vector3d::UnitZ()).toRotationMatrix();
}

Eigen::Matrix3d exp_so3(const Eigen::Vector3d& omega) {
  const double angle = omega.norm();
  if (angle < 1e-14) return Eigen::Matrix3d::Identity();
  return Eigen::AngleAxisd(angle, omega / angle).toRotationMatrix();
}

Eigen::Vector3d log_so3(const Eigen::Matrix3d& R) {
  const Eigen::AngleAxisd aa(R);
  return aa.angle() * aa.axis();
}

PoseDelta scale_delta(const PoseDelta& delta, double s) {
  PoseDelta out;
  out.value.translation = delta.value.translation * s;
  out.value.rotation = exp_so3(log_so3(delta.value.rotation) * s);
  return out;
}

nlohmann::json pose_to_json(const Pose& p) {
  const Eigen::Matrix4d m = p.matrix();
  nlohmann::json rows = nlohmann::json::array();
  for (int r = 0; r < 4; ++r) {
    nlohmann::json row = nlohmann::json::array();
    for (int c = 0; c < 4; ++c) row.push_back(m(r, c));
    rows.push_back(row);
  }
  return rows;
}

Pose pose_from_json(const nlohmann::json& j) {
  if (!j.is_array() || j.size() != 4)
    throw Error(ErrorCode::ParseError, "pose: expected 4x4 array");
  Eigen::Matrix4d m;
  for (int r = 0; r < 4; ++r) {
    const auto& row = j.at(r);
    if (!row.is_array() || row.size() != 4)
      throw Error(ErrorCode::ParseError, "pose: expected 4x4 array");
    for (int c = 0; c < 4; ++c) m(r, c) = row.at(c).get<double>();
  }
  return Pose::from_matrix(m);
}

}  // namespace osil
