#include "syncmatch/geometry.hpp"

#include "syncmatch/error.hpp"

#include <Eigen/Geometry>
#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace syncmatch {

namespace {

constexpr double kRotationTolerance = 1e-6;
constexpr double kRankTolerance = 1e-12;

}  // namespace

RigidTransform::RigidTransform()
    : rotation_(Eigen::Matrix3d::Identity()),
      translation_(Eigen::Vector3d::Zero()) {}

RigidTransform::RigidTransform(const Eigen::Matrix3d& rotation,
                               const Eigen::Vector3d& translation)
    : rotation_(rotation), translation_(translation) {
  if (!rotation.allFinite() || !translation.allFinite()) {
    throw Error(ErrorKind::InvalidArgument, "non-finite transform");
  }
  if (so3_defect(rotation) > kRotationTolerance) {
    throw Error(ErrorKind::InvalidArgument, "rotation block is not in SO(3)");
  }
}

RigidTransform RigidTransform::from_matrix(const Eigen::Matrix4d& m) {
  if (m(0, 3) != 0.0 || m(1, 3) != 0.0 || m(2, 3) != 0.0 || m(3, 3) != 1.0) {
    throw Error(ErrorKind::InvalidArgument,
                "last column of an SE(3) matrix must be (0, 0, 0, 1)");
  }
  return {m.topLeftCorner<3, 3>(), m.block<1, 3>(3, 0).transpose()};
}

Eigen::Matrix4d RigidTransform::matrix() const {
  Eigen::Matrix4d m = Eigen::Matrix4d::Zero();
  m.topLeftCorner<3, 3>() = rotation_;
  m.block<1, 3>(3, 0) = translation_.transpose();
  m(3, 3) = 1.0;
  return m;
}

RigidTransform RigidTransform::inverse() const {
  const Eigen::Matrix3d rt = rotation_.transpose();
  // Row form: t_inv = -t R^T, i.e. -R t as a column.
  return {Unchecked{}, rt, -(rotation_ * translation_)};
}

double RigidTransform::angle() const {
  return rotation_angle_between(Eigen::Matrix3d::Identity(), rotation_);
}

RigidTransform compose(const RigidTransform& a, const RigidTransform& b) {
  // [Ra 0; ta 1][Rb 0; tb 1] = [Ra Rb 0; ta Rb + tb 1]
  return {RigidTransform::Unchecked{}, a.rotation_ * b.rotation_,
          b.rotation_.transpose() * a.translation_ + b.translation_};
}

Eigen::Matrix3d rotation_from_axis_angle(const Eigen::Vector3d& omega) {
  const double theta = omega.norm();
  if (theta == 0.0) return Eigen::Matrix3d::Identity();
  // Row convention stores the transpose of the column-convention rotation.
  return Eigen::AngleAxisd(theta, omega / theta).toRotationMatrix().transpose();
}

double rotation_angle_between(const Eigen::Matrix3d& a,
                              const Eigen::Matrix3d& b) {
  const Eigen::Matrix3d rel = a.transpose() * b;
  const double c = std::clamp((rel.trace() - 1.0) / 2.0, -1.0, 1.0);
  // acos loses precision near zero; use the skew part for small angles.
  const Eigen::Vector3d skew(rel(2, 1) - rel(1, 2), rel(0, 2) - rel(2, 0),
                             rel(1, 0) - rel(0, 1));
  return std::atan2(0.5 * skew.norm(), c);
}

double so3_defect(const Eigen::Matrix3d& r) {
  const double ortho =
      (r.transpose() * r - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff();
  return std::max(ortho, std::abs(r.determinant() - 1.0));
}

ScaledTransform::ScaledTransform(const Eigen::Matrix4d& m) : matrix_(m) {
  if (!has_cone_structure(m) || m(3, 3) < 0.0) {
    throw Error(ErrorKind::InvalidArgument,
                "matrix is not in S+: last column must be (0, 0, 0, alpha >= 0)");
  }
}

ScaledTransform::ScaledTransform(double scale, const RigidTransform& t) {
  if (!(scale >= 0.0)) {
    throw Error(ErrorKind::InvalidArgument, "negative scale");
  }
  matrix_ = scale * t.matrix();
}

bool ScaledTransform::has_cone_structure(const Eigen::Matrix4d& m, double tol) {
  return std::abs(m(0, 3)) <= tol && std::abs(m(1, 3)) <= tol &&
         std::abs(m(2, 3)) <= tol;
}

ScaledTransform operator+(const ScaledTransform& a, const ScaledTransform& b) {
  return {ScaledTransform::Unchecked{}, a.matrix_ + b.matrix_};
}

ScaledTransform operator*(const ScaledTransform& a, const ScaledTransform& b) {
  return {ScaledTransform::Unchecked{}, a.matrix_ * b.matrix_};
}

ScaledTransform operator*(double s, const ScaledTransform& a) {
  if (!(s >= 0.0)) {
    throw Error(ErrorKind::InvalidArgument, "S+ is only closed under s >= 0");
  }
  return {ScaledTransform::Unchecked{}, s * a.matrix_};
}

Eigen::Matrix3d nearest_rotation(const Eigen::Matrix3d& m) {
  Eigen::JacobiSVD<Eigen::Matrix3d> svd(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
  if (!(svd.singularValues()(2) >= kRankTolerance)) {
    throw Error(ErrorKind::AmbiguousProjection,
                "rotation block is rank deficient (sigma_min = " +
                    std::to_string(svd.singularValues()(2)) + ")");
  }
  const Eigen::Matrix3d& u = svd.matrixU();
  const Eigen::Matrix3d& v = svd.matrixV();
  Eigen::Matrix3d d = Eigen::Matrix3d::Identity();
  if ((u * v.transpose()).determinant() < 0.0) d(2, 2) = -1.0;
  return u * d * v.transpose();
}

RigidTransform project_to_se3(const ScaledTransform& m) {
  const double alpha = m.scale();
  if (!(alpha > 0.0)) {
    throw Error(ErrorKind::DegenerateScale,
                "scale must be positive, got " + std::to_string(alpha));
  }
  const Eigen::Matrix4d& a = m.matrix();
  const Eigen::Matrix3d r = nearest_rotation(a.topLeftCorner<3, 3>() / alpha);
  const Eigen::Vector3d t = a.block<1, 3>(3, 0).transpose() / alpha;
  return {r, t};
}

void CameraIntrinsics::validate() const {
  if (!(fx > 0.0) || !(fy > 0.0)) {
    throw Error(ErrorKind::InvalidArgument, "focal lengths must be positive");
  }
  if (!(cx >= 0.0 && cx < static_cast<double>(width)) ||
      !(cy >= 0.0 && cy < static_cast<double>(height))) {
    throw Error(ErrorKind::InvalidArgument,
                "principal point must lie inside the image");
  }
}

DepthMap::DepthMap(std::size_t width, std::size_t height, std::vector<float> values)
    : width_(width), height_(height), values_(std::move(values)) {
  if (values_.size() != width_ * height_) {
    throw Error(ErrorKind::InvalidArgument, "depth map size does not match");
  }
  for (float d : values_) {
    if (!std::isfinite(d)) {
      throw Error(ErrorKind::InvalidArgument, "depth map has non-finite entries");
    }
  }
}

std::vector<PixelPoint> backproject(const DepthMap& depth,
                                    const CameraIntrinsics& intrinsics,
                                    std::size_t stride) {
  if (stride == 0) {
    throw Error(ErrorKind::InvalidArgument, "stride must be positive");
  }
  intrinsics.validate();
  if (depth.width() != intrinsics.width || depth.height() != intrinsics.height) {
    throw Error(ErrorKind::InvalidArgument,
                "depth map and intrinsics disagree on image size");
  }
  std::vector<PixelPoint> out;
  for (std::size_t v = 0; v < depth.height(); v += stride) {
    for (std::size_t u = 0; u < depth.width(); u += stride) {
      if (!depth.valid(u, v)) continue;
      const Eigen::Vector2d px(static_cast<double>(u), static_cast<double>(v));
      out.push_back({px, backproject_pixel(px, depth.at(u, v), intrinsics)});
    }
  }
  if (out.empty()) {
    throw Error(ErrorKind::EmptyPointcloud, "no valid depth on the sampling grid");
  }
  return out;
}

DepthMap render_depth(const std::vector<Eigen::Vector3d>& world_points,
                      const RigidTransform& world_to_camera,
                      const CameraIntrinsics& intrinsics) {
  intrinsics.validate();
  std::vector<float> values(intrinsics.width * intrinsics.height, 0.0f);
  for (const auto& x : world_points) {
    const Eigen::Vector3d p = world_to_camera.apply(x);
    if (!(p.z() > 0.0)) continue;
    const Eigen::Vector2d px = project_point(p, intrinsics);
    const double u = std::round(px.x());
    const double v = std::round(px.y());
    if (u < 0.0 || v < 0.0 || u >= static_cast<double>(intrinsics.width) ||
        v >= static_cast<double>(intrinsics.height)) {
      continue;
    }
    float& slot = values[static_cast<std::size_t>(v) * intrinsics.width +
                         static_cast<std::size_t>(u)];
    const auto z = static_cast<float>(p.z());
    if (slot <= 0.0f || z < slot) slot = z;
  }
  return {intrinsics.width, intrinsics.height, std::move(values)};
}

}  // namespace syncmatch
