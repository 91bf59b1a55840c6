#pragma once

#include <Eigen/Core>

#include <cstddef>
#include <vector>

namespace syncmatch {

/**
 * An element of SE(3) stored in the row-vector homogeneous layout
 *
 *     | R 0 |
 *     | t 1 |
 *
 * acting on a row point (x, y, z, 1) by right multiplication, so that
 * x' = x R + t. `compose(a, b)` applies `a` first and then `b`.
 *
 * Column-vector callers should use `apply()`, which returns R^T x + t.
 */
class RigidTransform {
 public:
  RigidTransform();

  /// Throws InvalidArgument when `rotation` is not in SO(3) to 1e-6.
  RigidTransform(const Eigen::Matrix3d& rotation,
                 const Eigen::Vector3d& translation);

  static RigidTransform identity() { return {}; }

  /// Builds from a 4x4 row-convention matrix; the last column must be
  /// (0, 0, 0, 1).
  static RigidTransform from_matrix(const Eigen::Matrix4d& m);

  const Eigen::Matrix3d& rotation() const noexcept { return rotation_; }
  const Eigen::Vector3d& translation() const noexcept { return translation_; }

  Eigen::Matrix4d matrix() const;

  Eigen::Vector3d apply(const Eigen::Vector3d& x) const {
    return rotation_.transpose() * x + translation_;
  }

  RigidTransform inverse() const;

  /// Rotation angle in radians, in [0, pi].
  double angle() const;

 private:
  struct Unchecked {};
  RigidTransform(Unchecked, const Eigen::Matrix3d& rotation,
                 const Eigen::Vector3d& translation)
      : rotation_(rotation), translation_(translation) {}

  friend RigidTransform compose(const RigidTransform& a,
                                const RigidTransform& b);

  Eigen::Matrix3d rotation_;
  Eigen::Vector3d translation_;
};

/// a then b: x (a b) = (x a) b.
RigidTransform compose(const RigidTransform& a, const RigidTransform& b);

inline RigidTransform invert(const RigidTransform& t) { return t.inverse(); }

inline RigidTransform operator*(const RigidTransform& a,
                                const RigidTransform& b) {
  return compose(a, b);
}

/// Exponential map of an axis-angle vector (radians) to a row-convention
/// rotation block.
Eigen::Matrix3d rotation_from_axis_angle(const Eigen::Vector3d& omega);

/// Angle in radians between two rotation blocks.
double rotation_angle_between(const Eigen::Matrix3d& a,
                              const Eigen::Matrix3d& b);

/// Largest elementwise deviation of R^T R from identity and of det(R) from 1.
double so3_defect(const Eigen::Matrix3d& r);

/**
 * A member of the cone S+ of scaled SE(3) blocks
 *
 *     alpha * | R 0 |
 *             | t 1 |
 *
 * with R an arbitrary 3x3 block. Closed under +, * and nonnegative scaling.
 */
class ScaledTransform {
 public:
  ScaledTransform() : matrix_(Eigen::Matrix4d::Zero()) {}

  /// Throws InvalidArgument unless the last column is (0, 0, 0, a) with a >= 0.
  explicit ScaledTransform(const Eigen::Matrix4d& m);

  ScaledTransform(double scale, const RigidTransform& t);

  const Eigen::Matrix4d& matrix() const noexcept { return matrix_; }
  double scale() const noexcept { return matrix_(3, 3); }

  /// True when the last column has the S+ structure to `tol`.
  static bool has_cone_structure(const Eigen::Matrix4d& m, double tol = 0.0);

  friend ScaledTransform operator+(const ScaledTransform& a,
                                   const ScaledTransform& b);
  friend ScaledTransform operator*(const ScaledTransform& a,
                                   const ScaledTransform& b);
  friend ScaledTransform operator*(double s, const ScaledTransform& a);

 private:
  struct Unchecked {};
  ScaledTransform(Unchecked, const Eigen::Matrix4d& m) : matrix_(m) {}

  Eigen::Matrix4d matrix_;
};

/// Divide by the scale, then replace the rotation block by its nearest SO(3)
/// element in Frobenius norm (SVD with reflection guard).
///
/// Throws DegenerateScale when scale <= 0 and AmbiguousProjection when the
/// rotation block's smallest singular value is below 1e-12.
RigidTransform project_to_se3(const ScaledTransform& m);

/// Nearest rotation to `m` in Frobenius norm. Same error contract as
/// project_to_se3 for the rank check.
Eigen::Matrix3d nearest_rotation(const Eigen::Matrix3d& m);

struct CameraIntrinsics {
  double fx = 525.0;
  double fy = 525.0;
  double cx = 319.5;
  double cy = 239.5;
  std::size_t width = 640;
  std::size_t height = 480;

  /// Throws InvalidArgument when the invariants (positive focal lengths,
  /// principal point inside the image) are violated.
  void validate() const;
};

/// Row-major depth grid in meters. Depth <= 0 marks a missing pixel.
class DepthMap {
 public:
  DepthMap() = default;
  /// Throws InvalidArgument on size mismatch or non-finite entries.
  DepthMap(std::size_t width, std::size_t height, std::vector<float> values);

  std::size_t width() const noexcept { return width_; }
  std::size_t height() const noexcept { return height_; }
  const std::vector<float>& values() const noexcept { return values_; }

  float at(std::size_t u, std::size_t v) const { return values_[v * width_ + u]; }
  bool valid(std::size_t u, std::size_t v) const { return at(u, v) > 0.0f; }

 private:
  std::size_t width_ = 0;
  std::size_t height_ = 0;
  std::vector<float> values_;
};

struct PixelPoint {
  Eigen::Vector2d pixel;
  Eigen::Vector3d point;
};

/// Pinhole backprojection of one pixel at the given depth.
inline Eigen::Vector3d backproject_pixel(const Eigen::Vector2d& pixel, double depth,
                                         const CameraIntrinsics& k) {
  return {(pixel.x() - k.cx) * depth / k.fx, (pixel.y() - k.cy) * depth / k.fy,
          depth};
}

/// Pinhole projection of a camera-frame point with z > 0.
inline Eigen::Vector2d project_point(const Eigen::Vector3d& p,
                                     const CameraIntrinsics& k) {
  return {k.fx * p.x() / p.z() + k.cx, k.fy * p.y() / p.z() + k.cy};
}

/// Backprojects every valid pixel on the stride grid, row by row.
/// Throws EmptyPointcloud when no pixel on the grid has valid depth.
std::vector<PixelPoint> backproject(const DepthMap& depth,
                                    const CameraIntrinsics& intrinsics,
                                    std::size_t stride = 4);

/// Splats world points into a depth map seen by the world-to-camera pose
/// `world_to_camera`: each point lands on its nearest pixel, nearest depth
/// wins, untouched pixels stay 0.
DepthMap render_depth(const std::vector<Eigen::Vector3d>& world_points,
                      const RigidTransform& world_to_camera,
                      const CameraIntrinsics& intrinsics);

}  // namespace syncmatch
