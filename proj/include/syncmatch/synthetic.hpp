#pragma once

#include "syncmatch/correspondence.hpp"
#include "syncmatch/geometry.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <string_view>
#include <vector>

namespace syncmatch {

enum class Motion { LateralPan, Orbit, Corridor };

Motion parse_motion(std::string_view name);
std::string_view to_string(Motion motion);

struct SceneSpec {
  std::size_t n_frames = 6;
  std::size_t n_landmarks = 1000;
  Motion motion = Motion::Orbit;
  std::uint64_t seed = 0;
  std::size_t descriptor_dim = 128;
  /// Lateral step per frame for lateral_pan (meters).
  double pan_step = 0.65;
  /// Yaw step per frame for orbit (degrees).
  double orbit_step_deg = 4.0;
  /// Forward step per frame for corridor (meters).
  double corridor_step = 0.2;
  /// Minimum shared-landmark fraction required between adjacent frames.
  double min_overlap = 0.3;
  double max_range = 10.0;
  CameraIntrinsics intrinsics{};
};

struct AxisBox {
  Eigen::Vector3d min;
  Eigen::Vector3d max;
};

/**
 * Ground-truth scene: landmarks with unit descriptors (columns of
 * `descriptors`), world-to-camera poses and the pairwise overlap schedule
 * (shared visible landmarks over the larger visible set; symmetric, unit
 * diagonal).
 */
struct SyntheticScene {
  std::vector<Eigen::Vector3d> landmarks;
  Eigen::MatrixXd descriptors;
  std::vector<RigidTransform> trajectory;
  CameraIntrinsics intrinsics;
  Eigen::MatrixXd overlap;
  AxisBox room;
  double max_range = 10.0;

  std::size_t n_frames() const noexcept { return trajectory.size(); }
};

struct CorruptionSpec {
  double descriptor_sigma = 0.0;
  double outlier_fraction = 0.0;
  double depth_sigma = 0.0;
  double drop_fraction = 0.0;
  std::uint64_t seed = 0;

  void validate() const;
};

/// Throws InvalidArgument for n_frames < 2 or n_landmarks < 50 and
/// GenerationFailure when the trajectory leaves an adjacent pair below
/// `min_overlap` or a frame sees no landmark.
SyntheticScene generate_scene(const SceneSpec& spec);

/// Indices of landmarks inside frame `frame`'s frustum and range, ascending.
std::vector<std::size_t> visible_landmarks(const SyntheticScene& scene, std::size_t frame);

struct LabeledObservation {
  FeaturePointcloud cloud;
  std::vector<std::size_t> landmark_ids;
};

/// Observation of one frame with its ground-truth landmark ids. Depth noise
/// moves points along their viewing ray; `outlier_fraction` of descriptors
/// are replaced by fresh random unit vectors; `drop_fraction` of points are
/// removed. Randomness is drawn from (corruption.seed, frame).
LabeledObservation observe_frame_labeled(const SyntheticScene& scene, std::size_t frame,
                                         const CorruptionSpec& corruption);

FeaturePointcloud observe_frame(const SyntheticScene& scene, std::size_t frame,
                                const CorruptionSpec& corruption);

/// World-to-camera pose of a camera at `center` looking at `target`, with
/// image y pointing along `down`.
RigidTransform look_at(const Eigen::Vector3d& center, const Eigen::Vector3d& target,
                       const Eigen::Vector3d& down = Eigen::Vector3d::UnitY());

}  // namespace syncmatch
