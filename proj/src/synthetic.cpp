#include "syncmatch/synthetic.hpp"

#include "syncmatch/error.hpp"

#include <Eigen/Geometry>

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>
#include <random>
#include <string>

namespace syncmatch {

namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr double kNearPlane = 0.1;
constexpr double kWallThickness = 0.5;

std::mt19937_64 make_rng(std::uint64_t seed, std::uint64_t stream, std::uint64_t salt) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream),
                    static_cast<std::uint32_t>(stream >> 32),
                    static_cast<std::uint32_t>(salt)};
  return std::mt19937_64(seq);
}

Eigen::VectorXd random_unit_vector(std::size_t dim, std::mt19937_64& rng) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  Eigen::VectorXd v(static_cast<Eigen::Index>(dim));
  do {
    for (Eigen::Index k = 0; k < v.size(); ++k) v(k) = gauss(rng);
  } while (v.norm() < 1e-12);
  return v.normalized();
}

double deg(double d) { return d * kPi / 180.0; }

/// Points on the inner faces of the room, pushed inward by up to
/// kWallThickness, with faces chosen proportionally to their area.
std::vector<Eigen::Vector3d> sample_landmarks(const AxisBox& room, std::size_t count,
                                              std::mt19937_64& rng) {
  const Eigen::Vector3d ext = room.max - room.min;
  // Face k: axis k / 2, on the min side when k is even.
  std::array<double, 6> areas{};
  for (int k = 0; k < 6; ++k) {
    const int axis = k / 2;
    areas[k] = ext((axis + 1) % 3) * ext((axis + 2) % 3);
  }
  std::discrete_distribution<int> face(areas.begin(), areas.end());
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  std::vector<Eigen::Vector3d> out;
  out.reserve(count);
  for (std::size_t n = 0; n < count; ++n) {
    const int k = face(rng);
    const int axis = k / 2;
    Eigen::Vector3d p;
    for (int a = 0; a < 3; ++a) p(a) = room.min(a) + unit(rng) * ext(a);
    const double depth = std::min(kWallThickness, 0.25 * ext(axis)) * unit(rng);
    p(axis) = (k % 2 == 0) ? room.min(axis) + depth : room.max(axis) - depth;
    out.push_back(p);
  }
  return out;
}

struct Trajectory {
  AxisBox room;
  std::vector<RigidTransform> poses;
};

Trajectory make_trajectory(const SceneSpec& spec, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  auto jitter = [&](double amplitude) { return amplitude * (2.0 * unit(rng) - 1.0); };
  Trajectory out;
  const auto n = static_cast<double>(spec.n_frames);

  switch (spec.motion) {
    case Motion::Orbit: {
      out.room = {{-3.0, -1.5, -3.0}, {3.0, 1.5, 3.0}};
      const double radius = 0.8 + jitter(0.1);
      const double theta0 = 2.0 * kPi * unit(rng);
      const double phase = 2.0 * kPi * unit(rng);
      for (std::size_t k = 0; k < spec.n_frames; ++k) {
        const double theta = theta0 + deg(spec.orbit_step_deg) * static_cast<double>(k);
        const Eigen::Vector3d radial(std::cos(theta), 0.0, std::sin(theta));
        const Eigen::Vector3d center = radius * radial;
        Eigen::Vector3d target = center - 3.0 * radial;
        target.y() = 0.3 * std::sin(0.7 * static_cast<double>(k) + phase);
        out.poses.push_back(look_at(center, target));
      }
      break;
    }
    case Motion::LateralPan: {
      const double length = (n - 1.0) * spec.pan_step;
      out.room = {{-3.0, -1.5, -1.0}, {length + 3.0, 1.5, 3.0}};
      for (std::size_t k = 0; k < spec.n_frames; ++k) {
        const Eigen::Vector3d center(spec.pan_step * static_cast<double>(k), 0.0, 0.0);
        const Eigen::Vector3d target =
            center + Eigen::Vector3d(std::tan(deg(jitter(1.0))), std::tan(deg(jitter(1.0))), 1.0);
        out.poses.push_back(look_at(center, target));
      }
      break;
    }
    case Motion::Corridor: {
      const double length = (n - 1.0) * spec.corridor_step;
      out.room = {{-3.0, -1.5, -1.0}, {length + 3.0, 1.5, 2.5}};
      const double phase = 2.0 * kPi * unit(rng);
      for (std::size_t k = 0; k < spec.n_frames; ++k) {
        const auto s = static_cast<double>(k);
        const Eigen::Vector3d center(spec.corridor_step * s, 0.05 * std::sin(0.3 * s + phase), 0.0);
        const double yaw = deg(10.0) * std::sin(0.15 * s + phase);
        const Eigen::Vector3d target = center + Eigen::Vector3d(std::sin(yaw), 0.0, std::cos(yaw));
        out.poses.push_back(look_at(center, target));
      }
      break;
    }
  }
  return out;
}

void validate_spec(const SceneSpec& spec) {
  if (spec.n_frames < 2) {
    throw Error(ErrorKind::InvalidArgument, "a scene needs at least 2 frames");
  }
  if (spec.n_landmarks < 50) {
    throw Error(ErrorKind::InvalidArgument, "a scene needs at least 50 landmarks");
  }
  if (spec.descriptor_dim < 2) {
    throw Error(ErrorKind::InvalidArgument, "descriptor dimension must be >= 2");
  }
  if (!(spec.pan_step > 0.0) || !(spec.corridor_step > 0.0) || !(spec.orbit_step_deg >= 0.0) ||
      !(spec.max_range > kNearPlane)) {
    throw Error(ErrorKind::InvalidArgument, "motion parameters must be positive");
  }
  spec.intrinsics.validate();
}

bool in_frustum(const Eigen::Vector3d& p, const CameraIntrinsics& k, double max_range) {
  if (!(p.z() > kNearPlane) || p.norm() > max_range) return false;
  const Eigen::Vector2d px = project_point(p, k);
  return px.x() >= 0.0 && px.y() >= 0.0 && px.x() <= static_cast<double>(k.width) - 1.0 &&
         px.y() <= static_cast<double>(k.height) - 1.0;
}

}  // namespace

Motion parse_motion(std::string_view name) {
  if (name == "lateral_pan") return Motion::LateralPan;
  if (name == "orbit") return Motion::Orbit;
  if (name == "corridor") return Motion::Corridor;
  throw Error(ErrorKind::InvalidArgument, "unknown motion '" + std::string(name) + "'");
}

std::string_view to_string(Motion motion) {
  switch (motion) {
    case Motion::LateralPan: return "lateral_pan";
    case Motion::Orbit: return "orbit";
    case Motion::Corridor: return "corridor";
  }
  return "unknown";
}

void CorruptionSpec::validate() const {
  if (!(descriptor_sigma >= 0.0) || !(depth_sigma >= 0.0)) {
    throw Error(ErrorKind::InvalidArgument, "noise levels must be nonnegative");
  }
  if (!(outlier_fraction >= 0.0 && outlier_fraction <= 1.0) ||
      !(drop_fraction >= 0.0 && drop_fraction <= 1.0)) {
    throw Error(ErrorKind::InvalidArgument, "fractions must lie in [0, 1]");
  }
}

RigidTransform look_at(const Eigen::Vector3d& center, const Eigen::Vector3d& target,
                       const Eigen::Vector3d& down) {
  const Eigen::Vector3d z = (target - center).normalized();
  const Eigen::Vector3d x = down.cross(z).normalized();
  const Eigen::Vector3d y = z.cross(x);
  Eigen::Matrix3d axes;  // camera axes expressed in world coordinates
  axes << x, y, z;
  // x_cam = axes^T (x_world - center); the row-convention block is `axes`.
  return {axes, -axes.transpose() * center};
}

SyntheticScene generate_scene(const SceneSpec& spec) {
  validate_spec(spec);
  auto rng = make_rng(spec.seed, 0, 0x5ce9e);

  SyntheticScene scene;
  scene.intrinsics = spec.intrinsics;
  scene.max_range = spec.max_range;
  Trajectory traj = make_trajectory(spec, rng);
  scene.room = traj.room;
  scene.trajectory = std::move(traj.poses);
  scene.landmarks = sample_landmarks(scene.room, spec.n_landmarks, rng);
  scene.descriptors.resize(static_cast<Eigen::Index>(spec.descriptor_dim),
                           static_cast<Eigen::Index>(spec.n_landmarks));
  for (std::size_t i = 0; i < spec.n_landmarks; ++i) {
    scene.descriptors.col(static_cast<Eigen::Index>(i)) =
        random_unit_vector(spec.descriptor_dim, rng);
  }

  const std::size_t n = spec.n_frames;
  std::vector<std::vector<std::size_t>> visible(n);
  for (std::size_t f = 0; f < n; ++f) {
    visible[f] = visible_landmarks(scene, f);
    if (visible[f].size() < 3) {
      throw Error(ErrorKind::GenerationFailure,
                  "frame " + std::to_string(f) + " sees fewer than 3 landmarks", f);
    }
  }
  scene.overlap = Eigen::MatrixXd::Identity(static_cast<Eigen::Index>(n),
                                            static_cast<Eigen::Index>(n));
  std::vector<std::size_t> shared;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      shared.clear();
      std::set_intersection(visible[i].begin(), visible[i].end(), visible[j].begin(),
                            visible[j].end(), std::back_inserter(shared));
      const double frac = static_cast<double>(shared.size()) /
                          static_cast<double>(std::max(visible[i].size(), visible[j].size()));
      scene.overlap(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = frac;
      scene.overlap(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(i)) = frac;
      if (j == i + 1 && frac < spec.min_overlap) {
        throw Error(ErrorKind::GenerationFailure,
                    "adjacent frames " + std::to_string(i) + " and " + std::to_string(j) +
                        " share only " + std::to_string(frac) + " of their landmarks",
                    j);
      }
    }
  }
  return scene;
}

std::vector<std::size_t> visible_landmarks(const SyntheticScene& scene, std::size_t frame) {
  if (frame >= scene.n_frames()) {
    throw Error(ErrorKind::InvalidArgument, "frame index out of range");
  }
  const RigidTransform& pose = scene.trajectory[frame];
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < scene.landmarks.size(); ++i) {
    if (in_frustum(pose.apply(scene.landmarks[i]), scene.intrinsics, scene.max_range)) {
      out.push_back(i);
    }
  }
  return out;
}

LabeledObservation observe_frame_labeled(const SyntheticScene& scene, std::size_t frame,
                                         const CorruptionSpec& corruption) {
  corruption.validate();
  auto rng = make_rng(corruption.seed, frame, 0x0b5e7);
  std::normal_distribution<double> gauss(0.0, 1.0);

  std::vector<std::size_t> ids = visible_landmarks(scene, frame);
  if (corruption.drop_fraction > 0.0) {
    const auto n_drop = static_cast<std::size_t>(
        std::llround(corruption.drop_fraction * static_cast<double>(ids.size())));
    std::shuffle(ids.begin(), ids.end(), rng);
    ids.resize(ids.size() - n_drop);
    std::sort(ids.begin(), ids.end());
  }

  const RigidTransform& pose = scene.trajectory[frame];
  const auto dim = scene.descriptors.rows();
  LabeledObservation obs;
  FeaturePointcloud& cloud = obs.cloud;
  cloud.descriptors.resize(dim, static_cast<Eigen::Index>(ids.size()));
  std::size_t kept = 0;
  for (std::size_t id : ids) {
    const Eigen::Vector3d p = pose.apply(scene.landmarks[id]);
    double scale = 1.0;
    if (corruption.depth_sigma > 0.0) {
      const double z = p.z() + corruption.depth_sigma * gauss(rng);
      if (!(z > 0.0)) continue;  // a non-positive depth reads as missing
      scale = z / p.z();
    }
    Eigen::VectorXd f = scene.descriptors.col(static_cast<Eigen::Index>(id));
    if (corruption.descriptor_sigma > 0.0) {
      for (Eigen::Index k = 0; k < dim; ++k) f(k) += corruption.descriptor_sigma * gauss(rng);
      f.normalize();
    }
    cloud.points.push_back(scale * p);
    cloud.pixels.push_back(project_point(p, scene.intrinsics));
    cloud.descriptors.col(static_cast<Eigen::Index>(kept++)) = f;
    obs.landmark_ids.push_back(id);
  }
  cloud.descriptors.conservativeResize(dim, static_cast<Eigen::Index>(kept));

  if (corruption.outlier_fraction > 0.0 && kept > 0) {
    const auto n_out = static_cast<std::size_t>(
        std::llround(corruption.outlier_fraction * static_cast<double>(kept)));
    std::vector<std::size_t> order(kept);
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t k = 0; k < n_out; ++k) {
      cloud.descriptors.col(static_cast<Eigen::Index>(order[k])) =
          random_unit_vector(static_cast<std::size_t>(dim), rng);
    }
  }
  return obs;
}

FeaturePointcloud observe_frame(const SyntheticScene& scene, std::size_t frame,
                                const CorruptionSpec& corruption) {
  return observe_frame_labeled(scene, frame, corruption).cloud;
}

}  // namespace syncmatch
