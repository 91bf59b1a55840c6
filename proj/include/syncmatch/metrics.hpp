#pragma once

#include "syncmatch/correspondence.hpp"
#include "syncmatch/geometry.hpp"
#include "syncmatch/synchronization.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace syncmatch {

struct ThresholdPrecision {
  double threshold = 0.0;
  double precision = 0.0;
};

/// Fraction of matches whose 3D error (meters) and 2D reprojection error
/// (pixels) fall strictly below each threshold. Matches with a non-positive
/// depth on either side, or whose aligned source point lies behind the
/// target camera, are left out of the denominators.
struct CorrespondenceErrorReport {
  std::vector<ThresholdPrecision> precision_3d;  // {0.01, 0.05, 0.10} m
  std::vector<ThresholdPrecision> precision_2d;  // {1, 2, 5} px
  std::size_t evaluated_3d = 0;
  std::size_t evaluated_2d = 0;
  std::vector<double> errors_3d;
  std::vector<double> errors_2d;
};

inline const std::vector<double> kThresholds3d{0.01, 0.05, 0.10};
inline const std::vector<double> kThresholds2d{1.0, 2.0, 5.0};

/// `gt_src` / `gt_dst` are ground-truth world-to-camera poses.
CorrespondenceErrorReport correspondence_errors(const CorrespondenceSet& corr,
                                                const FeaturePointcloud& src,
                                                const FeaturePointcloud& dst,
                                                const RigidTransform& gt_src,
                                                const RigidTransform& gt_dst,
                                                const CameraIntrinsics& intrinsics);

struct PoseError {
  double rotation_deg = 0.0;
  double translation_m = 0.0;
};

struct PoseAuc {
  double rotation = 0.0;
  double translation = 0.0;
};

/// Area under the recall-vs-error curve up to `threshold`, normalized by the
/// threshold. The curve runs through (0, 0) and (e_(k), k / n) for the sorted
/// errors below the threshold and is held flat to the threshold; integration
/// is trapezoidal. Throws EmptyReport on empty input.
double error_auc(std::vector<double> errors, double threshold);

PoseAuc pose_auc(const std::vector<PoseError>& errors, double rot_threshold_deg = 5.0,
                 double trans_threshold_m = 0.10);

/// Rotation angle of R_gt^-1 R_est in degrees and the camera-center
/// distance, after both trajectories are gauge-aligned to frame 0.
std::vector<PoseError> pose_errors(const std::vector<RigidTransform>& estimated,
                                   const std::vector<RigidTransform>& ground_truth);

struct MeanPoseError {
  double rotation_deg = 0.0;
  double translation_m = 0.0;
};

/// Mean over frames 1..N-1 (frame 0 is the gauge).
MeanPoseError mean_pose_error(const std::vector<RigidTransform>& estimated,
                              const std::vector<RigidTransform>& ground_truth);

struct NoiseLevel {
  double rot_sigma_deg = 0.0;
  double trans_sigma_m = 0.0;
};

enum class SyncBackend { Naive, Eig, Power };
std::string to_string(SyncBackend backend);

struct SyncBenchmarkRow {
  std::size_t n_frames = 0;
  NoiseLevel noise;
  SyncBackend backend = SyncBackend::Power;
  double mean_rot_err_deg = 0.0;
  double mean_trans_err_m = 0.0;
  double mean_runtime_s = 0.0;
  std::size_t failures = 0;
};

/// Random consistent pose graph (all pairs, unit confidence) with its
/// ground-truth world-to-camera poses.
struct SyntheticPoseGraph {
  PoseGraph graph;
  std::vector<RigidTransform> ground_truth;
};

/// Each edge is right-multiplied by a rotation with axis-angle components
/// drawn from N(0, rot_sigma) and its translation shifted by N(0, trans_sigma)
/// per axis.
SyntheticPoseGraph random_pose_graph(std::size_t n_frames, const NoiseLevel& noise,
                                     std::uint64_t seed);

/// For every noise level: `trials` random graphs, each synchronized by the
/// naive, eigendecomposition and power backends. Rows are ordered by noise
/// level, then backend.
std::vector<SyncBenchmarkRow> sync_benchmark(const std::vector<NoiseLevel>& noise_grid,
                                             std::size_t n_frames, std::size_t trials,
                                             std::uint64_t seed);

}  // namespace syncmatch
