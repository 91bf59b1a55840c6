#include "syncmatch/metrics.hpp"

#include "syncmatch/error.hpp"

#include <Eigen/Geometry>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <random>

namespace syncmatch {

namespace {

constexpr double kPi = 3.14159265358979323846;

std::vector<ThresholdPrecision> precision_curve(const std::vector<double>& errors,
                                                const std::vector<double>& thresholds) {
  std::vector<ThresholdPrecision> out;
  for (double t : thresholds) {
    std::size_t hits = 0;
    for (double e : errors) hits += e < t ? 1 : 0;
    out.push_back({t, errors.empty() ? 0.0
                                     : static_cast<double>(hits) /
                                           static_cast<double>(errors.size())});
  }
  return out;
}

Eigen::Matrix3d random_rotation(std::mt19937_64& rng) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  Eigen::Quaterniond q(gauss(rng), gauss(rng), gauss(rng), gauss(rng));
  q.normalize();
  return q.toRotationMatrix();
}

}  // namespace

CorrespondenceErrorReport correspondence_errors(const CorrespondenceSet& corr,
                                                const FeaturePointcloud& src,
                                                const FeaturePointcloud& dst,
                                                const RigidTransform& gt_src,
                                                const RigidTransform& gt_dst,
                                                const CameraIntrinsics& intrinsics) {
  const RigidTransform src_to_dst = compose(gt_src.inverse(), gt_dst);
  CorrespondenceErrorReport report;
  for (const auto& m : corr.matches) {
    if (m.source_index >= src.size() || m.target_index >= dst.size()) {
      throw Error(ErrorKind::InvalidArgument, "correspondence index out of range");
    }
    const Eigen::Vector3d& p = src.points[m.source_index];
    const Eigen::Vector3d& q = dst.points[m.target_index];
    if (!(p.z() > 0.0) || !(q.z() > 0.0)) continue;
    const Eigen::Vector3d aligned = src_to_dst.apply(p);
    report.errors_3d.push_back((aligned - q).norm());
    if (aligned.z() > 0.0) {
      report.errors_2d.push_back(
          (project_point(aligned, intrinsics) - dst.pixels[m.target_index]).norm());
    }
  }
  report.evaluated_3d = report.errors_3d.size();
  report.evaluated_2d = report.errors_2d.size();
  report.precision_3d = precision_curve(report.errors_3d, kThresholds3d);
  report.precision_2d = precision_curve(report.errors_2d, kThresholds2d);
  return report;
}

double error_auc(std::vector<double> errors, double threshold) {
  if (errors.empty()) throw Error(ErrorKind::EmptyReport, "no errors to integrate");
  if (!(threshold > 0.0)) throw Error(ErrorKind::InvalidArgument, "threshold must be positive");
  std::sort(errors.begin(), errors.end());
  const auto n = static_cast<double>(errors.size());
  double area = 0.0;
  double prev_e = 0.0;
  double prev_r = 0.0;
  for (std::size_t k = 0; k < errors.size() && errors[k] < threshold; ++k) {
    const double r = static_cast<double>(k + 1) / n;
    area += 0.5 * (prev_r + r) * (errors[k] - prev_e);
    prev_e = errors[k];
    prev_r = r;
  }
  area += prev_r * (threshold - prev_e);
  return area / threshold;
}

PoseAuc pose_auc(const std::vector<PoseError>& errors, double rot_threshold_deg,
                 double trans_threshold_m) {
  if (errors.empty()) throw Error(ErrorKind::EmptyReport, "no pose errors");
  std::vector<double> rot, trans;
  for (const auto& e : errors) {
    rot.push_back(e.rotation_deg);
    trans.push_back(e.translation_m);
  }
  return {error_auc(std::move(rot), rot_threshold_deg),
          error_auc(std::move(trans), trans_threshold_m)};
}

std::vector<PoseError> pose_errors(const std::vector<RigidTransform>& estimated,
                                   const std::vector<RigidTransform>& ground_truth) {
  if (estimated.size() != ground_truth.size()) {
    throw Error(ErrorKind::InputMismatch, "estimated and ground-truth frame counts differ");
  }
  const auto est = fix_gauge(estimated);
  const auto gt = fix_gauge(ground_truth);
  std::vector<PoseError> out;
  out.reserve(est.size());
  for (std::size_t i = 0; i < est.size(); ++i) {
    const double rot = rotation_angle_between(gt[i].rotation(), est[i].rotation());
    const double trans = (est[i].inverse().translation() - gt[i].inverse().translation()).norm();
    out.push_back({rot * 180.0 / kPi, trans});
  }
  return out;
}

MeanPoseError mean_pose_error(const std::vector<RigidTransform>& estimated,
                              const std::vector<RigidTransform>& ground_truth) {
  const auto errors = pose_errors(estimated, ground_truth);
  MeanPoseError mean;
  if (errors.size() < 2) return mean;
  for (std::size_t i = 1; i < errors.size(); ++i) {
    mean.rotation_deg += errors[i].rotation_deg;
    mean.translation_m += errors[i].translation_m;
  }
  const auto count = static_cast<double>(errors.size() - 1);
  mean.rotation_deg /= count;
  mean.translation_m /= count;
  return mean;
}

std::string to_string(SyncBackend backend) {
  switch (backend) {
    case SyncBackend::Naive: return "naive";
    case SyncBackend::Eig: return "eig";
    case SyncBackend::Power: return "power";
  }
  return "unknown";
}

SyntheticPoseGraph random_pose_graph(std::size_t n_frames, const NoiseLevel& noise,
                                     std::uint64_t seed) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    0x9a7au};
  std::mt19937_64 rng(seq);
  std::uniform_real_distribution<double> box(-1.0, 1.0);
  std::normal_distribution<double> gauss(0.0, 1.0);

  SyntheticPoseGraph out{PoseGraph(n_frames), {}};
  for (std::size_t i = 0; i < n_frames; ++i) {
    out.ground_truth.emplace_back(random_rotation(rng),
                                  Eigen::Vector3d(box(rng), box(rng), box(rng)));
  }
  const double rot_sigma = noise.rot_sigma_deg * kPi / 180.0;
  for (std::size_t i = 0; i < n_frames; ++i) {
    for (std::size_t j = i + 1; j < n_frames; ++j) {
      const RigidTransform exact = compose(out.ground_truth[i].inverse(), out.ground_truth[j]);
      const Eigen::Vector3d omega(gauss(rng), gauss(rng), gauss(rng));
      const Eigen::Vector3d delta(gauss(rng), gauss(rng), gauss(rng));
      const Eigen::Matrix3d r = exact.rotation() * rotation_from_axis_angle(rot_sigma * omega);
      out.graph.set_edge(i, j, RigidTransform(r, exact.translation() + noise.trans_sigma_m * delta),
                         1.0);
    }
  }
  return out;
}

std::vector<SyncBenchmarkRow> sync_benchmark(const std::vector<NoiseLevel>& noise_grid,
                                             std::size_t n_frames, std::size_t trials,
                                             std::uint64_t seed) {
  if (trials == 0) throw Error(ErrorKind::InvalidArgument, "trials must be >= 1");
  const SyncBackend backends[] = {SyncBackend::Naive, SyncBackend::Eig, SyncBackend::Power};
  std::vector<SyncBenchmarkRow> rows;
  for (std::size_t g = 0; g < noise_grid.size(); ++g) {
    SyncBenchmarkRow acc[3];
    std::size_t ok[3] = {0, 0, 0};
    for (std::size_t trial = 0; trial < trials; ++trial) {
      const auto instance =
          random_pose_graph(n_frames, noise_grid[g], seed * 1000003u + g * 10007u + trial);
      for (int b = 0; b < 3; ++b) {
        const auto start = std::chrono::steady_clock::now();
        try {
          SyncResult result;
          switch (backends[b]) {
            case SyncBackend::Naive: result = synchronize_naive(instance.graph); break;
            case SyncBackend::Eig: result = synchronize_eig(instance.graph); break;
            case SyncBackend::Power: result = synchronize_power(instance.graph); break;
          }
          const auto stop = std::chrono::steady_clock::now();
          const auto err = mean_pose_error(result.world_to_camera, instance.ground_truth);
          acc[b].mean_rot_err_deg += err.rotation_deg;
          acc[b].mean_trans_err_m += err.translation_m;
          acc[b].mean_runtime_s += std::chrono::duration<double>(stop - start).count();
          ++ok[b];
        } catch (const Error&) {
          ++acc[b].failures;
        }
      }
    }
    for (int b = 0; b < 3; ++b) {
      SyncBenchmarkRow row = acc[b];
      row.n_frames = n_frames;
      row.noise = noise_grid[g];
      row.backend = backends[b];
      if (ok[b] > 0) {
        const auto count = static_cast<double>(ok[b]);
        row.mean_rot_err_deg /= count;
        row.mean_trans_err_m /= count;
        row.mean_runtime_s /= count;
      }
      rows.push_back(row);
    }
  }
  return rows;
}

}  // namespace syncmatch
