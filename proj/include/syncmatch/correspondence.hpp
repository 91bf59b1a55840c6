#pragma once

#include "syncmatch/geometry.hpp"

#include <Eigen/Core>

#include <cstddef>
#include <utility>
#include <vector>

namespace syncmatch {

/// Per-frame feature pointcloud: camera-frame points, their source pixels and
/// one unit-norm descriptor per point (stored as the columns of
/// `descriptors`).
struct FeaturePointcloud {
  std::vector<Eigen::Vector3d> points;
  std::vector<Eigen::Vector2d> pixels;
  Eigen::MatrixXd descriptors;  // dim x size

  std::size_t size() const noexcept { return points.size(); }
  Eigen::Index dim() const noexcept { return descriptors.rows(); }

  /// Throws InvalidArgument when the three lists disagree in length or a
  /// descriptor is not unit norm to 1e-6.
  void validate() const;
};

struct Correspondence {
  std::size_t source_index = 0;
  std::size_t target_index = 0;
  double weight = 0.0;
};

using FramePair = std::pair<std::size_t, std::size_t>;

/// Matches from a source frame into a target frame, sorted by weight
/// descending with at most one match per source point.
struct CorrespondenceSet {
  FramePair frame_pair{0, 1};
  std::vector<Correspondence> matches;

  std::size_t size() const noexcept { return matches.size(); }
  bool empty() const noexcept { return matches.empty(); }
  std::vector<double> weights() const;
};

inline constexpr std::size_t kDefaultTopK = 500;
inline constexpr double kDefaultGartLambda = 10.0;

/// 1 - <a, b>, clamped to [0, 2] to absorb rounding on unit vectors.
double cosine_distance(const Eigen::Ref<const Eigen::VectorXd>& a,
                       const Eigen::Ref<const Eigen::VectorXd>& b);

/// Ratio-test weight 1 - d_first / d_second, clamped to [0, 1]. Zero when
/// both distances are zero. Throws InvalidNeighborOrder when
/// d_second < d_first.
double ratio_weight(double d_first, double d_second);

/// Cosine distance plus `lambda` times the Euclidean distance between the
/// two points, which must already be expressed in a shared frame.
double gart_distance(const Eigen::Ref<const Eigen::VectorXd>& f_p,
                     const Eigen::Ref<const Eigen::VectorXd>& f_q,
                     const Eigen::Vector3d& x_p, const Eigen::Vector3d& x_q,
                     double lambda);

/**
 * One-directional ratio-test matching. Every source point is paired with its
 * nearest target descriptor in cosine distance and weighted by the ratio
 * against the second nearest; the pooled candidates are ranked by weight and
 * the best `k_keep` kept. Ties in the neighbor search go to the lower target
 * index, ties in the ranking to the lower source index.
 *
 * Throws InsufficientTargets when `dst` has fewer than two points.
 */
CorrespondenceSet match_ratio_test(const FeaturePointcloud& src,
                                   const FeaturePointcloud& dst,
                                   std::size_t k_keep = kDefaultTopK,
                                   FramePair frame_pair = {0, 1});

/**
 * Geometry-aware ratio test. Same pipeline as match_ratio_test, with both
 * neighbors and the ratio computed under gart_distance after mapping each
 * cloud into the shared frame by its camera-to-world transform.
 */
CorrespondenceSet match_gart(const FeaturePointcloud& src,
                             const FeaturePointcloud& dst,
                             const RigidTransform& src_to_world,
                             const RigidTransform& dst_to_world,
                             double lambda = kDefaultGartLambda,
                             std::size_t k_keep = kDefaultTopK,
                             FramePair frame_pair = {0, 1});

}  // namespace syncmatch
