#pragma once

#include "syncmatch/correspondence.hpp"
#include "syncmatch/geometry.hpp"

#include <cstdint>
#include <span>
#include <vector>

namespace syncmatch {

struct AlignmentResult {
  RigidTransform transform;
  /// Original correspondence weights with outliers zeroed.
  std::vector<double> inlier_weights;
  std::size_t inlier_count = 0;
  /// RMS residual of the final transform over inliers, in meters.
  double residual_rms = 0.0;
};

struct RansacConfig {
  std::size_t hypotheses = 128;
  std::size_t sample_size = 8;
  double inlier_threshold = 0.05;  // meters
  std::uint64_t seed = 0;

  void validate() const;
};

/**
 * Closed-form minimizer of sum_k w_k |dst_k - T(src_k)|^2 over SE(3)
 * (weighted centroids, weighted cross-covariance, SVD with reflection guard).
 *
 * Throws InsufficientSupport with fewer than three positive weights and
 * DegenerateGeometry when the support is collinear (second singular value of
 * the cross-covariance below 1e-10).
 */
RigidTransform weighted_procrustes(std::span<const Eigen::Vector3d> src_points,
                                   std::span<const Eigen::Vector3d> dst_points,
                                   std::span<const double> weights);

/// Weighted residual sum_k w_k |dst_k - T(src_k)|^2.
double weighted_residual(const RigidTransform& t,
                         std::span<const Eigen::Vector3d> src_points,
                         std::span<const Eigen::Vector3d> dst_points,
                         std::span<const double> weights);

/**
 * WP-RANSAC over matched point lists. Samples `hypotheses` minimal subsets
 * (weighted by correspondence weight, without replacement), fits each with
 * weighted_procrustes and keeps the hypothesis with the most inliers
 * (residual below the threshold; ties to the lowest hypothesis index). The
 * winner's inlier mask zeroes the outlier weights and the final transform is
 * the weighted Procrustes fit over all correspondences with those weights.
 *
 * Each hypothesis draws from its own generator seeded by (seed, index), so
 * the result is identical for any evaluation order.
 *
 * Throws InsufficientSupport when there are fewer correspondences than
 * `sample_size`, NoConsensus when no hypothesis has an inlier.
 */
AlignmentResult wp_ransac(std::span<const Eigen::Vector3d> src_points,
                          std::span<const Eigen::Vector3d> dst_points,
                          std::span<const double> weights,
                          const RansacConfig& cfg);

/// WP-RANSAC over a correspondence set between two feature pointclouds.
AlignmentResult wp_ransac(const CorrespondenceSet& corr,
                          const FeaturePointcloud& src,
                          const FeaturePointcloud& dst, const RansacConfig& cfg);

}  // namespace syncmatch
