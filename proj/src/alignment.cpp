#include "syncmatch/alignment.hpp"

#include "syncmatch/error.hpp"
#include "syncmatch/parallel.hpp"

#include <Eigen/LU>
#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <string>

namespace syncmatch {

namespace {

void check_lengths(std::size_t a, std::size_t b, std::size_t c) {
  if (a != b || a != c) {
    throw Error(ErrorKind::InvalidArgument,
                "point lists and weights must have equal length");
  }
}

/// Minimal sample for hypothesis `index`: weighted sampling without
/// replacement using exponential keys u^(1/w) (largest keys win).
std::vector<std::size_t> draw_sample(std::span<const double> weights,
                                     std::size_t sample_size,
                                     std::uint64_t seed, std::size_t index) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed),
                    static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(index),
                    static_cast<std::uint32_t>(static_cast<std::uint64_t>(index) >> 32)};
  std::mt19937_64 rng(seq);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  std::vector<std::pair<double, std::size_t>> keys(weights.size());
  for (std::size_t k = 0; k < weights.size(); ++k) {
    const double u = 1.0 - unit(rng);  // (0, 1]
    // log(u) / w orders identically to u^(1/w); zero weights sort last.
    const double key = weights[k] > 0.0 ? std::log(u) / weights[k]
                                        : -std::numeric_limits<double>::infinity();
    keys[k] = {key, k};
  }
  std::partial_sort(keys.begin(), keys.begin() + static_cast<std::ptrdiff_t>(sample_size),
                    keys.end(), [](const auto& a, const auto& b) {
                      if (a.first != b.first) return a.first > b.first;
                      return a.second < b.second;
                    });
  std::vector<std::size_t> sample(sample_size);
  for (std::size_t s = 0; s < sample_size; ++s) sample[s] = keys[s].second;
  return sample;
}

}  // namespace

void RansacConfig::validate() const {
  if (hypotheses < 1) {
    throw Error(ErrorKind::InvalidArgument, "hypotheses must be >= 1");
  }
  if (sample_size < 3) {
    throw Error(ErrorKind::InvalidArgument, "sample_size must be >= 3");
  }
  if (!(inlier_threshold > 0.0)) {
    throw Error(ErrorKind::InvalidArgument, "inlier_threshold must be positive");
  }
}

RigidTransform weighted_procrustes(std::span<const Eigen::Vector3d> src_points,
                                   std::span<const Eigen::Vector3d> dst_points,
                                   std::span<const double> weights) {
  check_lengths(src_points.size(), dst_points.size(), weights.size());

  std::size_t support = 0;
  double total = 0.0;
  Eigen::Vector3d src_mean = Eigen::Vector3d::Zero();
  Eigen::Vector3d dst_mean = Eigen::Vector3d::Zero();
  for (std::size_t k = 0; k < weights.size(); ++k) {
    const double w = weights[k];
    if (w < 0.0 || !std::isfinite(w)) {
      throw Error(ErrorKind::InvalidArgument, "weights must be finite and nonnegative");
    }
    if (w == 0.0) continue;
    ++support;
    total += w;
    src_mean += w * src_points[k];
    dst_mean += w * dst_points[k];
  }
  if (support < 3) {
    throw Error(ErrorKind::InsufficientSupport,
                "need at least 3 positively weighted correspondences, got " +
                    std::to_string(support));
  }
  src_mean /= total;
  dst_mean /= total;

  // Column form: dst ~ Q src + t with Q = R^T for the row-convention R.
  Eigen::Matrix3d cov = Eigen::Matrix3d::Zero();
  for (std::size_t k = 0; k < weights.size(); ++k) {
    if (weights[k] == 0.0) continue;
    cov += weights[k] * (dst_points[k] - dst_mean) * (src_points[k] - src_mean).transpose();
  }
  cov /= total;

  Eigen::JacobiSVD<Eigen::Matrix3d> svd(cov, Eigen::ComputeFullU | Eigen::ComputeFullV);
  if (svd.singularValues()(1) < 1e-10) {
    throw Error(ErrorKind::DegenerateGeometry,
                "weighted support is collinear or degenerate");
  }
  const Eigen::Matrix3d& u = svd.matrixU();
  const Eigen::Matrix3d& v = svd.matrixV();
  Eigen::Matrix3d d = Eigen::Matrix3d::Identity();
  if ((u * v.transpose()).determinant() < 0.0) d(2, 2) = -1.0;
  const Eigen::Matrix3d q = u * d * v.transpose();

  return {q.transpose(), dst_mean - q * src_mean};
}

double weighted_residual(const RigidTransform& t,
                         std::span<const Eigen::Vector3d> src_points,
                         std::span<const Eigen::Vector3d> dst_points,
                         std::span<const double> weights) {
  check_lengths(src_points.size(), dst_points.size(), weights.size());
  double sum = 0.0;
  for (std::size_t k = 0; k < weights.size(); ++k) {
    sum += weights[k] * (dst_points[k] - t.apply(src_points[k])).squaredNorm();
  }
  return sum;
}

AlignmentResult wp_ransac(std::span<const Eigen::Vector3d> src_points,
                          std::span<const Eigen::Vector3d> dst_points,
                          std::span<const double> weights,
                          const RansacConfig& cfg) {
  cfg.validate();
  check_lengths(src_points.size(), dst_points.size(), weights.size());
  const std::size_t n = weights.size();
  if (n < cfg.sample_size) {
    throw Error(ErrorKind::InsufficientSupport,
                "have " + std::to_string(n) + " correspondences, need " +
                    std::to_string(cfg.sample_size));
  }

  const double threshold_sq = cfg.inlier_threshold * cfg.inlier_threshold;
  auto is_inlier = [&](const RigidTransform& t, std::size_t k) {
    return (dst_points[k] - t.apply(src_points[k])).squaredNorm() < threshold_sq;
  };

  std::vector<std::size_t> scores(cfg.hypotheses, 0);
  std::vector<RigidTransform> fits(cfg.hypotheses);
  parallel_for(cfg.hypotheses, [&](std::size_t h) {
    const auto sample = draw_sample(weights, cfg.sample_size, cfg.seed, h);
    std::vector<Eigen::Vector3d> s_src(sample.size()), s_dst(sample.size());
    std::vector<double> s_w(sample.size());
    for (std::size_t s = 0; s < sample.size(); ++s) {
      s_src[s] = src_points[sample[s]];
      s_dst[s] = dst_points[sample[s]];
      s_w[s] = weights[sample[s]];
    }
    try {
      fits[h] = weighted_procrustes(s_src, s_dst, s_w);
    } catch (const Error&) {
      return;  // degenerate sample scores zero
    }
    std::size_t count = 0;
    for (std::size_t k = 0; k < n; ++k) count += is_inlier(fits[h], k) ? 1 : 0;
    scores[h] = count;
  });

  std::size_t best = 0;
  for (std::size_t h = 1; h < cfg.hypotheses; ++h) {
    if (scores[h] > scores[best]) best = h;
  }
  if (scores[best] == 0) {
    throw Error(ErrorKind::NoConsensus, "no hypothesis produced an inlier");
  }

  AlignmentResult result;
  result.inlier_weights.assign(weights.begin(), weights.end());
  for (std::size_t k = 0; k < n; ++k) {
    if (!is_inlier(fits[best], k)) result.inlier_weights[k] = 0.0;
  }
  result.transform = weighted_procrustes(src_points, dst_points, result.inlier_weights);

  double sq = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    if (result.inlier_weights[k] > 0.0) {
      ++result.inlier_count;
      sq += (dst_points[k] - result.transform.apply(src_points[k])).squaredNorm();
    }
  }
  result.residual_rms =
      result.inlier_count > 0 ? std::sqrt(sq / static_cast<double>(result.inlier_count)) : 0.0;
  return result;
}

AlignmentResult wp_ransac(const CorrespondenceSet& corr,
                          const FeaturePointcloud& src,
                          const FeaturePointcloud& dst, const RansacConfig& cfg) {
  std::vector<Eigen::Vector3d> s(corr.size()), d(corr.size());
  std::vector<double> w(corr.size());
  for (std::size_t k = 0; k < corr.size(); ++k) {
    const auto& m = corr.matches[k];
    if (m.source_index >= src.size() || m.target_index >= dst.size()) {
      throw Error(ErrorKind::InvalidArgument, "correspondence index out of range");
    }
    s[k] = src.points[m.source_index];
    d[k] = dst.points[m.target_index];
    w[k] = m.weight;
  }
  return wp_ransac(s, d, w, cfg);
}

}  // namespace syncmatch
