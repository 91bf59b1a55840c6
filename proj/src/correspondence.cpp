#include "syncmatch/correspondence.hpp"

#include "syncmatch/error.hpp"
#include "syncmatch/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace syncmatch {

void FeaturePointcloud::validate() const {
  if (pixels.size() != points.size() ||
      static_cast<std::size_t>(descriptors.cols()) != points.size()) {
    throw Error(ErrorKind::InvalidArgument,
                "points, pixels and descriptors must have equal length");
  }
  for (Eigen::Index i = 0; i < descriptors.cols(); ++i) {
    if (std::abs(descriptors.col(i).norm() - 1.0) > 1e-6) {
      throw Error(ErrorKind::InvalidArgument,
                  "descriptor " + std::to_string(i) + " is not unit norm");
    }
  }
}

std::vector<double> CorrespondenceSet::weights() const {
  std::vector<double> w;
  w.reserve(matches.size());
  for (const auto& m : matches) w.push_back(m.weight);
  return w;
}

double cosine_distance(const Eigen::Ref<const Eigen::VectorXd>& a,
                       const Eigen::Ref<const Eigen::VectorXd>& b) {
  return std::clamp(1.0 - a.dot(b), 0.0, 2.0);
}

double ratio_weight(double d_first, double d_second) {
  if (d_second < d_first) {
    throw Error(ErrorKind::InvalidNeighborOrder,
                "second neighbor is closer than the first");
  }
  if (d_second <= 0.0) return 0.0;
  return std::clamp(1.0 - d_first / d_second, 0.0, 1.0);
}

double gart_distance(const Eigen::Ref<const Eigen::VectorXd>& f_p,
                     const Eigen::Ref<const Eigen::VectorXd>& f_q,
                     const Eigen::Vector3d& x_p, const Eigen::Vector3d& x_q,
                     double lambda) {
  return cosine_distance(f_p, f_q) + lambda * (x_p - x_q).norm();
}

namespace {

constexpr std::size_t kChunk = 128;

/// Shared ratio-test core. `fill(begin, count, block)` writes the distances
/// of source points [begin, begin + count) to every target into the rows of
/// `block` (batched, for the neighbor search); `exact(p, q)` is the scalar
/// distance used for the two selected neighbors, so weights do not depend on
/// the batching.
template <typename Fill, typename Exact>
CorrespondenceSet ratio_test_matching(std::size_t n_src, std::size_t n_dst,
                                      std::size_t k_keep, FramePair frame_pair,
                                      const Fill& fill, const Exact& exact) {
  if (n_dst < 2) {
    throw Error(ErrorKind::InsufficientTargets,
                "ratio test needs at least two target points");
  }
  if (k_keep == 0) {
    throw Error(ErrorKind::InvalidArgument, "k_keep must be positive");
  }

  std::vector<Correspondence> candidates(n_src);
  const std::size_t chunks = (n_src + kChunk - 1) / kChunk;
  parallel_for(chunks, [&](std::size_t c) {
    const std::size_t begin = c * kChunk;
    const std::size_t count = std::min(kChunk, n_src - begin);
    Eigen::MatrixXd block(static_cast<Eigen::Index>(count), static_cast<Eigen::Index>(n_dst));
    fill(begin, count, block);
    for (std::size_t r = 0; r < count; ++r) {
      double d1 = std::numeric_limits<double>::infinity();
      double d2 = std::numeric_limits<double>::infinity();
      std::size_t q1 = 0, q2 = 1;
      for (std::size_t q = 0; q < n_dst; ++q) {
        const double d = block(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(q));
        if (d < d1) {
          d2 = d1;
          q2 = q1;
          d1 = d;
          q1 = q;
        } else if (d < d2) {
          d2 = d;
          q2 = q;
        }
      }
      const std::size_t p = begin + r;
      double e1 = exact(p, q1);
      double e2 = exact(p, q2);
      if (e2 < e1 || (e2 == e1 && q2 < q1)) {
        std::swap(e1, e2);
        std::swap(q1, q2);
      }
      candidates[p] = {p, q1, ratio_weight(e1, e2)};
    }
  });

  std::sort(candidates.begin(), candidates.end(),
            [](const Correspondence& a, const Correspondence& b) {
              if (a.weight != b.weight) return a.weight > b.weight;
              return a.source_index < b.source_index;
            });
  if (candidates.size() > k_keep) candidates.resize(k_keep);
  return {frame_pair, std::move(candidates)};
}

void cosine_block(const FeaturePointcloud& src, const FeaturePointcloud& dst,
                  std::size_t begin, std::size_t count, Eigen::MatrixXd& block) {
  block.noalias() = src.descriptors
                        .middleCols(static_cast<Eigen::Index>(begin),
                                    static_cast<Eigen::Index>(count))
                        .transpose() *
                    dst.descriptors;
  block = (1.0 - block.array()).max(0.0).min(2.0).matrix();
}

void check_dims(const FeaturePointcloud& src, const FeaturePointcloud& dst) {
  if (src.dim() != dst.dim() && src.size() > 0 && dst.size() > 0) {
    throw Error(ErrorKind::InvalidArgument, "descriptor dimensions differ");
  }
}

}  // namespace

CorrespondenceSet match_ratio_test(const FeaturePointcloud& src,
                                   const FeaturePointcloud& dst,
                                   std::size_t k_keep, FramePair frame_pair) {
  check_dims(src, dst);
  return ratio_test_matching(src.size(), dst.size(), k_keep, frame_pair,
                             [&](std::size_t begin, std::size_t count, Eigen::MatrixXd& block) {
                               cosine_block(src, dst, begin, count, block);
                             },
                             [&](std::size_t p, std::size_t q) {
                               return cosine_distance(src.descriptors.col(static_cast<Eigen::Index>(p)),
                                                      dst.descriptors.col(static_cast<Eigen::Index>(q)));
                             });
}

CorrespondenceSet match_gart(const FeaturePointcloud& src,
                             const FeaturePointcloud& dst,
                             const RigidTransform& src_to_world,
                             const RigidTransform& dst_to_world, double lambda,
                             std::size_t k_keep, FramePair frame_pair) {
  check_dims(src, dst);
  std::vector<Eigen::Vector3d> src_world(src.size());
  std::vector<Eigen::Vector3d> dst_world(dst.size());
  for (std::size_t i = 0; i < src.size(); ++i) src_world[i] = src_to_world.apply(src.points[i]);
  for (std::size_t i = 0; i < dst.size(); ++i) dst_world[i] = dst_to_world.apply(dst.points[i]);
  return ratio_test_matching(
      src.size(), dst.size(), k_keep, frame_pair,
      [&](std::size_t begin, std::size_t count, Eigen::MatrixXd& block) {
        cosine_block(src, dst, begin, count, block);
        for (std::size_t r = 0; r < count; ++r) {
          const Eigen::Vector3d& x_p = src_world[begin + r];
          for (std::size_t q = 0; q < dst.size(); ++q) {
            block(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(q)) +=
                lambda * (x_p - dst_world[q]).norm();
          }
        }
      },
      [&](std::size_t p, std::size_t q) {
        return gart_distance(src.descriptors.col(static_cast<Eigen::Index>(p)),
                             dst.descriptors.col(static_cast<Eigen::Index>(q)), src_world[p],
                             dst_world[q], lambda);
      });
}

}  // namespace syncmatch
