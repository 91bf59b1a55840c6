#include "random_fixtures.hpp"

#include "syncmatch/correspondence.hpp"
#include "syncmatch/error.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <limits>
#include <numeric>

namespace syncmatch {
namespace {

using testing::random_points;
using testing::random_transform;
using testing::transform_points;

Eigen::MatrixXd random_descriptors(std::mt19937_64& rng, Eigen::Index dim, std::size_t n) {
  std::normal_distribution<double> g;
  Eigen::MatrixXd d(dim, static_cast<Eigen::Index>(n));
  for (Eigen::Index c = 0; c < d.cols(); ++c) {
    for (Eigen::Index r = 0; r < dim; ++r) d(r, c) = g(rng);
    d.col(c).normalize();
  }
  return d;
}

Eigen::MatrixXd perturb(std::mt19937_64& rng, const Eigen::MatrixXd& d, double sigma) {
  std::normal_distribution<double> g(0.0, sigma);
  Eigen::MatrixXd out = d;
  for (Eigen::Index c = 0; c < out.cols(); ++c) {
    for (Eigen::Index r = 0; r < out.rows(); ++r) out(r, c) += g(rng);
    out.col(c).normalize();
  }
  return out;
}

FeaturePointcloud make_cloud(std::vector<Eigen::Vector3d> points, Eigen::MatrixXd descriptors) {
  FeaturePointcloud c;
  c.pixels.assign(points.size(), Eigen::Vector2d::Zero());
  c.points = std::move(points);
  c.descriptors = std::move(descriptors);
  return c;
}

// Quadratic-scan reference: 2-NN per source point with lowest-index ties,
// then a stable global ranking by weight.
template <typename Distance>
std::vector<Correspondence> brute_force(std::size_t n_src, std::size_t n_dst, std::size_t k_keep,
                                        Distance dist) {
  std::vector<Correspondence> all;
  for (std::size_t p = 0; p < n_src; ++p) {
    std::size_t q1 = 0;
    double d1 = std::numeric_limits<double>::infinity();
    for (std::size_t q = 0; q < n_dst; ++q) {
      const double d = dist(p, q);
      if (d < d1) { d1 = d; q1 = q; }
    }
    double d2 = std::numeric_limits<double>::infinity();
    for (std::size_t q = 0; q < n_dst; ++q) {
      if (q == q1) continue;
      d2 = std::min(d2, dist(p, q));
    }
    all.push_back({p, q1, ratio_weight(d1, d2)});
  }
  std::stable_sort(all.begin(), all.end(),
                   [](const Correspondence& a, const Correspondence& b) { return a.weight > b.weight; });
  if (all.size() > k_keep) all.resize(k_keep);
  return all;
}

void expect_identical(const std::vector<Correspondence>& got, const std::vector<Correspondence>& want) {
  ASSERT_EQ(got.size(), want.size());
  for (std::size_t i = 0; i < got.size(); ++i) {
    EXPECT_EQ(got[i].source_index, want[i].source_index) << "rank " << i;
    EXPECT_EQ(got[i].target_index, want[i].target_index) << "rank " << i;
    EXPECT_EQ(got[i].weight, want[i].weight) << "rank " << i;
  }
}

void expect_set_invariants(const CorrespondenceSet& set, std::size_t n_src, std::size_t n_dst,
                           std::size_t k_keep) {
  EXPECT_LE(set.size(), k_keep);
  std::vector<bool> seen(n_src, false);
  for (std::size_t i = 0; i < set.size(); ++i) {
    const auto& m = set.matches[i];
    EXPECT_GE(m.weight, 0.0);
    EXPECT_LE(m.weight, 1.0);
    ASSERT_LT(m.source_index, n_src);
    ASSERT_LT(m.target_index, n_dst);
    EXPECT_FALSE(seen[m.source_index]) << "duplicate source " << m.source_index;
    seen[m.source_index] = true;
    if (i > 0) EXPECT_GE(set.matches[i - 1].weight, m.weight);
  }
}

TEST(CosineDistance, SpecExamples) {
  const Eigen::Vector3d a(1, 0, 0);
  EXPECT_DOUBLE_EQ(cosine_distance(a, a), 0.0);
  EXPECT_DOUBLE_EQ(cosine_distance(a, -a), 2.0);
  EXPECT_DOUBLE_EQ(cosine_distance(a, Eigen::Vector3d(0, 1, 0)), 1.0);
}

TEST(RatioWeight, SpecExamples) {
  EXPECT_DOUBLE_EQ(ratio_weight(0.0, 0.8), 1.0);
  EXPECT_DOUBLE_EQ(ratio_weight(0.5, 0.5), 0.0);
  EXPECT_DOUBLE_EQ(ratio_weight(0.2, 0.8), 0.75);
  EXPECT_DOUBLE_EQ(ratio_weight(0.0, 0.0), 0.0);
}

TEST(RatioWeight, RejectsWrongOrder) {
  try {
    ratio_weight(0.6, 0.5);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::InvalidNeighborOrder);
  }
}

TEST(GartDistance, SpecExamples) {
  const Eigen::Vector2d f(1, 0);
  const Eigen::Vector3d x(1, 2, 3);
  EXPECT_DOUBLE_EQ(gart_distance(f, f, x, x, 10.0), 0.0);
  EXPECT_NEAR(gart_distance(f, f, x, x + Eigen::Vector3d(0.1, 0, 0), 10.0), 1.0, 1e-12);
  // cos(theta) = 0.7 gives a cosine distance of 0.3.
  const Eigen::Vector2d g(0.7, std::sqrt(1.0 - 0.49));
  EXPECT_NEAR(gart_distance(f, g, x, x + Eigen::Vector3d(0, 0.05, 0), 10.0), 0.8, 1e-12);
}

TEST(FeaturePointcloud, Validation) {
  std::mt19937_64 rng(1);
  FeaturePointcloud c = make_cloud(random_points(rng, 4), random_descriptors(rng, 8, 4));
  EXPECT_NO_THROW(c.validate());
  c.descriptors(0, 2) += 1e-3;
  EXPECT_THROW(c.validate(), Error);
  c = make_cloud(random_points(rng, 4), random_descriptors(rng, 8, 3));
  EXPECT_THROW(c.validate(), Error);
}

TEST(MatchRatioTest, PermutedCopyRecoversPermutation) {
  std::mt19937_64 rng(2);
  const std::size_t n = 64;
  const Eigen::MatrixXd d = random_descriptors(rng, 128, n);
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  std::shuffle(perm.begin(), perm.end(), rng);
  Eigen::MatrixXd shuffled(128, n);
  for (std::size_t i = 0; i < n; ++i) shuffled.col(static_cast<Eigen::Index>(perm[i])) = d.col(static_cast<Eigen::Index>(i));

  const auto src = make_cloud(random_points(rng, n), d);
  const auto dst = make_cloud(random_points(rng, n), shuffled);
  const CorrespondenceSet set = match_ratio_test(src, dst, n);
  ASSERT_EQ(set.size(), n);
  for (const auto& m : set.matches) {
    EXPECT_EQ(m.target_index, perm[m.source_index]);
    EXPECT_GT(m.weight, 1.0 - 1e-9);
  }
}

TEST(MatchRatioTest, TopOneIsGlobalBest) {
  std::mt19937_64 rng(3);
  const Eigen::MatrixXd d = random_descriptors(rng, 32, 100);
  const auto src = make_cloud(random_points(rng, 100), perturb(rng, d, 0.1));
  const auto dst = make_cloud(random_points(rng, 100), d);
  const CorrespondenceSet all = match_ratio_test(src, dst, 1000);
  const CorrespondenceSet one = match_ratio_test(src, dst, 1);
  ASSERT_EQ(one.size(), 1u);
  EXPECT_EQ(one.matches[0].source_index, all.matches[0].source_index);
  EXPECT_EQ(one.matches[0].weight, all.matches[0].weight);
}

TEST(MatchRatioTest, BruteForceOracle200) {
  std::mt19937_64 rng(4);
  const std::size_t n = 200;
  const Eigen::MatrixXd d = random_descriptors(rng, 128, n);
  const auto src = make_cloud(random_points(rng, n), perturb(rng, d, 0.05));
  const auto dst = make_cloud(random_points(rng, n), d);
  const auto dist = [&](std::size_t p, std::size_t q) {
    return cosine_distance(src.descriptors.col(static_cast<Eigen::Index>(p)),
                           dst.descriptors.col(static_cast<Eigen::Index>(q)));
  };
  for (std::size_t k : {std::size_t{1}, std::size_t{50}, std::size_t{500}}) {
    const CorrespondenceSet set = match_ratio_test(src, dst, k, {2, 5});
    EXPECT_EQ(set.frame_pair, (FramePair{2, 5}));
    expect_set_invariants(set, n, n, k);
    expect_identical(set.matches, brute_force(n, n, k, dist));
  }
}

// Property: oracle equivalence on random sizes up to 500, spanning several
// GEMM chunks and uneven source/target counts.
TEST(MatchRatioTest, BruteForceOracleRandomSizes) {
  std::mt19937_64 rng(5);
  std::uniform_int_distribution<std::size_t> size(2, 500);
  for (int trial = 0; trial < 8; ++trial) {
    const std::size_t n_src = size(rng);
    const std::size_t n_dst = size(rng);
    const auto src = make_cloud(random_points(rng, n_src), random_descriptors(rng, 16, n_src));
    const auto dst = make_cloud(random_points(rng, n_dst), random_descriptors(rng, 16, n_dst));
    const auto dist = [&](std::size_t p, std::size_t q) {
      return cosine_distance(src.descriptors.col(static_cast<Eigen::Index>(p)),
                             dst.descriptors.col(static_cast<Eigen::Index>(q)));
    };
    const CorrespondenceSet set = match_ratio_test(src, dst, 500);
    expect_set_invariants(set, n_src, n_dst, 500);
    expect_identical(set.matches, brute_force(n_src, n_dst, 500, dist));
  }
}

TEST(MatchRatioTest, TiesGoToLowerTargetIndex) {
  // Two identical target descriptors: the nearest is the lower index and the
  // ratio weight is 0 by the d_second = d_first convention.
  Eigen::MatrixXd dd(2, 3);
  dd << 1, 1, 0,
        0, 0, 1;
  Eigen::MatrixXd sd(2, 1);
  sd << 1, 0;
  const auto src = make_cloud({Eigen::Vector3d::Zero()}, sd);
  const auto dst = make_cloud(std::vector<Eigen::Vector3d>(3, Eigen::Vector3d::Zero()), dd);
  const CorrespondenceSet set = match_ratio_test(src, dst, 10);
  ASSERT_EQ(set.size(), 1u);
  EXPECT_EQ(set.matches[0].target_index, 0u);
  EXPECT_EQ(set.matches[0].weight, 0.0);
}

TEST(MatchRatioTest, InsufficientTargets) {
  std::mt19937_64 rng(6);
  const auto src = make_cloud(random_points(rng, 5), random_descriptors(rng, 8, 5));
  const auto dst = make_cloud(random_points(rng, 1), random_descriptors(rng, 8, 1));
  try {
    match_ratio_test(src, dst, 10);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::InsufficientTargets);
  }
  EXPECT_THROW(match_gart(src, dst, RigidTransform{}, RigidTransform{}), Error);
}

TEST(MatchRatioTest, RejectsDimensionMismatch) {
  std::mt19937_64 rng(7);
  const auto src = make_cloud(random_points(rng, 5), random_descriptors(rng, 8, 5));
  const auto dst = make_cloud(random_points(rng, 5), random_descriptors(rng, 16, 5));
  EXPECT_THROW(match_ratio_test(src, dst, 10), Error);
}

TEST(MatchGart, LambdaZeroEqualsRatioTest) {
  std::mt19937_64 rng(8);
  const std::size_t n = 300;
  const Eigen::MatrixXd d = random_descriptors(rng, 32, n);
  const auto src = make_cloud(random_points(rng, n), perturb(rng, d, 0.2));
  const auto dst = make_cloud(random_points(rng, n), d);
  const CorrespondenceSet a = match_ratio_test(src, dst, 120, {1, 3});
  const CorrespondenceSet b = match_gart(src, dst, random_transform(rng), random_transform(rng), 0.0, 120, {1, 3});
  EXPECT_EQ(b.frame_pair, a.frame_pair);
  expect_identical(b.matches, a.matches);
}

TEST(MatchGart, PerfectAlignmentNoiselessDescriptors) {
  std::mt19937_64 rng(9);
  const std::size_t n = 80;
  const auto world = random_points(rng, n, 2.0);
  const RigidTransform t_src = random_transform(rng);  // camera to world
  const RigidTransform t_dst = random_transform(rng);
  const Eigen::MatrixXd d = random_descriptors(rng, 64, n);
  const auto src = make_cloud(transform_points(t_src.inverse(), world), d);
  const auto dst = make_cloud(transform_points(t_dst.inverse(), world), d);

  const CorrespondenceSet plain = match_ratio_test(src, dst, n);
  const CorrespondenceSet gart = match_gart(src, dst, t_src, t_dst, 10.0, n);
  ASSERT_EQ(plain.size(), n);
  ASSERT_EQ(gart.size(), n);
  std::vector<double> plain_w(n), gart_w(n);
  for (const auto& m : plain.matches) {
    EXPECT_EQ(m.target_index, m.source_index);
    plain_w[m.source_index] = m.weight;
  }
  for (const auto& m : gart.matches) {
    EXPECT_EQ(m.target_index, m.source_index);
    gart_w[m.source_index] = m.weight;
  }
  for (std::size_t p = 0; p < n; ++p) EXPECT_GE(gart_w[p], plain_w[p] - 1e-12);
}

TEST(MatchGart, BruteForceOracle) {
  std::mt19937_64 rng(10);
  const std::size_t n = 150;
  const auto world = random_points(rng, n, 1.5);
  const RigidTransform t_src = random_transform(rng);
  const RigidTransform t_dst = random_transform(rng);
  const Eigen::MatrixXd d = random_descriptors(rng, 32, n);
  const auto src = make_cloud(transform_points(t_src.inverse(), world), perturb(rng, d, 0.3));
  const auto dst = make_cloud(transform_points(t_dst.inverse(), world), d);
  const auto dist = [&](std::size_t p, std::size_t q) {
    return gart_distance(src.descriptors.col(static_cast<Eigen::Index>(p)),
                         dst.descriptors.col(static_cast<Eigen::Index>(q)), t_src.apply(src.points[p]),
                         t_dst.apply(dst.points[q]), 10.0);
  };
  expect_identical(match_gart(src, dst, t_src, t_dst, 10.0, 100).matches, brute_force(n, n, 100, dist));
}

// Random descriptors, exact alignment: geometry alone recovers the truth far
// more often than the descriptor-only matcher.
TEST(MatchGart, BeatsFeatureOnlyOnRandomDescriptors) {
  std::mt19937_64 rng(11);
  const std::size_t n = 200;
  for (int scene = 0; scene < 20; ++scene) {
    const auto world = random_points(rng, n, 2.0);
    const RigidTransform t_src = random_transform(rng);
    const RigidTransform t_dst = random_transform(rng);
    const auto src = make_cloud(transform_points(t_src.inverse(), world), random_descriptors(rng, 32, n));
    const auto dst = make_cloud(transform_points(t_dst.inverse(), world), random_descriptors(rng, 32, n));
    const auto precision = [&](const CorrespondenceSet& set) {
      std::size_t good = 0;
      for (const auto& m : set.matches) {
        good += (world[m.source_index] - world[m.target_index]).norm() < 0.05;
      }
      return static_cast<double>(good) / static_cast<double>(set.size());
    };
    const double feat = precision(match_ratio_test(src, dst, 100));
    const double geo = precision(match_gart(src, dst, t_src, t_dst, 10.0, 100));
    EXPECT_GT(geo, feat) << "scene " << scene;
  }
}

TEST(MatchRatioTest, DeterministicAcrossCalls) {
  std::mt19937_64 rng(12);
  const auto src = make_cloud(random_points(rng, 257), random_descriptors(rng, 24, 257));
  const auto dst = make_cloud(random_points(rng, 301), random_descriptors(rng, 24, 301));
  expect_identical(match_ratio_test(src, dst, 200).matches, match_ratio_test(src, dst, 200).matches);
}

}  // namespace
}  // namespace syncmatch
