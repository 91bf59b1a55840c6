#include "random_fixtures.hpp"

#include "syncmatch/alignment.hpp"
#include "syncmatch/error.hpp"

#include <gtest/gtest.h>

#include <cstring>

namespace syncmatch {
namespace {

using testing::random_points;
using testing::random_rotation_by;
using testing::random_transform;
using testing::rotation_error_rad;
using testing::transform_points;
using testing::translation_error;

double max_abs_diff(const RigidTransform& a, const RigidTransform& b) {
  return (a.matrix() - b.matrix()).cwiseAbs().maxCoeff();
}

bool bitwise_equal(const AlignmentResult& a, const AlignmentResult& b) {
  const Eigen::Matrix4d ma = a.transform.matrix();
  const Eigen::Matrix4d mb = b.transform.matrix();
  return std::memcmp(ma.data(), mb.data(), sizeof(double) * 16) == 0 &&
         a.inlier_weights == b.inlier_weights && a.inlier_count == b.inlier_count &&
         std::memcmp(&a.residual_rms, &b.residual_rms, sizeof(double)) == 0;
}

struct Matches {
  std::vector<Eigen::Vector3d> src, dst;
  std::vector<double> w;
};

// `n` exact matches under `t`, with the given fraction replaced by uniform
// random targets in a 5 m cube.
Matches make_matches(std::mt19937_64& rng, const RigidTransform& t, std::size_t n,
                     double outlier_fraction) {
  Matches m;
  m.src = random_points(rng, n, 2.0);
  m.dst = transform_points(t, m.src);
  std::uniform_real_distribution<double> u(0.2, 1.0), box(-2.5, 2.5), coin(0.0, 1.0);
  for (std::size_t k = 0; k < n; ++k) {
    m.w.push_back(u(rng));
    if (coin(rng) < outlier_fraction) m.dst[k] = Eigen::Vector3d(box(rng), box(rng), box(rng));
  }
  return m;
}

TEST(WeightedProcrustes, IdentityOnEqualSets) {
  std::mt19937_64 rng(1);
  const auto pts = random_points(rng, 20);
  const std::vector<double> w(20, 1.0);
  EXPECT_LT(max_abs_diff(weighted_procrustes(pts, pts, w), RigidTransform{}), 1e-12);
}

TEST(WeightedProcrustes, PureTranslation) {
  std::mt19937_64 rng(2);
  const auto src = random_points(rng, 20);
  std::vector<Eigen::Vector3d> dst = src;
  for (auto& p : dst) p += Eigen::Vector3d(1, 2, 3);
  const RigidTransform t = weighted_procrustes(src, dst, std::vector<double>(20, 1.0));
  EXPECT_LT((t.rotation() - Eigen::Matrix3d::Identity()).norm(), 1e-12);
  EXPECT_LT((t.translation() - Eigen::Vector3d(1, 2, 3)).norm(), 1e-12);
}

TEST(WeightedProcrustes, RecoversRandomTransforms) {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 200; ++trial) {
    const RigidTransform t = random_transform(rng, 3.0);
    const auto src = random_points(rng, 50);
    std::uniform_real_distribution<double> u(0.1, 1.0);
    std::vector<double> w(50);
    for (auto& x : w) x = u(rng);
    EXPECT_LT(max_abs_diff(weighted_procrustes(src, transform_points(t, src), w), t), 1e-9);
  }
}

TEST(WeightedProcrustes, RandomSearchOptimality) {
  std::mt19937_64 rng(4);
  const RigidTransform t = random_transform(rng);
  const auto src = random_points(rng, 50);
  auto dst = transform_points(t, src);
  std::normal_distribution<double> noise(0.0, 0.01);
  for (auto& p : dst) p += Eigen::Vector3d(noise(rng), noise(rng), noise(rng));
  const std::vector<double> w(50, 1.0);
  const RigidTransform est = weighted_procrustes(src, dst, w);
  const double best = weighted_residual(est, src, dst, w);
  std::uniform_real_distribution<double> angle(0.0, 0.1 * 180.0 / std::numbers::pi);
  std::uniform_real_distribution<double> shift(-0.05 / std::sqrt(3.0), 0.05 / std::sqrt(3.0));
  for (int k = 0; k < 10000; ++k) {
    const RigidTransform delta(random_rotation_by(rng, angle(rng)),
                               Eigen::Vector3d(shift(rng), shift(rng), shift(rng)));
    ASSERT_GE(weighted_residual(est * delta, src, dst, w), best) << "perturbation " << k;
  }
}

TEST(WeightedProcrustes, Equivariance) {
  std::mt19937_64 rng(5);
  const RigidTransform t = random_transform(rng);
  const RigidTransform q = random_transform(rng, 2.0);
  const auto src = random_points(rng, 30);
  auto dst = transform_points(t, src);
  std::normal_distribution<double> noise(0.0, 0.02);
  for (auto& p : dst) p += Eigen::Vector3d(noise(rng), noise(rng), noise(rng));
  const std::vector<double> w(30, 1.0);
  const RigidTransform base = weighted_procrustes(src, dst, w);
  const RigidTransform moved = weighted_procrustes(transform_points(q, src), transform_points(q, dst), w);
  EXPECT_LT(max_abs_diff(moved, q.inverse() * base * q), 1e-9);
}

TEST(WeightedProcrustes, ZeroWeightsIgnored) {
  std::mt19937_64 rng(6);
  const RigidTransform t = random_transform(rng);
  const auto src = random_points(rng, 10);
  auto dst = transform_points(t, src);
  dst[3] += Eigen::Vector3d(50, 0, 0);
  std::vector<double> w(10, 1.0);
  w[3] = 0.0;
  EXPECT_LT(max_abs_diff(weighted_procrustes(src, dst, w), t), 1e-9);
}

TEST(WeightedProcrustes, Errors) {
  std::mt19937_64 rng(7);
  const auto pts = random_points(rng, 5);
  try {
    weighted_procrustes(pts, pts, std::vector<double>{1, 1, 0, 0, 0});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::InsufficientSupport);
  }
  std::vector<Eigen::Vector3d> line;
  for (int k = 0; k < 5; ++k) line.emplace_back(k, 2.0 * k, -k);
  try {
    weighted_procrustes(line, line, std::vector<double>(5, 1.0));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::DegenerateGeometry);
  }
  EXPECT_THROW(weighted_procrustes(pts, pts, std::vector<double>{1, 1, 1, -1, 1}), Error);
  EXPECT_THROW(weighted_procrustes(pts, pts, std::vector<double>{1, 1, 1}), Error);
}

TEST(RansacConfig, Validation) {
  RansacConfig cfg;
  EXPECT_NO_THROW(cfg.validate());
  cfg.sample_size = 2;
  EXPECT_THROW(cfg.validate(), Error);
  cfg = RansacConfig{};
  cfg.hypotheses = 0;
  EXPECT_THROW(cfg.validate(), Error);
  cfg = RansacConfig{};
  cfg.inlier_threshold = 0.0;
  EXPECT_THROW(cfg.validate(), Error);
}

TEST(WpRansac, ExactCorrespondences) {
  std::mt19937_64 rng(8);
  const RigidTransform t = random_transform(rng);
  const Matches m = make_matches(rng, t, 100, 0.0);
  const AlignmentResult r = wp_ransac(m.src, m.dst, m.w, RansacConfig{});
  EXPECT_LT(max_abs_diff(r.transform, t), 1e-9);
  EXPECT_EQ(r.inlier_count, 100u);
  EXPECT_EQ(r.inlier_weights, m.w);
  EXPECT_LT(r.residual_rms, 1e-9);
}

TEST(WpRansac, ThirtyPercentOutliers) {
  std::mt19937_64 rng(9);
  for (int trial = 0; trial < 50; ++trial) {
    const RigidTransform t = random_transform(rng);
    const Matches m = make_matches(rng, t, 200, 0.3);
    RansacConfig cfg;
    cfg.seed = static_cast<std::uint64_t>(trial);
    const AlignmentResult r = wp_ransac(m.src, m.dst, m.w, cfg);
    EXPECT_LT(testing::deg(rotation_error_rad(r.transform, t)), 0.5) << "trial " << trial;
    EXPECT_LT(translation_error(r.transform, t), 0.01) << "trial " << trial;
  }
}

TEST(WpRansac, InvariantsOnNoisyMatches) {
  std::mt19937_64 rng(10);
  const RigidTransform t = random_transform(rng);
  Matches m = make_matches(rng, t, 300, 0.25);
  std::normal_distribution<double> noise(0.0, 0.01);
  for (auto& p : m.dst) p += Eigen::Vector3d(noise(rng), noise(rng), noise(rng));
  const RansacConfig cfg;
  const AlignmentResult r = wp_ransac(m.src, m.dst, m.w, cfg);
  ASSERT_EQ(r.inlier_weights.size(), m.w.size());
  std::size_t positive = 0;
  for (std::size_t k = 0; k < m.w.size(); ++k) {
    EXPECT_TRUE(r.inlier_weights[k] == 0.0 || r.inlier_weights[k] == m.w[k]);
    positive += r.inlier_weights[k] > 0.0;
  }
  EXPECT_EQ(positive, r.inlier_count);
  EXPECT_GE(r.residual_rms, 0.0);
  EXPECT_LE(r.residual_rms, cfg.inlier_threshold);
  EXPECT_LT(so3_defect(r.transform.rotation()), 1e-9);
}

TEST(WpRansac, Deterministic) {
  std::mt19937_64 rng(11);
  const Matches m = make_matches(rng, random_transform(rng), 150, 0.3);
  RansacConfig cfg;
  cfg.seed = 99;
  EXPECT_TRUE(bitwise_equal(wp_ransac(m.src, m.dst, m.w, cfg), wp_ransac(m.src, m.dst, m.w, cfg)));
}

// Per-hypothesis seeding: the first k hypotheses are the same regardless of
// how many follow, so more hypotheses never lower the winning inlier count.
TEST(WpRansac, MoreHypothesesNeverWorse) {
  std::mt19937_64 rng(12);
  for (int trial = 0; trial < 20; ++trial) {
    Matches m = make_matches(rng, random_transform(rng), 120, 0.2);
    RansacConfig small;
    small.seed = static_cast<std::uint64_t>(trial);
    small.hypotheses = 8;
    RansacConfig large = small;
    large.hypotheses = 64;
    // A failed small run (no consensus, or too few inliers to refit) counts
    // as zero inliers.
    std::size_t a = 0;
    try {
      a = wp_ransac(m.src, m.dst, m.w, small).inlier_count;
    } catch (const Error&) {
    }
    const std::size_t b = wp_ransac(m.src, m.dst, m.w, large).inlier_count;
    EXPECT_GE(b, a) << "trial " << trial;
  }
}

TEST(WpRansac, SingleLargeOutlierZeroed) {
  std::mt19937_64 rng(13);
  const RigidTransform t = random_transform(rng);
  Matches clean = make_matches(rng, t, 500, 0.0);
  Matches dirty = clean;
  dirty.dst[137] += Eigen::Vector3d(10, 0, 0);
  const RansacConfig cfg;
  const AlignmentResult a = wp_ransac(clean.src, clean.dst, clean.w, cfg);
  const AlignmentResult b = wp_ransac(dirty.src, dirty.dst, dirty.w, cfg);
  EXPECT_EQ(b.inlier_weights[137], 0.0);
  EXPECT_EQ(b.inlier_count, 499u);
  EXPECT_LT(max_abs_diff(a.transform, b.transform), 1e-6);
  const RigidTransform plain = weighted_procrustes(dirty.src, dirty.dst, dirty.w);
  double shift = 0.0;
  for (const auto& p : clean.src) shift = std::max(shift, (plain.apply(p) - t.apply(p)).norm());
  EXPECT_GT(shift, 0.01);
}

TEST(WpRansac, Errors) {
  std::mt19937_64 rng(14);
  const Matches m = make_matches(rng, random_transform(rng), 5, 0.0);
  try {
    wp_ransac(m.src, m.dst, m.w, RansacConfig{});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::InsufficientSupport);
  }
  // Every target far from every hypothesis: a tiny threshold leaves no inlier.
  Matches noisy = make_matches(rng, random_transform(rng), 50, 1.0);
  RansacConfig cfg;
  cfg.inlier_threshold = 1e-9;
  try {
    wp_ransac(noisy.src, noisy.dst, noisy.w, cfg);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::NoConsensus);
  }
}

TEST(WpRansac, CorrespondenceSetOverload) {
  std::mt19937_64 rng(15);
  const RigidTransform t = random_transform(rng);
  FeaturePointcloud src, dst;
  src.points = random_points(rng, 40);
  dst.points = transform_points(t, src.points);
  // Shuffle the target order so the overload must follow the indices.
  std::vector<std::size_t> perm(40);
  std::iota(perm.begin(), perm.end(), 0);
  std::shuffle(perm.begin(), perm.end(), rng);
  std::vector<Eigen::Vector3d> shuffled(40);
  for (std::size_t k = 0; k < 40; ++k) shuffled[perm[k]] = dst.points[k];
  dst.points = shuffled;
  for (auto* c : {&src, &dst}) {
    c->pixels.assign(40, Eigen::Vector2d::Zero());
    c->descriptors = Eigen::MatrixXd::Zero(2, 40);
    c->descriptors.row(0).setOnes();
  }
  CorrespondenceSet corr;
  for (std::size_t k = 0; k < 40; ++k) corr.matches.push_back({k, perm[k], 0.5});
  const AlignmentResult r = wp_ransac(corr, src, dst, RansacConfig{});
  EXPECT_LT(max_abs_diff(r.transform, t), 1e-9);
  EXPECT_EQ(r.inlier_count, 40u);
}

}  // namespace
}  // namespace syncmatch
