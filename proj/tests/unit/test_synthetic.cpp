#include "random_fixtures.hpp"

#include "syncmatch/alignment.hpp"
#include "syncmatch/error.hpp"
#include "syncmatch/synthetic.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <cstring>

namespace syncmatch {
namespace {

SceneSpec small_spec(Motion motion, std::uint64_t seed = 3) {
  SceneSpec spec;
  spec.n_frames = 5;
  spec.n_landmarks = 600;
  spec.motion = motion;
  spec.seed = seed;
  spec.descriptor_dim = 32;
  return spec;
}

bool same_bytes(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  return a.rows() == b.rows() && a.cols() == b.cols() &&
         std::memcmp(a.data(), b.data(), sizeof(double) * static_cast<std::size_t>(a.size())) == 0;
}

double precision(const LabeledObservation& a, const LabeledObservation& b, const CorrespondenceSet& set) {
  std::size_t good = 0;
  for (const auto& m : set.matches) good += a.landmark_ids[m.source_index] == b.landmark_ids[m.target_index];
  return set.empty() ? 0.0 : static_cast<double>(good) / static_cast<double>(set.size());
}

TEST(Motion, ParseRoundTrip) {
  for (Motion m : {Motion::LateralPan, Motion::Orbit, Motion::Corridor}) {
    EXPECT_EQ(parse_motion(to_string(m)), m);
  }
  EXPECT_EQ(parse_motion("lateral_pan"), Motion::LateralPan);
  EXPECT_THROW(parse_motion("spiral"), Error);
}

TEST(GenerateScene, Validation) {
  SceneSpec spec = small_spec(Motion::Orbit);
  spec.n_frames = 1;
  EXPECT_THROW(generate_scene(spec), Error);
  spec = small_spec(Motion::Orbit);
  spec.n_landmarks = 49;
  EXPECT_THROW(generate_scene(spec), Error);
  spec = small_spec(Motion::LateralPan);
  spec.pan_step = 25.0;
  try {
    generate_scene(spec);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::GenerationFailure);
  }
}

TEST(GenerateScene, Deterministic) {
  for (Motion m : {Motion::LateralPan, Motion::Orbit, Motion::Corridor}) {
    const SyntheticScene a = generate_scene(small_spec(m));
    const SyntheticScene b = generate_scene(small_spec(m));
    ASSERT_EQ(a.landmarks.size(), b.landmarks.size());
    for (std::size_t i = 0; i < a.landmarks.size(); ++i) ASSERT_EQ(a.landmarks[i], b.landmarks[i]);
    EXPECT_TRUE(same_bytes(a.descriptors, b.descriptors));
    EXPECT_TRUE(same_bytes(a.overlap, b.overlap));
    for (std::size_t f = 0; f < a.n_frames(); ++f) {
      EXPECT_TRUE(same_bytes(a.trajectory[f].matrix(), b.trajectory[f].matrix()));
    }
    const SyntheticScene c = generate_scene(small_spec(m, 4));
    EXPECT_FALSE(same_bytes(a.descriptors, c.descriptors));
  }
}

TEST(GenerateScene, Invariants) {
  for (Motion m : {Motion::LateralPan, Motion::Orbit, Motion::Corridor}) {
    const SceneSpec spec = small_spec(m);
    const SyntheticScene s = generate_scene(spec);
    ASSERT_EQ(s.n_frames(), spec.n_frames);
    ASSERT_EQ(s.landmarks.size(), spec.n_landmarks);
    ASSERT_EQ(s.descriptors.cols(), static_cast<Eigen::Index>(spec.n_landmarks));
    for (Eigen::Index c = 0; c < s.descriptors.cols(); ++c) {
      EXPECT_NEAR(s.descriptors.col(c).norm(), 1.0, 1e-12);
    }
    for (const auto& p : s.landmarks) {
      EXPECT_TRUE((p.array() >= s.room.min.array()).all() && (p.array() <= s.room.max.array()).all());
    }
    ASSERT_EQ(s.overlap.rows(), static_cast<Eigen::Index>(spec.n_frames));
    EXPECT_TRUE(s.overlap.isApprox(s.overlap.transpose()));
    for (Eigen::Index i = 0; i < s.overlap.rows(); ++i) {
      EXPECT_EQ(s.overlap(i, i), 1.0);
      if (i + 1 < s.overlap.rows()) EXPECT_GE(s.overlap(i, i + 1), spec.min_overlap);
    }
    for (const auto& t : s.trajectory) EXPECT_LT(so3_defect(t.rotation()), 1e-12);
  }
}

TEST(GenerateScene, OverlapMatchesVisibilityCount) {
  const SyntheticScene s = generate_scene(small_spec(Motion::Corridor));
  for (std::size_t i = 0; i < s.n_frames(); ++i) {
    const auto vi = visible_landmarks(s, i);
    for (std::size_t j = 0; j < s.n_frames(); ++j) {
      const auto vj = visible_landmarks(s, j);
      std::vector<std::size_t> shared;
      std::set_intersection(vi.begin(), vi.end(), vj.begin(), vj.end(), std::back_inserter(shared));
      const double expected = static_cast<double>(shared.size()) /
                              static_cast<double>(std::max(vi.size(), vj.size()));
      EXPECT_NEAR(s.overlap(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)), expected, 1e-15);
    }
  }
}

TEST(GenerateScene, OrbitTwoFramesShareMost) {
  SceneSpec spec = small_spec(Motion::Orbit);
  spec.n_frames = 2;
  EXPECT_GE(generate_scene(spec).overlap(0, 1), 0.9);
}

TEST(GenerateScene, LateralPanLosesOverlap) {
  SceneSpec spec = small_spec(Motion::LateralPan);
  spec.n_frames = 7;
  spec.n_landmarks = 2000;
  spec.pan_step = 1.2;
  const SyntheticScene s = generate_scene(spec);
  EXPECT_EQ(s.overlap(0, 6), 0.0);
  EXPECT_GE(s.overlap(0, 1), spec.min_overlap);
}

TEST(ObserveFrame, ZeroCorruptionIsExact) {
  const SyntheticScene s = generate_scene(small_spec(Motion::Orbit));
  for (std::size_t f = 0; f < s.n_frames(); ++f) {
    const LabeledObservation obs = observe_frame_labeled(s, f, CorruptionSpec{});
    ASSERT_EQ(obs.landmark_ids, visible_landmarks(s, f));
    ASSERT_NO_THROW(obs.cloud.validate());
    for (std::size_t k = 0; k < obs.cloud.size(); ++k) {
      const std::size_t id = obs.landmark_ids[k];
      EXPECT_LT((obs.cloud.points[k] - s.trajectory[f].apply(s.landmarks[id])).norm(), 1e-9);
      EXPECT_LT((backproject_pixel(obs.cloud.pixels[k], obs.cloud.points[k].z(), s.intrinsics) -
                 obs.cloud.points[k]).norm(), 1e-9);
      EXPECT_EQ(obs.cloud.descriptors.col(static_cast<Eigen::Index>(k)),
                s.descriptors.col(static_cast<Eigen::Index>(id)));
    }
  }
}

TEST(ObserveFrame, GroundTruthConsistency) {
  const SyntheticScene s = generate_scene(small_spec(Motion::LateralPan));
  const auto a = observe_frame_labeled(s, 0, CorruptionSpec{});
  const auto b = observe_frame_labeled(s, 1, CorruptionSpec{});
  std::vector<Eigen::Vector3d> src, dst;
  for (std::size_t p = 0; p < a.landmark_ids.size(); ++p) {
    for (std::size_t q = 0; q < b.landmark_ids.size(); ++q) {
      if (a.landmark_ids[p] == b.landmark_ids[q]) {
        src.push_back(a.cloud.points[p]);
        dst.push_back(b.cloud.points[q]);
      }
    }
  }
  ASSERT_GE(src.size(), 3u);
  const std::vector<double> w(src.size(), 1.0);
  const RigidTransform truth = s.trajectory[0].inverse() * s.trajectory[1];
  const RigidTransform fit = weighted_procrustes(src, dst, w);
  EXPECT_LT((fit.matrix() - truth.matrix()).cwiseAbs().maxCoeff(), 1e-9);
  EXPECT_LT(weighted_residual(truth, src, dst, w), 1e-18 * static_cast<double>(src.size()) + 1e-15);
}

TEST(ObserveFrame, DepthNoiseStatistics) {
  CorruptionSpec corruption;
  corruption.depth_sigma = 0.01;
  std::vector<double> dz;
  for (std::uint64_t seed = 0; dz.size() < 10000; ++seed) {
    SceneSpec spec = small_spec(Motion::Orbit, seed);
    spec.n_landmarks = 2000;
    const SyntheticScene s = generate_scene(spec);
    corruption.seed = seed;
    for (std::size_t f = 0; f < s.n_frames(); ++f) {
      const auto obs = observe_frame_labeled(s, f, corruption);
      for (std::size_t k = 0; k < obs.cloud.size(); ++k) {
        const Eigen::Vector3d clean = s.trajectory[f].apply(s.landmarks[obs.landmark_ids[k]]);
        const Eigen::Vector3d& noisy = obs.cloud.points[k];
        // Along the ray: the noisy point is a positive multiple of the clean one.
        EXPECT_LT(noisy.cross(clean).norm(), 1e-9 * clean.squaredNorm());
        dz.push_back(noisy.z() - clean.z());
      }
    }
  }
  double mean = 0.0;
  for (double d : dz) mean += d;
  mean /= static_cast<double>(dz.size());
  double var = 0.0;
  for (double d : dz) var += (d - mean) * (d - mean);
  const double sigma = std::sqrt(var / static_cast<double>(dz.size() - 1));
  EXPECT_GE(sigma, 0.008);
  EXPECT_LE(sigma, 0.012);
}

TEST(ObserveFrame, DropAndOutlierCounts) {
  const SyntheticScene s = generate_scene(small_spec(Motion::Orbit));
  const std::size_t visible = visible_landmarks(s, 2).size();
  CorruptionSpec corruption;
  corruption.drop_fraction = 0.25;
  corruption.outlier_fraction = 0.5;
  corruption.seed = 11;
  const auto obs = observe_frame_labeled(s, 2, corruption);
  const auto expected = visible - static_cast<std::size_t>(std::llround(0.25 * static_cast<double>(visible)));
  EXPECT_EQ(obs.cloud.size(), expected);
  EXPECT_TRUE(std::is_sorted(obs.landmark_ids.begin(), obs.landmark_ids.end()));
  std::size_t replaced = 0;
  for (std::size_t k = 0; k < obs.cloud.size(); ++k) {
    replaced += obs.cloud.descriptors.col(static_cast<Eigen::Index>(k)) !=
                s.descriptors.col(static_cast<Eigen::Index>(obs.landmark_ids[k]));
  }
  EXPECT_EQ(replaced, static_cast<std::size_t>(std::llround(0.5 * static_cast<double>(expected))));
  EXPECT_NO_THROW(obs.cloud.validate());
}

TEST(ObserveFrame, SeededDeterminism) {
  const SyntheticScene s = generate_scene(small_spec(Motion::Corridor));
  CorruptionSpec corruption{0.1, 0.2, 0.01, 0.1, 5};
  const auto a = observe_frame_labeled(s, 1, corruption);
  const auto b = observe_frame_labeled(s, 1, corruption);
  EXPECT_EQ(a.landmark_ids, b.landmark_ids);
  EXPECT_TRUE(same_bytes(a.cloud.descriptors, b.cloud.descriptors));
  for (std::size_t k = 0; k < a.cloud.size(); ++k) EXPECT_EQ(a.cloud.points[k], b.cloud.points[k]);
  corruption.seed = 6;
  EXPECT_NE(observe_frame_labeled(s, 1, corruption).landmark_ids, a.landmark_ids);
}

TEST(ObserveFrame, AllOutliersGiveChancePrecision) {
  SceneSpec spec = small_spec(Motion::Orbit);
  spec.n_frames = 2;
  spec.n_landmarks = 1500;
  const SyntheticScene s = generate_scene(spec);
  CorruptionSpec clean;
  CorruptionSpec broken;
  broken.outlier_fraction = 1.0;
  const auto a = observe_frame_labeled(s, 0, clean);
  const auto b = observe_frame_labeled(s, 1, clean);
  const auto a_bad = observe_frame_labeled(s, 0, broken);
  EXPECT_GT(precision(a, b, match_ratio_test(a.cloud, b.cloud, 500)), 0.8);
  EXPECT_LT(precision(a_bad, b, match_ratio_test(a_bad.cloud, b.cloud, 500)), 0.02);
}

TEST(ObserveFrame, RejectsBadInput) {
  const SyntheticScene s = generate_scene(small_spec(Motion::Orbit));
  EXPECT_THROW(observe_frame(s, 5, CorruptionSpec{}), Error);
  CorruptionSpec bad;
  bad.outlier_fraction = 1.5;
  EXPECT_THROW(observe_frame(s, 0, bad), Error);
  bad = CorruptionSpec{};
  bad.depth_sigma = -0.1;
  EXPECT_THROW(observe_frame(s, 0, bad), Error);
}

TEST(LookAt, PlacesTargetOnOpticalAxis) {
  const Eigen::Vector3d center(1, 2, 3), target(4, 2, 7);
  const RigidTransform pose = look_at(center, target);
  EXPECT_LT(pose.apply(center).norm(), 1e-12);
  const Eigen::Vector3d t = pose.apply(target);
  EXPECT_NEAR(t.x(), 0.0, 1e-12);
  EXPECT_NEAR(t.y(), 0.0, 1e-12);
  EXPECT_NEAR(t.z(), 5.0, 1e-12);
}

}  // namespace
}  // namespace syncmatch
