#pragma once

#include "syncmatch/alignment.hpp"
#include "syncmatch/correspondence.hpp"
#include "syncmatch/synchronization.hpp"

#include <cstdint>
#include <string_view>
#include <vector>

namespace syncmatch {

struct SceneInput {
  std::vector<FeaturePointcloud> frames;
  /// Source-video frames between consecutive samples; metadata only.
  std::size_t adjacency_stride = 20;
};

enum class PipelineMode { FullPairwise, Windowed };

PipelineMode parse_mode(std::string_view name);
std::string_view to_string(PipelineMode mode);

struct PipelineConfig {
  PipelineMode mode = PipelineMode::FullPairwise;
  std::size_t window = 5;
  double gamma = kDefaultGamma;
  double lambda = kDefaultGartLambda;
  std::size_t k_keep = kDefaultTopK;
  RansacConfig ransac{};
  std::uint64_t seed = 0;

  void validate() const;
};

struct PairDiagnostics {
  std::size_t i = 0;
  std::size_t j = 0;
  int stage = 1;
  std::size_t correspondence_count = 0;
  double raw_confidence = 0.0;  // mean match weight
  double confidence = 0.0;      // after rescaling (0 for failed pairs)
  std::size_t inlier_count = 0;
  double registration_loss = 0.0;  // meters, under the stage's poses
  bool failed = false;
  std::string failure;
  RigidTransform transform;  // camera i -> camera j
  CorrespondenceSet correspondences;
};

struct SceneRegistration {
  SyncResult poses;         // final (refined) world-to-camera poses
  SyncResult stage1_poses;  // poses before refinement
  std::vector<PairDiagnostics> pair_diagnostics;
  bool refined = false;
  std::size_t pair_evaluations = 0;
  PoseGraph stage2_graph;
};

/**
 * Full multiview registration: ratio-test matching and WP-RANSAC on every
 * pair, confidence rescaling, power synchronization; then geometry-aware
 * rematching under the stage-1 poses, realignment and resynchronization.
 *
 * A non-adjacent pair whose alignment fails keeps confidence 0; a failing
 * adjacent pair aborts with AdjacentPairFailure.
 */
SceneRegistration register_scene(const SceneInput& input, const PipelineConfig& cfg);

/**
 * Linear-time variant: stage 1 aligns adjacent pairs only and composes the
 * chain; stage 2 rematches all pairs with |i - j| < window under those poses
 * and synchronizes. Other pairs get confidence 0.
 */
SceneRegistration register_sequence_windowed(const SceneInput& input,
                                             const PipelineConfig& cfg);

/// Dispatches on cfg.mode.
SceneRegistration register_frames(const SceneInput& input, const PipelineConfig& cfg);

/// sum_k w_k |T_j^-1 x_q - T_i^-1 x_p| over the set, with T_i, T_j
/// world-to-camera poses.
double registration_loss(const CorrespondenceSet& corr, const FeaturePointcloud& src,
                         const FeaturePointcloud& dst, const RigidTransform& t_i,
                         const RigidTransform& t_j);

}  // namespace syncmatch
