#pragma once

#include "syncmatch/correspondence.hpp"
#include "syncmatch/geometry.hpp"

#include <Eigen/Core>

#include <cstddef>
#include <map>
#include <optional>
#include <utility>
#include <vector>

namespace syncmatch {

inline constexpr double kDefaultGamma = 0.4;

struct PoseEdge {
  RigidTransform transform;  // camera i -> camera j
  double confidence = 0.0;
};

/**
 * Relative poses between N frames. Edges are stored once for i < j; the
 * reverse direction is implied (T_ji = T_ij^-1, c_ji = c_ij).
 */
class PoseGraph {
 public:
  PoseGraph() = default;
  explicit PoseGraph(std::size_t n_frames);

  std::size_t n_frames() const noexcept { return n_frames_; }
  const std::map<std::pair<std::size_t, std::size_t>, PoseEdge>& edges() const noexcept {
    return edges_;
  }

  /// Inserts or replaces edge (i, j). Passing i > j stores the inverse.
  /// Throws InvalidArgument for i == j, out-of-range indices or a confidence
  /// outside [0, 1].
  void set_edge(std::size_t i, std::size_t j, const RigidTransform& t_ij,
                double confidence);

  bool has_edge(std::size_t i, std::size_t j) const;
  /// Confidence c_ij in either direction; 0 for absent edges.
  double confidence(std::size_t i, std::size_t j) const;
  /// T_ij in either direction. Throws InvalidArgument for absent edges.
  RigidTransform transform(std::size_t i, std::size_t j) const;

  /// Throws DisconnectedGraph naming the first frame the chain cannot reach,
  /// i.e. frame i + 1 for the first missing edge (i, i + 1).
  void require_adjacency_chain() const;

 private:
  std::size_t n_frames_ = 0;
  std::map<std::pair<std::size_t, std::size_t>, PoseEdge> edges_;
};

/**
 * The 4N x 4N pairwise-transformation matrix: block (i, j) = c_ij T_ij for
 * i != j and block (i, i) = c_i I with c_i the summed incident confidence.
 */
struct BlockMatrix {
  std::size_t n = 0;
  Eigen::MatrixXd matrix;

  ScaledTransform block(std::size_t i, std::size_t j) const;
  double diagonal_confidence(std::size_t i) const { return block(i, i).scale(); }
};

struct SyncResult {
  /// Gauge-fixed so that world_to_camera[0] is exactly the identity.
  std::vector<RigidTransform> world_to_camera;
  /// Number of squarings (power backend), 0 otherwise.
  std::size_t iterations = 0;
};

/// Mean correspondence weight; 0 for an empty set.
double pairwise_confidence(const CorrespondenceSet& corr);
double pairwise_confidence(const std::vector<double>& weights);

/// Non-adjacent pairs map to max(0, c - gamma) / (1 - gamma); adjacent pairs
/// pass through unchanged.
double rescale_confidence(double c_hat, bool adjacent, double gamma = kDefaultGamma);

/// Throws DisconnectedGraph when a frame has no positive incident confidence.
BlockMatrix build_block_matrix(const PoseGraph& graph);

/// ceil(log2 N) + 2.
std::size_t power_iteration_count(std::size_t n_frames);

/**
 * Synchronization by repeated squaring. Block rows are normalized so their
 * confidences sum to one (diagonal weight one half), the matrix is squared
 * `power_iteration_count(N)` times, and each block (0, i) of the first block
 * row, an estimate of T_0^-1 T_i, is normalized by its scale and projected
 * onto SE(3).
 *
 * Throws DisconnectedGraph or SynchronizationCollapse (with the frame index)
 * when some frame cannot be reached.
 */
SyncResult synchronize_power(const PoseGraph& graph);

/// Spectral baseline: top-3 eigenvectors of the degree-normalized rotation
/// block matrix, then weighted least squares for the translations.
SyncResult synchronize_eig(const PoseGraph& graph);

/// Composes the adjacency chain T_01 T_12 ... from frame 0.
SyncResult synchronize_naive(const PoseGraph& graph);

/// Left-multiplies every pose by the inverse of the first so that pose 0 is
/// exactly the identity.
std::vector<RigidTransform> fix_gauge(const std::vector<RigidTransform>& world_to_camera);

}  // namespace syncmatch
