#include "syncmatch/synchronization.hpp"

#include "syncmatch/error.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

namespace syncmatch {

namespace {

constexpr double kCollapseTolerance = 1e-12;

Eigen::Index idx(std::size_t i) { return static_cast<Eigen::Index>(i); }

void check_frame(std::size_t i, std::size_t n) {
  if (i >= n) {
    throw Error(ErrorKind::InvalidArgument,
                "frame " + std::to_string(i) + " out of range for " +
                    std::to_string(n) + " frames");
  }
}

void require_frames(const PoseGraph& graph) {
  if (graph.n_frames() == 0) {
    throw Error(ErrorKind::InvalidArgument, "pose graph has no frames");
  }
}

}  // namespace

PoseGraph::PoseGraph(std::size_t n_frames) : n_frames_(n_frames) {}

void PoseGraph::set_edge(std::size_t i, std::size_t j, const RigidTransform& t_ij,
                         double confidence) {
  check_frame(i, n_frames_);
  check_frame(j, n_frames_);
  if (i == j) throw Error(ErrorKind::InvalidArgument, "self edges are implicit");
  if (!(confidence >= 0.0 && confidence <= 1.0)) {
    throw Error(ErrorKind::InvalidArgument, "confidence must lie in [0, 1]");
  }
  if (i < j) {
    edges_[{i, j}] = {t_ij, confidence};
  } else {
    edges_[{j, i}] = {t_ij.inverse(), confidence};
  }
}

bool PoseGraph::has_edge(std::size_t i, std::size_t j) const {
  return edges_.count({std::min(i, j), std::max(i, j)}) > 0;
}

double PoseGraph::confidence(std::size_t i, std::size_t j) const {
  const auto it = edges_.find({std::min(i, j), std::max(i, j)});
  return it == edges_.end() ? 0.0 : it->second.confidence;
}

RigidTransform PoseGraph::transform(std::size_t i, std::size_t j) const {
  const auto it = edges_.find({std::min(i, j), std::max(i, j)});
  if (it == edges_.end()) {
    throw Error(ErrorKind::InvalidArgument,
                "no edge between frames " + std::to_string(i) + " and " +
                    std::to_string(j));
  }
  return i < j ? it->second.transform : it->second.transform.inverse();
}

void PoseGraph::require_adjacency_chain() const {
  for (std::size_t i = 0; i + 1 < n_frames_; ++i) {
    if (!has_edge(i, i + 1)) {
      throw Error(ErrorKind::DisconnectedGraph,
                  "missing adjacent edge (" + std::to_string(i) + ", " +
                      std::to_string(i + 1) + ")",
                  i + 1);
    }
  }
}

ScaledTransform BlockMatrix::block(std::size_t i, std::size_t j) const {
  return ScaledTransform(matrix.block<4, 4>(4 * idx(i), 4 * idx(j)));
}

double pairwise_confidence(const std::vector<double>& weights) {
  if (weights.empty()) return 0.0;
  return std::accumulate(weights.begin(), weights.end(), 0.0) /
         static_cast<double>(weights.size());
}

double pairwise_confidence(const CorrespondenceSet& corr) {
  return pairwise_confidence(corr.weights());
}

double rescale_confidence(double c_hat, bool adjacent, double gamma) {
  if (!(gamma >= 0.0 && gamma < 1.0)) {
    throw Error(ErrorKind::InvalidArgument, "gamma must lie in [0, 1)");
  }
  if (adjacent) return c_hat;
  return std::max(0.0, c_hat - gamma) / (1.0 - gamma);
}

BlockMatrix build_block_matrix(const PoseGraph& graph) {
  require_frames(graph);
  const std::size_t n = graph.n_frames();
  BlockMatrix a{n, Eigen::MatrixXd::Zero(4 * idx(n), 4 * idx(n))};
  std::vector<double> degree(n, 0.0);
  for (const auto& [key, edge] : graph.edges()) {
    const auto [i, j] = key;
    if (edge.confidence == 0.0) continue;
    a.matrix.block<4, 4>(4 * idx(i), 4 * idx(j)) = edge.confidence * edge.transform.matrix();
    a.matrix.block<4, 4>(4 * idx(j), 4 * idx(i)) =
        edge.confidence * edge.transform.inverse().matrix();
    degree[i] += edge.confidence;
    degree[j] += edge.confidence;
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (n > 1 && !(degree[i] > 0.0)) {
      throw Error(ErrorKind::DisconnectedGraph,
                  "frame " + std::to_string(i) + " has no positive-confidence edge", i);
    }
    a.matrix.block<4, 4>(4 * idx(i), 4 * idx(i)) = degree[i] * Eigen::Matrix4d::Identity();
  }
  return a;
}

std::size_t power_iteration_count(std::size_t n_frames) {
  std::size_t t = 0;
  while ((std::size_t{1} << t) < n_frames) ++t;
  return t + 2;
}

std::vector<RigidTransform> fix_gauge(const std::vector<RigidTransform>& world_to_camera) {
  std::vector<RigidTransform> out;
  if (world_to_camera.empty()) return out;
  const RigidTransform g = world_to_camera.front().inverse();
  out.reserve(world_to_camera.size());
  out.push_back(RigidTransform::identity());
  for (std::size_t i = 1; i < world_to_camera.size(); ++i) {
    out.push_back(compose(g, world_to_camera[i]));
  }
  return out;
}

SyncResult synchronize_power(const PoseGraph& graph) {
  const std::size_t n = graph.n_frames();
  const BlockMatrix a = build_block_matrix(graph);
  if (n == 1) return {{RigidTransform::identity()}, 0};
  const Eigen::Index m = idx(n);

  // The block matrix is squared in permuted form [[P, 0], [Q, S]]: P holds
  // the 3x3 rotation parts, Q the translation rows, S the confidences. The
  // row-stochastic normalization D^-1 A is replaced by the similar matrix
  // D^-1/2 A D^-1/2 (D = 2 c_i per block row, so the diagonal weight is 1/2),
  // whose P and S parts are symmetric. Powers of the two differ per block by
  // the scalar sqrt(d_j / d_i), which is restored before extraction.
  Eigen::VectorXd inv_sqrt_mass(m);
  for (Eigen::Index i = 0; i < m; ++i) {
    inv_sqrt_mass(i) = 1.0 / std::sqrt(2.0 * a.diagonal_confidence(static_cast<std::size_t>(i)));
  }
  Eigen::MatrixXd p(3 * m, 3 * m), q(m, 3 * m), s(m, m);
  for (Eigen::Index i = 0; i < m; ++i) {
    for (Eigen::Index j = 0; j < m; ++j) {
      const double w = inv_sqrt_mass(i) * inv_sqrt_mass(j);
      const auto block = a.matrix.block<4, 4>(4 * i, 4 * j);
      p.block<3, 3>(3 * i, 3 * j) = w * block.topLeftCorner<3, 3>();
      q.block<1, 3>(i, 3 * j) = w * block.bottomLeftCorner<1, 3>();
      s(i, j) = w * block(3, 3);
    }
  }

  // [[P, 0], [Q, S]]^2 = [[P^2, 0], [Q P + S Q, S^2]]; P and S stay symmetric.
  auto square_symmetric = [](Eigen::MatrixXd& x, Eigen::MatrixXd& scratch) {
    scratch.setZero(x.rows(), x.cols());
    scratch.selfadjointView<Eigen::Lower>().rankUpdate(x);
    scratch.triangularView<Eigen::StrictlyUpper>() = scratch.transpose();
    x.swap(scratch);
  };
  const std::size_t t = power_iteration_count(n);
  Eigen::MatrixXd scratch_p, scratch_s, q_next(m, 3 * m);
  for (std::size_t k = 0; k + 1 < t; ++k) {
    q_next.noalias() = q * p;
    q_next.noalias() += s * q;
    q.swap(q_next);
    square_symmetric(p, scratch_p);
    square_symmetric(s, scratch_s);
  }
  // The last squaring only needs block row 0.
  const Eigen::MatrixXd p0 = p.topRows<3>() * p;
  const Eigen::RowVectorXd q0 = q.row(0) * p + s.row(0) * q;
  const Eigen::RowVectorXd s0 = s.row(0) * s;

  std::vector<RigidTransform> poses;
  poses.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const Eigen::Index j = idx(i);
    const double unscale = inv_sqrt_mass(0) / inv_sqrt_mass(j);
    Eigen::Matrix4d b = Eigen::Matrix4d::Zero();
    b.topLeftCorner<3, 3>() = p0.middleCols<3>(3 * j);
    b.bottomLeftCorner<1, 3>() = q0.segment<3>(3 * j);
    b(3, 3) = s0(j);
    b *= unscale;
    if (!(b(3, 3) >= kCollapseTolerance)) {
      throw Error(ErrorKind::SynchronizationCollapse,
                  "frame " + std::to_string(i) + " carries no mass after " +
                      std::to_string(t) + " squarings",
                  i);
    }
    // Block (0, i) of A^(2^t) estimates T_0^-1 T_i: row 0 is a consistent
    // camera set centered on frame 0.
    poses.push_back(project_to_se3(ScaledTransform(b)));
  }
  return {fix_gauge(poses), t};
}

SyncResult synchronize_eig(const PoseGraph& graph) {
  const std::size_t n = graph.n_frames();
  const BlockMatrix a = build_block_matrix(graph);
  if (n == 1) return {{RigidTransform::identity()}, 0};

  // Degree-normalized rotation matrix D^-1/2 A_rot D^-1/2 (symmetric).
  Eigen::MatrixXd rot(3 * idx(n), 3 * idx(n));
  Eigen::VectorXd inv_sqrt_degree(3 * idx(n));
  for (std::size_t i = 0; i < n; ++i) {
    inv_sqrt_degree.segment<3>(3 * idx(i)).setConstant(1.0 / std::sqrt(a.diagonal_confidence(i)));
    for (std::size_t j = 0; j < n; ++j) {
      rot.block<3, 3>(3 * idx(i), 3 * idx(j)) =
          a.matrix.block<3, 3>(4 * idx(i), 4 * idx(j));
    }
  }
  rot = inv_sqrt_degree.asDiagonal() * rot * inv_sqrt_degree.asDiagonal();

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(rot);
  if (solver.info() != Eigen::Success) {
    throw Error(ErrorKind::SynchronizationCollapse, "eigendecomposition failed");
  }
  Eigen::MatrixXd basis =
      inv_sqrt_degree.asDiagonal() * solver.eigenvectors().rightCols<3>();

  // Blocks are R_i^T Q for a common 3x3 Q; make Q a rotation, not a reflection.
  double det_sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) det_sum += basis.block<3, 3>(3 * idx(i), 0).determinant();
  if (det_sum < 0.0) basis.col(2) *= -1.0;

  std::vector<Eigen::Matrix3d> rotations(n);
  for (std::size_t i = 0; i < n; ++i) {
    try {
      rotations[i] = nearest_rotation(basis.block<3, 3>(3 * idx(i), 0)).transpose();
    } catch (const Error&) {
      throw Error(ErrorKind::SynchronizationCollapse,
                  "rotation block of frame " + std::to_string(i) + " collapsed", i);
    }
  }
  const Eigen::Matrix3d gauge = rotations[0].transpose();
  for (auto& r : rotations) r = gauge * r;

  // Translations: weighted least squares on c_ij |t_j - t_i R_ij - t_ij|^2
  // with t_0 pinned at zero.
  const Eigen::Index m = 3 * (idx(n) - 1);
  Eigen::MatrixXd normal = Eigen::MatrixXd::Zero(m, m);
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(m);
  for (const auto& [key, edge] : graph.edges()) {
    const double c = edge.confidence;
    if (c == 0.0) continue;
    const auto [i, j] = key;
    const Eigen::Matrix3d ji = -edge.transform.rotation().transpose();  // d r / d t_i
    const Eigen::Vector3d& t_ij = edge.transform.translation();
    const Eigen::Index bi = 3 * (idx(i) - 1);
    const Eigen::Index bj = 3 * (idx(j) - 1);
    if (i > 0) {
      normal.block<3, 3>(bi, bi) += c * ji.transpose() * ji;
      rhs.segment<3>(bi) += c * ji.transpose() * t_ij;
    }
    normal.block<3, 3>(bj, bj) += c * Eigen::Matrix3d::Identity();
    rhs.segment<3>(bj) += c * t_ij;
    if (i > 0) {
      normal.block<3, 3>(bi, bj) += c * ji.transpose();
      normal.block<3, 3>(bj, bi) += c * ji;
    }
  }
  const Eigen::LDLT<Eigen::MatrixXd> ldlt(normal);
  if (ldlt.info() != Eigen::Success || !(ldlt.vectorD().minCoeff() > 1e-12)) {
    throw Error(ErrorKind::SynchronizationCollapse,
                "translation system is singular (disconnected graph)");
  }
  const Eigen::VectorXd t = ldlt.solve(rhs);

  std::vector<RigidTransform> poses;
  poses.reserve(n);
  poses.push_back(RigidTransform::identity());
  for (std::size_t i = 1; i < n; ++i) {
    poses.emplace_back(rotations[i], t.segment<3>(3 * (idx(i) - 1)));
  }
  return {fix_gauge(poses), 0};
}

SyncResult synchronize_naive(const PoseGraph& graph) {
  require_frames(graph);
  graph.require_adjacency_chain();
  std::vector<RigidTransform> poses;
  poses.reserve(graph.n_frames());
  poses.push_back(RigidTransform::identity());
  for (std::size_t i = 0; i + 1 < graph.n_frames(); ++i) {
    poses.push_back(compose(poses.back(), graph.transform(i, i + 1)));
  }
  return {std::move(poses), 0};
}

}  // namespace syncmatch
