#include "syncmatch/pipeline.hpp"

#include "syncmatch/error.hpp"
#include "syncmatch/parallel.hpp"

#include <string>

namespace syncmatch {

namespace {

std::uint64_t pair_seed(std::uint64_t seed, std::size_t i, std::size_t j, int stage) {
  std::uint64_t h = seed ^ 0x9e3779b97f4a7c15ull;
  for (std::uint64_t v : {static_cast<std::uint64_t>(i), static_cast<std::uint64_t>(j),
                          static_cast<std::uint64_t>(stage)}) {
    h ^= v + 0x9e3779b97f4a7c15ull + (h << 6) + (h >> 2);
  }
  return h;
}

using PairList = std::vector<std::pair<std::size_t, std::size_t>>;

PairDiagnostics evaluate_pair(const SceneInput& input, std::size_t i, std::size_t j, int stage,
                              const PipelineConfig& cfg,
                              const std::vector<RigidTransform>* poses) {
  PairDiagnostics d;
  d.i = i;
  d.j = j;
  d.stage = stage;
  const FeaturePointcloud& src = input.frames[i];
  const FeaturePointcloud& dst = input.frames[j];
  try {
    d.correspondences =
        poses == nullptr
            ? match_ratio_test(src, dst, cfg.k_keep, {i, j})
            : match_gart(src, dst, (*poses)[i].inverse(), (*poses)[j].inverse(), cfg.lambda,
                         cfg.k_keep, {i, j});
    d.correspondence_count = d.correspondences.size();
    d.raw_confidence = pairwise_confidence(d.correspondences);

    RansacConfig ransac = cfg.ransac;
    ransac.seed = pair_seed(cfg.seed ^ cfg.ransac.seed, i, j, stage);
    const AlignmentResult aligned = wp_ransac(d.correspondences, src, dst, ransac);
    d.transform = aligned.transform;
    d.inlier_count = aligned.inlier_count;
    d.confidence = rescale_confidence(d.raw_confidence, j == i + 1, cfg.gamma);
  } catch (const Error& e) {
    d.failed = true;
    d.failure = e.what();
    d.confidence = 0.0;
  }
  return d;
}

std::vector<PairDiagnostics> evaluate_pairs(const SceneInput& input, const PairList& pairs,
                                            int stage, const PipelineConfig& cfg,
                                            const std::vector<RigidTransform>* poses) {
  std::vector<PairDiagnostics> out(pairs.size());
  parallel_for(pairs.size(), [&](std::size_t k) {
    out[k] = evaluate_pair(input, pairs[k].first, pairs[k].second, stage, cfg, poses);
  });
  for (const auto& d : out) {
    if (d.failed && d.j == d.i + 1) {
      throw Error(ErrorKind::AdjacentPairFailure,
                  "adjacent pair (" + std::to_string(d.i) + ", " + std::to_string(d.j) +
                      ") failed: " + d.failure,
                  d.j);
    }
  }
  return out;
}

PoseGraph graph_from(std::size_t n, const std::vector<PairDiagnostics>& diags) {
  PoseGraph graph(n);
  for (const auto& d : diags) {
    if (!d.failed) graph.set_edge(d.i, d.j, d.transform, d.confidence);
  }
  return graph;
}

void attach_losses(const SceneInput& input, std::vector<PairDiagnostics>& diags,
                   const std::vector<RigidTransform>& poses) {
  for (auto& d : diags) {
    d.registration_loss = registration_loss(d.correspondences, input.frames[d.i],
                                            input.frames[d.j], poses[d.i], poses[d.j]);
  }
}

void check_input(const SceneInput& input, const PipelineConfig& cfg) {
  cfg.validate();
  if (input.frames.size() < 2) {
    throw Error(ErrorKind::InvalidArgument, "registration needs at least 2 frames");
  }
  for (const auto& f : input.frames) f.validate();
}

PairList all_pairs(std::size_t n, std::size_t max_gap) {
  PairList pairs;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n && j - i <= max_gap; ++j) pairs.emplace_back(i, j);
  }
  return pairs;
}

SceneRegistration refine(const SceneInput& input, const PipelineConfig& cfg,
                         SceneRegistration reg, const PairList& pairs) {
  const std::size_t n = input.frames.size();
  auto diags = evaluate_pairs(input, pairs, 2, cfg, &reg.stage1_poses.world_to_camera);
  reg.pair_evaluations += pairs.size();
  reg.stage2_graph = graph_from(n, diags);
  reg.poses = synchronize_power(reg.stage2_graph);
  attach_losses(input, diags, reg.poses.world_to_camera);
  reg.pair_diagnostics.insert(reg.pair_diagnostics.end(), diags.begin(), diags.end());
  reg.refined = true;
  return reg;
}

}  // namespace

PipelineMode parse_mode(std::string_view name) {
  if (name == "full" || name == "full_pairwise") return PipelineMode::FullPairwise;
  if (name == "windowed") return PipelineMode::Windowed;
  throw Error(ErrorKind::InvalidArgument, "unknown mode '" + std::string(name) + "'");
}

std::string_view to_string(PipelineMode mode) {
  return mode == PipelineMode::Windowed ? "windowed" : "full_pairwise";
}

void PipelineConfig::validate() const {
  if (mode == PipelineMode::Windowed && window < 2) {
    throw Error(ErrorKind::InvalidArgument, "window must be >= 2");
  }
  if (!(gamma >= 0.0 && gamma < 1.0)) {
    throw Error(ErrorKind::InvalidArgument, "gamma must lie in [0, 1)");
  }
  if (!(lambda >= 0.0)) throw Error(ErrorKind::InvalidArgument, "lambda must be >= 0");
  if (k_keep == 0) throw Error(ErrorKind::InvalidArgument, "k_keep must be positive");
  ransac.validate();
}

double registration_loss(const CorrespondenceSet& corr, const FeaturePointcloud& src,
                         const FeaturePointcloud& dst, const RigidTransform& t_i,
                         const RigidTransform& t_j) {
  const RigidTransform src_to_world = t_i.inverse();
  const RigidTransform dst_to_world = t_j.inverse();
  double loss = 0.0;
  for (const auto& m : corr.matches) {
    if (m.source_index >= src.size() || m.target_index >= dst.size()) {
      throw Error(ErrorKind::InvalidArgument, "correspondence index out of range");
    }
    loss += m.weight * (dst_to_world.apply(dst.points[m.target_index]) -
                        src_to_world.apply(src.points[m.source_index]))
                           .norm();
  }
  return loss;
}

SceneRegistration register_scene(const SceneInput& input, const PipelineConfig& cfg) {
  check_input(input, cfg);
  const std::size_t n = input.frames.size();
  const PairList pairs = all_pairs(n, n);

  SceneRegistration reg;
  auto diags = evaluate_pairs(input, pairs, 1, cfg, nullptr);
  reg.pair_evaluations = pairs.size();
  reg.stage1_poses = synchronize_power(graph_from(n, diags));
  attach_losses(input, diags, reg.stage1_poses.world_to_camera);
  reg.pair_diagnostics = std::move(diags);
  return refine(input, cfg, std::move(reg), pairs);
}

SceneRegistration register_sequence_windowed(const SceneInput& input,
                                             const PipelineConfig& cfg) {
  check_input(input, cfg);
  if (cfg.window < 2) throw Error(ErrorKind::InvalidArgument, "window must be >= 2");
  const std::size_t n = input.frames.size();

  SceneRegistration reg;
  const PairList chain = all_pairs(n, 1);
  auto diags = evaluate_pairs(input, chain, 1, cfg, nullptr);
  reg.pair_evaluations = chain.size();
  reg.stage1_poses = synchronize_naive(graph_from(n, diags));
  attach_losses(input, diags, reg.stage1_poses.world_to_camera);
  reg.pair_diagnostics = std::move(diags);
  return refine(input, cfg, std::move(reg), all_pairs(n, cfg.window - 1));
}

SceneRegistration register_frames(const SceneInput& input, const PipelineConfig& cfg) {
  return cfg.mode == PipelineMode::Windowed ? register_sequence_windowed(input, cfg)
                                            : register_scene(input, cfg);
}

}  // namespace syncmatch
