#include "syncmatch/cli.hpp"

#include "syncmatch/error.hpp"
#include "syncmatch/io.hpp"
#include "syncmatch/metrics.hpp"
#include "syncmatch/pipeline.hpp"
#include "syncmatch/synthetic.hpp"
#include "syncmatch/version.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <Eigen/Core>

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

namespace syncmatch::cli {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

namespace {

constexpr const char* kIntrinsicsFile = "intrinsics.txt";
constexpr const char* kGroundTruthFile = "gt_poses.txt";
constexpr const char* kManifestFile = "manifest.json";

std::string frame_name(std::size_t i, const char* ext) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "frame_%03zu.%s", i, ext);
  return buf;
}

class StageClock {
 public:
  void start(std::string name) {
    name_ = std::move(name);
    begin_ = std::chrono::steady_clock::now();
  }
  void stop() {
    times_[name_] = std::chrono::duration<double>(std::chrono::steady_clock::now() - begin_).count();
  }
  const ordered_json& times() const { return times_; }

 private:
  std::string name_;
  std::chrono::steady_clock::time_point begin_;
  ordered_json times_ = ordered_json::object();
};

/// One manifest per run; wall_time_s is the only nondeterministic field.
ordered_json make_manifest(const std::string& command, const std::vector<std::string>& args,
                           ordered_json config, std::uint64_t seed) {
  ordered_json m;
  m["command"] = command;
  m["argv"] = args;
  m["config"] = std::move(config);
  m["seed"] = seed;
  m["versions"] = {{"syncmatch", kVersion},
                   {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." +
                                 std::to_string(EIGEN_MAJOR_VERSION) + "." +
                                 std::to_string(EIGEN_MINOR_VERSION)}};
  return m;
}

void write_json(const fs::path& path, const ordered_json& j) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorKind::IOFailure, "cannot write " + path.string());
  out << j.dump(2) << '\n';
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) {
    throw Error(ErrorKind::IOFailure, "cannot create directory " + dir.string());
  }
  const fs::path probe = dir / ".write_probe";
  {
    std::ofstream p(probe);
    if (!p) throw Error(ErrorKind::IOFailure, "directory not writable: " + dir.string());
  }
  fs::remove(probe, ec);
}

std::vector<FeaturePointcloud> load_frames(const fs::path& scene) {
  std::vector<FeaturePointcloud> frames;
  for (std::size_t i = 0;; ++i) {
    const fs::path p = scene / frame_name(i, "fpcl");
    if (!fs::exists(p)) break;
    frames.push_back(io::read_pointcloud(p));
  }
  if (frames.empty()) {
    throw Error(ErrorKind::IOFailure, "no frame_XXX.fpcl files in " + scene.string());
  }
  return frames;
}

ordered_json error_json(const Error& e) {
  ordered_json j;
  j["error"] = std::string(to_string(e.kind()));
  j["message"] = e.what();
  if (e.frame()) j["frame"] = *e.frame();
  return j;
}

int exit_code_for(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::IOFailure:
    case ErrorKind::InputMismatch:
      return kIO;
    case ErrorKind::InvalidArgument:
      return kUsage;
    default:
      return kNumerical;
  }
}

ordered_json pose_error_json(const std::vector<RigidTransform>& est,
                             const std::vector<RigidTransform>& gt) {
  const auto errors = pose_errors(est, gt);
  const auto mean = mean_pose_error(est, gt);
  std::vector<PoseError> tail(errors.begin() + 1, errors.end());
  const auto auc = pose_auc(tail.empty() ? errors : tail);
  ordered_json j;
  j["mean_rotation_deg"] = mean.rotation_deg;
  j["mean_translation_m"] = mean.translation_m;
  j["auc_rot_5deg"] = auc.rotation;
  j["auc_trans_10cm"] = auc.translation;
  ordered_json per = ordered_json::array();
  for (const auto& e : errors) per.push_back({e.rotation_deg, e.translation_m});
  j["per_frame"] = per;
  return j;
}

// ---------------------------------------------------------------- generate

struct GenerateOptions {
  fs::path output;
  SceneSpec spec;
  std::string motion = "orbit";
  CorruptionSpec corruption;
};

int cmd_generate(const GenerateOptions& opt, const std::vector<std::string>& args) {
  StageClock clock;
  SceneSpec spec = opt.spec;
  spec.motion = parse_motion(opt.motion);
  CorruptionSpec corruption = opt.corruption;
  corruption.seed = spec.seed;

  ensure_dir(opt.output);
  clock.start("generate");
  const SyntheticScene scene = generate_scene(spec);
  clock.stop();

  clock.start("write");
  io::write_intrinsics(opt.output / kIntrinsicsFile, scene.intrinsics);
  io::write_poses(opt.output / kGroundTruthFile, scene.trajectory);
  ordered_json outputs = {kIntrinsicsFile, kGroundTruthFile};
  for (std::size_t f = 0; f < scene.n_frames(); ++f) {
    const FeaturePointcloud cloud = observe_frame(scene, f, corruption);
    io::write_pointcloud(opt.output / frame_name(f, "fpcl"), cloud);
    io::write_depth(opt.output / frame_name(f, "dpth"),
                    render_depth(cloud.points, RigidTransform::identity(), scene.intrinsics));
    outputs.push_back(frame_name(f, "fpcl"));
    outputs.push_back(frame_name(f, "dpth"));
  }
  {
    std::ofstream ov(opt.output / "overlap.csv");
    if (!ov) throw Error(ErrorKind::IOFailure, "cannot write overlap.csv");
    ov << std::setprecision(17);
    for (Eigen::Index i = 0; i < scene.overlap.rows(); ++i) {
      for (Eigen::Index j = 0; j < scene.overlap.cols(); ++j) {
        ov << (j ? "," : "") << scene.overlap(i, j);
      }
      ov << '\n';
    }
    outputs.push_back("overlap.csv");
  }
  clock.stop();

  ordered_json config = {{"frames", spec.n_frames},
                         {"landmarks", spec.n_landmarks},
                         {"motion", std::string(to_string(spec.motion))},
                         {"descriptor_dim", spec.descriptor_dim},
                         {"pan_step", spec.pan_step},
                         {"orbit_step_deg", spec.orbit_step_deg},
                         {"corridor_step", spec.corridor_step},
                         {"descriptor_sigma", corruption.descriptor_sigma},
                         {"outlier_fraction", corruption.outlier_fraction},
                         {"depth_sigma", corruption.depth_sigma},
                         {"drop_fraction", corruption.drop_fraction}};
  auto manifest = make_manifest("generate", args, std::move(config), spec.seed);
  manifest["inputs"] = ordered_json::array();
  manifest["output_dir"] = opt.output.string();
  manifest["outputs"] = outputs;
  manifest["wall_time_s"] = clock.times();
  write_json(opt.output / kManifestFile, manifest);
  return kSuccess;
}

// ---------------------------------------------------------------- register

struct RegisterOptions {
  fs::path scene;
  fs::path output;
  std::string mode = "full";
  PipelineConfig cfg;
};

ordered_json diagnostics_json(const SceneRegistration& reg) {
  ordered_json pairs = ordered_json::array();
  for (const auto& d : reg.pair_diagnostics) {
    ordered_json p = {{"i", d.i},
                      {"j", d.j},
                      {"stage", d.stage},
                      {"correspondences", d.correspondence_count},
                      {"raw_confidence", d.raw_confidence},
                      {"confidence", d.confidence},
                      {"inliers", d.inlier_count},
                      {"registration_loss", d.registration_loss},
                      {"failed", d.failed}};
    if (d.failed) p["failure"] = d.failure;
    pairs.push_back(std::move(p));
  }
  return pairs;
}

int cmd_register(const RegisterOptions& opt, const std::vector<std::string>& args) {
  StageClock clock;
  PipelineConfig cfg = opt.cfg;
  cfg.mode = parse_mode(opt.mode);
  cfg.validate();
  ensure_dir(opt.output);

  clock.start("load");
  SceneInput input;
  input.frames = load_frames(opt.scene);
  const fs::path gt_path = opt.scene / kGroundTruthFile;
  std::optional<std::vector<RigidTransform>> gt;
  if (fs::exists(gt_path)) gt = io::read_poses(gt_path);
  clock.stop();

  ordered_json config = {{"mode", std::string(to_string(cfg.mode))},
                         {"window", cfg.window},
                         {"gamma", cfg.gamma},
                         {"lambda", cfg.lambda},
                         {"topk", cfg.k_keep},
                         {"ransac_hypotheses", cfg.ransac.hypotheses},
                         {"ransac_sample", cfg.ransac.sample_size},
                         {"inlier_thresh", cfg.ransac.inlier_threshold}};
  auto manifest = make_manifest("register", args, std::move(config), cfg.seed);
  manifest["inputs"] = {opt.scene.string()};
  manifest["output_dir"] = opt.output.string();

  ordered_json diagnostics;
  diagnostics["frames"] = input.frames.size();
  clock.start("register");
  SceneRegistration reg;
  try {
    reg = register_frames(input, cfg);
  } catch (const Error& e) {
    clock.stop();
    const int code = exit_code_for(e.kind());
    diagnostics.update(error_json(e));
    write_json(opt.output / "diagnostics.json", diagnostics);
    manifest["outputs"] = {"diagnostics.json"};
    manifest["exit_code"] = code;
    manifest["wall_time_s"] = clock.times();
    write_json(opt.output / kManifestFile, manifest);
    std::cerr << "register: " << e.what() << '\n';
    return code;
  }
  clock.stop();

  io::write_poses(opt.output / "poses.txt", reg.poses.world_to_camera);
  io::write_poses(opt.output / "stage1_poses.txt", reg.stage1_poses.world_to_camera);
  io::write_pose_graph(opt.output / "pose_graph.txt", reg.stage2_graph);
  std::vector<CorrespondenceSet> final_sets;
  for (const auto& d : reg.pair_diagnostics) {
    if (d.stage == 2) final_sets.push_back(d.correspondences);
  }
  io::write_correspondences(opt.output / "correspondences.txt", final_sets);

  diagnostics["mode"] = std::string(to_string(cfg.mode));
  diagnostics["pair_evaluations"] = reg.pair_evaluations;
  diagnostics["iterations"] = reg.poses.iterations;
  diagnostics["pairs"] = diagnostics_json(reg);
  if (gt) {
    if (gt->size() != input.frames.size()) {
      throw Error(ErrorKind::InputMismatch, "ground truth and frames disagree in count");
    }
    diagnostics["stage_errors"] = {
        {"stage1", pose_error_json(reg.stage1_poses.world_to_camera, *gt)},
        {"stage2", pose_error_json(reg.poses.world_to_camera, *gt)}};
  }
  write_json(opt.output / "diagnostics.json", diagnostics);

  manifest["outputs"] = {"poses.txt", "stage1_poses.txt", "pose_graph.txt",
                         "correspondences.txt", "diagnostics.json"};
  manifest["pair_evaluations"] = reg.pair_evaluations;
  manifest["exit_code"] = 0;
  manifest["wall_time_s"] = clock.times();
  write_json(opt.output / kManifestFile, manifest);
  return kSuccess;
}

// ---------------------------------------------------------------- bench-sync

struct BenchOptions {
  std::vector<std::size_t> frames{6, 30};
  std::vector<double> rot_sigmas{0.0, 1.0, 5.0, 10.0};
  std::vector<double> trans_sigmas{0.0, 0.01, 0.02, 0.05};
  std::size_t trials = 20;
  std::uint64_t seed = 0;
  fs::path output;
};

void write_bench_csv(std::ostream& out, const std::vector<SyncBenchmarkRow>& rows) {
  out << "n_frames,rot_sigma_deg,trans_sigma_m,backend,mean_rot_err_deg,mean_trans_err_m,"
         "mean_runtime_s,failures\n";
  out << std::setprecision(10);
  for (const auto& r : rows) {
    out << r.n_frames << ',' << r.noise.rot_sigma_deg << ',' << r.noise.trans_sigma_m << ','
        << to_string(r.backend) << ',' << r.mean_rot_err_deg << ',' << r.mean_trans_err_m << ','
        << r.mean_runtime_s << ',' << r.failures << '\n';
  }
}

int cmd_bench_sync(const BenchOptions& opt, const std::vector<std::string>& args) {
  StageClock clock;
  std::vector<NoiseLevel> grid;
  for (double r : opt.rot_sigmas) {
    for (double t : opt.trans_sigmas) grid.push_back({r, t});
  }
  std::vector<SyncBenchmarkRow> rows;
  clock.start("benchmark");
  for (std::size_t n : opt.frames) {
    if (n < 2) throw Error(ErrorKind::InvalidArgument, "--frames values must be >= 2");
    auto part = sync_benchmark(grid, n, opt.trials, opt.seed);
    rows.insert(rows.end(), part.begin(), part.end());
  }
  clock.stop();

  if (opt.output.empty()) {
    write_bench_csv(std::cout, rows);
    return kSuccess;
  }
  if (opt.output.has_parent_path()) ensure_dir(opt.output.parent_path());
  {
    std::ofstream out(opt.output);
    if (!out) throw Error(ErrorKind::IOFailure, "cannot write " + opt.output.string());
    write_bench_csv(out, rows);
  }
  ordered_json config = {{"frames", opt.frames},
                         {"rot_sigmas_deg", opt.rot_sigmas},
                         {"trans_sigmas_m", opt.trans_sigmas},
                         {"trials", opt.trials}};
  auto manifest = make_manifest("bench-sync", args, std::move(config), opt.seed);
  manifest["inputs"] = ordered_json::array();
  manifest["outputs"] = {opt.output.string()};
  manifest["wall_time_s"] = clock.times();
  fs::path manifest_path = opt.output;
  manifest_path.replace_extension(".manifest.json");
  write_json(manifest_path, manifest);
  return kSuccess;
}

// ---------------------------------------------------------------- evaluate

struct EvaluateOptions {
  fs::path scene;
  fs::path poses;
  fs::path correspondences;
  fs::path output;
};

int cmd_evaluate(const EvaluateOptions& opt, const std::vector<std::string>& args) {
  StageClock clock;
  ensure_dir(opt.output);
  clock.start("evaluate");
  const auto gt = io::read_poses(opt.scene / kGroundTruthFile);
  const auto est = io::read_poses(opt.poses);
  if (gt.size() != est.size()) {
    throw Error(ErrorKind::InputMismatch,
                "predicted poses (" + std::to_string(est.size()) + ") and ground truth (" +
                    std::to_string(gt.size()) + ") disagree in frame count");
  }

  ordered_json report;
  report["pose"] = pose_error_json(est, gt);

  std::ofstream csv(opt.output / "report.csv");
  if (!csv) throw Error(ErrorKind::IOFailure, "cannot write report.csv");
  csv << std::setprecision(10) << "kind,i,j,metric,threshold,value\n";
  const auto errors = pose_errors(est, gt);
  for (std::size_t f = 0; f < errors.size(); ++f) {
    csv << "pose," << f << ",," << "rotation_deg,," << errors[f].rotation_deg << '\n';
    csv << "pose," << f << ",," << "translation_m,," << errors[f].translation_m << '\n';
  }

  if (!opt.correspondences.empty()) {
    const auto frames = load_frames(opt.scene);
    if (frames.size() != gt.size()) {
      throw Error(ErrorKind::InputMismatch, "frame files and ground truth disagree in count");
    }
    const auto intrinsics = io::read_intrinsics(opt.scene / kIntrinsicsFile);
    ordered_json pairs = ordered_json::array();
    for (const auto& set : io::read_correspondences(opt.correspondences)) {
      const auto [i, j] = set.frame_pair;
      if (i >= frames.size() || j >= frames.size()) {
        throw Error(ErrorKind::InputMismatch, "correspondence frame index out of range");
      }
      const auto r = correspondence_errors(set, frames[i], frames[j], gt[i], gt[j], intrinsics);
      ordered_json p = {{"i", i}, {"j", j}, {"evaluated_3d", r.evaluated_3d},
                        {"evaluated_2d", r.evaluated_2d}};
      for (const auto& tp : r.precision_3d) {
        p["precision_3d"][std::to_string(tp.threshold)] = tp.precision;
        csv << "corr3d," << i << ',' << j << ",precision," << tp.threshold << ',' << tp.precision << '\n';
      }
      for (const auto& tp : r.precision_2d) {
        p["precision_2d"][std::to_string(tp.threshold)] = tp.precision;
        csv << "corr2d," << i << ',' << j << ",precision," << tp.threshold << ',' << tp.precision << '\n';
      }
      pairs.push_back(std::move(p));
    }
    report["correspondences"] = pairs;
  }
  clock.stop();
  write_json(opt.output / "report.json", report);

  auto manifest = make_manifest("evaluate", args, ordered_json::object(), 0);
  manifest["inputs"] = {opt.scene.string(), opt.poses.string(), opt.correspondences.string()};
  manifest["outputs"] = {"report.json", "report.csv"};
  manifest["wall_time_s"] = clock.times();
  write_json(opt.output / kManifestFile, manifest);
  return kSuccess;
}

}  // namespace

int run(const std::vector<std::string>& args) {
  CLI::App app{"Multiview RGB-D registration: matching, robust alignment and SE(3) "
               "synchronization"};
  app.name("syncmatch");
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(kVersion));

  GenerateOptions gen;
  auto* generate = app.add_subcommand("generate", "Write a synthetic scene directory");
  generate->add_option("-o,--output", gen.output, "Output directory")->required();
  generate->add_option("--frames", gen.spec.n_frames, "Number of frames")
      ->check(CLI::Range(std::size_t{2}, std::size_t{100000}));
  generate->add_option("--landmarks", gen.spec.n_landmarks, "Number of landmarks")
      ->check(CLI::Range(std::size_t{50}, std::size_t{100000000}));
  generate->add_option("--motion", gen.motion, "Camera motion")
      ->check(CLI::IsMember({"lateral_pan", "orbit", "corridor"}));
  generate->add_option("--seed", gen.spec.seed, "Random seed");
  generate->add_option("--descriptor-dim", gen.spec.descriptor_dim, "Descriptor dimension")
      ->check(CLI::PositiveNumber);
  generate->add_option("--pan-step", gen.spec.pan_step, "lateral_pan step (m)");
  generate->add_option("--orbit-step", gen.spec.orbit_step_deg, "orbit yaw step (deg)");
  generate->add_option("--corridor-step", gen.spec.corridor_step, "corridor step (m)");
  generate->add_option("--descriptor-sigma", gen.corruption.descriptor_sigma,
                       "Per-dimension descriptor noise");
  generate->add_option("--outlier-fraction", gen.corruption.outlier_fraction,
                       "Fraction of descriptors replaced by random ones")
      ->check(CLI::Range(0.0, 1.0));
  generate->add_option("--depth-sigma", gen.corruption.depth_sigma, "Depth noise (m)");
  generate->add_option("--drop-fraction", gen.corruption.drop_fraction,
                       "Fraction of points removed")
      ->check(CLI::Range(0.0, 1.0));

  RegisterOptions reg;
  auto* registration = app.add_subcommand("register", "Register a scene directory");
  registration->add_option("--scene", reg.scene, "Scene directory")->required()->check(CLI::ExistingDirectory);
  registration->add_option("-o,--output", reg.output, "Output directory")->required();
  registration->add_option("--gamma", reg.cfg.gamma, "Confidence threshold")
      ->check(CLI::Range(0.0, 0.999999));
  registration->add_option("--lambda", reg.cfg.lambda, "Geometry weight of the refinement ratio test (1/m)")
      ->check(CLI::NonNegativeNumber);
  registration->add_option("--topk", reg.cfg.k_keep, "Correspondences kept per pair")
      ->check(CLI::PositiveNumber);
  registration->add_option("--mode", reg.mode, "full or windowed")
      ->check(CLI::IsMember({"full", "windowed"}));
  registration->add_option("--window", reg.cfg.window, "Window size for windowed mode")
      ->check(CLI::Range(std::size_t{2}, std::size_t{1000000}));
  registration->add_option("--ransac-hypotheses", reg.cfg.ransac.hypotheses, "RANSAC hypotheses")
      ->check(CLI::PositiveNumber);
  registration->add_option("--ransac-sample", reg.cfg.ransac.sample_size, "RANSAC sample size")
      ->check(CLI::Range(std::size_t{3}, std::size_t{1000000}));
  registration->add_option("--inlier-thresh", reg.cfg.ransac.inlier_threshold,
                           "RANSAC inlier threshold (m)")
      ->check(CLI::PositiveNumber);
  registration->add_option("--seed", reg.cfg.seed, "Random seed");

  BenchOptions bench;
  auto* bench_sync = app.add_subcommand("bench-sync", "Benchmark synchronization backends");
  bench_sync->add_option("--frames", bench.frames, "Frame counts")->delimiter(',');
  bench_sync->add_option("--rot-sigmas", bench.rot_sigmas, "Rotation noise levels (deg)")
      ->delimiter(',');
  bench_sync->add_option("--trans-sigmas", bench.trans_sigmas, "Translation noise levels (m)")
      ->delimiter(',');
  bench_sync->add_option("--trials", bench.trials, "Trials per grid cell")
      ->check(CLI::PositiveNumber);
  bench_sync->add_option("--seed", bench.seed, "Random seed");
  bench_sync->add_option("-o,--output", bench.output, "CSV path (stdout when omitted)");

  EvaluateOptions eval;
  auto* evaluate = app.add_subcommand("evaluate", "Score predicted poses and correspondences");
  evaluate->add_option("--scene", eval.scene, "Scene directory with gt_poses.txt")
      ->required()
      ->check(CLI::ExistingDirectory);
  evaluate->add_option("--poses", eval.poses, "Predicted pose file")->required()->check(CLI::ExistingFile);
  evaluate->add_option("--correspondences", eval.correspondences, "Correspondence file")
      ->check(CLI::ExistingFile);
  evaluate->add_option("-o,--output", eval.output, "Output directory")->required();

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsage;
  }

  try {
    if (*generate) return cmd_generate(gen, args);
    if (*registration) return cmd_register(reg, args);
    if (*bench_sync) return cmd_bench_sync(bench, args);
    if (*evaluate) return cmd_evaluate(eval, args);
  } catch (const Error& e) {
    std::cerr << "syncmatch: " << e.what() << '\n';
    return exit_code_for(e.kind());
  } catch (const fs::filesystem_error& e) {
    std::cerr << "syncmatch: " << e.what() << '\n';
    return kIO;
  }
  return kUsage;
}

}  // namespace syncmatch::cli
