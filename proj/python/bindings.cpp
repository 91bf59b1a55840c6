#include "syncmatch/alignment.hpp"
#include "syncmatch/correspondence.hpp"
#include "syncmatch/error.hpp"
#include "syncmatch/geometry.hpp"
#include "syncmatch/metrics.hpp"
#include "syncmatch/pipeline.hpp"
#include "syncmatch/synchronization.hpp"
#include "syncmatch/synthetic.hpp"
#include "syncmatch/version.hpp"

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

namespace py = pybind11;
using namespace syncmatch;

namespace {

using RowPoints = Eigen::Matrix<double, Eigen::Dynamic, 3, Eigen::RowMajor>;

std::vector<Eigen::Vector3d> to_points(const Eigen::Ref<const RowPoints>& m) {
  std::vector<Eigen::Vector3d> out(static_cast<std::size_t>(m.rows()));
  for (Eigen::Index k = 0; k < m.rows(); ++k) out[static_cast<std::size_t>(k)] = m.row(k).transpose();
  return out;
}

RowPoints from_points(const std::vector<Eigen::Vector3d>& pts) {
  RowPoints m(static_cast<Eigen::Index>(pts.size()), 3);
  for (std::size_t k = 0; k < pts.size(); ++k) m.row(static_cast<Eigen::Index>(k)) = pts[k].transpose();
  return m;
}

void check_rows(const RowPoints& src, const RowPoints& dst, const Eigen::VectorXd& w) {
  if (src.rows() != dst.rows() || src.rows() != w.size()) {
    throw Error(ErrorKind::InvalidArgument, "src, dst and weights must have the same length");
  }
}

FeaturePointcloud make_cloud(const Eigen::Ref<const RowPoints>& points,
                             const Eigen::MatrixXd& descriptors,
                             std::optional<Eigen::MatrixXd> pixels) {
  FeaturePointcloud c;
  c.points = to_points(points);
  // Python side is one descriptor per row.
  c.descriptors = descriptors.transpose();
  if (pixels) {
    for (Eigen::Index k = 0; k < pixels->rows(); ++k) c.pixels.emplace_back((*pixels)(k, 0), (*pixels)(k, 1));
  } else {
    c.pixels.assign(c.points.size(), Eigen::Vector2d::Zero());
  }
  c.validate();
  return c;
}

}  // namespace

PYBIND11_MODULE(_syncmatch, m) {
  m.doc() = "Multiview RGB-D registration: matching, WP-RANSAC and pose synchronization";
  m.attr("__version__") = kVersion;

  static py::exception<Error> error_type(m, "SyncMatchError");
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error& e) {
      py::object exc = py::reinterpret_borrow<py::object>(error_type.ptr())(e.what());
      exc.attr("kind") = std::string(to_string(e.kind()));
      exc.attr("frame") = e.frame() ? py::cast(*e.frame()) : py::none();
      PyErr_SetObject(error_type.ptr(), exc.ptr());
    }
  });

  py::class_<RigidTransform>(m, "RigidTransform")
      .def(py::init<>())
      .def(py::init<const Eigen::Matrix3d&, const Eigen::Vector3d&>(), py::arg("rotation"),
           py::arg("translation"))
      .def_static("from_matrix", &RigidTransform::from_matrix)
      .def_property_readonly("rotation", &RigidTransform::rotation)
      .def_property_readonly("translation", &RigidTransform::translation)
      .def("matrix", &RigidTransform::matrix)
      .def("apply", &RigidTransform::apply)
      .def("inverse", &RigidTransform::inverse)
      .def("angle", &RigidTransform::angle)
      .def("__matmul__", [](const RigidTransform& a, const RigidTransform& b) { return compose(a, b); })
      .def("__repr__", [](const RigidTransform& t) {
        return "RigidTransform(angle=" + std::to_string(t.angle()) + ")";
      });

  m.def("weighted_procrustes",
        [](const RowPoints& src, const RowPoints& dst, const Eigen::VectorXd& w) {
          check_rows(src, dst, w);
          const auto s = to_points(src), d = to_points(dst);
          return weighted_procrustes(s, d, std::span<const double>(w.data(), static_cast<std::size_t>(w.size())));
        },
        py::arg("src"), py::arg("dst"), py::arg("weights"));

  py::class_<RansacConfig>(m, "RansacConfig")
      .def(py::init<>())
      .def_readwrite("hypotheses", &RansacConfig::hypotheses)
      .def_readwrite("sample_size", &RansacConfig::sample_size)
      .def_readwrite("inlier_threshold", &RansacConfig::inlier_threshold)
      .def_readwrite("seed", &RansacConfig::seed);

  py::class_<AlignmentResult>(m, "AlignmentResult")
      .def_readonly("transform", &AlignmentResult::transform)
      .def_readonly("inlier_weights", &AlignmentResult::inlier_weights)
      .def_readonly("inlier_count", &AlignmentResult::inlier_count)
      .def_readonly("residual_rms", &AlignmentResult::residual_rms);

  m.def("wp_ransac",
        [](const RowPoints& src, const RowPoints& dst, const Eigen::VectorXd& w, const RansacConfig& cfg) {
          check_rows(src, dst, w);
          const auto s = to_points(src), d = to_points(dst);
          return wp_ransac(s, d, std::span<const double>(w.data(), static_cast<std::size_t>(w.size())), cfg);
        },
        py::arg("src"), py::arg("dst"), py::arg("weights"), py::arg("config") = RansacConfig{});

  py::class_<FeaturePointcloud>(m, "FeaturePointcloud")
      .def(py::init(&make_cloud), py::arg("points"), py::arg("descriptors"), py::arg("pixels") = py::none())
      .def_property_readonly("points", [](const FeaturePointcloud& c) { return from_points(c.points); })
      .def_property_readonly("descriptors",
                             [](const FeaturePointcloud& c) { return Eigen::MatrixXd(c.descriptors.transpose()); })
      .def("__len__", &FeaturePointcloud::size);

  py::class_<Correspondence>(m, "Correspondence")
      .def_readonly("source_index", &Correspondence::source_index)
      .def_readonly("target_index", &Correspondence::target_index)
      .def_readonly("weight", &Correspondence::weight);

  py::class_<CorrespondenceSet>(m, "CorrespondenceSet")
      .def_readonly("frame_pair", &CorrespondenceSet::frame_pair)
      .def_readonly("matches", &CorrespondenceSet::matches)
      .def("weights", &CorrespondenceSet::weights)
      .def("__len__", &CorrespondenceSet::size);

  m.def("match_ratio_test", &match_ratio_test, py::arg("src"), py::arg("dst"),
        py::arg("k_keep") = kDefaultTopK, py::arg("frame_pair") = FramePair{0, 1});
  m.def("match_gart", &match_gart, py::arg("src"), py::arg("dst"), py::arg("src_to_world"),
        py::arg("dst_to_world"), py::arg("lambda_") = kDefaultGartLambda, py::arg("k_keep") = kDefaultTopK,
        py::arg("frame_pair") = FramePair{0, 1});

  py::class_<PoseGraph>(m, "PoseGraph")
      .def(py::init<std::size_t>(), py::arg("n_frames"))
      .def_property_readonly("n_frames", &PoseGraph::n_frames)
      .def("set_edge", &PoseGraph::set_edge, py::arg("i"), py::arg("j"), py::arg("transform"),
           py::arg("confidence"))
      .def("has_edge", &PoseGraph::has_edge)
      .def("confidence", &PoseGraph::confidence)
      .def("transform", &PoseGraph::transform);

  m.def("synchronize_power", [](const PoseGraph& g) { return synchronize_power(g).world_to_camera; });
  m.def("synchronize_eig", [](const PoseGraph& g) { return synchronize_eig(g).world_to_camera; });
  m.def("synchronize_naive", [](const PoseGraph& g) { return synchronize_naive(g).world_to_camera; });
  m.def("fix_gauge", &fix_gauge);

  py::class_<SyntheticScene>(m, "SyntheticScene")
      .def_property_readonly("n_frames", &SyntheticScene::n_frames)
      .def_readonly("trajectory", &SyntheticScene::trajectory)
      .def_readonly("overlap", &SyntheticScene::overlap)
      .def_property_readonly("landmarks", [](const SyntheticScene& s) { return from_points(s.landmarks); });

  m.def("generate_scene",
        [](std::size_t n_frames, std::size_t n_landmarks, const std::string& motion, std::uint64_t seed,
           std::size_t descriptor_dim) {
          SceneSpec spec;
          spec.n_frames = n_frames;
          spec.n_landmarks = n_landmarks;
          spec.motion = parse_motion(motion);
          spec.seed = seed;
          spec.descriptor_dim = descriptor_dim;
          return generate_scene(spec);
        },
        py::arg("n_frames") = 6, py::arg("n_landmarks") = 1000, py::arg("motion") = "orbit",
        py::arg("seed") = 0, py::arg("descriptor_dim") = 128);

  m.def("observe",
        [](const SyntheticScene& scene, double descriptor_sigma, double outlier_fraction, double depth_sigma,
           double drop_fraction, std::uint64_t seed) {
          CorruptionSpec c{descriptor_sigma, outlier_fraction, depth_sigma, drop_fraction, seed};
          std::vector<FeaturePointcloud> frames;
          for (std::size_t f = 0; f < scene.n_frames(); ++f) frames.push_back(observe_frame(scene, f, c));
          return frames;
        },
        py::arg("scene"), py::arg("descriptor_sigma") = 0.0, py::arg("outlier_fraction") = 0.0,
        py::arg("depth_sigma") = 0.0, py::arg("drop_fraction") = 0.0, py::arg("seed") = 0);

  py::class_<SceneRegistration>(m, "SceneRegistration")
      .def_property_readonly("poses", [](const SceneRegistration& r) { return r.poses.world_to_camera; })
      .def_property_readonly("stage1_poses",
                             [](const SceneRegistration& r) { return r.stage1_poses.world_to_camera; })
      .def_readonly("pair_evaluations", &SceneRegistration::pair_evaluations)
      .def_readonly("refined", &SceneRegistration::refined);

  m.def("register",
        [](std::vector<FeaturePointcloud> frames, const std::string& mode, std::size_t window, double gamma,
           double lambda, std::size_t k_keep, std::uint64_t seed) {
          PipelineConfig cfg;
          cfg.mode = parse_mode(mode);
          cfg.window = window;
          cfg.gamma = gamma;
          cfg.lambda = lambda;
          cfg.k_keep = k_keep;
          cfg.seed = seed;
          SceneInput input;
          input.frames = std::move(frames);
          py::gil_scoped_release release;
          return register_frames(input, cfg);
        },
        py::arg("frames"), py::arg("mode") = "full", py::arg("window") = 5, py::arg("gamma") = kDefaultGamma,
        py::arg("lambda_") = kDefaultGartLambda, py::arg("k_keep") = kDefaultTopK, py::arg("seed") = 0);

  m.def("pose_errors",
        [](const std::vector<RigidTransform>& est, const std::vector<RigidTransform>& gt) {
          std::vector<std::pair<double, double>> out;
          for (const auto& e : pose_errors(est, gt)) out.emplace_back(e.rotation_deg, e.translation_m);
          return out;
        },
        "Per-frame (rotation_deg, translation_m) after gauge alignment.");
  m.def("mean_pose_error", [](const std::vector<RigidTransform>& est, const std::vector<RigidTransform>& gt) {
    const auto e = mean_pose_error(est, gt);
    return std::make_pair(e.rotation_deg, e.translation_m);
  });
  m.def("error_auc", &error_auc, py::arg("errors"), py::arg("threshold"));
}
