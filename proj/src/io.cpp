#include "syncmatch/io.hpp"

#include "syncmatch/error.hpp"

#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <map>
#include <sstream>
#include <string>

namespace syncmatch::io {

namespace {

static_assert(std::endian::native == std::endian::little,
              "binary containers assume a little-endian host");

[[noreturn]] void fail(const std::filesystem::path& path, const std::string& what) {
  throw Error(ErrorKind::IOFailure, path.string() + ": " + what);
}

std::ofstream open_out(const std::filesystem::path& path, std::ios::openmode mode = {}) {
  std::ofstream out(path, mode | std::ios::out | std::ios::trunc);
  if (!out) fail(path, "cannot open for writing");
  return out;
}

std::ifstream open_in(const std::filesystem::path& path, std::ios::openmode mode = {}) {
  std::ifstream in(path, mode | std::ios::in);
  if (!in) fail(path, "cannot open for reading");
  return in;
}

template <typename T>
void put(std::ostream& out, T value) {
  out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
T get(std::istream& in, const std::filesystem::path& path) {
  T value{};
  if (!in.read(reinterpret_cast<char*>(&value), sizeof(T))) fail(path, "truncated file");
  return value;
}

void expect_magic(std::istream& in, const char (&magic)[5], const std::filesystem::path& path) {
  std::array<char, 4> got{};
  if (!in.read(got.data(), 4) || std::memcmp(got.data(), magic, 4) != 0) {
    fail(path, std::string("bad magic, expected ") + magic);
  }
}

void put_transform(std::ostream& out, const RigidTransform& t) {
  for (int r = 0; r < 3; ++r) {
    for (int c = 0; c < 3; ++c) out << ' ' << t.rotation()(r, c);
  }
  for (int k = 0; k < 3; ++k) out << ' ' << t.translation()(k);
}

RigidTransform get_transform(std::istringstream& line) {
  Eigen::Matrix3d r;
  Eigen::Vector3d t;
  for (int i = 0; i < 3; ++i) {
    for (int c = 0; c < 3; ++c) line >> r(i, c);
  }
  for (int k = 0; k < 3; ++k) line >> t(k);
  if (!line) throw Error(ErrorKind::IOFailure, "truncated transform");
  return {r, t};
}

std::size_t read_header(std::istream& in) {
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ss(line);
    std::string tag;
    long long n = -1;
    ss >> tag >> n;
    if (tag != "N" || n < 0) throw Error(ErrorKind::IOFailure, "expected 'N <count>' header");
    return static_cast<std::size_t>(n);
  }
  throw Error(ErrorKind::IOFailure, "missing 'N <count>' header");
}

}  // namespace

void write_depth(const std::filesystem::path& path, const DepthMap& depth) {
  auto out = open_out(path, std::ios::binary);
  out.write("DPTH", 4);
  put<std::uint32_t>(out, static_cast<std::uint32_t>(depth.width()));
  put<std::uint32_t>(out, static_cast<std::uint32_t>(depth.height()));
  out.write(reinterpret_cast<const char*>(depth.values().data()),
            static_cast<std::streamsize>(depth.values().size() * sizeof(float)));
  if (!out) fail(path, "write failed");
}

DepthMap read_depth(const std::filesystem::path& path) {
  auto in = open_in(path, std::ios::binary);
  expect_magic(in, "DPTH", path);
  const auto width = get<std::uint32_t>(in, path);
  const auto height = get<std::uint32_t>(in, path);
  std::vector<float> values(static_cast<std::size_t>(width) * height);
  if (!in.read(reinterpret_cast<char*>(values.data()),
               static_cast<std::streamsize>(values.size() * sizeof(float)))) {
    fail(path, "truncated depth payload");
  }
  for (float v : values) {
    if (!std::isfinite(v)) fail(path, "non-finite depth value");
  }
  return {width, height, std::move(values)};
}

void write_pointcloud(const std::filesystem::path& path, const FeaturePointcloud& cloud) {
  cloud.validate();
  auto out = open_out(path, std::ios::binary);
  out.write("FPCL", 4);
  put<std::uint32_t>(out, static_cast<std::uint32_t>(cloud.size()));
  put<std::uint32_t>(out, static_cast<std::uint32_t>(cloud.dim()));
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    for (int k = 0; k < 3; ++k) put<float>(out, static_cast<float>(cloud.points[i](k)));
    for (int k = 0; k < 2; ++k) put<float>(out, static_cast<float>(cloud.pixels[i](k)));
    for (Eigen::Index k = 0; k < cloud.dim(); ++k) {
      put<float>(out, static_cast<float>(cloud.descriptors(k, static_cast<Eigen::Index>(i))));
    }
  }
  if (!out) fail(path, "write failed");
}

FeaturePointcloud read_pointcloud(const std::filesystem::path& path) {
  auto in = open_in(path, std::ios::binary);
  expect_magic(in, "FPCL", path);
  const auto count = get<std::uint32_t>(in, path);
  const auto dim = get<std::uint32_t>(in, path);
  FeaturePointcloud cloud;
  cloud.points.resize(count);
  cloud.pixels.resize(count);
  cloud.descriptors.resize(dim, count);
  for (std::uint32_t i = 0; i < count; ++i) {
    for (int k = 0; k < 3; ++k) cloud.points[i](k) = get<float>(in, path);
    for (int k = 0; k < 2; ++k) cloud.pixels[i](k) = get<float>(in, path);
    for (std::uint32_t k = 0; k < dim; ++k) cloud.descriptors(k, i) = get<float>(in, path);
    const double norm = cloud.descriptors.col(i).norm();
    if (!(norm > 0.0) || !cloud.points[i].allFinite()) fail(path, "invalid point record");
    cloud.descriptors.col(i) /= norm;
  }
  return cloud;
}

void write_intrinsics(const std::filesystem::path& path, const CameraIntrinsics& k) {
  auto out = open_out(path);
  out << std::setprecision(17);
  out << "fx=" << k.fx << "\nfy=" << k.fy << "\ncx=" << k.cx << "\ncy=" << k.cy
      << "\nwidth=" << k.width << "\nheight=" << k.height << '\n';
  if (!out) fail(path, "write failed");
}

CameraIntrinsics read_intrinsics(const std::filesystem::path& path) {
  auto in = open_in(path);
  std::map<std::string, std::string> kv;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) fail(path, "expected key=value, got '" + line + "'");
    auto trim = [](std::string s) {
      const auto b = s.find_first_not_of(" \t\r");
      const auto e = s.find_last_not_of(" \t\r");
      return b == std::string::npos ? std::string{} : s.substr(b, e - b + 1);
    };
    kv[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
  }
  CameraIntrinsics k;
  try {
    k.fx = std::stod(kv.at("fx"));
    k.fy = std::stod(kv.at("fy"));
    k.cx = std::stod(kv.at("cx"));
    k.cy = std::stod(kv.at("cy"));
    k.width = std::stoul(kv.at("width"));
    k.height = std::stoul(kv.at("height"));
  } catch (const std::exception&) {
    fail(path, "missing or malformed intrinsics key");
  }
  k.validate();
  return k;
}

void write_pose_graph(std::ostream& out, const PoseGraph& graph) {
  out << std::setprecision(17);
  out << "N " << graph.n_frames() << '\n';
  for (const auto& [key, edge] : graph.edges()) {
    out << "E " << key.first << ' ' << key.second << ' ' << edge.confidence;
    put_transform(out, edge.transform);
    out << '\n';
  }
}

PoseGraph read_pose_graph(std::istream& in) {
  PoseGraph graph(read_header(in));
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ss(line);
    std::string tag;
    std::size_t i = 0, j = 0;
    double c = 0.0;
    ss >> tag >> i >> j >> c;
    if (tag != "E" || !ss) throw Error(ErrorKind::IOFailure, "malformed edge line: " + line);
    graph.set_edge(i, j, get_transform(ss), c);
  }
  return graph;
}

void write_pose_graph(const std::filesystem::path& path, const PoseGraph& graph) {
  auto out = open_out(path);
  write_pose_graph(out, graph);
  if (!out) fail(path, "write failed");
}

PoseGraph read_pose_graph(const std::filesystem::path& path) {
  auto in = open_in(path);
  return read_pose_graph(in);
}

void write_poses(std::ostream& out, const std::vector<RigidTransform>& poses) {
  out << std::setprecision(17);
  out << "N " << poses.size() << '\n';
  for (std::size_t i = 0; i < poses.size(); ++i) {
    out << "P " << i;
    put_transform(out, poses[i]);
    out << '\n';
  }
}

std::vector<RigidTransform> read_poses(std::istream& in) {
  const std::size_t n = read_header(in);
  std::vector<RigidTransform> poses(n);
  std::vector<bool> seen(n, false);
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ss(line);
    std::string tag;
    std::size_t i = 0;
    ss >> tag >> i;
    if (tag != "P" || !ss || i >= n) throw Error(ErrorKind::IOFailure, "malformed pose line: " + line);
    poses[i] = get_transform(ss);
    seen[i] = true;
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (!seen[i]) throw Error(ErrorKind::IOFailure, "pose " + std::to_string(i) + " missing");
  }
  return poses;
}

void write_poses(const std::filesystem::path& path, const std::vector<RigidTransform>& poses) {
  auto out = open_out(path);
  write_poses(out, poses);
  if (!out) fail(path, "write failed");
}

std::vector<RigidTransform> read_poses(const std::filesystem::path& path) {
  auto in = open_in(path);
  return read_poses(in);
}

void write_correspondences(const std::filesystem::path& path,
                           const std::vector<CorrespondenceSet>& sets) {
  auto out = open_out(path);
  out << std::setprecision(17);
  for (const auto& set : sets) {
    for (const auto& m : set.matches) {
      out << "C " << set.frame_pair.first << ' ' << set.frame_pair.second << ' '
          << m.source_index << ' ' << m.target_index << ' ' << m.weight << '\n';
    }
  }
  if (!out) fail(path, "write failed");
}

std::vector<CorrespondenceSet> read_correspondences(const std::filesystem::path& path) {
  auto in = open_in(path);
  std::map<FramePair, CorrespondenceSet> sets;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ss(line);
    std::string tag;
    std::size_t i = 0, j = 0;
    Correspondence m;
    ss >> tag >> i >> j >> m.source_index >> m.target_index >> m.weight;
    if (tag != "C" || !ss) fail(path, "malformed correspondence line: " + line);
    auto& set = sets[{i, j}];
    set.frame_pair = {i, j};
    set.matches.push_back(m);
  }
  std::vector<CorrespondenceSet> out;
  for (auto& [key, set] : sets) out.push_back(std::move(set));
  return out;
}

}  // namespace syncmatch::io
