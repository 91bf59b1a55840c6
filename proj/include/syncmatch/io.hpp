#pragma once

#include "syncmatch/correspondence.hpp"
#include "syncmatch/geometry.hpp"
#include "syncmatch/synchronization.hpp"

#include <filesystem>
#include <iosfwd>
#include <vector>

namespace syncmatch::io {

// Binary containers are little-endian.
//
// DPTH: "DPTH" | u32 width | u32 height | width*height f32 depths, row-major.
// FPCL: "FPCL" | u32 count | u32 dim | count * (f32 x, y, z | f32 u, v | f32 * dim).
//
// Every reader throws IOFailure for unreadable or malformed files.

void write_depth(const std::filesystem::path& path, const DepthMap& depth);
/// Rejects NaN and infinite depths.
DepthMap read_depth(const std::filesystem::path& path);

void write_pointcloud(const std::filesystem::path& path, const FeaturePointcloud& cloud);
/// Descriptors are renormalized after the f32 round trip.
FeaturePointcloud read_pointcloud(const std::filesystem::path& path);

/// key=value lines for fx, fy, cx, cy, width, height.
void write_intrinsics(const std::filesystem::path& path, const CameraIntrinsics& k);
CameraIntrinsics read_intrinsics(const std::filesystem::path& path);

// Pose-graph text: "N <count>" then one "E i j c r00 r01 ... r22 tx ty tz"
// line per edge; pose files use "P i r00 ... r22 tx ty tz" lines instead.
// Rotation entries are the row-convention block, row-major.

void write_pose_graph(std::ostream& out, const PoseGraph& graph);
PoseGraph read_pose_graph(std::istream& in);
void write_pose_graph(const std::filesystem::path& path, const PoseGraph& graph);
PoseGraph read_pose_graph(const std::filesystem::path& path);

void write_poses(std::ostream& out, const std::vector<RigidTransform>& poses);
std::vector<RigidTransform> read_poses(std::istream& in);
void write_poses(const std::filesystem::path& path, const std::vector<RigidTransform>& poses);
std::vector<RigidTransform> read_poses(const std::filesystem::path& path);

/// "C i j src dst w" lines, one per match.
void write_correspondences(const std::filesystem::path& path,
                           const std::vector<CorrespondenceSet>& sets);
std::vector<CorrespondenceSet> read_correspondences(const std::filesystem::path& path);

}  // namespace syncmatch::io
