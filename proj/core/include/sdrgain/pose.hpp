#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <utility>
#include <vector>

namespace sdrgain {

inline constexpr std::size_t kNumKeypoints = 18;

// OpenPose 18-point numbering.
enum class KeypointId : std::uint8_t {
  Nose = 0,
  Neck = 1,
  RShoulder = 2,
  RElbow = 3,
  RWrist = 4,
  LShoulder = 5,
  LElbow = 6,
  LWrist = 7,
  RHip = 8,
  RKnee = 9,
  RAnkle = 10,
  LHip = 11,
  LKnee = 12,
  LAnkle = 13,
  REye = 14,
  LEye = 15,
  REar = 16,
  LEar = 17,
};

constexpr std::size_t index_of(KeypointId id) noexcept { return static_cast<std::size_t>(id); }

/// Throws Error(Domain) for indices outside [0,17].
KeypointId keypoint_from_index(int index);

std::string_view keypoint_name(KeypointId id) noexcept;
std::optional<KeypointId> keypoint_from_name(std::string_view name) noexcept;

// Both slot lists are in ascending KeypointId order; that order is the
// intra-part order used by every vector downstream.
inline constexpr std::array<KeypointId, 5> kHeadSlots{
    KeypointId::Nose, KeypointId::REye, KeypointId::LEye, KeypointId::REar, KeypointId::LEar};
inline constexpr std::array<KeypointId, 13> kBodySlots{
    KeypointId::Neck,   KeypointId::RShoulder, KeypointId::RElbow, KeypointId::RWrist,
    KeypointId::LShoulder, KeypointId::LElbow, KeypointId::LWrist, KeypointId::RHip,
    KeypointId::RKnee,  KeypointId::RAnkle,    KeypointId::LHip,   KeypointId::LKnee,
    KeypointId::LAnkle};

bool is_head(KeypointId id) noexcept;

struct Point {
  double x = 0.0;
  double y = 0.0;

  friend bool operator==(const Point&, const Point&) = default;
};

/// One pedestrian. A slot whose `present` flag is false carries no meaning.
struct Pose18 {
  std::array<Point, kNumKeypoints> points{};
  std::array<bool, kNumKeypoints> present{};

  const Point& operator[](KeypointId id) const { return points[index_of(id)]; }
  Point& operator[](KeypointId id) { return points[index_of(id)]; }
  bool has(KeypointId id) const { return present[index_of(id)]; }

  friend bool operator==(const Pose18&, const Pose18&) = default;
};

/// Neck synthesized from the two shoulders (midpoint).
Point neck_from_shoulders(Point left_shoulder, Point right_shoulder);

// Undirected OpenPose limb list (17 edges, a tree rooted at the neck).
std::span<const std::pair<KeypointId, KeypointId>> skeleton_edges() noexcept;

/// Hop count of the shortest path between two keypoints in the limb graph.
int skeleton_distance(KeypointId a, KeypointId b) noexcept;

struct ValidationReport {
  int head_observed = 0;
  int body_observed = 0;
  bool complete = false;
  std::vector<KeypointId> invalid_coordinates;  // present but non-finite
};

ValidationReport validate_pose(const Pose18& pose);

}  // namespace sdrgain
