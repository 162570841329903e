#include "sdrgain/pose.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <string>

#include "sdrgain/error.hpp"

namespace sdrgain {

std::string_view to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::InvalidCoordinate: return "invalid-coordinate";
    case ErrorKind::DegenerateReference: return "degenerate-reference";
    case ErrorKind::UnboundedError: return "unbounded-error";
    case ErrorKind::NoScale: return "no-scale";
    case ErrorKind::PartUnanchored: return "part-unanchored";
    case ErrorKind::Config: return "config";
    case ErrorKind::Shape: return "shape";
    case ErrorKind::Numeric: return "numeric";
    case ErrorKind::CacheMismatch: return "cache-mismatch";
    case ErrorKind::Version: return "version";
    case ErrorKind::Corrupt: return "corrupt";
    case ErrorKind::Data: return "data";
    case ErrorKind::Divergence: return "divergence";
    case ErrorKind::InsufficientData: return "insufficient-data";
    case ErrorKind::UndefinedMetric: return "undefined-metric";
    case ErrorKind::Parse: return "parse";
    case ErrorKind::Header: return "header";
    case ErrorKind::Domain: return "domain";
    case ErrorKind::Io: return "io";
  }
  return "unknown";
}

namespace {

constexpr std::array<std::string_view, kNumKeypoints> kNames{
    "Nose",  "Neck",   "RShoulder", "RElbow", "RWrist", "LShoulder",
    "LElbow", "LWrist", "RHip",     "RKnee",  "RAnkle", "LHip",
    "LKnee", "LAnkle", "REye",      "LEye",   "REar",   "LEar"};

using K = KeypointId;
constexpr std::array<std::pair<KeypointId, KeypointId>, 17> kEdges{{
    {K::Neck, K::Nose},
    {K::Neck, K::RShoulder},
    {K::Neck, K::LShoulder},
    {K::RShoulder, K::RElbow},
    {K::RElbow, K::RWrist},
    {K::LShoulder, K::LElbow},
    {K::LElbow, K::LWrist},
    {K::Neck, K::RHip},
    {K::RHip, K::RKnee},
    {K::RKnee, K::RAnkle},
    {K::Neck, K::LHip},
    {K::LHip, K::LKnee},
    {K::LKnee, K::LAnkle},
    {K::Nose, K::REye},
    {K::REye, K::REar},
    {K::Nose, K::LEye},
    {K::LEye, K::LEar},
}};

using DistanceTable = std::array<std::array<int, kNumKeypoints>, kNumKeypoints>;

DistanceTable build_distance_table() {
  std::array<std::vector<std::size_t>, kNumKeypoints> adjacency;
  for (const auto& [a, b] : kEdges) {
    adjacency[index_of(a)].push_back(index_of(b));
    adjacency[index_of(b)].push_back(index_of(a));
  }
  DistanceTable table{};
  for (std::size_t src = 0; src < kNumKeypoints; ++src) {
    table[src].fill(-1);
    table[src][src] = 0;
    std::deque<std::size_t> queue{src};
    while (!queue.empty()) {
      const std::size_t u = queue.front();
      queue.pop_front();
      for (std::size_t v : adjacency[u]) {
        if (table[src][v] < 0) {
          table[src][v] = table[src][u] + 1;
          queue.push_back(v);
        }
      }
    }
  }
  return table;
}

const DistanceTable& distance_table() {
  static const DistanceTable table = build_distance_table();
  return table;
}

}  // namespace

KeypointId keypoint_from_index(int index) {
  if (index < 0 || index >= static_cast<int>(kNumKeypoints)) {
    throw Error(ErrorKind::Domain, "keypoint index " + std::to_string(index) + " outside [0,17]");
  }
  return static_cast<KeypointId>(index);
}

std::string_view keypoint_name(KeypointId id) noexcept { return kNames[index_of(id)]; }

std::optional<KeypointId> keypoint_from_name(std::string_view name) noexcept {
  const auto it = std::find(kNames.begin(), kNames.end(), name);
  if (it == kNames.end()) return std::nullopt;
  return static_cast<KeypointId>(it - kNames.begin());
}

bool is_head(KeypointId id) noexcept {
  return std::find(kHeadSlots.begin(), kHeadSlots.end(), id) != kHeadSlots.end();
}

Point neck_from_shoulders(Point left_shoulder, Point right_shoulder) {
  if (!std::isfinite(left_shoulder.x) || !std::isfinite(left_shoulder.y) ||
      !std::isfinite(right_shoulder.x) || !std::isfinite(right_shoulder.y)) {
    throw Error(ErrorKind::InvalidCoordinate, "non-finite shoulder coordinate");
  }
  return {0.5 * (left_shoulder.x + right_shoulder.x), 0.5 * (left_shoulder.y + right_shoulder.y)};
}

std::span<const std::pair<KeypointId, KeypointId>> skeleton_edges() noexcept { return kEdges; }

int skeleton_distance(KeypointId a, KeypointId b) noexcept {
  return distance_table()[index_of(a)][index_of(b)];
}

ValidationReport validate_pose(const Pose18& pose) {
  ValidationReport report;
  for (std::size_t k = 0; k < kNumKeypoints; ++k) {
    if (!pose.present[k]) continue;
    const auto id = static_cast<KeypointId>(k);
    if (!std::isfinite(pose.points[k].x) || !std::isfinite(pose.points[k].y)) {
      report.invalid_coordinates.push_back(id);
      continue;
    }
    if (is_head(id)) {
      ++report.head_observed;
    } else {
      ++report.body_observed;
    }
  }
  report.complete = report.head_observed == static_cast<int>(kHeadSlots.size()) &&
                    report.body_observed == static_cast<int>(kBodySlots.size());
  return report;
}

}  // namespace sdrgain
