#pragma once

#include <array>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "sdrgain/pose.hpp"

namespace sdrgain {

/// COCO person-keypoint document. Each annotation's 17 (x, y, v) triplets
/// are mapped to the 18-point layout; the neck is synthesized from the
/// shoulders when both are observed. A keypoint is observed iff
/// v >= visibility_threshold.
std::vector<Pose18> parse_coco_keypoints(const std::string& text, int visibility_threshold, bool complete_only);
std::vector<Pose18> load_coco_keypoints(const std::filesystem::path& path, int visibility_threshold,
                                        bool complete_only);

/// Pose CSV: columns x_k,y_k,present_k for k = 0..17 (54 columns), optionally
/// followed by generated_0..generated_17 (72 columns).
struct PoseTable {
  std::vector<Pose18> poses;
  std::optional<std::vector<std::array<bool, kNumKeypoints>>> generated;
};

std::string pose_csv_header(bool with_generated);
std::string poses_to_csv(const std::vector<Pose18>& poses,
                         const std::vector<std::array<bool, kNumKeypoints>>* generated = nullptr);
PoseTable parse_pose_csv(const std::string& text);

void save_pose_csv(const std::vector<Pose18>& poses, const std::filesystem::path& path,
                   const std::vector<std::array<bool, kNumKeypoints>>* generated = nullptr);
PoseTable load_pose_csv(const std::filesystem::path& path);

std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, const std::string& text);

}  // namespace sdrgain
