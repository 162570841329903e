#include "sdrgain/io.hpp"

#include <charconv>
#include <fstream>
#include <sstream>
#include <string_view>

#include "json.hpp"
#include "sdrgain/error.hpp"
#include "text.hpp"

namespace sdrgain {

namespace {

using K = KeypointId;

constexpr std::array<KeypointId, 17> kCocoOrder{
    K::Nose,   K::LEye,      K::REye,      K::LEar,   K::REar,   K::LShoulder, K::RShoulder, K::LElbow, K::RElbow,
    K::LWrist, K::RWrist,    K::LHip,      K::RHip,   K::LKnee,  K::RKnee,     K::LAnkle,    K::RAnkle};

std::vector<std::string_view> split(std::string_view line, char sep) {
  std::vector<std::string_view> cells;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = line.find(sep, start);
    if (pos == std::string_view::npos) {
      cells.push_back(line.substr(start));
      return cells;
    }
    cells.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
}

double parse_number(std::string_view cell, std::size_t row, std::string_view column) {
  double value = 0.0;
  const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), value);
  if (ec != std::errc() || ptr != cell.data() + cell.size() || cell.empty()) {
    throw Error(ErrorKind::Parse, "row " + std::to_string(row) + " column " + std::string(column) +
                                      ": '" + std::string(cell) + "' is not a number");
  }
  return value;
}

bool parse_flag(std::string_view cell, std::size_t row, std::string_view column) {
  const double value = parse_number(cell, row, column);
  if (value != 0.0 && value != 1.0) {
    throw Error(ErrorKind::Domain, "row " + std::to_string(row) + " column " + std::string(column) + ": value " +
                                       std::string(cell) + " outside {0,1}");
  }
  return value == 1.0;
}

std::vector<std::string> header_columns(bool with_generated) {
  std::vector<std::string> cols;
  for (std::size_t k = 0; k < kNumKeypoints; ++k) {
    const std::string idx = std::to_string(k);
    cols.push_back("x_" + idx);
    cols.push_back("y_" + idx);
    cols.push_back("present_" + idx);
  }
  if (with_generated) {
    for (std::size_t k = 0; k < kNumKeypoints; ++k) cols.push_back("generated_" + std::to_string(k));
  }
  return cols;
}

}  // namespace

std::vector<Pose18> parse_coco_keypoints(const std::string& text, int visibility_threshold, bool complete_only) {
  if (visibility_threshold < 1 || visibility_threshold > 2) {
    throw Error(ErrorKind::Config, "visibility threshold must be 1 or 2");
  }
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::Parse, std::string("COCO document is not valid JSON: ") + e.what());
  }
  if (!doc.is_object() || !doc.contains("annotations") || !doc["annotations"].is_array()) {
    throw Error(ErrorKind::Parse, "COCO document has no 'annotations' array");
  }

  std::vector<Pose18> poses;
  for (const nlohmann::json& ann : doc["annotations"]) {
    const std::string id = ann.contains("id") ? ann["id"].dump() : "<no id>";
    if (!ann.contains("keypoints") || !ann["keypoints"].is_array()) {
      throw Error(ErrorKind::Parse, "annotation " + id + ": missing keypoints array");
    }
    const nlohmann::json& kp = ann["keypoints"];
    if (kp.size() != 51) {
      throw Error(ErrorKind::Parse, "annotation " + id + ": keypoints has " + std::to_string(kp.size()) +
                                        " values, expected 51");
    }

    Pose18 pose;
    for (std::size_t c = 0; c < kCocoOrder.size(); ++c) {
      if (!kp[3 * c].is_number() || !kp[3 * c + 1].is_number() || !kp[3 * c + 2].is_number()) {
        throw Error(ErrorKind::Parse, "annotation " + id + ": non-numeric keypoint value");
      }
      const double x = kp[3 * c].get<double>();
      const double y = kp[3 * c + 1].get<double>();
      const int v = kp[3 * c + 2].get<int>();
      if (v > 0 && (x < 0.0 || y < 0.0)) {
        throw Error(ErrorKind::Parse, "annotation " + id + ": negative coordinate on a labeled keypoint");
      }
      pose[kCocoOrder[c]] = {x, y};
      pose.present[index_of(kCocoOrder[c])] = v >= visibility_threshold;
    }
    if (pose.has(K::LShoulder) && pose.has(K::RShoulder)) {
      pose[K::Neck] = neck_from_shoulders(pose[K::LShoulder], pose[K::RShoulder]);
      pose.present[index_of(K::Neck)] = true;
    }
    if (complete_only && !validate_pose(pose).complete) continue;
    poses.push_back(pose);
  }
  return poses;
}

std::vector<Pose18> load_coco_keypoints(const std::filesystem::path& path, int visibility_threshold,
                                        bool complete_only) {
  return parse_coco_keypoints(read_text_file(path), visibility_threshold, complete_only);
}

std::string pose_csv_header(bool with_generated) {
  std::string header;
  for (const std::string& col : header_columns(with_generated)) {
    if (!header.empty()) header += ',';
    header += col;
  }
  return header;
}

std::string poses_to_csv(const std::vector<Pose18>& poses,
                         const std::vector<std::array<bool, kNumKeypoints>>* generated) {
  if (generated && generated->size() != poses.size()) {
    throw Error(ErrorKind::Shape, "generated flags count differs from pose count");
  }
  std::ostringstream out;
  out << pose_csv_header(generated != nullptr) << '\n';
  for (std::size_t i = 0; i < poses.size(); ++i) {
    const Pose18& pose = poses[i];
    for (std::size_t k = 0; k < kNumKeypoints; ++k) {
      if (k > 0) out << ',';
      out << detail::format_double(pose.points[k].x) << ',' << detail::format_double(pose.points[k].y) << ','
          << (pose.present[k] ? 1 : 0);
    }
    if (generated) {
      for (bool flag : (*generated)[i]) out << ',' << (flag ? 1 : 0);
    }
    out << '\n';
  }
  return out.str();
}

PoseTable parse_pose_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) throw Error(ErrorKind::Header, "pose CSV is empty");
  if (!line.empty() && line.back() == '\r') line.pop_back();

  const std::vector<std::string_view> header = split(line, ',');
  bool with_generated = false;
  if (header.size() == 3 * kNumKeypoints + kNumKeypoints) {
    with_generated = true;
  } else if (header.size() != 3 * kNumKeypoints) {
    throw Error(ErrorKind::Header, "pose CSV header has " + std::to_string(header.size()) +
                                       " columns, expected 54 or 72");
  }
  const std::vector<std::string> expected = header_columns(with_generated);
  for (std::size_t c = 0; c < expected.size(); ++c) {
    if (header[c] != expected[c]) {
      throw Error(ErrorKind::Header, "pose CSV column " + std::to_string(c) + " is '" + std::string(header[c]) +
                                         "', expected '" + expected[c] + "'");
    }
  }

  PoseTable table;
  if (with_generated) table.generated.emplace();
  std::size_t row = 0;
  while (std::getline(in, line)) {
    ++row;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const std::vector<std::string_view> cells = split(line, ',');
    if (cells.size() != expected.size()) {
      throw Error(ErrorKind::Parse, "row " + std::to_string(row) + " has " + std::to_string(cells.size()) +
                                        " cells, expected " + std::to_string(expected.size()));
    }
    Pose18 pose;
    for (std::size_t k = 0; k < kNumKeypoints; ++k) {
      pose.points[k].x = parse_number(cells[3 * k], row, expected[3 * k]);
      pose.points[k].y = parse_number(cells[3 * k + 1], row, expected[3 * k + 1]);
      pose.present[k] = parse_flag(cells[3 * k + 2], row, expected[3 * k + 2]);
    }
    table.poses.push_back(pose);
    if (with_generated) {
      std::array<bool, kNumKeypoints> flags{};
      for (std::size_t k = 0; k < kNumKeypoints; ++k) {
        const std::size_t c = 3 * kNumKeypoints + k;
        flags[k] = parse_flag(cells[c], row, expected[c]);
      }
      table.generated->push_back(flags);
    }
  }
  return table;
}

void save_pose_csv(const std::vector<Pose18>& poses, const std::filesystem::path& path,
                   const std::vector<std::array<bool, kNumKeypoints>>* generated) {
  write_text_file(path, poses_to_csv(poses, generated));
}

PoseTable load_pose_csv(const std::filesystem::path& path) { return parse_pose_csv(read_text_file(path)); }

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::Io, "cannot read " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::Io, "cannot write " + path.string());
  out << text;
  if (!out) throw Error(ErrorKind::Io, "write failed for " + path.string());
}

}  // namespace sdrgain
