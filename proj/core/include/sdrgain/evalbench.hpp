#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "sdrgain/gain.hpp"
#include "sdrgain/pose.hpp"

namespace sdrgain {

using GeneratedFlags = std::array<bool, kNumKeypoints>;

/// Dataset-wide per-axis min/max over ground truth.
struct EvalScale {
  Scale x;
  Scale y;
};

EvalScale eval_scale(std::span<const Pose18> truth);

/// RMSE over generated coordinates only, after mapping truth and imputed
/// poses into the unified scale built from `truth`. x and y count as
/// separate entries.
double unified_rmse(std::span<const Pose18> truth, std::span<const Pose18> imputed,
                    std::span<const GeneratedFlags> generated);

struct LatencyStats {
  double mean = 0.0;
  double median = 0.0;
  double p99 = 0.0;
  std::size_t calls = 0;         // timed calls
  std::size_t warmup_calls = 0;  // untimed
};

LatencyStats summarize_latency(std::vector<double> seconds);

/// Times `iters` passes of impute_pose over `poses` on the calling thread.
/// An extra ceil(10%) of calls runs first as untimed warm-up.
LatencyStats latency_bench(const PartModels& models, std::span<const Pose18> poses, std::size_t iters,
                           const ImputeOptions& options = {}, std::uint64_t seed = 0);

// ---- synthetic pedestrians ----------------------------------------------

/// Anatomical ranges used by the synthetic skeleton model (degrees unless
/// noted). Limb angles are measured from straight down in the image plane.
struct SynthRanges {
  static constexpr double kTorsoMin = 120.0;  // px, neck to hip midpoint
  static constexpr double kTorsoMax = 220.0;
  static constexpr double kRollMax = 15.0;     // whole-body rotation
  static constexpr double kGaitAmplitudeMax = 25.0;
  static constexpr double kUpperArmMax = 35.0;
  static constexpr double kElbowFlexMax = 60.0;
  static constexpr double kThighMax = 30.0;
  static constexpr double kKneeFlexMax = 45.0;
  static constexpr double kBodyYawMax = 45.0;  // shrinks lateral widths by cos
  static constexpr double kHeadYawMax = 30.0;
  static constexpr double kHeadTiltMax = 10.0;
  static constexpr double kJitterFraction = 0.01;  // sigma / torso height
};

struct SynthParams {
  double torso = 0.0;
  double roll = 0.0;
  double body_yaw = 0.0;
  double head_yaw = 0.0;
  double head_tilt = 0.0;
  double upper_arm_r = 0.0;
  double upper_arm_l = 0.0;
  double elbow_flex_r = 0.0;
  double elbow_flex_l = 0.0;
  double thigh_r = 0.0;
  double thigh_l = 0.0;
  double knee_flex_r = 0.0;
  double knee_flex_l = 0.0;
};

struct SynthSample {
  Pose18 pose;
  SynthParams params;
};

std::vector<SynthSample> synth_samples(std::size_t n, std::uint64_t seed);
/// Complete upright pedestrians; deterministic per seed.
std::vector<Pose18> synth_poses(std::size_t n, std::uint64_t seed);

// ---- comparison ---------------------------------------------------------

enum class Method { SdrGain, Pchip, Makima, Knn };

std::string method_name(Method method);
/// "sdr-gain", "pchip", "makima", "knn".
Method parse_method(const std::string& name);

struct CompareConfig {
  std::vector<Method> methods{Method::SdrGain, Method::Pchip, Method::Makima, Method::Knn};
  std::size_t knn_k = 5;
  /// Complete poses forming the k-NN reference set. When empty, each query
  /// uses the other evaluation poses (leave-one-out).
  std::vector<Pose18> knn_reference;
  double p_m = 0.2;
  std::uint64_t seed = 0;
  ImputeOptions impute;
};

/// Deterministic evaluation masks: one draw per part per pose, redrawn while
/// a part would keep fewer than 2 observed keypoints.
std::vector<Pose18> mask_poses(std::span<const Pose18> truth, double p_m, std::uint64_t seed);

struct MethodReport {
  double rmse = 0.0;
  std::size_t n_imputed_entries = 0;
  LatencyStats latency;
};

struct EvalReport {
  std::map<std::string, MethodReport> methods;
  std::size_t n_poses = 0;
  double p_m = 0.0;
  std::uint64_t seed = 0;
  std::size_t knn_k = 0;
  double margin = 0.0;
  std::string noise;
};

struct MethodRun {
  std::vector<Pose18> imputed;
  std::vector<GeneratedFlags> generated;
  std::vector<double> seconds;  // per pose
};

/// Completes every masked pose with one method.
MethodRun run_method(Method method, const PartModels& models, std::span<const Pose18> masked,
                     std::span<const Pose18> truth, const CompareConfig& cfg);

EvalReport compare_report(const PartModels& models, std::span<const Pose18> data, const CompareConfig& cfg);

/// Report as one JSON object and as a flat CSV table.
std::string report_to_json(const EvalReport& report);
std::string report_to_csv(const EvalReport& report);

}  // namespace sdrgain
