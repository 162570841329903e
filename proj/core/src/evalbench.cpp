#include "sdrgain/evalbench.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numbers>
#include <numeric>
#include <sstream>

#include "json.hpp"
#include "sdrgain/baselines.hpp"
#include "sdrgain/error.hpp"
#include "text.hpp"

namespace sdrgain {

namespace {

using Clock = std::chrono::steady_clock;

double deg(double degrees) { return degrees * std::numbers::pi / 180.0; }

Point along(Point from, double length, double angle_deg) {
  // 0 deg points straight down the image; positive angles swing toward +x.
  return {from.x + length * std::sin(deg(angle_deg)), from.y + length * std::cos(deg(angle_deg))};
}

Point rotate_point(Point p, Point center, double angle_deg) {
  const double c = std::cos(deg(angle_deg));
  const double s = std::sin(deg(angle_deg));
  const double dx = p.x - center.x;
  const double dy = p.y - center.y;
  return {center.x + c * dx - s * dy, center.y + s * dx + c * dy};
}

SynthSample synth_one(RngStream& rng) {
  using R = SynthRanges;
  SynthSample sample;
  SynthParams& p = sample.params;

  p.torso = rng.uniform(R::kTorsoMin, R::kTorsoMax);
  p.roll = rng.uniform(-R::kRollMax, R::kRollMax);
  p.body_yaw = rng.uniform(-R::kBodyYawMax, R::kBodyYawMax);
  p.head_yaw = rng.uniform(-R::kHeadYawMax, R::kHeadYawMax);
  p.head_tilt = rng.uniform(-R::kHeadTiltMax, R::kHeadTiltMax);

  // Gait: legs swing in anti-phase, each arm opposes the leg on its side.
  const double phase = rng.uniform(0.0, 2.0 * std::numbers::pi);
  const double amplitude = rng.uniform(0.0, R::kGaitAmplitudeMax);
  const double swing = amplitude * std::sin(phase);
  p.thigh_r = swing + rng.uniform(-5.0, 5.0);
  p.thigh_l = -swing + rng.uniform(-5.0, 5.0);
  p.upper_arm_r = -0.8 * swing + rng.uniform(-10.0, 10.0);
  p.upper_arm_l = 0.8 * swing + rng.uniform(-10.0, 10.0);
  p.elbow_flex_r = rng.uniform(0.0, R::kElbowFlexMax);
  p.elbow_flex_l = rng.uniform(0.0, R::kElbowFlexMax);
  const double stride = 0.3 + 0.7 * std::abs(std::sin(phase));
  p.knee_flex_r = stride * rng.uniform(0.0, R::kKneeFlexMax);
  p.knee_flex_l = stride * rng.uniform(0.0, R::kKneeFlexMax);

  const double t = p.torso;
  const double lateral = std::cos(deg(p.body_yaw));
  const Point neck{rng.uniform(300.0, 1000.0), rng.uniform(150.0, 350.0)};

  Pose18& pose = sample.pose;
  using K = KeypointId;
  pose[K::Neck] = neck;
  pose[K::RShoulder] = {neck.x - 0.40 * t * lateral, neck.y};
  pose[K::LShoulder] = {neck.x + 0.40 * t * lateral, neck.y};
  const Point hip_mid{neck.x, neck.y + t};
  pose[K::RHip] = {hip_mid.x - 0.20 * t * lateral, hip_mid.y};
  pose[K::LHip] = {hip_mid.x + 0.20 * t * lateral, hip_mid.y};

  pose[K::RElbow] = along(pose[K::RShoulder], 0.60 * t, p.upper_arm_r);
  pose[K::RWrist] = along(pose[K::RElbow], 0.55 * t, p.upper_arm_r + p.elbow_flex_r);
  pose[K::LElbow] = along(pose[K::LShoulder], 0.60 * t, p.upper_arm_l);
  pose[K::LWrist] = along(pose[K::LElbow], 0.55 * t, p.upper_arm_l - p.elbow_flex_l);
  pose[K::RKnee] = along(pose[K::RHip], 0.85 * t, p.thigh_r);
  pose[K::RAnkle] = along(pose[K::RKnee], 0.80 * t, p.thigh_r + p.knee_flex_r);
  pose[K::LKnee] = along(pose[K::LHip], 0.85 * t, p.thigh_l);
  pose[K::LAnkle] = along(pose[K::LKnee], 0.80 * t, p.thigh_l - p.knee_flex_l);

  const double face = std::cos(deg(p.head_yaw));
  const double turn = std::sin(deg(p.head_yaw));
  const Point nose{neck.x + 0.12 * t * turn, neck.y - 0.45 * t};
  pose[K::Nose] = nose;
  pose[K::REye] = {nose.x - 0.09 * t * face + 0.04 * t * turn, nose.y - 0.08 * t};
  pose[K::LEye] = {nose.x + 0.09 * t * face + 0.04 * t * turn, nose.y - 0.08 * t};
  pose[K::REar] = {nose.x - 0.19 * t * face - 0.06 * t * turn, nose.y - 0.05 * t};
  pose[K::LEar] = {nose.x + 0.19 * t * face - 0.06 * t * turn, nose.y - 0.05 * t};
  for (KeypointId id : kHeadSlots) pose[id] = rotate_point(pose[id], neck, p.head_tilt);

  const double sigma = R::kJitterFraction * t;
  for (std::size_t k = 0; k < kNumKeypoints; ++k) {
    Point q = rotate_point(pose.points[k], hip_mid, p.roll);
    q.x += sigma * rng.normal();
    q.y += sigma * rng.normal();
    pose.points[k] = q;
    pose.present[k] = true;
  }
  return sample;
}

std::vector<double> stacked_truth(const Pose18& pose, PartKind part) {
  return forward_transform(pose, part, 0.0).stacked();
}

// Runs `fill` on every part that has missing keypoints and writes the
// inverse-transformed values back into the missing slots.
template <typename Fill>
void complete_parts(const Pose18& masked, double margin, Pose18& out, GeneratedFlags& generated, Fill&& fill) {
  out = masked;
  generated.fill(false);
  for (PartKind part : {PartKind::Head, PartKind::Body}) {
    const auto slots = part_slots(part);
    const bool any_missing = std::any_of(slots.begin(), slots.end(), [&](KeypointId id) { return !masked.has(id); });
    if (!any_missing) continue;
    PartFrame frame = forward_transform(masked, part, margin);
    const std::vector<double> filled = fill(frame);
    const std::size_t l = frame.length();
    frame.nx.assign(filled.begin(), filled.begin() + static_cast<std::ptrdiff_t>(l));
    frame.ny.assign(filled.begin() + static_cast<std::ptrdiff_t>(l), filled.end());
    const std::vector<Point> restored = inverse_transform(frame);
    for (std::size_t k = 0; k < l; ++k) {
      if (frame.mask[k]) continue;
      out[slots[k]] = restored[k];
      out.present[index_of(slots[k])] = true;
      generated[index_of(slots[k])] = true;
    }
  }
}

std::vector<double> interpolate_frame(const PartFrame& frame, Method method) {
  const auto run = [&](const std::vector<double>& axis) {
    const SeriesWithGaps series{axis, frame.mask};
    return method == Method::Pchip ? pchip_impute(series) : makima_impute(series);
  };
  std::vector<double> out = run(frame.nx);
  const std::vector<double> ys = run(frame.ny);
  out.insert(out.end(), ys.begin(), ys.end());
  return out;
}

}  // namespace

EvalScale eval_scale(std::span<const Pose18> truth) {
  bool any = false;
  EvalScale scale;
  for (const Pose18& pose : truth) {
    for (std::size_t k = 0; k < kNumKeypoints; ++k) {
      if (!pose.present[k]) continue;
      const Point& p = pose.points[k];
      if (!any) {
        scale = {{p.x, p.x}, {p.y, p.y}};
        any = true;
        continue;
      }
      scale.x = {std::min(scale.x.min, p.x), std::max(scale.x.max, p.x)};
      scale.y = {std::min(scale.y.min, p.y), std::max(scale.y.max, p.y)};
    }
  }
  if (!any || !(scale.x.max > scale.x.min) || !(scale.y.max > scale.y.min)) {
    throw Error(ErrorKind::NoScale, "ground truth spans no extent on some axis");
  }
  return scale;
}

double unified_rmse(std::span<const Pose18> truth, std::span<const Pose18> imputed,
                    std::span<const GeneratedFlags> generated) {
  if (truth.size() != imputed.size() || truth.size() != generated.size()) {
    throw Error(ErrorKind::Shape, "unified_rmse: set sizes differ");
  }
  std::size_t entries = 0;
  for (const GeneratedFlags& flags : generated) entries += static_cast<std::size_t>(std::count(flags.begin(), flags.end(), true));
  if (entries == 0) throw Error(ErrorKind::UndefinedMetric, "no generated entries to score");

  const EvalScale scale = eval_scale(truth);
  const double wx = scale.x.max - scale.x.min;
  const double wy = scale.y.max - scale.y.min;
  double total = 0.0;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    for (std::size_t k = 0; k < kNumKeypoints; ++k) {
      if (!generated[i][k]) continue;
      const double ex = (truth[i].points[k].x - imputed[i].points[k].x) / wx;
      const double ey = (truth[i].points[k].y - imputed[i].points[k].y) / wy;
      total += ex * ex + ey * ey;
    }
  }
  return std::sqrt(total / static_cast<double>(2 * entries));
}

LatencyStats summarize_latency(std::vector<double> seconds) {
  LatencyStats stats;
  stats.calls = seconds.size();
  if (seconds.empty()) return stats;
  std::sort(seconds.begin(), seconds.end());
  stats.mean = std::accumulate(seconds.begin(), seconds.end(), 0.0) / static_cast<double>(seconds.size());
  const std::size_t n = seconds.size();
  stats.median = n % 2 == 1 ? seconds[n / 2] : 0.5 * (seconds[n / 2 - 1] + seconds[n / 2]);
  // Nearest-rank percentile.
  const auto rank = static_cast<std::size_t>(std::ceil(0.99 * static_cast<double>(n)));
  stats.p99 = seconds[std::clamp<std::size_t>(rank, 1, n) - 1];
  return stats;
}

LatencyStats latency_bench(const PartModels& models, std::span<const Pose18> poses, std::size_t iters,
                           const ImputeOptions& options, std::uint64_t seed) {
  if (poses.empty()) throw Error(ErrorKind::Config, "latency_bench: no poses");
  if (iters == 0) throw Error(ErrorKind::Config, "latency_bench: iters must be >= 1");

  RngStream rng(seed);
  const std::size_t timed = iters * poses.size();
  const std::size_t warmup = (timed + 9) / 10;
  for (std::size_t i = 0; i < warmup; ++i) {
    const ImputeResult r = impute_pose(models, poses[i % poses.size()], options, rng);
    (void)r;
  }

  std::vector<double> seconds;
  seconds.reserve(timed);
  for (std::size_t it = 0; it < iters; ++it) {
    for (const Pose18& pose : poses) {
      const auto start = Clock::now();
      const ImputeResult r = impute_pose(models, pose, options, rng);
      const auto stop = Clock::now();
      (void)r;
      seconds.push_back(std::chrono::duration<double>(stop - start).count());
    }
  }
  LatencyStats stats = summarize_latency(std::move(seconds));
  stats.warmup_calls = warmup;
  return stats;
}

std::vector<SynthSample> synth_samples(std::size_t n, std::uint64_t seed) {
  if (n == 0) throw Error(ErrorKind::Config, "synth: n must be >= 1");
  RngStream rng(seed);
  std::vector<SynthSample> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) out.push_back(synth_one(rng));
  return out;
}

std::vector<Pose18> synth_poses(std::size_t n, std::uint64_t seed) {
  std::vector<Pose18> out;
  out.reserve(n);
  for (SynthSample& s : synth_samples(n, seed)) out.push_back(s.pose);
  return out;
}

std::string method_name(Method method) {
  switch (method) {
    case Method::SdrGain: return "sdr-gain";
    case Method::Pchip: return "pchip";
    case Method::Makima: return "makima";
    case Method::Knn: return "knn";
  }
  return "unknown";
}

Method parse_method(const std::string& name) {
  for (Method m : {Method::SdrGain, Method::Pchip, Method::Makima, Method::Knn}) {
    if (method_name(m) == name) return m;
  }
  throw Error(ErrorKind::Config, "unknown method '" + name + "'");
}

std::vector<Pose18> mask_poses(std::span<const Pose18> truth, double p_m, std::uint64_t seed) {
  const RngStream root(seed);
  std::vector<Pose18> masked;
  masked.reserve(truth.size());
  for (std::size_t i = 0; i < truth.size(); ++i) {
    RngStream rng = root.split(i);
    Pose18 pose = truth[i];
    for (PartKind part : {PartKind::Head, PartKind::Body}) {
      const auto slots = part_slots(part);
      std::vector<double> m;
      do {
        m = draw_mask(slots.size(), p_m, rng);
      } while (std::count(m.begin(), m.begin() + static_cast<std::ptrdiff_t>(slots.size()), 1.0) < 2);
      for (std::size_t k = 0; k < slots.size(); ++k) pose.present[index_of(slots[k])] = m[k] == 1.0;
    }
    masked.push_back(pose);
  }
  return masked;
}

MethodRun run_method(Method method, const PartModels& models, std::span<const Pose18> masked,
                     std::span<const Pose18> truth, const CompareConfig& cfg) {
  MethodRun run;
  run.imputed.resize(masked.size());
  run.generated.resize(masked.size());
  run.seconds.resize(masked.size());
  const double margin = cfg.impute.margin;

  // k-NN reference vectors are prepared before any timing starts.
  std::vector<std::vector<double>> ref_head;
  std::vector<std::vector<double>> ref_body;
  const bool leave_one_out = cfg.knn_reference.empty();
  if (method == Method::Knn) {
    const std::span<const Pose18> source = leave_one_out ? truth : std::span<const Pose18>(cfg.knn_reference);
    for (const Pose18& pose : source) {
      ref_head.push_back(stacked_truth(pose, PartKind::Head));
      ref_body.push_back(stacked_truth(pose, PartKind::Body));
    }
  }

  const RngStream noise_root = RngStream(cfg.seed).split(0x6e6f697365ULL);
  for (std::size_t i = 0; i < masked.size(); ++i) {
    std::vector<std::vector<double>> loo_head;
    std::vector<std::vector<double>> loo_body;
    if (method == Method::Knn && leave_one_out) {
      loo_head = ref_head;
      loo_body = ref_body;
      loo_head.erase(loo_head.begin() + static_cast<std::ptrdiff_t>(i));
      loo_body.erase(loo_body.begin() + static_cast<std::ptrdiff_t>(i));
    }
    const auto& head_set = leave_one_out ? loo_head : ref_head;
    const auto& body_set = leave_one_out ? loo_body : ref_body;

    RngStream rng = noise_root.split(i);
    const auto start = Clock::now();
    switch (method) {
      case Method::SdrGain: {
        ImputeResult r = impute_pose(models, masked[i], cfg.impute, rng);
        if (!r.failures.empty()) throw Error(ErrorKind::PartUnanchored, r.failures.front().message);
        run.imputed[i] = r.pose;
        run.generated[i] = r.generated;
        break;
      }
      case Method::Pchip:
      case Method::Makima:
        complete_parts(masked[i], margin, run.imputed[i], run.generated[i],
                       [&](const PartFrame& frame) { return interpolate_frame(frame, method); });
        break;
      case Method::Knn:
        complete_parts(masked[i], margin, run.imputed[i], run.generated[i], [&](const PartFrame& frame) {
          const auto& reference = frame.part == PartKind::Head ? head_set : body_set;
          return knn_impute(reference, frame.stacked(), mask_from_presence(frame), cfg.knn_k);
        });
        break;
    }
    run.seconds[i] = std::chrono::duration<double>(Clock::now() - start).count();
  }
  return run;
}

EvalReport compare_report(const PartModels& models, std::span<const Pose18> data, const CompareConfig& cfg) {
  if (data.empty()) throw Error(ErrorKind::Data, "evaluation set is empty");
  for (std::size_t i = 0; i < data.size(); ++i) {
    if (!validate_pose(data[i]).complete) {
      throw Error(ErrorKind::Data, "evaluation pose " + std::to_string(i) + " is not complete");
    }
  }
  const std::vector<Pose18> masked = mask_poses(data, cfg.p_m, cfg.seed);

  EvalReport report;
  report.n_poses = data.size();
  report.p_m = cfg.p_m;
  report.seed = cfg.seed;
  report.knn_k = cfg.knn_k;
  report.margin = cfg.impute.margin;
  report.noise = cfg.impute.noise == NoiseMode::Nearest ? "nearest" : "random";
  for (Method method : cfg.methods) {
    MethodRun run = run_method(method, models, masked, data, cfg);
    MethodReport entry;
    entry.rmse = unified_rmse(data, run.imputed, run.generated);
    for (const GeneratedFlags& flags : run.generated) {
      entry.n_imputed_entries += 2 * static_cast<std::size_t>(std::count(flags.begin(), flags.end(), true));
    }
    entry.latency = summarize_latency(std::move(run.seconds));
    report.methods[method_name(method)] = entry;
  }
  return report;
}

std::string report_to_json(const EvalReport& report) {
  nlohmann::json methods = nlohmann::json::object();
  for (const auto& [name, entry] : report.methods) {
    methods[name] = {
        {"rmse", entry.rmse},
        {"n_imputed_entries", entry.n_imputed_entries},
        {"latency_seconds",
         {{"mean", entry.latency.mean}, {"median", entry.latency.median}, {"p99", entry.latency.p99},
          {"calls", entry.latency.calls}}},
    };
  }
  const nlohmann::json doc = {
      {"methods", std::move(methods)},
      {"n_poses", report.n_poses},
      {"config",
       {{"p_m", report.p_m}, {"seed", report.seed}, {"knn_k", report.knn_k}, {"margin", report.margin},
        {"noise", report.noise}}},
      {"rmse_scope", "generated coordinates only, unified per-axis min-max scale of ground truth"},
      {"timing_scope", "full per-pose path: transform, imputation, inverse transform; single thread"},
  };
  return doc.dump(2) + "\n";
}

std::string report_to_csv(const EvalReport& report) {
  std::ostringstream out;
  out << "method,rmse,n_imputed_entries,mean_s,median_s,p99_s\n";
  for (const auto& [name, entry] : report.methods) {
    out << name << ',' << detail::format_double(entry.rmse) << ',' << entry.n_imputed_entries << ','
        << detail::format_double(entry.latency.mean) << ',' << detail::format_double(entry.latency.median) << ','
        << detail::format_double(entry.latency.p99) << '\n';
  }
  return out.str();
}

}  // namespace sdrgain
