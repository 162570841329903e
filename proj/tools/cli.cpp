#include "cli.hpp"

#include <algorithm>
#include <filesystem>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "sdrgain/checkpoint.hpp"
#include "sdrgain/evalbench.hpp"
#include "sdrgain/gain.hpp"
#include "sdrgain/io.hpp"

namespace sdrgain::cli {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

constexpr const char* kHeadFile = "head.json";
constexpr const char* kBodyFile = "body.json";
constexpr const char* kHistoryFile = "history.csv";

struct TrainArgs {
  std::string data;
  std::string format;
  std::string out;
  int epochs = 5000;
  int batch = 128;
  double pm = 0.2;
  double ph = 0.9;
  double delta = 0.6;
  double alpha = 10.0;
  double lambda = 0.001;
  double lr = 0.001;
  std::uint64_t seed = 0;
  std::string head_loss = "huber";
  std::string body_loss = "huber";
  std::string head_residual = "off";
  std::string body_residual = "on";
  int visibility = 1;
  int progress = 0;
};

struct ImputeArgs {
  std::string models;
  std::string input;
  std::string output;
  std::string noise = "random";
  double margin = 0.2;
  std::uint64_t seed = 0;
};

struct EvalArgs {
  std::string models;
  std::string data;
  std::string format;
  double pm = 0.2;
  std::string baselines = "pchip,makima,knn";
  std::size_t knn_k = 5;
  std::uint64_t seed = 0;
  std::string report;
  std::string train;
  std::string train_format = "csv";
  std::string noise = "random";
  double margin = 0.2;
  int visibility = 1;
};

struct BenchArgs {
  std::string models;
  std::string data;
  std::string format = "csv";
  std::size_t iters = 100;
  std::string report;
  double pm = 0.2;
  std::uint64_t seed = 0;
  std::string noise = "random";
  double margin = 0.2;
  int visibility = 1;
};

struct SynthArgs {
  std::size_t n = 0;
  std::uint64_t seed = 0;
  std::string out;
};

const std::vector<std::string> kFormats{"coco", "csv"};
const std::vector<std::string> kOnOff{"on", "off"};
const std::vector<std::string> kLosses{"huber", "mse"};
const std::vector<std::string> kNoise{"random", "nearest"};

NoiseMode noise_mode(const std::string& name) { return name == "nearest" ? NoiseMode::Nearest : NoiseMode::Uniform; }

std::vector<Pose18> complete_poses(std::vector<Pose18> poses) {
  std::erase_if(poses, [](const Pose18& p) { return !validate_pose(p).complete; });
  return poses;
}

// All poses in the file; complete_only drops poses with any missing keypoint.
std::vector<Pose18> load_dataset(const std::string& path, const std::string& format, int visibility,
                                 bool complete_only) {
  if (format == "coco") return load_coco_keypoints(path, visibility, complete_only);
  std::vector<Pose18> poses = load_pose_csv(path).poses;
  return complete_only ? complete_poses(std::move(poses)) : poses;
}

PartModels load_models(const fs::path& dir) {
  PartModels models;
  for (PartKind part : {PartKind::Head, PartKind::Body}) {
    const fs::path path = dir / (part == PartKind::Head ? kHeadFile : kBodyFile);
    Checkpoint ckpt = load_checkpoint(path);
    if (ckpt.meta.part != part || ckpt.params.arch.l != part_length(part)) {
      throw Error(ErrorKind::Shape, path.string() + " holds a " + std::string(part_name(ckpt.meta.part)) +
                                        " model with l=" + std::to_string(ckpt.params.arch.l) + ", expected " +
                                        std::string(part_name(part)) + " with l=" +
                                        std::to_string(part_length(part)));
    }
    if (part == PartKind::Head) {
      models.head = std::move(ckpt.params);
      models.head_config = ckpt.meta.config;
    } else {
      models.body = std::move(ckpt.params);
      models.body_config = ckpt.meta.config;
    }
  }
  return models;
}

json config_json(const TrainConfig& cfg) {
  return {{"epochs", cfg.epochs},         {"batch", cfg.batch_size},   {"pm", cfg.p_m},
          {"ph", cfg.p_h},                {"delta", cfg.delta},        {"alpha", cfg.alpha},
          {"lambda", cfg.lambda},         {"lr", cfg.learning_rate},   {"loss", loss_kind_name(cfg.loss_kind)},
          {"residual", cfg.residual},     {"seed", cfg.seed}};
}

void print_config(std::ostream& out, const std::string& command, json body) {
  body["command"] = command;
  out << "config " << body.dump() << '\n';
}

int run_train(const TrainArgs& a, std::ostream& out) {
  TrainConfig head = default_head_config();
  head.epochs = a.epochs;
  head.batch_size = a.batch;
  head.p_m = a.pm;
  head.p_h = a.ph;
  head.delta = a.delta;
  head.alpha = a.alpha;
  head.lambda = a.lambda;
  head.learning_rate = a.lr;
  head.seed = a.seed;
  TrainConfig body = head;
  head.loss_kind = parse_loss_kind(a.head_loss);
  body.loss_kind = parse_loss_kind(a.body_loss);
  head.residual = a.head_residual == "on";
  body.residual = a.body_residual == "on";

  print_config(out, "train",
               {{"data", a.data},
                {"format", a.format},
                {"out", a.out},
                {"visibility", a.visibility},
                {"head", config_json(head)},
                {"body", config_json(body)}});

  const std::vector<Pose18> poses = load_dataset(a.data, a.format, a.visibility, true);
  if (poses.empty()) throw Error(ErrorKind::Data, a.data + " contains no complete poses");
  out << "training on " << poses.size() << " complete poses\n";

  const int every = a.progress > 0 ? a.progress : std::max(1, a.epochs / 10);
  const TrainOutput trained = train(poses, head, body, [&](PartKind part, const EpochStats& s) {
    if (s.epoch % every != 0 && s.epoch + 1 != a.epochs) return;
    out << part_name(part) << " epoch " << s.epoch << " L_D " << s.loss_d << " L_G " << s.loss_g << " L_Huber "
        << s.loss_huber << " L_M " << s.loss_m << '\n';
  });

  const fs::path dir(a.out);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error(ErrorKind::Io, "cannot create " + dir.string() + ": " + ec.message());
  save_checkpoint(trained.models.head, {PartKind::Head, head, a.seed}, dir / kHeadFile);
  save_checkpoint(trained.models.body, {PartKind::Body, body, a.seed}, dir / kBodyFile);
  write_text_file(dir / kHistoryFile, history_to_csv(trained.history));
  out << "wrote " << (dir / kHeadFile).string() << ", " << (dir / kBodyFile).string() << ", "
      << (dir / kHistoryFile).string() << '\n';
  return kOk;
}

int run_impute(const ImputeArgs& a, std::ostream& out, std::ostream& err) {
  print_config(out, "impute",
               {{"models", a.models},
                {"input", a.input},
                {"output", a.output},
                {"noise", a.noise},
                {"margin", a.margin},
                {"seed", a.seed}});
  const PartModels models = load_models(a.models);
  const std::vector<Pose18> poses = load_pose_csv(a.input).poses;
  const ImputeOptions options{noise_mode(a.noise), a.margin};

  const RngStream root(a.seed);
  std::vector<Pose18> completed;
  std::vector<GeneratedFlags> generated;
  completed.reserve(poses.size());
  generated.reserve(poses.size());
  std::size_t n_generated = 0;
  std::size_t n_failed = 0;
  for (std::size_t i = 0; i < poses.size(); ++i) {
    RngStream rng = root.split(i);
    ImputeResult result = impute_pose(models, poses[i], options, rng);
    for (const PartFailure& f : result.failures) {
      err << "warning: pose " << i << ": " << part_name(f.part) << " left incomplete (" << f.message << ")\n";
    }
    n_failed += result.failures.size();
    n_generated += static_cast<std::size_t>(std::count(result.generated.begin(), result.generated.end(), true));
    completed.push_back(result.pose);
    generated.push_back(result.generated);
  }
  save_pose_csv(completed, a.output, &generated);
  out << "imputed " << poses.size() << " poses, " << n_generated << " keypoints generated, " << n_failed
      << " parts left incomplete\n";
  return kOk;
}

fs::path sibling_with_extension(const fs::path& path, const std::string& ext) {
  fs::path other = path;
  other.replace_extension(ext);
  return other;
}

int run_eval(const EvalArgs& a, std::ostream& out) {
  print_config(out, "eval",
               {{"models", a.models},
                {"data", a.data},
                {"format", a.format},
                {"pm", a.pm},
                {"baselines", a.baselines},
                {"knn_k", a.knn_k},
                {"seed", a.seed},
                {"report", a.report},
                {"train", a.train.empty() ? json(nullptr) : json(a.train)},
                {"train_format", a.train_format},
                {"noise", a.noise},
                {"margin", a.margin},
                {"visibility", a.visibility}});

  CompareConfig cfg;
  cfg.methods = {Method::SdrGain};
  std::stringstream names(a.baselines);
  for (std::string name; std::getline(names, name, ',');) {
    if (name.empty()) continue;
    const Method method = parse_method(name);
    if (method == Method::SdrGain) continue;
    if (std::find(cfg.methods.begin(), cfg.methods.end(), method) == cfg.methods.end()) {
      cfg.methods.push_back(method);
    }
  }
  cfg.knn_k = a.knn_k;
  cfg.p_m = a.pm;
  cfg.seed = a.seed;
  cfg.impute = {noise_mode(a.noise), a.margin};
  if (!a.train.empty()) cfg.knn_reference = load_dataset(a.train, a.train_format, a.visibility, true);

  const PartModels models = load_models(a.models);
  const std::vector<Pose18> data = load_dataset(a.data, a.format, a.visibility, true);
  if (data.empty()) throw Error(ErrorKind::Data, a.data + " contains no complete poses");

  const EvalReport report = compare_report(models, data, cfg);
  const fs::path path(a.report);
  const fs::path json_path = path.extension() == ".csv" ? sibling_with_extension(path, ".json") : path;
  const fs::path csv_path = sibling_with_extension(json_path, ".csv");
  write_text_file(json_path, report_to_json(report));
  const std::string csv = report_to_csv(report);
  write_text_file(csv_path, csv);
  out << csv << "wrote " << json_path.string() << ", " << csv_path.string() << '\n';
  return kOk;
}

int run_bench(const BenchArgs& a, std::ostream& out) {
  print_config(out, "bench",
               {{"models", a.models},
                {"data", a.data},
                {"format", a.format},
                {"iters", a.iters},
                {"report", a.report},
                {"pm", a.pm},
                {"seed", a.seed},
                {"noise", a.noise},
                {"margin", a.margin},
                {"visibility", a.visibility}});
  const PartModels models = load_models(a.models);
  std::vector<Pose18> poses = load_dataset(a.data, a.format, a.visibility, false);
  if (poses.empty()) throw Error(ErrorKind::Data, a.data + " contains no poses");

  // Complete poses would skip both generators, so they are masked first.
  std::vector<Pose18> complete;
  std::vector<std::size_t> where;
  for (std::size_t i = 0; i < poses.size(); ++i) {
    if (validate_pose(poses[i]).complete) {
      complete.push_back(poses[i]);
      where.push_back(i);
    }
  }
  const std::vector<Pose18> masked = mask_poses(complete, a.pm, a.seed);
  for (std::size_t j = 0; j < where.size(); ++j) poses[where[j]] = masked[j];

  const LatencyStats stats = latency_bench(models, poses, a.iters, {noise_mode(a.noise), a.margin}, a.seed);
  const json doc{{"n_poses", poses.size()},  {"iters", a.iters},         {"calls", stats.calls},
                 {"warmup_calls", stats.warmup_calls}, {"mean_s", stats.mean}, {"median_s", stats.median},
                 {"p99_s", stats.p99}};
  write_text_file(a.report, doc.dump(2) + "\n");
  out << "impute_pose latency over " << stats.calls << " calls: mean " << stats.mean << " s, median "
      << stats.median << " s, p99 " << stats.p99 << " s\n";
  return kOk;
}

int run_synth(const SynthArgs& a, std::ostream& out) {
  print_config(out, "synth", {{"n", a.n}, {"seed", a.seed}, {"out", a.out}});
  save_pose_csv(synth_poses(a.n, a.seed), a.out);
  out << "wrote " << a.n << " poses to " << a.out << '\n';
  return kOk;
}

}  // namespace

int exit_code_for(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::Io:
      return kIo;
    case ErrorKind::Parse:
    case ErrorKind::Header:
    case ErrorKind::Domain:
      return kParse;
    case ErrorKind::Data:
    case ErrorKind::InsufficientData:
    case ErrorKind::UndefinedMetric:
    case ErrorKind::PartUnanchored:
      return kData;
    case ErrorKind::Shape:
    case ErrorKind::CacheMismatch:
      return kShape;
    case ErrorKind::Config:
      return kConfig;
    case ErrorKind::Numeric:
    case ErrorKind::Divergence:
      return kNumeric;
    case ErrorKind::Version:
    case ErrorKind::Corrupt:
      return kCheckpoint;
    case ErrorKind::InvalidCoordinate:
    case ErrorKind::DegenerateReference:
    case ErrorKind::UnboundedError:
    case ErrorKind::NoScale:
      return kGeometry;
  }
  return kUnexpected;
}

int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Occluded pedestrian pose completion", "sdrgain"};
  app.require_subcommand(1);

  TrainArgs ta;
  CLI::App* train_cmd = app.add_subcommand("train", "Train head and body models on complete poses");
  train_cmd->add_option("--data", ta.data, "Training poses")->required();
  train_cmd->add_option("--format", ta.format, "Input format")->required()->check(CLI::IsMember(kFormats));
  train_cmd->add_option("--out", ta.out, "Output directory for checkpoints and history")->required();
  train_cmd->add_option("--epochs", ta.epochs)->capture_default_str();
  train_cmd->add_option("--batch", ta.batch)->capture_default_str();
  train_cmd->add_option("--pm", ta.pm, "Miss rate")->capture_default_str();
  train_cmd->add_option("--ph", ta.ph, "Hint rate")->capture_default_str();
  train_cmd->add_option("--delta", ta.delta, "Huber threshold")->capture_default_str();
  train_cmd->add_option("--alpha", ta.alpha)->capture_default_str();
  train_cmd->add_option("--lambda", ta.lambda)->capture_default_str();
  train_cmd->add_option("--lr", ta.lr)->capture_default_str();
  train_cmd->add_option("--seed", ta.seed)->capture_default_str();
  train_cmd->add_option("--head-loss", ta.head_loss)->capture_default_str()->check(CLI::IsMember(kLosses));
  train_cmd->add_option("--body-loss", ta.body_loss)->capture_default_str()->check(CLI::IsMember(kLosses));
  train_cmd->add_option("--head-residual", ta.head_residual)->capture_default_str()->check(CLI::IsMember(kOnOff));
  train_cmd->add_option("--body-residual", ta.body_residual)->capture_default_str()->check(CLI::IsMember(kOnOff));
  train_cmd->add_option("--visibility", ta.visibility, "COCO v threshold for an observed keypoint")
      ->capture_default_str()
      ->check(CLI::Range(1, 2));
  train_cmd->add_option("--progress", ta.progress, "Epochs between progress lines (0: a tenth of --epochs)")
      ->capture_default_str();

  ImputeArgs ia;
  CLI::App* impute_cmd = app.add_subcommand("impute", "Complete the missing keypoints of a pose CSV");
  impute_cmd->add_option("--models", ia.models, "Directory with head.json and body.json")->required();
  impute_cmd->add_option("--input", ia.input, "Pose CSV")->required();
  impute_cmd->add_option("--output", ia.output, "Completed pose CSV with generated flags")->required();
  impute_cmd->add_option("--noise", ia.noise)->capture_default_str()->check(CLI::IsMember(kNoise));
  impute_cmd->add_option("--margin", ia.margin)->capture_default_str();
  impute_cmd->add_option("--seed", ia.seed)->capture_default_str();

  EvalArgs ea;
  CLI::App* eval_cmd = app.add_subcommand("eval", "Compare imputation methods on masked complete poses");
  eval_cmd->add_option("--models", ea.models)->required();
  eval_cmd->add_option("--data", ea.data)->required();
  eval_cmd->add_option("--format", ea.format)->required()->check(CLI::IsMember(kFormats));
  eval_cmd->add_option("--pm", ea.pm)->capture_default_str();
  eval_cmd->add_option("--baselines", ea.baselines, "Comma-separated subset of pchip,makima,knn")
      ->capture_default_str();
  eval_cmd->add_option("--knn-k", ea.knn_k)->capture_default_str();
  eval_cmd->add_option("--seed", ea.seed)->capture_default_str();
  eval_cmd->add_option("--report", ea.report, "JSON report path; a CSV is written beside it")->required();
  eval_cmd->add_option("--train", ea.train, "k-NN reference poses (default: leave-one-out over --data)");
  eval_cmd->add_option("--train-format", ea.train_format)->capture_default_str()->check(CLI::IsMember(kFormats));
  eval_cmd->add_option("--noise", ea.noise)->capture_default_str()->check(CLI::IsMember(kNoise));
  eval_cmd->add_option("--margin", ea.margin)->capture_default_str();
  eval_cmd->add_option("--visibility", ea.visibility)->capture_default_str()->check(CLI::Range(1, 2));

  BenchArgs ba;
  CLI::App* bench_cmd = app.add_subcommand("bench", "Time impute_pose on one thread");
  bench_cmd->add_option("--models", ba.models)->required();
  bench_cmd->add_option("--data", ba.data)->required();
  bench_cmd->add_option("--format", ba.format)->capture_default_str()->check(CLI::IsMember(kFormats));
  bench_cmd->add_option("--iters", ba.iters)->capture_default_str();
  bench_cmd->add_option("--report", ba.report)->required();
  bench_cmd->add_option("--pm", ba.pm, "Miss rate applied to complete poses")->capture_default_str();
  bench_cmd->add_option("--seed", ba.seed)->capture_default_str();
  bench_cmd->add_option("--noise", ba.noise)->capture_default_str()->check(CLI::IsMember(kNoise));
  bench_cmd->add_option("--margin", ba.margin)->capture_default_str();
  bench_cmd->add_option("--visibility", ba.visibility)->capture_default_str()->check(CLI::Range(1, 2));

  SynthArgs sa;
  CLI::App* synth_cmd = app.add_subcommand("synth", "Write synthetic complete pedestrian poses");
  synth_cmd->add_option("--n", sa.n)->required();
  synth_cmd->add_option("--seed", sa.seed)->required();
  synth_cmd->add_option("--out", sa.out)->required();

  try {
    // CLI11 consumes the argument vector back to front.
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == static_cast<int>(CLI::ExitCodes::Success)) {
      app.exit(e, out, err);
      return kOk;
    }
    err << "error: " << e.what() << '\n';
    return kUsage;
  }

  try {
    if (train_cmd->parsed()) return run_train(ta, out);
    if (impute_cmd->parsed()) return run_impute(ia, out, err);
    if (eval_cmd->parsed()) return run_eval(ea, out);
    if (bench_cmd->parsed()) return run_bench(ba, out);
    return run_synth(sa, out);
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return exit_code_for(e.kind());
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kUnexpected;
  }
}

}  // namespace sdrgain::cli
