#include "sdrgain/gain.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <sstream>

#include "sdrgain/error.hpp"
#include "text.hpp"

namespace sdrgain {

namespace {

void check_same(std::size_t a, std::size_t b, const char* what) {
  if (a != b) throw Error(ErrorKind::Shape, std::string(what) + ": length mismatch");
}

std::vector<double> concat(std::span<const double> a, std::span<const double> b) {
  std::vector<double> out(a.begin(), a.end());
  out.insert(out.end(), b.begin(), b.end());
  return out;
}

double clamp_prob(double e, bool& saturated) {
  if (e < kProbEpsilon) {
    saturated = true;
    return kProbEpsilon;
  }
  if (e > 1.0 - kProbEpsilon) {
    saturated = true;
    return 1.0 - kProbEpsilon;
  }
  return e;
}

double huber(double err, double delta) {
  const double a = std::abs(err);
  return a <= delta ? 0.5 * err * err : delta * a - 0.5 * delta * delta;
}

double huber_slope(double err, double delta) {
  if (std::abs(err) <= delta) return err;
  return err > 0.0 ? delta : -delta;
}

Eigen::MatrixXd stack_rows(const Eigen::MatrixXd& top, const Eigen::MatrixXd& bottom) {
  Eigen::MatrixXd out(top.rows() + bottom.rows(), top.cols());
  out << top, bottom;
  return out;
}

Eigen::MatrixXd splice_batch(const Minibatch& batch, const Eigen::MatrixXd& ig) {
  return (batch.m.array() * batch.ns.array() + (1.0 - batch.m.array()) * ig.array()).matrix();
}

// Probability clamp mask: 1 where e is inside the clamp (gradient flows).
Eigen::ArrayXXd clamp_pass(const Eigen::MatrixXd& e) {
  return ((e.array() >= kProbEpsilon) && (e.array() <= 1.0 - kProbEpsilon)).cast<double>();
}

struct Reconstruction {
  double sum = 0.0;
  Eigen::MatrixXd grad_ig;  // d(sum)/d(ig)
};

Reconstruction reconstruction_batch(const Minibatch& batch, const Eigen::MatrixXd& ig, const TrainConfig& cfg) {
  Reconstruction rec;
  rec.grad_ig = Eigen::MatrixXd::Zero(ig.rows(), ig.cols());
  for (Eigen::Index c = 0; c < ig.cols(); ++c) {
    const double observed = batch.m.col(c).sum();
    if (observed == 0.0) continue;
    double total = 0.0;
    for (Eigen::Index r = 0; r < ig.rows(); ++r) {
      if (batch.m(r, c) != 1.0) continue;
      const double err = batch.is(r, c) - ig(r, c);
      if (cfg.loss_kind == LossKind::Huber) {
        total += huber(err, cfg.delta);
        rec.grad_ig(r, c) = -huber_slope(err, cfg.delta) / observed;
      } else {
        total += err * err;
        rec.grad_ig(r, c) = -2.0 * err / observed;
      }
    }
    rec.sum += total / observed;
  }
  return rec;
}

void check_batch(const Minibatch& batch, const MlpArch& arch) {
  const auto rows = static_cast<Eigen::Index>(arch.output_width());
  const Eigen::Index cols = batch.ns.cols();
  for (const Eigen::MatrixXd* mat : {&batch.ns, &batch.m, &batch.is, &batch.hint}) {
    if (mat->rows() != rows || mat->cols() != cols) throw Error(ErrorKind::Shape, "minibatch shape mismatch");
  }
}

}  // namespace

std::vector<double> generator_impute(const MlpParams& generator, std::span<const double> is_vec,
                                     std::span<const double> m) {
  check_same(is_vec.size(), m.size(), "generator_impute");
  return forward(generator, concat(is_vec, m));
}

std::vector<double> splice(std::span<const double> ns, std::span<const double> ig, std::span<const double> m) {
  check_same(ns.size(), ig.size(), "splice");
  check_same(ns.size(), m.size(), "splice");
  std::vector<double> out(ns.size());
  for (std::size_t k = 0; k < ns.size(); ++k) out[k] = m[k] == 1.0 ? ns[k] : ig[k];
  return out;
}

std::vector<double> discriminate(const MlpParams& discriminator, std::span<const double> i_vec,
                                 std::span<const double> hint) {
  check_same(i_vec.size(), hint.size(), "discriminate");
  return forward(discriminator, concat(i_vec, hint));
}

ClampedLoss loss_d(std::span<const double> e, std::span<const double> m) {
  check_same(e.size(), m.size(), "loss_d");
  ClampedLoss out;
  if (e.empty()) return out;
  double total = 0.0;
  for (std::size_t k = 0; k < e.size(); ++k) {
    const double p = clamp_prob(e[k], out.saturated);
    total -= m[k] * std::log(p) + (1.0 - m[k]) * std::log(1.0 - p);
  }
  out.value = total / static_cast<double>(e.size());
  return out;
}

ClampedLoss loss_m(std::span<const double> e, std::span<const double> m) {
  check_same(e.size(), m.size(), "loss_m");
  ClampedLoss out;
  if (e.empty()) return out;
  double total = 0.0;
  for (std::size_t k = 0; k < e.size(); ++k) {
    const double p = clamp_prob(e[k], out.saturated);
    total -= (1.0 - m[k]) * std::log(p);
  }
  out.value = total / static_cast<double>(e.size());
  return out;
}

double huber_masked(std::span<const double> is_vec, std::span<const double> ig, std::span<const double> m,
                    double delta) {
  check_same(is_vec.size(), ig.size(), "huber_masked");
  check_same(is_vec.size(), m.size(), "huber_masked");
  if (!(delta > 0.0)) throw Error(ErrorKind::Config, "huber delta must be positive");
  double total = 0.0;
  double observed = 0.0;
  for (std::size_t k = 0; k < m.size(); ++k) {
    // The whole per-element value is masked, including the -δ²/2 offset of
    // the linear branch.
    total += m[k] * huber(is_vec[k] - ig[k], delta);
    observed += m[k];
  }
  return observed == 0.0 ? 0.0 : total / observed;
}

double mse_masked(std::span<const double> is_vec, std::span<const double> ig, std::span<const double> m) {
  check_same(is_vec.size(), ig.size(), "mse_masked");
  check_same(is_vec.size(), m.size(), "mse_masked");
  double total = 0.0;
  double observed = 0.0;
  for (std::size_t k = 0; k < m.size(); ++k) {
    const double err = is_vec[k] - ig[k];
    total += m[k] * err * err;
    observed += m[k];
  }
  return observed == 0.0 ? 0.0 : total / observed;
}

GeneratorLoss loss_g(std::span<const double> is_vec, std::span<const double> ig, std::span<const double> m,
                     std::span<const double> e, const MlpParams& generator, const TrainConfig& cfg) {
  GeneratorLoss out;
  out.reconstruction =
      cfg.loss_kind == LossKind::Huber ? huber_masked(is_vec, ig, m, cfg.delta) : mse_masked(is_vec, ig, m);
  const ClampedLoss adversarial = loss_m(e, m);
  out.adversarial = adversarial.value;
  out.saturated = adversarial.saturated;
  out.penalty = l1_penalty(generator);
  out.total = cfg.alpha * out.reconstruction + out.adversarial + cfg.lambda * out.penalty;
  return out;
}

double discriminator_objective(const MlpParams& generator, const MlpParams& discriminator, const Minibatch& batch,
                               MlpGrads* grads) {
  check_batch(batch, generator.arch);
  // Per-sample loss_d averages over 2l entries; the batch objective then
  // averages over samples.
  const double width = static_cast<double>(batch.m.rows() * batch.m.cols());

  const Eigen::MatrixXd ig = forward(generator, stack_rows(batch.is, batch.m));
  const Eigen::MatrixXd i_vec = splice_batch(batch, ig);

  ForwardCache cache;
  const Eigen::MatrixXd e = forward(discriminator, stack_rows(i_vec, batch.hint), grads ? &cache : nullptr);
  const Eigen::ArrayXXd p = e.array().max(kProbEpsilon).min(1.0 - kProbEpsilon);
  const Eigen::ArrayXXd& m = batch.m.array();
  const double loss = -(m * p.log() + (1.0 - m) * (1.0 - p).log()).sum() / width;

  if (grads) {
    const Eigen::MatrixXd de = ((-m / p + (1.0 - m) / (1.0 - p)) * clamp_pass(e) / width).matrix();
    *grads = backward(discriminator, cache, de).grads;
  }
  return loss;
}

GeneratorLoss generator_objective(const MlpParams& generator, const MlpParams& discriminator,
                                  const Minibatch& batch, const TrainConfig& cfg, MlpGrads* grads) {
  check_batch(batch, generator.arch);
  const double samples = static_cast<double>(batch.m.cols());
  const double width = static_cast<double>(batch.m.rows()) * samples;

  ForwardCache g_cache;
  const Eigen::MatrixXd ig = forward(generator, stack_rows(batch.is, batch.m), grads ? &g_cache : nullptr);
  const Eigen::MatrixXd i_vec = splice_batch(batch, ig);

  ForwardCache d_cache;
  const Eigen::MatrixXd e = forward(discriminator, stack_rows(i_vec, batch.hint), grads ? &d_cache : nullptr);
  const Eigen::ArrayXXd p = e.array().max(kProbEpsilon).min(1.0 - kProbEpsilon);
  const Eigen::ArrayXXd missing = 1.0 - batch.m.array();

  GeneratorLoss out;
  const Reconstruction rec = reconstruction_batch(batch, ig, cfg);
  out.reconstruction = rec.sum / samples;
  out.adversarial = -(missing * p.log()).sum() / width;
  out.saturated = (clamp_pass(e) == 0.0).any();
  out.penalty = l1_penalty(generator);
  out.total = cfg.alpha * out.reconstruction + out.adversarial + cfg.lambda * out.penalty;

  if (grads) {
    const Eigen::MatrixXd de = (-missing / p * clamp_pass(e) / width).matrix();
    const Backprop through_d = backward(discriminator, d_cache, de);
    const Eigen::MatrixXd d_ivec = through_d.input_grad.topRows(batch.m.rows());
    const Eigen::MatrixXd d_ig = cfg.alpha / samples * rec.grad_ig + (d_ivec.array() * missing).matrix();
    *grads = backward(generator, g_cache, d_ig).grads;
    add_l1_subgradient(*grads, generator, cfg.lambda);
  }
  return out;
}

StepLosses train_step(MlpParams& generator, MlpParams& discriminator, const Minibatch& batch,
                      const TrainConfig& cfg) {
  StepLosses losses;
  MlpGrads d_grads;
  losses.loss_d = discriminator_objective(generator, discriminator, batch, &d_grads);
  sgd_step(discriminator, d_grads, cfg.learning_rate);

  MlpGrads g_grads;
  const GeneratorLoss g = generator_objective(generator, discriminator, batch, cfg, &g_grads);
  sgd_step(generator, g_grads, cfg.learning_rate);
  losses.loss_g = g.total;
  losses.reconstruction = g.reconstruction;
  losses.loss_m = g.adversarial;
  return losses;
}

Eigen::MatrixXd part_training_matrix(std::span<const Pose18> poses, PartKind part) {
  const auto width = static_cast<Eigen::Index>(2 * part_length(part));
  Eigen::MatrixXd data(width, static_cast<Eigen::Index>(poses.size()));
  for (std::size_t c = 0; c < poses.size(); ++c) {
    const std::vector<double> ns = forward_transform(poses[c], part, 0.0).stacked();
    data.col(static_cast<Eigen::Index>(c)) = Eigen::Map<const Eigen::VectorXd>(ns.data(), width);
  }
  return data;
}

PartTrainResult train_part(PartKind part, const Eigen::MatrixXd& data, const TrainConfig& cfg,
                           const EpochCallback& on_epoch) {
  cfg.validate();
  const MlpArch arch{part_length(part), cfg.residual};
  if (static_cast<std::size_t>(data.rows()) != arch.output_width()) {
    throw Error(ErrorKind::Shape, "training matrix has the wrong row count for the part");
  }
  if (data.cols() == 0) throw Error(ErrorKind::Data, "empty training set");

  const RngStream root = RngStream(cfg.seed).split(part == PartKind::Head ? 1 : 2);
  RngStream init_rng = root.split(1);
  RngStream shuffle_rng = root.split(2);
  RngStream mask_rng = root.split(3);

  PartTrainResult result;
  result.generator = init_mlp(arch, init_rng);
  result.discriminator = init_mlp(arch, init_rng);

  const auto n = static_cast<std::size_t>(data.cols());
  const auto batch_size = static_cast<std::size_t>(cfg.batch_size);
  const Eigen::Index rows = data.rows();

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    const auto start = std::chrono::steady_clock::now();
    const std::vector<std::size_t> order = permutation(n, shuffle_rng);
    StepLosses totals;
    std::size_t batches = 0;

    for (std::size_t begin = 0; begin < n; begin += batch_size) {
      const std::size_t count = std::min(batch_size, n - begin);
      const auto cols = static_cast<Eigen::Index>(count);
      Minibatch batch{Eigen::MatrixXd(rows, cols), Eigen::MatrixXd(rows, cols), Eigen::MatrixXd(rows, cols),
                      Eigen::MatrixXd(rows, cols)};
      for (std::size_t j = 0; j < count; ++j) {
        const auto c = static_cast<Eigen::Index>(j);
        const Eigen::VectorXd ns = data.col(static_cast<Eigen::Index>(order[begin + j]));
        const MaskSet set = draw_mask_set({ns.data(), static_cast<std::size_t>(ns.size())}, cfg.p_m, cfg.p_h, mask_rng);
        batch.ns.col(c) = ns;
        for (Eigen::Index r = 0; r < rows; ++r) {
          const auto k = static_cast<std::size_t>(r);
          batch.m(r, c) = set.m[k];
          batch.is(r, c) = set.os[k] + set.r[k];
          batch.hint(r, c) = set.hint[k];
        }
      }

      StepLosses step;
      try {
        step = train_step(result.generator, result.discriminator, batch, cfg);
      } catch (const Error& e) {
        if (e.kind() != ErrorKind::Numeric) throw;
        throw Error(ErrorKind::Divergence, std::string(part_name(part)) + " training diverged at epoch " +
                                               std::to_string(epoch) + " (" + e.what() + ")");
      }
      ++result.discriminator_steps;
      ++result.generator_steps;
      ++batches;
      totals.loss_d += step.loss_d;
      totals.loss_g += step.loss_g;
      totals.reconstruction += step.reconstruction;
      totals.loss_m += step.loss_m;
    }

    EpochStats stats;
    stats.epoch = epoch;
    stats.loss_d = totals.loss_d / static_cast<double>(batches);
    stats.loss_g = totals.loss_g / static_cast<double>(batches);
    stats.loss_huber = totals.reconstruction / static_cast<double>(batches);
    stats.loss_m = totals.loss_m / static_cast<double>(batches);
    stats.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (!std::isfinite(stats.loss_d) || !std::isfinite(stats.loss_g) || !std::isfinite(stats.loss_huber) ||
        !std::isfinite(stats.loss_m)) {
      throw Error(ErrorKind::Divergence,
                  std::string(part_name(part)) + " training diverged at epoch " + std::to_string(epoch));
    }
    result.history.push_back(stats);
    if (on_epoch) on_epoch(part, stats);
  }
  return result;
}

TrainOutput train(std::span<const Pose18> dataset, const TrainConfig& head_cfg, const TrainConfig& body_cfg,
                  const EpochCallback& on_epoch) {
  head_cfg.validate();
  body_cfg.validate();
  if (dataset.empty()) throw Error(ErrorKind::Data, "training set is empty");
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    if (!validate_pose(dataset[i]).complete) {
      throw Error(ErrorKind::Data, "training pose " + std::to_string(i) + " is not complete");
    }
  }
  const auto needed = static_cast<std::size_t>(std::max(head_cfg.batch_size, body_cfg.batch_size));
  if (dataset.size() < needed) {
    throw Error(ErrorKind::Data, "training set has " + std::to_string(dataset.size()) +
                                     " poses, fewer than the batch size " + std::to_string(needed));
  }

  TrainOutput out;
  out.models.head_config = head_cfg;
  out.models.body_config = body_cfg;

  PartTrainResult head = train_part(PartKind::Head, part_training_matrix(dataset, PartKind::Head), head_cfg, on_epoch);
  out.models.head = std::move(head.generator);
  out.history.head = std::move(head.history);

  PartTrainResult body = train_part(PartKind::Body, part_training_matrix(dataset, PartKind::Body), body_cfg, on_epoch);
  out.models.body = std::move(body.generator);
  out.history.body = std::move(body.history);
  return out;
}

std::string history_to_csv(const TrainHistory& history) {
  std::ostringstream out;
  out << "part,epoch,L_D,L_G,L_Huber,L_M,seconds\n";
  const auto emit = [&](std::string_view part, const std::vector<EpochStats>& rows) {
    for (const EpochStats& s : rows) {
      out << part << ',' << s.epoch << ',' << detail::format_double(s.loss_d) << ','
          << detail::format_double(s.loss_g) << ',' << detail::format_double(s.loss_huber) << ','
          << detail::format_double(s.loss_m) << ',' << detail::format_double(s.seconds) << '\n';
    }
  };
  emit("head", history.head);
  emit("body", history.body);
  return out.str();
}

std::vector<double> impute_frame(const MlpParams& generator, const PartFrame& frame, NoiseMode noise,
                                 RngStream& rng) {
  if (generator.arch.l != frame.length()) {
    throw Error(ErrorKind::Shape, "generator l=" + std::to_string(generator.arch.l) + " does not match " +
                                      std::string(part_name(frame.part)) + " frame length " +
                                      std::to_string(frame.length()));
  }
  const std::vector<double> m = mask_from_presence(frame);
  const std::vector<double> ns = frame.stacked();
  const std::vector<double> os = mask_observe(ns, m);
  const std::vector<double> r = noise == NoiseMode::Nearest ? noise_fill_nearest(frame, m) : noise_fill(m, rng);
  std::vector<double> is_vec(os.size());
  for (std::size_t k = 0; k < os.size(); ++k) is_vec[k] = os[k] + r[k];
  const std::vector<double> ig = generator_impute(generator, is_vec, m);
  return splice(ns, ig, m);
}

ImputeResult impute_pose(const PartModels& models, const Pose18& pose, const ImputeOptions& options,
                         RngStream& rng) {
  ImputeResult result;
  result.pose = pose;

  for (PartKind part : {PartKind::Head, PartKind::Body}) {
    const auto slots = part_slots(part);
    std::size_t observed = 0;
    for (KeypointId id : slots) observed += pose.has(id) ? 1 : 0;
    if (observed == slots.size()) continue;
    if (observed == 0) {
      result.failures.push_back({part, std::string(part_name(part)) + " has no observed keypoint"});
      continue;
    }

    PartFrame frame = forward_transform(pose, part, options.margin);
    const std::vector<double> filled = impute_frame(models.for_part(part), frame, options.noise, rng);
    const std::size_t l = frame.length();
    frame.nx.assign(filled.begin(), filled.begin() + static_cast<std::ptrdiff_t>(l));
    frame.ny.assign(filled.begin() + static_cast<std::ptrdiff_t>(l), filled.end());
    const std::vector<Point> restored = inverse_transform(frame);

    for (std::size_t k = 0; k < l; ++k) {
      if (frame.mask[k]) continue;
      result.pose[slots[k]] = restored[k];
      result.pose.present[index_of(slots[k])] = true;
      result.generated[index_of(slots[k])] = true;
    }
  }
  return result;
}

}  // namespace sdrgain
