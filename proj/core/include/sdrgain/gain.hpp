#pragma once

#include <array>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "sdrgain/geometry.hpp"
#include "sdrgain/masking.hpp"
#include "sdrgain/neural.hpp"
#include "sdrgain/pose.hpp"
#include "sdrgain/train_config.hpp"

namespace sdrgain {

/// Probabilities are clamped to [kProbEpsilon, 1 - kProbEpsilon] before logs.
inline constexpr double kProbEpsilon = 1e-12;

struct ClampedLoss {
  double value = 0.0;
  bool saturated = false;  // some probability hit the clamp
};

/// G(IS ‖ M).
std::vector<double> generator_impute(const MlpParams& generator, std::span<const double> is_vec,
                                     std::span<const double> m);
/// Observed entries from ns, the rest from ig.
std::vector<double> splice(std::span<const double> ns, std::span<const double> ig, std::span<const double> m);
/// D(I ‖ H).
std::vector<double> discriminate(const MlpParams& discriminator, std::span<const double> i_vec,
                                 std::span<const double> hint);

/// Mean cross-entropy of e against the mask over all 2l bits.
ClampedLoss loss_d(std::span<const double> e, std::span<const double> m);
/// -(1/2l) Σ (1 - m) log e.
ClampedLoss loss_m(std::span<const double> e, std::span<const double> m);
/// Huber loss over observed entries divided by the observed count (0 if none).
double huber_masked(std::span<const double> is_vec, std::span<const double> ig, std::span<const double> m,
                    double delta);
/// Squared error over observed entries divided by the observed count.
double mse_masked(std::span<const double> is_vec, std::span<const double> ig, std::span<const double> m);

struct GeneratorLoss {
  double total = 0.0;
  double reconstruction = 0.0;  // Huber or MSE term before alpha
  double adversarial = 0.0;     // loss_m
  double penalty = 0.0;         // l1 before lambda
  bool saturated = false;
};

/// alpha * reconstruction + loss_m + lambda * l1(G).
GeneratorLoss loss_g(std::span<const double> is_vec, std::span<const double> ig, std::span<const double> m,
                     std::span<const double> e, const MlpParams& generator, const TrainConfig& cfg);

// ---- batched training internals (exposed for gradient checks) ----------

/// One minibatch; columns are samples, rows are the 2l entries.
struct Minibatch {
  Eigen::MatrixXd ns;
  Eigen::MatrixXd m;
  Eigen::MatrixXd is;
  Eigen::MatrixXd hint;
};

struct StepLosses {
  double loss_d = 0.0;  // batch means
  double loss_g = 0.0;
  double reconstruction = 0.0;
  double loss_m = 0.0;
};

/// Batch mean of loss_d, and its gradient w.r.t. the discriminator.
double discriminator_objective(const MlpParams& generator, const MlpParams& discriminator, const Minibatch& batch,
                               MlpGrads* grads);
/// Batch mean of loss_g (the L1 term enters once), and its
/// gradient w.r.t. the generator with the discriminator frozen.
GeneratorLoss generator_objective(const MlpParams& generator, const MlpParams& discriminator,
                                  const Minibatch& batch, const TrainConfig& cfg, MlpGrads* grads);

/// One D step then one G step on the batch. Returns the batch-mean losses
/// (the G losses use the updated D).
StepLosses train_step(MlpParams& generator, MlpParams& discriminator, const Minibatch& batch,
                      const TrainConfig& cfg);

// ---- training ---------------------------------------------------------

struct EpochStats {
  int epoch = 0;
  double loss_d = 0.0;
  double loss_g = 0.0;
  double loss_huber = 0.0;
  double loss_m = 0.0;
  double seconds = 0.0;
};

struct TrainHistory {
  std::vector<EpochStats> head;
  std::vector<EpochStats> body;
};

struct PartModels {
  MlpParams head;
  MlpParams body;
  TrainConfig head_config = default_head_config();
  TrainConfig body_config = default_body_config();

  const MlpParams& for_part(PartKind part) const { return part == PartKind::Head ? head : body; }
};

struct PartTrainResult {
  MlpParams generator;
  MlpParams discriminator;
  std::vector<EpochStats> history;
  int discriminator_steps = 0;
  int generator_steps = 0;
};

/// Called after every epoch; may be empty.
using EpochCallback = std::function<void(PartKind, const EpochStats&)>;

/// Trains one part's generator/discriminator pair on normalized 2l vectors
/// (columns of `data`).
PartTrainResult train_part(PartKind part, const Eigen::MatrixXd& data, const TrainConfig& cfg,
                           const EpochCallback& on_epoch = {});

/// Normalized training matrix for a part (margin 0), one column per pose.
Eigen::MatrixXd part_training_matrix(std::span<const Pose18> poses, PartKind part);

struct TrainOutput {
  PartModels models;
  TrainHistory history;
};

/// Requires complete poses and at least batch_size of them.
TrainOutput train(std::span<const Pose18> dataset, const TrainConfig& head_cfg, const TrainConfig& body_cfg,
                  const EpochCallback& on_epoch = {});

/// History as CSV: part,epoch,L_D,L_G,L_Huber,L_M,seconds.
std::string history_to_csv(const TrainHistory& history);

// ---- inference ----------------------------------------------------------

struct PartFailure {
  PartKind part;
  std::string message;
};

struct ImputeResult {
  Pose18 pose;
  std::array<bool, kNumKeypoints> generated{};
  /// Parts left incomplete because they had no observed keypoint.
  std::vector<PartFailure> failures;
};

struct ImputeOptions {
  NoiseMode noise = NoiseMode::Uniform;
  double margin = 0.2;
};

/// Completes every anchorable part. Observed keypoints are copied through
/// untouched; parts without missing keypoints skip the generator.
ImputeResult impute_pose(const PartModels& models, const Pose18& pose, const ImputeOptions& options,
                         RngStream& rng);

/// Runs one part's generator on a frame in place; returns the imputed 2l vector.
std::vector<double> impute_frame(const MlpParams& generator, const PartFrame& frame, NoiseMode noise,
                                 RngStream& rng);

}  // namespace sdrgain
