#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <random>

#include "oracles/gradcheck.hpp"
#include "oracles/mlp_oracle.hpp"
#include "oracles/poses.hpp"
#include "sdrgain/error.hpp"
#include "sdrgain/evalbench.hpp"
#include "sdrgain/gain.hpp"

using namespace sdrgain;
using Vec = std::vector<double>;

namespace {

ErrorKind kind_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.kind();
  }
  ADD_FAILURE() << "no sdrgain::Error thrown";
  return ErrorKind::Io;
}

MlpParams random_net(std::size_t l, bool residual, std::uint64_t seed) {
  RngStream rng(seed);
  return init_mlp({l, residual}, rng);
}

PartModels random_models(std::uint64_t seed) {
  PartModels models;
  models.head = random_net(5, false, seed);
  models.body = random_net(13, true, seed + 1);
  return models;
}

bool same_bits(double a, double b) { return std::memcmp(&a, &b, sizeof a) == 0; }

}  // namespace

TEST(GeneratorImpute, ZeroNetworkGivesHalf) {
  const MlpParams g = zero_mlp({5, false});
  const Vec ig = generator_impute(g, Vec(10, 0.3), Vec(10, 1.0));
  EXPECT_EQ(ig, Vec(10, 0.5));
}

TEST(GeneratorImpute, PureAndMatchesOracle) {
  const MlpParams g = random_net(13, true, 1);
  RngStream rng(1);
  const Vec is = rng.uniform_vector(26);
  const Vec m = draw_mask(13, 0.3, rng);
  const Vec a = generator_impute(g, is, m);
  EXPECT_EQ(a, generator_impute(g, is, m));
  Vec input = is;
  input.insert(input.end(), m.begin(), m.end());
  const Vec want = oracle::mlp_forward(g, input);
  for (std::size_t k = 0; k < a.size(); ++k) EXPECT_NEAR(a[k], want[k], 1e-12);
  EXPECT_THROW(generator_impute(g, is, Vec(25, 1.0)), Error);
}

TEST(Splice, Examples) {
  EXPECT_EQ(splice(Vec{0.3, 0.7}, Vec{0.1, 0.2}, Vec{1, 0}), (Vec{0.3, 0.2}));
  EXPECT_EQ(splice(Vec{0.3, 0.7}, Vec{0.1, 0.2}, Vec{1, 1}), (Vec{0.3, 0.7}));
  EXPECT_EQ(splice(Vec{0.3, 0.7}, Vec{0.1, 0.2}, Vec{0, 0}), (Vec{0.1, 0.2}));
  EXPECT_THROW(splice(Vec{0.3}, Vec{0.1, 0.2}, Vec{0, 0}), Error);
}

TEST(Discriminate, ZeroNetworkAndOracle) {
  EXPECT_EQ(discriminate(zero_mlp({5, false}), Vec(10, 0.2), Vec(10, 1.0)), Vec(10, 0.5));
  const MlpParams d = random_net(5, false, 2);
  RngStream rng(2);
  const Vec i = rng.uniform_vector(10);
  const Vec h = draw_hint(draw_mask(5, 0.2, rng), 0.9, rng);
  const Vec e = discriminate(d, i, h);
  EXPECT_EQ(e, discriminate(d, i, h));
  Vec input = i;
  input.insert(input.end(), h.begin(), h.end());
  const Vec want = oracle::mlp_forward(d, input);
  for (std::size_t k = 0; k < e.size(); ++k) EXPECT_NEAR(e[k], want[k], 1e-12);
}

TEST(LossD, Examples) {
  const ClampedLoss half = loss_d(Vec{0.5, 0.5}, Vec{1, 0});
  EXPECT_NEAR(half.value, std::log(2.0), 1e-12);
  EXPECT_FALSE(half.saturated);
  const ClampedLoss perfect = loss_d(Vec{1, 0, 1, 0}, Vec{1, 0, 1, 0});
  EXPECT_GE(perfect.value, 0.0);
  EXPECT_LE(perfect.value, 1e-11);
  EXPECT_TRUE(perfect.saturated);
  const ClampedLoss wrong = loss_d(Vec{0, 1}, Vec{1, 0});
  EXPECT_TRUE(std::isfinite(wrong.value));
  EXPECT_NEAR(wrong.value, -std::log(1e-12), 1e-4);
}

TEST(LossM, Examples) {
  EXPECT_NEAR(loss_m(Vec{0.5, 0.8}, Vec{1, 0}).value, -0.5 * std::log(0.8), 1e-12);
  EXPECT_NEAR(loss_m(Vec{0.5, 0.8}, Vec{1, 0}).value, 0.111572, 1e-6);
  EXPECT_EQ(loss_m(Vec{0.1, 0.9}, Vec{1, 1}).value, 0.0);
  EXPECT_LE(loss_m(Vec{0.3, 1.0, 0.3, 1.0}, Vec{1, 0, 1, 0}).value, 1e-11);
}

TEST(HuberMasked, Examples) {
  EXPECT_DOUBLE_EQ(huber_masked(Vec{1.0, 0.0}, Vec{0.5, 0.9}, Vec{1, 0}, 0.6), 0.125);
  EXPECT_DOUBLE_EQ(huber_masked(Vec{1.0}, Vec{0.0}, Vec{1}, 0.6), 0.42);
  EXPECT_EQ(huber_masked(Vec{1.0, 0.0}, Vec{0.5, 0.9}, Vec{0, 0}, 0.6), 0.0);
  // A masked-out element on the linear branch contributes nothing.
  EXPECT_DOUBLE_EQ(huber_masked(Vec{0.2, 0.0}, Vec{0.0, 5.0}, Vec{1, 0}, 0.6), 0.02);
  EXPECT_THROW(huber_masked(Vec{1.0}, Vec{0.0}, Vec{1}, 0.0), Error);
}

TEST(MseMasked, Example) {
  EXPECT_DOUBLE_EQ(mse_masked(Vec{1.0, 0.0, 0.5}, Vec{0.5, 0.9, 0.25}, Vec{1, 0, 1}), (0.25 + 0.0625) / 2);
}

TEST(LossG, Composition) {
  MlpParams g = zero_mlp({1, false});
  g.layers[0].weight(0, 0) = 1.0;
  g.layers[1].weight(0, 0) = -2.0;
  g.layers[2].weight(0, 0) = 0.5;
  const TrainConfig cfg = default_head_config();
  const GeneratorLoss loss = loss_g(Vec{1.0, 0.0}, Vec{0.5, 0.9}, Vec{1, 0}, Vec{0.5, 0.8}, g, cfg);
  EXPECT_DOUBLE_EQ(loss.reconstruction, 0.125);
  EXPECT_EQ(loss.penalty, 3.5);
  EXPECT_NEAR(loss.total, 1.365072, 1e-6);
  EXPECT_NEAR(loss.total, 10 * 0.125 - 0.5 * std::log(0.8) + 0.001 * 3.5, 1e-14);

  TrainConfig bare = cfg;
  bare.alpha = 0.0;
  bare.lambda = 0.0;
  const GeneratorLoss only_m = loss_g(Vec{1.0, 0.0}, Vec{0.5, 0.9}, Vec{1, 0}, Vec{0.5, 0.8}, g, bare);
  EXPECT_EQ(only_m.total, loss_m(Vec{0.5, 0.8}, Vec{1, 0}).value);

  TrainConfig mse = cfg;
  mse.loss_kind = LossKind::Mse;
  EXPECT_DOUBLE_EQ(loss_g(Vec{1.0, 0.0}, Vec{0.5, 0.9}, Vec{1, 0}, Vec{0.5, 0.8}, g, mse).reconstruction, 0.25);
}

// Batched objectives agree with the per-sample loss functions.
TEST(Objectives, MatchPerSampleLosses) {
  RngStream rng(3);
  const MlpParams g = random_net(5, false, 30);
  const MlpParams d = random_net(5, false, 31);
  const Minibatch b = gradcheck::random_batch(5, 6, rng);
  const TrainConfig cfg = default_head_config();
  double want_d = 0.0;
  double want_g = 0.0;
  for (Eigen::Index c = 0; c < b.ns.cols(); ++c) {
    const auto col = [&](const Eigen::MatrixXd& mat) {
      const Eigen::VectorXd v = mat.col(c);
      return Vec(v.data(), v.data() + v.size());
    };
    const Vec ig = generator_impute(g, col(b.is), col(b.m));
    const Vec e = discriminate(d, splice(col(b.ns), ig, col(b.m)), col(b.hint));
    want_d += loss_d(e, col(b.m)).value;
    want_g += loss_g(col(b.is), ig, col(b.m), e, g, cfg).total;
  }
  const auto samples = static_cast<double>(b.ns.cols());
  EXPECT_NEAR(discriminator_objective(g, d, b, nullptr), want_d / samples, 1e-12);
  EXPECT_NEAR(generator_objective(g, d, b, cfg, nullptr).total, want_g / samples, 1e-12);
}

TEST(Objectives, GradientsMatchCentralDifferences) {
  std::mt19937_64 gen(4);
  RngStream rng(4);
  for (int i = 0; i < 8; ++i) {
    const std::size_t l = i % 2 ? 13 : 5;
    const bool residual = (i / 2) % 2 == 1;
    TrainConfig cfg = residual ? default_body_config() : default_head_config();
    if (i >= 4) cfg.loss_kind = LossKind::Mse;
    MlpParams g = random_net(l, residual, 40 + i);
    MlpParams d = random_net(l, residual, 60 + i);
    const Minibatch b = gradcheck::random_batch(l, 3, rng);
    const auto pattern = [&] { return gradcheck::gain_pattern(g, d, b); };

    MlpGrads dg;
    discriminator_objective(g, d, b, &dg);
    const auto rd = gradcheck::check(
        d, dg, [&] { return discriminator_objective(g, d, b, nullptr); }, pattern, gen, 5, false);
    EXPECT_LT(rd.max_rel, 1e-4) << "D instance " << i;
    EXPECT_GT(rd.checked, 30);

    MlpGrads gg;
    generator_objective(g, d, b, cfg, &gg);
    const auto rg = gradcheck::check(
        g, gg, [&] { return generator_objective(g, d, b, cfg, nullptr).total; }, pattern, gen, 5, true);
    EXPECT_LT(rg.max_rel, 1e-4) << "G instance " << i;
    EXPECT_GT(rg.checked, 30);
  }
}

TEST(TrainStep, DiscriminatorUpdatedBeforeGenerator) {
  RngStream rng(5);
  MlpParams g = random_net(5, false, 70);
  MlpParams d = random_net(5, false, 71);
  const Minibatch b = gradcheck::random_batch(5, 4, rng);
  const TrainConfig cfg = default_head_config();

  MlpParams d_ref = d;
  MlpGrads dg;
  discriminator_objective(g, d_ref, b, &dg);
  sgd_step(d_ref, dg, cfg.learning_rate);
  MlpParams g_ref = g;
  MlpGrads gg;
  generator_objective(g_ref, d_ref, b, cfg, &gg);
  sgd_step(g_ref, gg, cfg.learning_rate);

  train_step(g, d, b, cfg);
  for (std::size_t j = 0; j < 9; ++j) {
    EXPECT_EQ(d.layers[j].weight, d_ref.layers[j].weight);
    EXPECT_EQ(g.layers[j].weight, g_ref.layers[j].weight);
  }
}

TEST(Train, OneEpochOnOneBatchIsOneStepPerPart) {
  const auto poses = synth_poses(128, 3);
  for (PartKind part : {PartKind::Head, PartKind::Body}) {
    TrainConfig cfg = part == PartKind::Head ? default_head_config() : default_body_config();
    cfg.epochs = 1;
    const PartTrainResult r = train_part(part, part_training_matrix(poses, part), cfg);
    EXPECT_EQ(r.discriminator_steps, 1);
    EXPECT_EQ(r.generator_steps, 1);
    ASSERT_EQ(r.history.size(), 1u);
  }
  // The short final batch is kept.
  TrainConfig cfg = default_head_config();
  cfg.epochs = 2;
  const auto more = synth_poses(130, 3);
  const PartTrainResult r = train_part(PartKind::Head, part_training_matrix(more, PartKind::Head), cfg);
  EXPECT_EQ(r.generator_steps, 4);
}

TEST(Train, DeterministicForSeed) {
  const auto poses = synth_poses(150, 4);
  TrainConfig h = default_head_config();
  TrainConfig b = default_body_config();
  h.epochs = b.epochs = 3;
  h.seed = b.seed = 17;
  const TrainOutput x = train(poses, h, b);
  const TrainOutput y = train(poses, h, b);
  for (std::size_t j = 0; j < 9; ++j) {
    EXPECT_EQ(x.models.head.layers[j].weight, y.models.head.layers[j].weight);
    EXPECT_EQ(x.models.body.layers[j].weight, y.models.body.layers[j].weight);
    EXPECT_EQ(x.models.body.layers[j].bias, y.models.body.layers[j].bias);
  }
  ASSERT_EQ(x.history.head.size(), 3u);
  for (std::size_t e = 0; e < 3; ++e) {
    EXPECT_TRUE(same_bits(x.history.body[e].loss_g, y.history.body[e].loss_g));
    EXPECT_TRUE(same_bits(x.history.head[e].loss_d, y.history.head[e].loss_d));
    EXPECT_TRUE(std::isfinite(x.history.body[e].loss_m));
  }
  EXPECT_TRUE(x.models.body.arch.residual);
  EXPECT_FALSE(x.models.head.arch.residual);

  h.seed = 18;
  const TrainOutput z = train(poses, h, b);
  EXPECT_NE(z.models.head.layers[0].weight, x.models.head.layers[0].weight);
}

TEST(Train, RejectsBadData) {
  auto poses = synth_poses(130, 5);
  TrainConfig cfg = default_head_config();
  cfg.epochs = 1;
  EXPECT_EQ(kind_of([&] { train(std::span(poses).first(100), cfg, cfg); }), ErrorKind::Data);
  poses[7].present[3] = false;
  EXPECT_EQ(kind_of([&] { train(poses, cfg, cfg); }), ErrorKind::Data);
  poses[7].present[3] = true;
  cfg.p_m = 1.5;
  EXPECT_EQ(kind_of([&] { train(poses, cfg, cfg); }), ErrorKind::Config);
}

TEST(Train, NonFiniteInputIsDivergence) {
  Eigen::MatrixXd data = part_training_matrix(synth_poses(10, 6), PartKind::Head);
  data(0, 3) = std::numeric_limits<double>::infinity();
  TrainConfig cfg = default_head_config();
  cfg.epochs = 2;
  cfg.batch_size = 10;
  cfg.p_m = 1e-9;  // keep the bad entry observed
  try {
    train_part(PartKind::Head, data, cfg);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::Divergence);
    EXPECT_NE(std::string(e.what()).find("epoch 0"), std::string::npos);
  }
}

TEST(Train, HistoryCsv) {
  TrainHistory h;
  h.head.push_back({0, 0.5, 1.25, 0.125, 0.25, 0.01});
  h.body.push_back({0, 0.75, 2.0, 0.1, 0.3, 0.02});
  EXPECT_EQ(history_to_csv(h),
            "part,epoch,L_D,L_G,L_Huber,L_M,seconds\n"
            "head,0,0.5,1.25,0.125,0.25,0.01\n"
            "body,0,0.75,2,0.1,0.3,0.02\n");
}

TEST(ImputePose, CompletePoseUnchanged) {
  const PartModels models = random_models(80);
  const Pose18 pose = synth_poses(1, 7)[0];
  RngStream rng(0);
  const ImputeResult r = impute_pose(models, pose, {}, rng);
  EXPECT_EQ(r.pose, pose);
  for (bool flag : r.generated) EXPECT_FALSE(flag);
  EXPECT_TRUE(r.failures.empty());
}

TEST(ImputePose, MissingArmKeepsOtherKeypointsBitExact) {
  const PartModels models = random_models(81);
  const Pose18 truth = synth_poses(1, 8)[0];
  Pose18 pose = truth;
  pose.present[index_of(KeypointId::RElbow)] = false;
  pose.present[index_of(KeypointId::RWrist)] = false;
  RngStream rng(0);
  const ImputeResult r = impute_pose(models, pose, {}, rng);
  EXPECT_TRUE(validate_pose(r.pose).complete);
  int generated = 0;
  for (std::size_t k = 0; k < 18; ++k) {
    generated += r.generated[k];
    if (!r.generated[k]) {
      EXPECT_TRUE(same_bits(r.pose.points[k].x, truth.points[k].x));
      EXPECT_TRUE(same_bits(r.pose.points[k].y, truth.points[k].y));
    }
  }
  EXPECT_EQ(generated, 2);
  EXPECT_TRUE(r.generated[index_of(KeypointId::RElbow)]);
}

TEST(ImputePose, UnanchoredHeadStillCompletesBody) {
  const PartModels models = random_models(82);
  Pose18 pose = synth_poses(1, 9)[0];
  for (KeypointId id : kHeadSlots) pose.present[index_of(id)] = false;
  pose.present[index_of(KeypointId::LKnee)] = false;
  for (NoiseMode noise : {NoiseMode::Uniform, NoiseMode::Nearest}) {
    RngStream rng(0);
    const ImputeResult r = impute_pose(models, pose, {noise, 0.2}, rng);
    ASSERT_EQ(r.failures.size(), 1u);
    EXPECT_EQ(r.failures[0].part, PartKind::Head);
    EXPECT_NE(r.failures[0].message.find("head"), std::string::npos);
    EXPECT_TRUE(r.pose.has(KeypointId::LKnee));
    EXPECT_FALSE(r.pose.has(KeypointId::Nose));
  }
}

TEST(ImputePose, ObservedPreservedAndGeneratedInsideMarginBox) {
  const PartModels models = random_models(83);
  std::mt19937_64 gen(10);
  RngStream rng(10);
  for (int i = 0; i < 300; ++i) {
    const Pose18 truth = testutil::random_pose(gen, i % 2 == 0);
    Pose18 pose = truth;
    for (std::size_t k = 0; k < 18; ++k) pose.present[k] = rng.uniform01() > 0.3;
    for (PartKind part : {PartKind::Head, PartKind::Body}) {
      pose.present[index_of(part_slots(part)[rng.below(part_length(part))])] = true;
    }
    const ImputeOptions options{i % 3 == 0 ? NoiseMode::Nearest : NoiseMode::Uniform, 0.2};
    const ImputeResult r = impute_pose(models, pose, options, rng);
    EXPECT_TRUE(r.failures.empty());
    for (std::size_t k = 0; k < 18; ++k) {
      EXPECT_TRUE(r.pose.present[k]);
      EXPECT_EQ(r.generated[k], !pose.present[k]);
      if (pose.present[k]) {
        EXPECT_TRUE(same_bits(r.pose.points[k].x, truth.points[k].x));
        EXPECT_TRUE(same_bits(r.pose.points[k].y, truth.points[k].y));
      }
    }
    for (PartKind part : {PartKind::Head, PartKind::Body}) {
      const PartFrame frame = forward_transform(pose, part, 0.2);
      RngStream local(i);
      const Vec filled = impute_frame(models.for_part(part), frame, options.noise, local);
      for (std::size_t k = 0; k < frame.length(); ++k) {
        if (frame.mask[k]) continue;
        EXPECT_GT(filled[k], 0.0);
        EXPECT_LT(filled[k], 1.0);
        EXPECT_GT(filled[frame.length() + k], 0.0);
        EXPECT_LT(filled[frame.length() + k], 1.0);
      }
    }
  }
}

TEST(ImputePose, WrongGeneratorLengthIsShapeError) {
  PartModels models = random_models(84);
  std::swap(models.head, models.body);
  Pose18 pose = synth_poses(1, 11)[0];
  pose.present[0] = false;
  RngStream rng(0);
  EXPECT_EQ(kind_of([&] { impute_pose(models, pose, {}, rng); }), ErrorKind::Shape);
}
