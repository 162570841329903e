#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "oracles/gradcheck.hpp"
#include "oracles/mlp_oracle.hpp"
#include "sdrgain/error.hpp"
#include "sdrgain/neural.hpp"

using namespace sdrgain;

namespace {

std::vector<double> random_input(std::size_t n, RngStream& rng) {
  std::vector<double> v(n);
  for (double& x : v) x = rng.uniform(-1.0, 1.0);
  return v;
}

MlpParams random_params(MlpArch arch, std::uint64_t seed) {
  RngStream rng(seed);
  MlpParams p = init_mlp(arch, rng);
  // Non-zero biases so the bias gradients are exercised.
  for (DenseLayer& layer : p.layers) {
    for (Eigen::Index i = 0; i < layer.bias.size(); ++i) layer.bias(i) = rng.uniform(-0.1, 0.1);
  }
  p.restamp();
  return p;
}

}  // namespace

TEST(MlpArch, Widths) {
  const MlpArch head{5, false};
  EXPECT_EQ(head.input_width(), 20u);
  EXPECT_EQ(head.output_width(), 10u);
  EXPECT_EQ(head.layer_count(), 9u);
  const auto w = MlpArch{13, true}.hidden_widths();
  EXPECT_EQ(w, (std::array<std::size_t, 8>{52, 104, 208, 26, 52, 104, 208, 26}));
  EXPECT_EQ(head.layer_shape(0), (std::pair<std::size_t, std::size_t>{20, 20}));
  EXPECT_EQ(head.layer_shape(8), (std::pair<std::size_t, std::size_t>{10, 10}));
  EXPECT_EQ(w[3], w[7]);
  EXPECT_THROW(head.layer_shape(9), Error);
}

TEST(InitMlp, DeterministicBoundedZeroBias) {
  const MlpArch arch{13, true};
  RngStream a(5);
  RngStream b(5);
  const MlpParams p = init_mlp(arch, a);
  const MlpParams q = init_mlp(arch, b);
  for (std::size_t j = 0; j < p.layers.size(); ++j) {
    EXPECT_EQ(p.layers[j].weight, q.layers[j].weight);
    const auto& w = p.layers[j].weight;
    const double bound = std::sqrt(6.0 / double(w.rows() + w.cols()));
    EXPECT_LE(w.cwiseAbs().maxCoeff(), bound);
    EXPECT_GT(w.cwiseAbs().maxCoeff(), 0.9 * bound);
    EXPECT_TRUE(p.layers[j].bias.isZero(0.0));
  }
}

TEST(Forward, ZeroParamsGiveHalf) {
  for (bool residual : {false, true}) {
    const MlpParams p = zero_mlp({5, residual});
    RngStream rng(1);
    const auto out = forward(p, random_input(20, rng));
    ASSERT_EQ(out.size(), 10u);
    for (double v : out) EXPECT_EQ(v, 0.5);
  }
}

TEST(Forward, MatchesStraightLineOracle) {
  RngStream rng(2);
  for (int i = 0; i < 40; ++i) {
    const MlpArch arch{i % 2 ? 13u : 5u, i % 4 >= 2};
    const MlpParams p = random_params(arch, 100 + i);
    const auto x = random_input(arch.input_width(), rng);
    const auto got = forward(p, x);
    const auto want = oracle::mlp_forward(p, x);
    for (std::size_t k = 0; k < got.size(); ++k) {
      EXPECT_NEAR(got[k], want[k], 1e-12);
      EXPECT_GT(got[k], 0.0);
      EXPECT_LT(got[k], 1.0);
    }
  }
}

TEST(Forward, BatchedColumnsMatchSingle) {
  const MlpParams p = random_params({13, true}, 3);
  RngStream rng(3);
  Eigen::MatrixXd batch(52, 7);
  for (Eigen::Index c = 0; c < 7; ++c)
    for (Eigen::Index r = 0; r < 52; ++r) batch(r, c) = rng.uniform(0, 1);
  const Eigen::MatrixXd out = forward(p, batch);
  for (Eigen::Index c = 0; c < 7; ++c) {
    const Eigen::VectorXd col = batch.col(c);
    const auto single = forward(p, std::span<const double>(col.data(), 52));
    for (Eigen::Index r = 0; r < 26; ++r) EXPECT_NEAR(out(r, c), single[r], 1e-14);
  }
}

TEST(Forward, ShapeMismatchThrows) {
  const MlpParams p = zero_mlp({5, false});
  try {
    forward(p, std::vector<double>(19, 0.0));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::Shape);
  }
}

TEST(Forward, NonFiniteIsNumericError) {
  const MlpParams p = random_params({5, false}, 4);
  std::vector<double> x(20, 0.0);
  x[0] = std::numeric_limits<double>::quiet_NaN();
  try {
    forward(p, x);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::Numeric);
  }
}

TEST(Backward, MatchesCentralDifferences) {
  std::mt19937_64 gen(6);
  RngStream rng(6);
  int checked = 0;
  for (int i = 0; i < 100; ++i) {
    const MlpArch arch{i % 2 ? 13u : 5u, (i / 2) % 2 == 1};
    MlpParams p = random_params(arch, 200 + i);
    Eigen::MatrixXd x(arch.input_width(), 2);
    Eigen::MatrixXd g(arch.output_width(), 2);
    for (Eigen::Index k = 0; k < x.size(); ++k) x.data()[k] = rng.uniform(-1, 1);
    for (Eigen::Index k = 0; k < g.size(); ++k) g.data()[k] = rng.uniform(-1, 1);

    ForwardCache cache;
    forward(p, x, &cache);
    const Backprop bp = backward(p, cache, g);
    const auto objective = [&] { return (forward(p, x).array() * g.array()).sum(); };
    const auto pattern = [&] {
      ForwardCache c;
      forward(p, x, &c);
      gradcheck::Pattern pat;
      pat.add(c);
      return pat;
    };
    const auto res = gradcheck::check(p, bp.grads, objective, pattern, gen, 4, false);
    EXPECT_LT(res.max_rel, 1e-4) << "instance " << i;
    checked += res.checked;

    // Input gradient on a few coordinates.
    for (int s = 0; s < 3; ++s) {
      const Eigen::Index r = static_cast<Eigen::Index>(rng.below(arch.input_width()));
      const double saved = x(r, 0);
      x(r, 0) = saved + gradcheck::kStep;
      const double up = objective();
      const auto pu = pattern();
      x(r, 0) = saved - gradcheck::kStep;
      const double down = objective();
      const auto pd = pattern();
      x(r, 0) = saved;
      if (gradcheck::touches_kink(pattern(), pu, pd)) continue;
      EXPECT_LT(gradcheck::rel_error(bp.input_grad(r, 0), (up - down) / (2 * gradcheck::kStep)), 1e-4);
    }
  }
  EXPECT_GT(checked, 3000);
}

TEST(Backward, ZeroGradOutputGivesZeroGrads) {
  const MlpParams p = random_params({5, true}, 7);
  RngStream rng(7);
  ForwardCache cache;
  Eigen::MatrixXd x(20, 1);
  for (Eigen::Index k = 0; k < 20; ++k) x(k) = rng.uniform(0, 1);
  forward(p, x, &cache);
  const Backprop bp = backward(p, cache, Eigen::MatrixXd::Zero(10, 1));
  for (const DenseLayer& layer : bp.grads) {
    EXPECT_TRUE(layer.weight.isZero(0.0));
    EXPECT_TRUE(layer.bias.isZero(0.0));
  }
  EXPECT_TRUE(bp.input_grad.isZero(0.0));
}

TEST(Backward, DeadResidualBranchLeavesUpperLayersUnchanged) {
  MlpParams off = random_params({5, false}, 8);
  // Layer 4's output is ReLU of a negative constant: zero for every input.
  off.layers[3].weight.setZero();
  off.layers[3].bias.setConstant(-1.0);
  off.restamp();
  MlpParams on = off;
  on.arch.residual = true;
  on.restamp();

  Eigen::MatrixXd x(20, 1);
  RngStream rng(8);
  for (Eigen::Index k = 0; k < 20; ++k) x(k) = rng.uniform(0, 1);
  Eigen::MatrixXd g(10, 1);
  for (Eigen::Index k = 0; k < 10; ++k) g(k) = rng.uniform(-1, 1);
  ForwardCache c_off;
  ForwardCache c_on;
  EXPECT_EQ(forward(off, x, &c_off), forward(on, x, &c_on));
  const Backprop b_off = backward(off, c_off, g);
  const Backprop b_on = backward(on, c_on, g);
  for (std::size_t j = 4; j < 9; ++j) {
    EXPECT_EQ(b_off.grads[j].weight, b_on.grads[j].weight);
    EXPECT_EQ(b_off.grads[j].bias, b_on.grads[j].bias);
  }
}

TEST(Backward, StaleCacheRejected) {
  MlpParams p = random_params({5, false}, 9);
  ForwardCache cache;
  forward(p, Eigen::MatrixXd::Constant(20, 1, 0.5), &cache);
  sgd_step(p, zero_grads(p.arch), 0.1);
  try {
    backward(p, cache, Eigen::MatrixXd::Ones(10, 1));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::CacheMismatch);
  }
}

TEST(SgdStep, Examples) {
  MlpParams p = zero_mlp({5, false});
  p.layers[0].weight(0, 0) = 1.0;
  MlpGrads g = zero_grads(p.arch);
  g[0].weight(0, 0) = 0.5;
  sgd_step(p, g, 0.1);
  EXPECT_DOUBLE_EQ(p.layers[0].weight(0, 0), 0.95);

  const MlpParams before = p;
  sgd_step(p, zero_grads(p.arch), 0.1);
  for (std::size_t j = 0; j < p.layers.size(); ++j) EXPECT_EQ(p.layers[j].weight, before.layers[j].weight);
}

TEST(SgdStep, TwoHalfStepsEqualOneStep) {
  MlpParams a = random_params({5, false}, 10);
  MlpParams b = a;
  MlpGrads g = random_params({5, false}, 11).layers;
  sgd_step(a, g, 0.25);
  sgd_step(b, g, 0.125);
  sgd_step(b, g, 0.125);
  for (std::size_t j = 0; j < a.layers.size(); ++j) {
    EXPECT_TRUE(a.layers[j].weight.isApprox(b.layers[j].weight, 1e-14));
    EXPECT_TRUE(a.layers[j].bias.isApprox(b.layers[j].bias, 1e-14));
  }
}

TEST(SgdStep, RejectsBadInputs) {
  MlpParams p = zero_mlp({5, false});
  EXPECT_THROW(sgd_step(p, zero_grads(p.arch), 0.0), Error);
  MlpGrads wrong = zero_grads({13, false});
  try {
    sgd_step(p, wrong, 0.1);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::Shape);
  }
}

TEST(L1Penalty, Examples) {
  MlpParams p = zero_mlp({5, false});
  EXPECT_EQ(l1_penalty(p), 0.0);
  p.layers[0].weight(0, 0) = 1.0;
  p.layers[4].weight(2, 1) = -2.0;
  p.layers[8].weight(1, 1) = 0.5;
  p.layers[8].bias(0) = 100.0;  // biases excluded
  EXPECT_EQ(l1_penalty(p), 3.5);
  for (DenseLayer& layer : p.layers) layer.weight *= 2.0;
  EXPECT_EQ(l1_penalty(p), 7.0);
}

TEST(L1Penalty, SubgradientIsSign) {
  MlpParams p = zero_mlp({5, false});
  p.layers[1].weight(0, 0) = 3.0;
  p.layers[1].weight(0, 1) = -0.2;
  MlpGrads g = zero_grads(p.arch);
  add_l1_subgradient(g, p, 0.5);
  EXPECT_EQ(g[1].weight(0, 0), 0.5);
  EXPECT_EQ(g[1].weight(0, 1), -0.5);
  EXPECT_EQ(g[1].weight(0, 2), 0.0);
  EXPECT_TRUE(g[1].bias.isZero(0.0));
}
