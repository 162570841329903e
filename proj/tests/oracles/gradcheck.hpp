#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>
#include <vector>

#include "sdrgain/gain.hpp"
#include "sdrgain/neural.hpp"

namespace gradcheck {

inline constexpr double kStep = 1e-5;
// Denominator floor of the relative error: below it the central difference
// itself is dominated by rounding.
inline constexpr double kFloor = 1e-6;
inline constexpr double kKink = 1e-6;

struct Result {
  double max_rel = 0.0;
  int checked = 0;
  int skipped = 0;
};

inline double rel_error(double analytic, double numeric) {
  return std::abs(analytic - numeric) / std::max({std::abs(analytic), std::abs(numeric), kFloor});
}

// Hidden pre-activations of every network on the path, in a fixed order.
struct Pattern {
  std::vector<double> z;

  void add(const sdrgain::ForwardCache& cache) {
    for (std::size_t j = 0; j + 1 < cache.pre.size(); ++j) {
      const auto& pre = cache.pre[j];
      z.insert(z.end(), pre.data(), pre.data() + pre.size());
    }
  }
};

// True when the +-h perturbation moves some unit across or next to a ReLU
// kink. Units sitting at a kink that the perturbation does not move are
// harmless.
inline bool touches_kink(const Pattern& base, const Pattern& up, const Pattern& down) {
  for (std::size_t i = 0; i < base.z.size(); ++i) {
    const double b = base.z[i], u = up.z[i], d = down.z[i];
    if ((u > 0.0) != (b > 0.0) || (d > 0.0) != (b > 0.0)) return true;
    if (u != d && std::min({std::abs(b), std::abs(u), std::abs(d)}) < kKink) return true;
  }
  return false;
}

// Network activity along the G -> splice -> D path of a minibatch.
inline Pattern gain_pattern(const sdrgain::MlpParams& g, const sdrgain::MlpParams& d, const sdrgain::Minibatch& b) {
  Pattern pat;
  sdrgain::ForwardCache gc;
  Eigen::MatrixXd gin(b.is.rows() * 2, b.is.cols());
  gin << b.is, b.m;
  const Eigen::MatrixXd ig = sdrgain::forward(g, gin, &gc);
  pat.add(gc);
  const Eigen::MatrixXd i = (b.m.array() * b.ns.array() + (1.0 - b.m.array()) * ig.array()).matrix();
  Eigen::MatrixXd din(b.is.rows() * 2, b.is.cols());
  din << i, b.hint;
  sdrgain::ForwardCache dc;
  sdrgain::forward(d, din, &dc);
  pat.add(dc);
  return pat;
}

// Central differences on a sample of parameters of `target`. `objective`
// evaluates the loss; `pattern` reports the ReLU activity so coordinates
// whose perturbation crosses a kink are skipped.
inline Result check(sdrgain::MlpParams& target, const sdrgain::MlpGrads& analytic,
                    const std::function<double()>& objective, const std::function<Pattern()>& pattern,
                    std::mt19937_64& gen, int per_layer, bool l1_term) {
  Result res;
  const Pattern base = pattern();
  for (std::size_t j = 0; j < target.layers.size(); ++j) {
    auto& layer = target.layers[j];
    for (int s = 0; s <= per_layer; ++s) {
      // The last draw of each layer probes a bias.
      double* slot;
      double grad;
      bool is_weight = s < per_layer;
      if (is_weight) {
        std::uniform_int_distribution<Eigen::Index> r(0, layer.weight.rows() - 1);
        std::uniform_int_distribution<Eigen::Index> c(0, layer.weight.cols() - 1);
        const Eigen::Index rr = r(gen);
        const Eigen::Index cc = c(gen);
        slot = &layer.weight(rr, cc);
        grad = analytic[j].weight(rr, cc);
      } else {
        std::uniform_int_distribution<Eigen::Index> r(0, layer.bias.size() - 1);
        const Eigen::Index rr = r(gen);
        slot = &layer.bias(rr);
        grad = analytic[j].bias(rr);
      }
      const double saved = *slot;
      if (l1_term && is_weight && std::abs(saved) < kStep) {
        ++res.skipped;
        continue;
      }
      *slot = saved + kStep;
      target.restamp();
      const double up = objective();
      const Pattern pu = pattern();
      *slot = saved - kStep;
      target.restamp();
      const double down = objective();
      const Pattern pd = pattern();
      *slot = saved;
      target.restamp();
      if (touches_kink(base, pu, pd)) {
        ++res.skipped;
        continue;
      }
      const double numeric = (up - down) / (2.0 * kStep);
      res.max_rel = std::max(res.max_rel, rel_error(grad, numeric));
      ++res.checked;
    }
  }
  return res;
}

// Random minibatch of normalized 2l vectors with training-style masks.
inline sdrgain::Minibatch random_batch(std::size_t l, int cols, sdrgain::RngStream& rng) {
  sdrgain::Minibatch b;
  const auto rows = static_cast<Eigen::Index>(2 * l);
  b.ns.resize(rows, cols);
  b.m.resize(rows, cols);
  b.is.resize(rows, cols);
  b.hint.resize(rows, cols);
  for (int c = 0; c < cols; ++c) {
    std::vector<double> ns = rng.uniform_vector(2 * l);
    sdrgain::MaskSet s = sdrgain::draw_mask_set(ns, 0.3, 0.9, rng);
    for (Eigen::Index r = 0; r < rows; ++r) {
      const auto k = static_cast<std::size_t>(r);
      b.ns(r, c) = ns[k];
      b.m(r, c) = s.m[k];
      b.is(r, c) = s.os[k] + s.r[k];
      b.hint(r, c) = s.hint[k];
    }
  }
  return b;
}

}  // namespace gradcheck
