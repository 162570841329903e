#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "sdrgain/geometry.hpp"
#include "sdrgain/rng.hpp"

namespace sdrgain {

// Masks are stored as 0.0/1.0 so they enter the network arithmetic directly.
// A full-length vector is 2l: the x half followed by the y half.

struct MaskSet {
  std::vector<double> m;     // 1 = observed
  std::vector<double> os;    // observed data, 0 where missing
  std::vector<double> r;     // noise, 0 where observed
  std::vector<double> hint;
};

enum class NoiseMode { Uniform, Nearest };

/// Half-mask from a given uniform vector A: 1 iff A[k] > p_m; duplicated.
std::vector<double> mask_from_uniform(std::span<const double> a, double p_m);
std::vector<double> draw_mask(std::size_t l, double p_m, RngStream& rng);

std::vector<double> mask_observe(std::span<const double> ns, std::span<const double> m);

/// r = (1 - m) * nr, elementwise.
std::vector<double> noise_from_uniform(std::span<const double> m, std::span<const double> nr);
std::vector<double> noise_fill(std::span<const double> m, RngStream& rng);
/// Seeds each missing keypoint with the normalized coordinates of the observed
/// keypoint of the same part at the fewest skeleton hops (ties: lower id).
std::vector<double> noise_fill_nearest(const PartFrame& frame, std::span<const double> m);

/// Half-hint from a given uniform vector C: m_half[k] iff C[k] > 1 - p_h.
std::vector<double> hint_from_uniform(std::span<const double> c, std::span<const double> m, double p_h);
std::vector<double> draw_hint(std::span<const double> m, double p_h, RngStream& rng);

std::vector<double> mask_from_presence(const PartFrame& frame);

/// Full training-time corruption of one normalized 2l vector. Draw order is
/// A (l), NR (2l), C (l).
MaskSet draw_mask_set(std::span<const double> ns, double p_m, double p_h, RngStream& rng);

}  // namespace sdrgain
