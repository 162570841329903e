#include "sdrgain/masking.hpp"

#include <limits>
#include <string>

#include "sdrgain/error.hpp"

namespace sdrgain {

namespace {

void check_rate(double p, const char* name) {
  if (!(p > 0.0 && p < 1.0)) {
    throw Error(ErrorKind::Config, std::string(name) + " must lie in (0,1)");
  }
}

void check_same(std::size_t a, std::size_t b, const char* what) {
  if (a != b) throw Error(ErrorKind::Shape, std::string(what) + ": length mismatch");
}

void check_even(std::size_t n, const char* what) {
  if (n % 2 != 0) throw Error(ErrorKind::Shape, std::string(what) + ": odd length");
}

}  // namespace

std::vector<double> mask_from_uniform(std::span<const double> a, double p_m) {
  check_rate(p_m, "p_m");
  const std::size_t l = a.size();
  std::vector<double> m(2 * l);
  for (std::size_t k = 0; k < l; ++k) m[k] = m[l + k] = a[k] > p_m ? 1.0 : 0.0;
  return m;
}

std::vector<double> draw_mask(std::size_t l, double p_m, RngStream& rng) {
  check_rate(p_m, "p_m");
  return mask_from_uniform(rng.uniform_vector(l), p_m);
}

std::vector<double> mask_observe(std::span<const double> ns, std::span<const double> m) {
  check_same(ns.size(), m.size(), "mask_observe");
  std::vector<double> os(ns.size());
  for (std::size_t k = 0; k < ns.size(); ++k) os[k] = m[k] == 1.0 ? ns[k] : 0.0;
  return os;
}

std::vector<double> noise_from_uniform(std::span<const double> m, std::span<const double> nr) {
  check_same(m.size(), nr.size(), "noise");
  std::vector<double> r(m.size());
  for (std::size_t k = 0; k < m.size(); ++k) r[k] = (1.0 - m[k]) * nr[k];
  return r;
}

std::vector<double> noise_fill(std::span<const double> m, RngStream& rng) {
  return noise_from_uniform(m, rng.uniform_vector(m.size()));
}

std::vector<double> noise_fill_nearest(const PartFrame& frame, std::span<const double> m) {
  const std::size_t l = frame.length();
  check_same(m.size(), 2 * l, "noise_fill_nearest");
  const auto slots = part_slots(frame.part);

  bool any_observed = false;
  for (std::size_t k = 0; k < l; ++k) any_observed = any_observed || m[k] == 1.0;
  if (!any_observed) {
    throw Error(ErrorKind::PartUnanchored,
                std::string(part_name(frame.part)) + " has no observed keypoint to seed from");
  }

  std::vector<double> r(2 * l, 0.0);
  for (std::size_t k = 0; k < l; ++k) {
    if (m[k] == 1.0) continue;
    // Slots are in ascending id order, so the first minimum wins ties.
    std::size_t best = l;
    int best_hops = std::numeric_limits<int>::max();
    for (std::size_t j = 0; j < l; ++j) {
      if (m[j] != 1.0) continue;
      const int hops = skeleton_distance(slots[k], slots[j]);
      if (hops < best_hops) {
        best_hops = hops;
        best = j;
      }
    }
    r[k] = frame.nx[best];
    r[l + k] = frame.ny[best];
  }
  return r;
}

std::vector<double> hint_from_uniform(std::span<const double> c, std::span<const double> m, double p_h) {
  check_rate(p_h, "p_h");
  const std::size_t l = c.size();
  check_same(m.size(), 2 * l, "hint");
  const double threshold = 1.0 - p_h;
  std::vector<double> h(2 * l);
  for (std::size_t k = 0; k < l; ++k) h[k] = h[l + k] = c[k] > threshold ? m[k] : 0.0;
  return h;
}

std::vector<double> draw_hint(std::span<const double> m, double p_h, RngStream& rng) {
  check_rate(p_h, "p_h");
  check_even(m.size(), "draw_hint");
  return hint_from_uniform(rng.uniform_vector(m.size() / 2), m, p_h);
}

std::vector<double> mask_from_presence(const PartFrame& frame) {
  const std::size_t l = frame.mask.size();
  std::vector<double> m(2 * l);
  for (std::size_t k = 0; k < l; ++k) m[k] = m[l + k] = frame.mask[k] ? 1.0 : 0.0;
  return m;
}

MaskSet draw_mask_set(std::span<const double> ns, double p_m, double p_h, RngStream& rng) {
  check_even(ns.size(), "draw_mask_set");
  MaskSet set;
  set.m = draw_mask(ns.size() / 2, p_m, rng);
  set.os = mask_observe(ns, set.m);
  set.r = noise_fill(set.m, rng);
  set.hint = draw_hint(set.m, p_h, rng);
  return set;
}

}  // namespace sdrgain
