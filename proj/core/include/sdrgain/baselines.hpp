#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace sdrgain {

/// A series sampled at integer abscissae 0..n-1 with some entries missing.
struct SeriesWithGaps {
  std::vector<double> values;
  std::vector<bool> observed;
};

/// Cubic Hermite interpolant through knots (x, y) with slopes d. Outside the
/// knot range the boundary cubic is extended.
struct HermiteSpline {
  std::vector<double> x;
  std::vector<double> y;
  std::vector<double> d;

  double operator()(double t) const;
  double derivative(double t) const;
};

/// Shape-preserving (Fritsch-Carlson / weighted harmonic mean) slopes, with
/// the non-centered three-point endpoint rule. Requires >= 2 knots.
std::vector<double> pchip_slopes(std::span<const double> x, std::span<const double> y);
/// Modified Akima slopes; falls back to pchip_slopes for <= 3 knots.
std::vector<double> makima_slopes(std::span<const double> x, std::span<const double> y);

HermiteSpline pchip_spline(std::span<const double> x, std::span<const double> y);
HermiteSpline makima_spline(std::span<const double> x, std::span<const double> y);

/// Fill missing entries from the interpolant through the observed ones.
/// Observed entries are returned unchanged. Needs >= 2 observed entries.
std::vector<double> pchip_impute(const SeriesWithGaps& series);
std::vector<double> makima_impute(const SeriesWithGaps& series);

/// k-nearest-neighbour imputation. Distances use observed coordinates only;
/// missing entries get the unweighted mean over the k nearest training rows
/// (ties broken by training index).
std::vector<double> knn_impute(std::span<const std::vector<double>> train, std::span<const double> query,
                               std::span<const double> m, std::size_t k);

}  // namespace sdrgain
