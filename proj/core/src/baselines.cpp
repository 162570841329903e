#include "sdrgain/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <utility>

#include "sdrgain/error.hpp"

namespace sdrgain {

namespace {

int sign(double v) { return (v > 0.0) - (v < 0.0); }

// Index of the interval [x_i, x_{i+1}] used to evaluate t; clamps to the
// first/last interval for extrapolation.
std::size_t interval_of(const std::vector<double>& x, double t) {
  const auto it = std::upper_bound(x.begin(), x.end(), t);
  const auto idx = static_cast<std::size_t>(std::max<std::ptrdiff_t>(it - x.begin() - 1, 0));
  return std::min(idx, x.size() - 2);
}

void check_knots(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw Error(ErrorKind::Shape, "knot arrays differ in length");
  if (x.size() < 2) throw Error(ErrorKind::InsufficientData, "interpolation needs at least 2 observed entries");
  for (std::size_t i = 1; i < x.size(); ++i) {
    if (!(x[i] > x[i - 1])) throw Error(ErrorKind::Domain, "abscissae must be strictly increasing");
  }
}

double pchip_endpoint(double h0, double h1, double del0, double del1) {
  double d = ((2.0 * h0 + h1) * del0 - h0 * del1) / (h0 + h1);
  if (sign(d) != sign(del0)) {
    d = 0.0;
  } else if (sign(del0) != sign(del1) && std::abs(d) > std::abs(3.0 * del0)) {
    d = 3.0 * del0;
  }
  return d;
}

std::vector<double> secants(std::span<const double> x, std::span<const double> y) {
  std::vector<double> del(x.size() - 1);
  for (std::size_t i = 0; i + 1 < x.size(); ++i) del[i] = (y[i + 1] - y[i]) / (x[i + 1] - x[i]);
  return del;
}

using SlopeRule = std::vector<double> (*)(std::span<const double>, std::span<const double>);

std::vector<double> impute_with(const SeriesWithGaps& series, SlopeRule rule) {
  if (series.values.size() != series.observed.size()) {
    throw Error(ErrorKind::Shape, "series values/observed length mismatch");
  }
  std::vector<double> x;
  std::vector<double> y;
  for (std::size_t i = 0; i < series.values.size(); ++i) {
    if (!series.observed[i]) continue;
    x.push_back(static_cast<double>(i));
    y.push_back(series.values[i]);
  }
  check_knots(x, y);
  const HermiteSpline spline{x, y, rule(x, y)};

  std::vector<double> out = series.values;
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (!series.observed[i]) out[i] = spline(static_cast<double>(i));
  }
  return out;
}

}  // namespace

double HermiteSpline::operator()(double t) const {
  const std::size_t i = interval_of(x, t);
  const double h = x[i + 1] - x[i];
  const double s = t - x[i];
  const double del = (y[i + 1] - y[i]) / h;
  // Power form about x_i: y + d s + c2 s^2 + c3 s^3.
  const double c2 = (3.0 * del - 2.0 * d[i] - d[i + 1]) / h;
  const double c3 = (d[i] + d[i + 1] - 2.0 * del) / (h * h);
  return y[i] + s * (d[i] + s * (c2 + s * c3));
}

double HermiteSpline::derivative(double t) const {
  const std::size_t i = interval_of(x, t);
  const double h = x[i + 1] - x[i];
  const double s = t - x[i];
  const double del = (y[i + 1] - y[i]) / h;
  const double c2 = (3.0 * del - 2.0 * d[i] - d[i + 1]) / h;
  const double c3 = (d[i] + d[i + 1] - 2.0 * del) / (h * h);
  return d[i] + s * (2.0 * c2 + 3.0 * c3 * s);
}

std::vector<double> pchip_slopes(std::span<const double> x, std::span<const double> y) {
  check_knots(x, y);
  const std::size_t n = x.size();
  const std::vector<double> del = secants(x, y);
  std::vector<double> d(n, 0.0);
  if (n == 2) {
    d[0] = d[1] = del[0];
    return d;
  }
  for (std::size_t k = 1; k + 1 < n; ++k) {
    const double h_prev = x[k] - x[k - 1];
    const double h_next = x[k + 1] - x[k];
    if (sign(del[k - 1]) * sign(del[k]) <= 0) continue;
    const double w1 = 2.0 * h_next + h_prev;
    const double w2 = h_next + 2.0 * h_prev;
    d[k] = (w1 + w2) / (w1 / del[k - 1] + w2 / del[k]);
  }
  d[0] = pchip_endpoint(x[1] - x[0], x[2] - x[1], del[0], del[1]);
  d[n - 1] = pchip_endpoint(x[n - 1] - x[n - 2], x[n - 2] - x[n - 3], del[n - 2], del[n - 3]);
  return d;
}

std::vector<double> makima_slopes(std::span<const double> x, std::span<const double> y) {
  check_knots(x, y);
  const std::size_t n = x.size();
  if (n <= 3) return pchip_slopes(x, y);

  // Secants padded with two linear extrapolations on each side:
  // ext[j + 2] = del[j].
  const std::vector<double> del = secants(x, y);
  std::vector<double> ext(n + 3);
  std::copy(del.begin(), del.end(), ext.begin() + 2);
  ext[1] = 2.0 * del[0] - del[1];
  ext[0] = 2.0 * ext[1] - del[0];
  ext[n + 1] = 2.0 * del[n - 2] - del[n - 3];
  ext[n + 2] = 2.0 * ext[n + 1] - del[n - 2];

  std::vector<double> d(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double before2 = ext[i];      // δ_{i-2}
    const double before = ext[i + 1];   // δ_{i-1}
    const double after = ext[i + 2];    // δ_i
    const double after2 = ext[i + 3];   // δ_{i+1}
    const double w1 = std::abs(after2 - after) + 0.5 * std::abs(after2 + after);
    const double w2 = std::abs(before - before2) + 0.5 * std::abs(before + before2);
    d[i] = (w1 + w2 == 0.0) ? 0.5 * (before + after) : (w1 * before + w2 * after) / (w1 + w2);
  }
  return d;
}

HermiteSpline pchip_spline(std::span<const double> x, std::span<const double> y) {
  return {{x.begin(), x.end()}, {y.begin(), y.end()}, pchip_slopes(x, y)};
}

HermiteSpline makima_spline(std::span<const double> x, std::span<const double> y) {
  return {{x.begin(), x.end()}, {y.begin(), y.end()}, makima_slopes(x, y)};
}

std::vector<double> pchip_impute(const SeriesWithGaps& series) { return impute_with(series, &pchip_slopes); }

std::vector<double> makima_impute(const SeriesWithGaps& series) { return impute_with(series, &makima_slopes); }

std::vector<double> knn_impute(std::span<const std::vector<double>> train, std::span<const double> query,
                               std::span<const double> m, std::size_t k) {
  if (train.empty()) throw Error(ErrorKind::Config, "knn: empty training set");
  if (k == 0 || k > train.size()) {
    throw Error(ErrorKind::Config, "knn: k=" + std::to_string(k) + " outside [1, " +
                                       std::to_string(train.size()) + "]");
  }
  if (query.size() != m.size()) throw Error(ErrorKind::Shape, "knn: query/mask length mismatch");
  if (std::none_of(m.begin(), m.end(), [](double v) { return v == 1.0; })) {
    throw Error(ErrorKind::InsufficientData, "knn: query has no observed entry");
  }

  std::vector<std::pair<double, std::size_t>> ranked;
  ranked.reserve(train.size());
  for (std::size_t t = 0; t < train.size(); ++t) {
    const std::vector<double>& row = train[t];
    if (row.size() != query.size()) throw Error(ErrorKind::Shape, "knn: training row length mismatch");
    double dist = 0.0;
    for (std::size_t j = 0; j < query.size(); ++j) {
      if (m[j] != 1.0) continue;
      const double diff = row[j] - query[j];
      dist += diff * diff;
    }
    ranked.emplace_back(dist, t);
  }
  // Squared distance preserves the Euclidean ordering; pairs compare the
  // training index second.
  std::partial_sort(ranked.begin(), ranked.begin() + static_cast<std::ptrdiff_t>(k), ranked.end());

  std::vector<double> out(query.begin(), query.end());
  for (std::size_t j = 0; j < query.size(); ++j) {
    if (m[j] == 1.0) continue;
    double total = 0.0;
    for (std::size_t r = 0; r < k; ++r) total += train[ranked[r].second][j];
    out[j] = total / static_cast<double>(k);
  }
  return out;
}

}  // namespace sdrgain
