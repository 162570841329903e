#pragma once

#include <cstddef>
#include <span>
#include <string_view>
#include <utility>
#include <vector>

#include "sdrgain/pose.hpp"

namespace sdrgain {

enum class PartKind { Head, Body };

/// 5 for the head, 13 for the body.
std::size_t part_length(PartKind part) noexcept;
std::span<const KeypointId> part_slots(PartKind part) noexcept;
std::string_view part_name(PartKind part) noexcept;

struct Scale {
  double min = 0.0;
  double max = 1.0;

  friend bool operator==(const Scale&, const Scale&) = default;
};

enum class Reference { Ears, Eyes, Shoulders, None };

std::string_view reference_name(Reference ref) noexcept;

struct TransformRecord {
  PartKind part = PartKind::Head;
  Point pivot;
  double angle = 0.0;  // radians, in (-pi/2, pi/2]
  Scale x_scale;
  Scale y_scale;
  double margin = 0.0;
  Reference reference_used = Reference::None;
};

/// A part in the canonical frame: rotated, projected on both axes and
/// min-max normalized. Unobserved entries hold 0 until imputation.
struct PartFrame {
  PartKind part = PartKind::Head;
  std::vector<double> nx;
  std::vector<double> ny;
  std::vector<bool> mask;  // true = observed
  TransformRecord transform;

  std::size_t length() const noexcept { return nx.size(); }
  /// nx followed by ny.
  std::vector<double> stacked() const;
};

struct PartPoints {
  PartKind part = PartKind::Head;
  std::vector<Point> points;
  std::vector<bool> present;
};

std::pair<PartPoints, PartPoints> separate(const Pose18& pose);
Pose18 merge(const PartPoints& head, const PartPoints& body);

/// Slope angle of the line from `right_ref` to `left_ref`, folded into
/// (-pi/2, pi/2]; a vertical line gives exactly pi/2.
double rotation_angle(Point right_ref, Point left_ref);

/// Maps p to pivot + R(-angle)(p - pivot). Calling again with -angle undoes it.
std::vector<Point> rotate_about(std::span<const Point> points, Point pivot, double angle);

/// Worst-case angle error when both endpoint differences are off by +-2 px.
double angle_error_bound(double dx, double dy);

std::pair<std::vector<double>, std::vector<double>> reduce(std::span<const Point> points);

struct Normalized {
  std::vector<double> values;
  Scale scale;
};

Normalized normalize(std::span<const double> v, const std::vector<bool>& observed, double margin);
std::vector<double> denormalize(std::span<const double> nv, Scale scale);

PartFrame forward_transform(const Pose18& pose, PartKind part, double margin);
std::vector<Point> inverse_transform(const PartFrame& frame);

}  // namespace sdrgain
