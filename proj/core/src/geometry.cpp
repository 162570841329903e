#include "sdrgain/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "sdrgain/error.hpp"

namespace sdrgain {

namespace {

bool finite(Point p) { return std::isfinite(p.x) && std::isfinite(p.y); }

struct Anchor {
  Reference reference = Reference::None;
  Point pivot;
  double angle = 0.0;
};

// Reference ladder: the widest available pair first.
Anchor choose_anchor(const Pose18& pose, PartKind part) {
  const auto try_pair = [&](KeypointId right, KeypointId left, Reference ref) -> std::optional<Anchor> {
    if (!pose.has(right) || !pose.has(left)) return std::nullopt;
    if (pose[right] == pose[left]) return std::nullopt;
    return Anchor{ref, pose[right], rotation_angle(pose[right], pose[left])};
  };

  std::optional<Anchor> anchor;
  if (part == PartKind::Head) {
    anchor = try_pair(KeypointId::REar, KeypointId::LEar, Reference::Ears);
    if (!anchor) anchor = try_pair(KeypointId::REye, KeypointId::LEye, Reference::Eyes);
  } else {
    anchor = try_pair(KeypointId::RShoulder, KeypointId::LShoulder, Reference::Shoulders);
  }
  if (anchor) return *anchor;

  for (KeypointId id : part_slots(part)) {
    if (pose.has(id)) return Anchor{Reference::None, pose[id], 0.0};
  }
  throw Error(ErrorKind::PartUnanchored,
              std::string(part_name(part)) + " has no observed keypoint");
}

}  // namespace

std::size_t part_length(PartKind part) noexcept {
  return part == PartKind::Head ? kHeadSlots.size() : kBodySlots.size();
}

std::span<const KeypointId> part_slots(PartKind part) noexcept {
  if (part == PartKind::Head) return kHeadSlots;
  return kBodySlots;
}

std::string_view part_name(PartKind part) noexcept {
  return part == PartKind::Head ? "head" : "body";
}

std::string_view reference_name(Reference ref) noexcept {
  switch (ref) {
    case Reference::Ears: return "ears";
    case Reference::Eyes: return "eyes";
    case Reference::Shoulders: return "shoulders";
    case Reference::None: return "none";
  }
  return "none";
}

std::vector<double> PartFrame::stacked() const {
  std::vector<double> out(nx);
  out.insert(out.end(), ny.begin(), ny.end());
  return out;
}

std::pair<PartPoints, PartPoints> separate(const Pose18& pose) {
  const auto extract = [&](PartKind part) {
    PartPoints out;
    out.part = part;
    for (KeypointId id : part_slots(part)) {
      out.points.push_back(pose[id]);
      out.present.push_back(pose.has(id));
    }
    return out;
  };
  return {extract(PartKind::Head), extract(PartKind::Body)};
}

Pose18 merge(const PartPoints& head, const PartPoints& body) {
  if (head.points.size() != kHeadSlots.size() || body.points.size() != kBodySlots.size() ||
      head.present.size() != kHeadSlots.size() || body.present.size() != kBodySlots.size()) {
    throw Error(ErrorKind::Shape, "merge expects 5 head and 13 body slots");
  }
  Pose18 pose;
  for (std::size_t k = 0; k < kHeadSlots.size(); ++k) {
    pose[kHeadSlots[k]] = head.points[k];
    pose.present[index_of(kHeadSlots[k])] = head.present[k];
  }
  for (std::size_t k = 0; k < kBodySlots.size(); ++k) {
    pose[kBodySlots[k]] = body.points[k];
    pose.present[index_of(kBodySlots[k])] = body.present[k];
  }
  return pose;
}

double rotation_angle(Point right_ref, Point left_ref) {
  if (!finite(right_ref) || !finite(left_ref)) {
    throw Error(ErrorKind::InvalidCoordinate, "non-finite reference point");
  }
  const double dx = left_ref.x - right_ref.x;
  const double dy = left_ref.y - right_ref.y;
  if (dx == 0.0 && dy == 0.0) {
    throw Error(ErrorKind::DegenerateReference, "reference points coincide");
  }
  if (dx == 0.0) return std::numbers::pi / 2.0;
  // atan of the slope already lands in (-pi/2, pi/2); this is atan2 folded
  // onto the acute-angle convention.
  return std::atan(dy / dx);
}

std::vector<Point> rotate_about(std::span<const Point> points, Point pivot, double angle) {
  if (!finite(pivot) || !std::isfinite(angle)) {
    throw Error(ErrorKind::InvalidCoordinate, "non-finite pivot or angle");
  }
  const double c = std::cos(angle);
  const double s = std::sin(angle);
  std::vector<Point> out;
  out.reserve(points.size());
  for (const Point& p : points) {
    if (!finite(p)) throw Error(ErrorKind::InvalidCoordinate, "non-finite point");
    const double dx = p.x - pivot.x;
    const double dy = p.y - pivot.y;
    out.push_back({pivot.x + c * dx + s * dy, pivot.y - s * dx + c * dy});
  }
  return out;
}

double angle_error_bound(double dx, double dy) {
  if (!(std::abs(dx) > 2.0)) {
    throw Error(ErrorKind::UnboundedError, "|dx| must exceed the 2 px perturbation");
  }
  const double base = std::atan(dy / dx);
  double worst = 0.0;
  for (double ey : {2.0, -2.0}) {
    for (double ex : {2.0, -2.0}) {
      worst = std::max(worst, std::abs(std::atan((dy + ey) / (dx + ex)) - base));
    }
  }
  return worst;
}

std::pair<std::vector<double>, std::vector<double>> reduce(std::span<const Point> points) {
  std::vector<double> xs;
  std::vector<double> ys;
  xs.reserve(points.size());
  ys.reserve(points.size());
  for (const Point& p : points) {
    xs.push_back(p.x);
    ys.push_back(p.y);
  }
  return {std::move(xs), std::move(ys)};
}

Normalized normalize(std::span<const double> v, const std::vector<bool>& observed, double margin) {
  if (observed.size() != v.size()) throw Error(ErrorKind::Shape, "normalize: mask length mismatch");
  if (!(margin >= 0.0)) throw Error(ErrorKind::Config, "normalize: margin must be >= 0");

  double lo = 0.0;
  double hi = 0.0;
  bool any = false;
  for (std::size_t k = 0; k < v.size(); ++k) {
    if (!observed[k]) continue;
    if (!any) {
      lo = hi = v[k];
      any = true;
    } else {
      lo = std::min(lo, v[k]);
      hi = std::max(hi, v[k]);
    }
  }
  if (!any) throw Error(ErrorKind::NoScale, "normalize: no observed entry");

  Normalized out;
  out.values.assign(v.size(), 0.0);
  const double span = hi - lo;
  if (span == 0.0) {
    out.scale = {lo - 1.0, lo + 1.0};
    for (std::size_t k = 0; k < v.size(); ++k) {
      if (observed[k]) out.values[k] = 0.5;
    }
    return out;
  }
  out.scale = {lo - margin * span, hi + margin * span};
  const double width = out.scale.max - out.scale.min;
  for (std::size_t k = 0; k < v.size(); ++k) {
    if (observed[k]) out.values[k] = (v[k] - out.scale.min) / width;
  }
  return out;
}

std::vector<double> denormalize(std::span<const double> nv, Scale scale) {
  if (!(scale.max > scale.min)) throw Error(ErrorKind::NoScale, "denormalize: degenerate scale");
  const double width = scale.max - scale.min;
  std::vector<double> out;
  out.reserve(nv.size());
  for (double value : nv) out.push_back(value * width + scale.min);
  return out;
}

PartFrame forward_transform(const Pose18& pose, PartKind part, double margin) {
  const Anchor anchor = choose_anchor(pose, part);

  const auto [head, body] = separate(pose);
  const PartPoints& pts = part == PartKind::Head ? head : body;

  // Placeholders are pinned to the pivot so they never feed a non-finite
  // value into the rotation; they are dropped again by the normalizer.
  std::vector<Point> inputs = pts.points;
  for (std::size_t k = 0; k < inputs.size(); ++k) {
    if (!pts.present[k]) inputs[k] = anchor.pivot;
  }
  const std::vector<Point> rotated = rotate_about(inputs, anchor.pivot, anchor.angle);
  const auto [xs, ys] = reduce(rotated);

  Normalized nx = normalize(xs, pts.present, margin);
  Normalized ny = normalize(ys, pts.present, margin);

  PartFrame frame;
  frame.part = part;
  frame.nx = std::move(nx.values);
  frame.ny = std::move(ny.values);
  frame.mask = pts.present;
  frame.transform = {part, anchor.pivot, anchor.angle, nx.scale, ny.scale, margin, anchor.reference};
  return frame;
}

std::vector<Point> inverse_transform(const PartFrame& frame) {
  if (frame.nx.size() != frame.ny.size()) throw Error(ErrorKind::Shape, "nx/ny length mismatch");
  for (std::size_t k = 0; k < frame.nx.size(); ++k) {
    if (!std::isfinite(frame.nx[k]) || !std::isfinite(frame.ny[k])) {
      throw Error(ErrorKind::InvalidCoordinate, "non-finite frame entry");
    }
  }
  const std::vector<double> xs = denormalize(frame.nx, frame.transform.x_scale);
  const std::vector<double> ys = denormalize(frame.ny, frame.transform.y_scale);
  std::vector<Point> points(xs.size());
  for (std::size_t k = 0; k < xs.size(); ++k) points[k] = {xs[k], ys[k]};
  return rotate_about(points, frame.transform.pivot, -frame.transform.angle);
}

}  // namespace sdrgain
