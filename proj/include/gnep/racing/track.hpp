#pragma once

#include <cmath>
#include <numbers>
#include <vector>

#include "gnep/error.hpp"
#include "gnep/function.hpp"

namespace gnep::racing {

struct Segment {
  double length = 0.0;
  double curvature = 0.0;  // 1/R, positive for left turns, 0 for straights
};

struct Pose {
  double x = 0.0, y = 0.0, heading = 0.0;
};

/// Open track built from straights and constant-curvature arcs. The first
/// and last segments are extended as straight lines beyond the ends.
class Track {
 public:
  Track(std::vector<Segment> segments, double half_width, Pose start = {})
      : segments_(std::move(segments)), half_width_(half_width) {
    if (segments_.empty()) throw Error(ErrorCode::kDomain, "track needs a segment");
    if (!(half_width_ > 0.0)) throw Error(ErrorCode::kDomain, "half width must be positive");
    Pose p = start;
    double s = 0.0;
    for (const auto& seg : segments_) {
      if (!(seg.length > 0.0)) throw Error(ErrorCode::kDomain, "segment length must be positive");
      if (std::abs(seg.curvature) * half_width_ >= 1.0)
        throw Error(ErrorCode::kDomain, "arc radius must exceed the half width");
      starts_.push_back(p);
      offsets_.push_back(s);
      p = advance(p, seg, seg.length);
      s += seg.length;
    }
    end_ = p;
    length_ = s;
  }

  /// Two straights joined by a left arc.
  static Track l_shaped(double straight = 6.0, double radius = 1.0, double half_width = 0.5,
                        double angle = std::numbers::pi / 2) {
    return Track({{straight, 0.0}, {radius * angle, 1.0 / radius}, {straight, 0.0}}, half_width);
  }

  double length() const { return length_; }
  double half_width() const { return half_width_; }
  const std::vector<Segment>& segments() const { return segments_; }

  /// Curvature at arc length s (0 on the extensions).
  double curvature(double s) const {
    if (s < 0.0 || s >= length_) return 0.0;
    return segments_[index(s)].curvature;
  }

  /// Curvature with logistic transitions of width `blend` at the segment
  /// joints; used by the vehicle dynamics.
  template <typename T>
  T smooth_curvature(const T& s) const {
    using std::exp;
    T k = lift<T>(0.0);
    for (std::size_t i = 0; i < segments_.size(); ++i) {
      if (segments_[i].curvature == 0.0) continue;
      const T on = lift<T>(1.0) / (lift<T>(1.0) + exp((lift<T>(offsets_[i]) - s) / lift<T>(blend_)));
      const T off = lift<T>(1.0) / (lift<T>(1.0) + exp((lift<T>(offsets_[i] + segments_[i].length) - s) / lift<T>(blend_)));
      k = k + lift<T>(segments_[i].curvature) * (on - off);
    }
    return k;
  }

  double blend() const { return blend_; }
  void set_blend(double w) {
    if (!(w > 0.0)) throw Error(ErrorCode::kDomain, "blend width must be positive");
    blend_ = w;
  }

  /// Inertial position of the Frenet point (s, e); e is measured to the left.
  template <typename T>
  std::array<T, 2> position(const T& s, const T& e) const {
    using std::cos;
    using std::sin;
    const double sv = scalar_value(s);
    Pose p0;
    double kappa = 0.0;
    T ds;
    if (sv < 0.0) {
      p0 = starts_.front();
      ds = s;
    } else if (sv >= length_) {
      p0 = end_;
      ds = s - lift<T>(length_);
    } else {
      const std::size_t i = index(sv);
      p0 = starts_[i];
      kappa = segments_[i].curvature;
      ds = s - lift<T>(offsets_[i]);
    }
    if (kappa == 0.0) {
      const double c = std::cos(p0.heading), sn = std::sin(p0.heading);
      return {lift<T>(p0.x) + ds * lift<T>(c) - e * lift<T>(sn), lift<T>(p0.y) + ds * lift<T>(sn) + e * lift<T>(c)};
    }
    const double r = 1.0 / kappa;
    const double cx = p0.x - r * std::sin(p0.heading), cy = p0.y + r * std::cos(p0.heading);
    const T theta = lift<T>(p0.heading) + ds * lift<T>(kappa);
    const T rad = lift<T>(r) - e;
    return {lift<T>(cx) + rad * sin(theta), lift<T>(cy) - rad * cos(theta)};
  }

  /// Heading of the center line at s.
  double heading(double s) const {
    if (s < 0.0) return starts_.front().heading;
    if (s >= length_) return end_.heading;
    const std::size_t i = index(s);
    return starts_[i].heading + segments_[i].curvature * (s - offsets_[i]);
  }

 private:
  static Pose advance(const Pose& p, const Segment& seg, double ds) {
    if (seg.curvature == 0.0)
      return {p.x + ds * std::cos(p.heading), p.y + ds * std::sin(p.heading), p.heading};
    const double r = 1.0 / seg.curvature;
    const double th = p.heading + ds * seg.curvature;
    return {p.x + r * (std::sin(th) - std::sin(p.heading)), p.y - r * (std::cos(th) - std::cos(p.heading)), th};
  }

  std::size_t index(double s) const {
    std::size_t i = 0;
    while (i + 1 < offsets_.size() && s >= offsets_[i + 1]) ++i;
    return i;
  }

  std::vector<Segment> segments_;
  std::vector<Pose> starts_;
  std::vector<double> offsets_;
  Pose end_;
  double half_width_;
  double length_ = 0.0;
  double blend_ = 0.3;
};

}  // namespace gnep::racing
