#pragma once

#include <array>
#include <cmath>

#include "gnep/racing/track.hpp"

namespace gnep::racing {

struct CarState {
  double v = 0.0;
  double psi = 0.0;  // heading relative to the center line
  double s = 0.0;
  double e = 0.0;  // lateral offset, positive to the left
  double X = 0.0;
  double Y = 0.0;
};

struct CarInput {
  double a = 0.0;
  double delta = 0.0;
};

/// Arc-length rate ṡ = v cos ψ / (1 − eκ(s)) and the curvature used for it.
template <typename T>
std::array<T, 2> progress_rate(const Track& track, const T& v, const T& psi, const T& s, const T& e) {
  using std::cos;
  const T kappa = track.smooth_curvature(s);
  return {v * cos(psi) / (lift<T>(1.0) - e * kappa), kappa};
}

/// Heading-error rate v tan δ / ℓ − ṡκ.
template <typename T>
T heading_rate(double wheelbase, const T& v, const T& delta, const std::array<T, 2>& rate) {
  using std::tan;
  return v * tan(delta) / lift<T>(wheelbase) - rate[0] * rate[1];
}

/// Frenet kinematic bicycle, explicit Euler. Returns (v, ψ, s, e) after one
/// step; the game's dynamics rows use the same rate functions.
template <typename T>
std::array<T, 4> euler_step(const Track& track, double wheelbase, double dt, const T& v, const T& psi, const T& s,
                            const T& e, const T& a, const T& delta) {
  using std::sin;
  const T h = lift<T>(dt);
  const auto rate = progress_rate(track, v, psi, s, e);
  return {v + h * a, psi + h * heading_rate(wheelbase, v, delta, rate), s + h * rate[0], e + h * v * sin(psi)};
}

inline CarState make_state(const Track& track, double s, double e, double v, double psi = 0.0) {
  const auto p = track.position(s, e);
  return {v, psi, s, e, p[0], p[1]};
}

inline CarState bicycle_step(const CarState& x, const CarInput& u, const Track& track, double dt,
                             double wheelbase = 0.25) {
  const auto n = euler_step<double>(track, wheelbase, dt, x.v, x.psi, x.s, x.e, u.a, u.delta);
  return make_state(track, n[2], n[3], n[0], n[1]);
}

inline bool off_track(const CarState& x, const Track& track) { return std::abs(x.e) > track.half_width(); }

}  // namespace gnep::racing
