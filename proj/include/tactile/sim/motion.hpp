#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <optional>
#include <string>
#include <string_view>

#include "tactile/errors.hpp"
#include "tactile/sim/texture.hpp"

namespace tactile::sim {

inline constexpr double kMaxDepthMm = 3.0;
inline constexpr double kSensorRadiusMm = 10.0;

enum class MotionKind { Slide, Tap, Rotate, TapSlide, TapRotate, SlideRotate };

inline constexpr std::array<MotionKind, 6> kAllMotions{MotionKind::Slide,    MotionKind::Tap,
                                                       MotionKind::Rotate,   MotionKind::TapSlide,
                                                       MotionKind::TapRotate, MotionKind::SlideRotate};

inline std::string_view to_string(MotionKind k) {
  switch (k) {
    case MotionKind::Slide: return "slide";
    case MotionKind::Tap: return "tap";
    case MotionKind::Rotate: return "rotate";
    case MotionKind::TapSlide: return "tap_slide";
    case MotionKind::TapRotate: return "tap_rotate";
    case MotionKind::SlideRotate: return "slide_rotate";
  }
  return "?";
}

inline MotionKind motion_from_string(std::string_view s) {
  for (auto k : kAllMotions)
    if (to_string(k) == s) return k;
  throw ArgumentError("unknown motion kind '" + std::string(s) + "'");
}

inline bool has_slide(MotionKind k) {
  return k == MotionKind::Slide || k == MotionKind::TapSlide || k == MotionKind::SlideRotate;
}
inline bool has_rotation(MotionKind k) {
  return k == MotionKind::Rotate || k == MotionKind::TapRotate || k == MotionKind::SlideRotate;
}
inline bool has_tap(MotionKind k) {
  return k == MotionKind::Tap || k == MotionKind::TapSlide || k == MotionKind::TapRotate;
}

// Kinematics of one exploratory trial. Sliding runs along +x. Defaults are
// the fixed-condition protocol values.
struct MotionProfile {
  MotionKind kind = MotionKind::Slide;
  double depth_mm = 1.5;
  double slide_speed_mm_s = 30.0;
  double slide_distance_mm = 30.0;
  double angular_speed_deg_s = 30.0;
  double rotation_deg = 30.0;
  double tap_speed_mm_s = 1.5;  // pure tap: single descent
  double compound_tap_speed_mm_s = 30.0;  // tap inside a compound: oscillation between 0 and depth
  double duration_ms = 1000.0;
  double start_x_mm = 35.0;
  double start_y_mm = 50.0;

  double slide_travel_mm() const {
    return has_slide(kind) ? std::min(slide_speed_mm_s * duration_ms / 1000.0, slide_distance_mm) : 0.0;
  }

  // Throws ArgumentError on any violated invariant, including a start
  // position whose motion would carry the sensor footprint off the panel.
  void validate() const {
    if (!(depth_mm >= 0.0) || depth_mm > kMaxDepthMm)
      throw ArgumentError("contact depth " + std::to_string(depth_mm) + " mm outside [0, 3]");
    if (!(duration_ms > 0.0)) throw ArgumentError("motion duration must be positive");
    if (slide_speed_mm_s < 0.0 || slide_distance_mm < 0.0 || angular_speed_deg_s < 0.0 ||
        rotation_deg < 0.0 || tap_speed_mm_s < 0.0 || compound_tap_speed_mm_s < 0.0)
      throw ArgumentError("motion speeds and extents must be nonnegative");
    const double r = kSensorRadiusMm;
    if (start_x_mm - r < 0.0 || start_x_mm + slide_travel_mm() + r > kPanelExtentMm ||
        start_y_mm - r < 0.0 || start_y_mm + r > kPanelExtentMm)
      throw ArgumentError("motion footprint leaves the 100 mm panel");
  }
};

struct Pose {
  double x_mm = 0.0;
  double y_mm = 0.0;
  double theta_deg = 0.0;
  double z_mm = 0.0;  // negative while indenting
};

struct PoseVelocity {
  double vx_mm_s = 0.0;
  double vy_mm_s = 0.0;
  double omega_deg_s = 0.0;
  double vz_mm_s = 0.0;
};

namespace detail {

inline void check_time(const MotionProfile& p, double t_ms) {
  if (!(t_ms >= 0.0 && t_ms <= p.duration_ms))
    throw ArgumentError("time " + std::to_string(t_ms) + " ms outside [0, " + std::to_string(p.duration_ms) + "]");
}

// Signed indentation and its rate for the tap component.
inline std::pair<double, double> tap_state(const MotionProfile& p, double t_s) {
  if (p.depth_mm <= 0.0) return {0.0, 0.0};
  if (p.kind == MotionKind::Tap) {
    const double reach = p.tap_speed_mm_s * t_s;
    if (reach < p.depth_mm) return {-reach, -p.tap_speed_mm_s};
    return {-p.depth_mm, 0.0};
  }
  const double speed = p.compound_tap_speed_mm_s;
  if (speed <= 0.0) return {0.0, 0.0};
  const double phase = std::fmod(speed * t_s, 2.0 * p.depth_mm);
  if (phase < p.depth_mm) return {-phase, -speed};
  return {-(2.0 * p.depth_mm - phase), speed};
}

}  // namespace detail

// Compound motions superpose their components: each coordinate follows the
// law of the component that owns it, concurrently.
inline Pose motion_pose(const MotionProfile& p, double t_ms) {
  detail::check_time(p, t_ms);
  const double t_s = t_ms / 1000.0;
  Pose pose{p.start_x_mm, p.start_y_mm, 0.0, -p.depth_mm};
  if (has_slide(p.kind)) pose.x_mm += std::min(p.slide_speed_mm_s * t_s, p.slide_distance_mm);
  if (has_rotation(p.kind)) pose.theta_deg = std::min(p.angular_speed_deg_s * t_s, p.rotation_deg);
  if (has_tap(p.kind)) pose.z_mm = detail::tap_state(p, t_s).first;
  return pose;
}

// Right-continuous time derivative of motion_pose.
inline PoseVelocity motion_velocity(const MotionProfile& p, double t_ms) {
  detail::check_time(p, t_ms);
  const double t_s = t_ms / 1000.0;
  PoseVelocity v;
  if (has_slide(p.kind) && p.slide_speed_mm_s * t_s < p.slide_distance_mm) v.vx_mm_s = p.slide_speed_mm_s;
  if (has_rotation(p.kind) && p.angular_speed_deg_s * t_s < p.rotation_deg) v.omega_deg_s = p.angular_speed_deg_s;
  if (has_tap(p.kind)) v.vz_mm_s = detail::tap_state(p, t_s).second;
  return v;
}

}  // namespace tactile::sim
