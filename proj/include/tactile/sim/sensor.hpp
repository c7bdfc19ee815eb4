#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <vector>

#include "tactile/aer/event_stream.hpp"
#include "tactile/errors.hpp"
#include "tactile/sim/motion.hpp"
#include "tactile/sim/texture.hpp"

namespace tactile::sim {

struct Marker {
  double dx_mm = 0.0;  // offset from the sensor axis, sensor frame
  double dy_mm = 0.0;
  std::uint16_t px = 0;  // blob centre in the camera frame
  std::uint16_t py = 0;
};

// Emulated marker-based tactile skin imaged by an event camera.
//
// Per-marker rate while in contact (depth d = -z > 0):
//   rate = A(d) * M(h) * [ gain * |grad h . v_t| + onset_gain * v_ref * ln(1 + |v_z| / v_ref) ]
// with contact factor A(d) = (d / d_ref)^p and local pressure modulation
// M(h) = exp(pressure_gain * h) at the marker's position on the panel. The
// rate depends only on velocities, so a static contact emits nothing.
struct SensorModel {
  std::vector<Marker> markers;
  double aperture_radius_mm = 10.0;
  double marker_spacing_mm = 1.8;
  double px_per_mm = 13.0;
  std::uint16_t centre_px_x = 320;
  std::uint16_t centre_px_y = 240;
  std::uint16_t marker_pixel_radius = 6;
  double gain = 4.5;  // events per mm of height swept under a marker
  double onset_gain = 45.0;  // events per mm of indentation, small-velocity slope
  double onset_velocity_ref_mm_s = 0.6;  // normal-velocity compression scale
  double contact_depth_ref_mm = 1.5;
  double contact_exponent = 4.0;
  double pressure_gain_per_mm = 10.0;

  // 91 markers: a hexagonal patch of five rings around the axis.
  static SensorModel neurotac_like() {
    SensorModel s;
    constexpr int rings = 5;
    const double root3 = std::sqrt(3.0);
    for (int r = -rings; r <= rings; ++r) {
      for (int q = -rings; q <= rings; ++q) {
        if (std::abs(q + r) > rings) continue;
        Marker m;
        m.dx_mm = s.marker_spacing_mm * (q + 0.5 * r);
        m.dy_mm = s.marker_spacing_mm * (0.5 * root3 * r);
        m.px = static_cast<std::uint16_t>(std::lround(s.centre_px_x + m.dx_mm * s.px_per_mm));
        m.py = static_cast<std::uint16_t>(std::lround(s.centre_px_y + m.dy_mm * s.px_per_mm));
        s.markers.push_back(m);
      }
    }
    s.validate();
    return s;
  }

  void validate() const {
    if (!(gain > 0.0 && onset_gain > 0.0 && onset_velocity_ref_mm_s > 0.0 && contact_depth_ref_mm > 0.0 &&
          contact_exponent > 0.0 && px_per_mm > 0.0))
      throw ArgumentError("sensor gains and scales must be positive");
    for (const auto& m : markers) {
      if (std::hypot(m.dx_mm, m.dy_mm) > aperture_radius_mm)
        throw ArgumentError("marker outside the sensor aperture");
      if (m.px < marker_pixel_radius || m.py < marker_pixel_radius ||
          m.px + marker_pixel_radius >= aer::kSensorWidth || m.py + marker_pixel_radius >= aer::kSensorHeight)
        throw ArgumentError("marker blob outside the camera frame");
    }
  }

  // Monotone increasing in depth, zero without contact.
  double contact_area_factor(double depth_mm) const {
    if (!(depth_mm > 0.0)) return 0.0;
    return std::pow(depth_mm / contact_depth_ref_mm, contact_exponent);
  }
};

inline const SensorModel& default_sensor() {
  static const SensorModel sensor = SensorModel::neurotac_like();
  return sensor;
}

struct MarkerResponse {
  double rate = 0.0;  // events/s
  double intensity_rate = 0.0;  // d/dt of A(d) M(h); its sign sets event polarity
};

// Per-marker response for the sensor held at `pose` and moving with `vel`.
inline std::vector<MarkerResponse> marker_responses(const TextureField& field, const SensorModel& sensor,
                                                    const Pose& pose, const PoseVelocity& vel) {
  std::vector<MarkerResponse> out(sensor.markers.size());
  const double depth = -pose.z_mm;
  const double area = sensor.contact_area_factor(depth);
  if (area <= 0.0) return out;
  const double d_area = sensor.contact_exponent * area / depth * (-vel.vz_mm_s);
  const double theta = pose.theta_deg * std::numbers::pi / 180.0;
  const double omega = vel.omega_deg_s * std::numbers::pi / 180.0;
  const double c = std::cos(theta), s = std::sin(theta);
  const double v_ref = sensor.onset_velocity_ref_mm_s;
  const double normal = sensor.onset_gain * v_ref * std::log1p(std::abs(vel.vz_mm_s) / v_ref);
  for (std::size_t i = 0; i < sensor.markers.size(); ++i) {
    const auto& m = sensor.markers[i];
    const double rx = c * m.dx_mm - s * m.dy_mm;
    const double ry = s * m.dx_mm + c * m.dy_mm;
    const auto h = field.sample(pose.x_mm + rx, pose.y_mm + ry);
    const double vu = vel.vx_mm_s - omega * ry;
    const double vv = vel.vy_mm_s + omega * rx;
    const double sweep = h.du * vu + h.dv * vv;  // dh/dt under the marker
    const double pressure = std::exp(sensor.pressure_gain_per_mm * h.height);
    out[i].rate = area * pressure * (sensor.gain * std::abs(sweep) + normal);
    out[i].intensity_rate = pressure * (d_area + area * sensor.pressure_gain_per_mm * sweep);
  }
  return out;
}

// Rates only (events/s per marker).
inline std::vector<double> event_rate_field(const TextureField& field, const SensorModel& sensor,
                                            const Pose& pose, const PoseVelocity& vel) {
  const auto resp = marker_responses(field, sensor, pose, vel);
  std::vector<double> rates(resp.size());
  for (std::size_t i = 0; i < resp.size(); ++i) rates[i] = resp[i].rate;
  return rates;
}

}  // namespace tactile::sim
