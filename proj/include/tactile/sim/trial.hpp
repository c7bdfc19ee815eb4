#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <memory>
#include <random>
#include <vector>

#include "tactile/aer/event_stream.hpp"
#include "tactile/rng.hpp"
#include "tactile/sim/motion.hpp"
#include "tactile/sim/sensor.hpp"
#include "tactile/sim/texture.hpp"

namespace tactile::sim {

// Rates are integrated at this step, matching the downstream 1 ms bins.
inline constexpr double kIntegrationStepMs = 1.0;

struct TrialSpec {
  int texture_id = 1;
  MotionProfile motion{};
  std::uint64_t seed = 0;
  std::shared_ptr<const SensorModel> sensor;  // null means default_sensor()

  const SensorModel& sensor_model() const { return sensor ? *sensor : default_sensor(); }

  void validate() const {
    texture_by_id(texture_id);
    motion.validate();
    sensor_model().validate();
  }
};

namespace detail {

inline std::size_t integration_steps(const MotionProfile& m) {
  return static_cast<std::size_t>(std::ceil(m.duration_ms / kIntegrationStepMs - 1e-9));
}

// Midpoint of step k, clamped to the motion duration.
inline double step_midpoint_ms(const MotionProfile& m, std::size_t k) {
  return std::min((static_cast<double>(k) + 0.5) * kIntegrationStepMs, m.duration_ms);
}

}  // namespace detail

// Expected number of events over the trial: the sum of per-step Poisson
// means the sampler in simulate_trial draws from.
inline double expected_event_count(const TrialSpec& spec) {
  spec.validate();
  const auto& field = texture_by_id(spec.texture_id);
  const auto& sensor = spec.sensor_model();
  const double dt_s = kIntegrationStepMs / 1000.0;
  double total = 0.0;
  for (std::size_t k = 0, n = detail::integration_steps(spec.motion); k < n; ++k) {
    const double t = detail::step_midpoint_ms(spec.motion, k);
    for (double r : event_rate_field(field, sensor, motion_pose(spec.motion, t), motion_velocity(spec.motion, t)))
      total += r * dt_s;
  }
  return total;
}

// Inhomogeneous Poisson emission per marker at 1 ms resolution. Each event
// lands on a uniformly chosen pixel of the marker's blob at a uniform time
// within its step. Every marker owns a random stream keyed by (seed, marker),
// so the output is a pure function of the spec.
inline aer::EventStream simulate_trial(const TrialSpec& spec) {
  spec.validate();
  const auto& field = texture_by_id(spec.texture_id);
  const auto& sensor = spec.sensor_model();
  const auto& motion = spec.motion;
  const double dt_s = kIntegrationStepMs / 1000.0;
  const auto step_us = static_cast<std::uint32_t>(kIntegrationStepMs * 1000.0);
  const auto duration_us = static_cast<std::uint32_t>(std::llround(motion.duration_ms * 1000.0));
  const int radius = sensor.marker_pixel_radius;

  std::vector<Rng> streams;
  streams.reserve(sensor.markers.size());
  for (std::size_t m = 0; m < sensor.markers.size(); ++m) streams.push_back(make_rng(spec.seed, {0x7472u, m}));

  std::vector<aer::Event> events;
  for (std::size_t k = 0, n = detail::integration_steps(motion); k < n; ++k) {
    const double t = detail::step_midpoint_ms(motion, k);
    const auto resp = marker_responses(field, sensor, motion_pose(motion, t), motion_velocity(motion, t));
    const auto step_start = static_cast<std::uint32_t>(k) * step_us;
    const std::uint32_t step_len = std::min(step_us, duration_us - step_start);
    for (std::size_t m = 0; m < resp.size(); ++m) {
      const double mean = resp[m].rate * dt_s;
      if (!(mean > 0.0)) continue;
      auto& rng = streams[m];
      const unsigned count = std::poisson_distribution<unsigned>{mean}(rng);
      const auto polarity = resp[m].intensity_rate >= 0.0 ? aer::Polarity::On : aer::Polarity::Off;
      std::uniform_int_distribution<std::uint32_t> offset(0, step_len - 1);
      std::uniform_int_distribution<int> jitter(-radius, radius);
      for (unsigned i = 0; i < count; ++i) {
        int dx, dy;
        do {
          dx = jitter(rng);
          dy = jitter(rng);
        } while (dx * dx + dy * dy > radius * radius);
        events.push_back({step_start + offset(rng), static_cast<std::uint16_t>(sensor.markers[m].px + dx),
                          static_cast<std::uint16_t>(sensor.markers[m].py + dy), polarity});
      }
    }
  }
  std::stable_sort(events.begin(), events.end(), [](const auto& a, const auto& b) { return a.t < b.t; });
  return {aer::kSensorWidth, aer::kSensorHeight, duration_us, std::move(events)};
}

}  // namespace tactile::sim
