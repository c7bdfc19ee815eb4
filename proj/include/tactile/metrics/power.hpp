#pragma once

#include <array>
#include <cmath>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "tactile/errors.hpp"

namespace tactile::metrics {

inline constexpr double kIdlePowerMw = 2.42;

// Measured on-chip power per exploratory motion, mW.
struct MotionPower {
  std::string_view motion;
  double mw;
};
inline constexpr std::array<MotionPower, 6> kMeasuredMotionPowerMw{{{"tap_rotate", 8.47},
                                                                    {"tap_slide", 8.13},
                                                                    {"slide_rotate", 8.04},
                                                                    {"slide", 7.01},
                                                                    {"tap", 4.47},
                                                                    {"rotate", 3.06}}};

inline std::optional<double> measured_power_mw(std::string_view motion) {
  for (const auto& m : kMeasuredMotionPowerMw)
    if (m.motion == motion) return m.mw;
  return std::nullopt;
}

// Affine power model: idle plus per-operation energies.
struct PowerModel {
  double idle_mw = kIdlePowerMw;
  double energy_per_synop_nj = 0.0;
  double energy_per_input_event_nj = 0.0;
};

// Rates in operations per second; nJ/s = 1e-6 mW.
inline double estimate_power(const PowerModel& model, double synop_rate, double event_rate) {
  if (!(synop_rate >= 0.0) || !(event_rate >= 0.0)) throw ArgumentError("power rates must be nonnegative");
  return model.idle_mw + model.energy_per_synop_nj * synop_rate * 1e-6 + model.energy_per_input_event_nj * event_rate * 1e-6;
}

struct PowerObservation {
  double synop_rate = 0.0;
  double event_rate = 0.0;
  double measured_mw = 0.0;
};

struct Calibration {
  PowerModel model;
  std::vector<double> residuals_mw;  // measured - predicted
  double residual_norm = 0.0;
};

// Nonnegative least squares for the two energy coefficients with the idle
// term held fixed. The candidate active sets of a 2-variable problem are
// enumerated directly. A single observation fits only the event coefficient
// (the synop one is forced to 0); if its event rate is zero the roles swap.
inline Calibration calibrate_power(const std::vector<PowerObservation>& obs, double idle_mw = kIdlePowerMw) {
  if (obs.empty()) throw CalibrationError("no power observations");
  double sss = 0.0, see = 0.0, sse = 0.0, ssy = 0.0, sey = 0.0;
  for (const auto& o : obs) {
    if (!(o.synop_rate >= 0.0) || !(o.event_rate >= 0.0) || !std::isfinite(o.synop_rate) ||
        !std::isfinite(o.event_rate) || !std::isfinite(o.measured_mw))
      throw CalibrationError("observations need finite, nonnegative rates");
    const double s = o.synop_rate * 1e-6, e = o.event_rate * 1e-6, y = o.measured_mw - idle_mw;
    sss += s * s;
    see += e * e;
    sse += s * e;
    ssy += s * y;
    sey += e * y;
  }
  if (sss == 0.0 && see == 0.0) throw CalibrationError("degenerate design: every observed rate is zero");

  auto loss = [&](double a, double b) {
    double r = 0.0;
    for (const auto& o : obs) {
      const double d = o.measured_mw - idle_mw - a * o.synop_rate * 1e-6 - b * o.event_rate * 1e-6;
      r += d * d;
    }
    return r;
  };
  double best_a = 0.0, best_b = 0.0, best = loss(0.0, 0.0);
  auto consider = [&](double a, double b) {
    if (a < 0.0 || b < 0.0 || !std::isfinite(a) || !std::isfinite(b)) return;
    const double l = loss(a, b);
    if (l < best) {
      best = l;
      best_a = a;
      best_b = b;
    }
  };
  if (obs.size() == 1) {
    if (see > 0.0)
      consider(0.0, sey / see);
    else
      consider(ssy / sss, 0.0);
  } else {
    if (see > 0.0) consider(0.0, sey / see);
    if (sss > 0.0) consider(ssy / sss, 0.0);
    const double det = sss * see - sse * sse;
    if (std::abs(det) > 1e-12 * sss * see) consider((ssy * see - sey * sse) / det, (sey * sss - ssy * sse) / det);
  }

  Calibration c;
  c.model = {idle_mw, best_a, best_b};
  for (const auto& o : obs) {
    c.residuals_mw.push_back(o.measured_mw - estimate_power(c.model, o.synop_rate, o.event_rate));
    c.residual_norm += c.residuals_mw.back() * c.residuals_mw.back();
  }
  c.residual_norm = std::sqrt(c.residual_norm);
  return c;
}

// Prediction for each observation from a fit on all the others.
inline std::vector<double> leave_one_out(const std::vector<PowerObservation>& obs, double idle_mw = kIdlePowerMw) {
  if (obs.size() < 2) throw CalibrationError("leave-one-out needs at least two observations");
  std::vector<double> out;
  for (std::size_t i = 0; i < obs.size(); ++i) {
    std::vector<PowerObservation> rest;
    for (std::size_t j = 0; j < obs.size(); ++j)
      if (j != i) rest.push_back(obs[j]);
    out.push_back(estimate_power(calibrate_power(rest, idle_mw).model, obs[i].synop_rate, obs[i].event_rate));
  }
  return out;
}

}  // namespace tactile::metrics
