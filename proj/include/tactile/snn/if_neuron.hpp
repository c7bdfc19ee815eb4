#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "tactile/errors.hpp"
#include "tactile/snn/network.hpp"

namespace tactile::snn {

// One integrate-and-fire update of a single unit: integrate, fire on
// v >= threshold, reset, then apply the floor. Returns true on a spike.
template <class Real>
inline bool if_update(Real& v, Real input, Real threshold, Reset reset, bool has_floor, Real floor) {
  v += input;
  const bool spike = v >= threshold;
  if (spike) v = reset == Reset::SubtractThreshold ? v - threshold : Real(0);
  if (has_floor && v < floor) v = floor;
  return spike;
}

template <class Real>
struct IFStepResult {
  std::vector<Real> state;
  std::vector<std::uint8_t> spikes;
};

// Vector form over a layer of units.
template <class Real>
IFStepResult<Real> if_step(std::span<const Real> state, std::span<const Real> input, const IFConfig& cfg) {
  if (state.size() != input.size())
    throw ArgumentError("IF state has " + std::to_string(state.size()) + " units, input has " +
                        std::to_string(input.size()));
  if (!(cfg.threshold > 0.0)) throw ArgumentError("IF threshold must be positive");
  IFStepResult<Real> r{std::vector<Real>(state.begin(), state.end()), std::vector<std::uint8_t>(state.size(), 0)};
  const auto theta = static_cast<Real>(cfg.threshold);
  const auto floor = static_cast<Real>(cfg.lower_bound.value_or(0.0));
  for (std::size_t i = 0; i < state.size(); ++i) {
    if (!std::isfinite(static_cast<double>(input[i])))
      throw NumericError("non-finite IF input at unit " + std::to_string(i));
    r.spikes[i] = if_update(r.state[i], input[i], theta, cfg.reset, cfg.lower_bound.has_value(), floor);
  }
  return r;
}

enum class SurrogateKind { Boxcar, FastSigmoid };

// Stand-in derivative of the spike nonlinearity, evaluated at u = v - threshold.
//   Boxcar:      1 on |u| < width / 2, else 0
//   FastSigmoid: 1 / (1 + width * |u|)^2   (width acts as steepness)
struct SurrogateSpec {
  SurrogateKind kind = SurrogateKind::Boxcar;
  double width = 1.0;

  double derivative(double u) const {
    if (kind == SurrogateKind::Boxcar) return std::abs(u) < 0.5 * width ? 1.0 : 0.0;
    const double d = 1.0 + width * std::abs(u);
    return 1.0 / (d * d);
  }

  // Antiderivative of derivative(), zero at -infinity. Used as a smooth spike
  // in the relaxed forward pass for gradient checks.
  double relaxed(double u) const {
    if (kind == SurrogateKind::Boxcar) {
      const double h = 0.5 * width;
      return u <= -h ? 0.0 : (u >= h ? width : u + h);
    }
    const double k = width;
    if (u < 0.0) return 1.0 / (k * (1.0 - k * u));
    return 2.0 / k - 1.0 / (k * (1.0 + k * u));
  }
};

}  // namespace tactile::snn
