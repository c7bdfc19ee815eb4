#pragma once

#include <json.hpp>

#include "tactile/metrics/confusion.hpp"
#include "tactile/metrics/curve.hpp"
#include "tactile/metrics/power.hpp"
#include "tactile/metrics/sweep.hpp"

namespace tactile::metrics {

using nlohmann::json;

inline json to_json(const ConvergenceReport& r) {
  return {{"final_accuracy", r.final_accuracy}, {"band", r.band}, {"time_to_band_ms", r.time_to_band_ms}};
}

inline json to_json(const AccuracyCurve& c) {
  json pts = json::array();
  for (const auto& p : c.points)
    pts.push_back({{"length_ms", p.length_ms}, {"accuracy", p.accuracy}, {"n", p.n}, {"runs", p.runs}});
  return {{"motion", c.motion}, {"points", pts}};
}

inline json to_json(const ConfusionMatrix& m) {
  return {{"classes", m.classes}, {"counts", m.counts}, {"accuracy", m.accuracy()}};
}

inline json to_json(const PowerModel& m) {
  return {{"idle_mw", m.idle_mw},
          {"energy_per_synop_nj", m.energy_per_synop_nj},
          {"energy_per_input_event_nj", m.energy_per_input_event_nj}};
}

inline PowerModel power_model_from_json(const json& j) {
  PowerModel m;
  m.idle_mw = j.value("idle_mw", kIdlePowerMw);
  m.energy_per_synop_nj = j.value("energy_per_synop_nj", 0.0);
  m.energy_per_input_event_nj = j.value("energy_per_input_event_nj", 0.0);
  if (m.idle_mw < 0.0 || m.energy_per_synop_nj < 0.0 || m.energy_per_input_event_nj < 0.0)
    throw ArgumentError("power model coefficients must be nonnegative");
  return m;
}

inline json to_json(const SweepResult& r) {
  json cells = json::array();
  for (const auto& c : r.cells)
    cells.push_back({{"depth_mm", c.depth_mm},
                     {"speed", c.speed},
                     {"n", c.n},
                     {"correct", c.correct},
                     {"accuracy", c.accuracy},
                     {"flagged", c.flagged}});
  return {{"axis", r.grid.axis == SpeedAxis::Linear ? "linear" : "angular"},
          {"min_count", r.grid.min_count},
          {"cells", cells}};
}

}  // namespace tactile::metrics
