#pragma once

#include <cmath>
#include <ostream>
#include <string>
#include <vector>

#include "tactile/errors.hpp"
#include "tactile/format.hpp"
#include "tactile/sim/dataset.hpp"

namespace tactile::metrics {

enum class SpeedAxis { Linear, Angular };

// Cell centres; a trial falls into the nearest centre on each axis (ties go
// to the lower centre).
struct SweepGrid {
  std::vector<double> depths_mm{0.5, 1.0, 1.5, 2.0, 2.5};
  std::vector<double> speeds{10.0, 20.0, 30.0, 40.0, 50.0};
  SpeedAxis axis = SpeedAxis::Linear;
  std::size_t min_count = 5;

  void validate() const {
    for (const auto* v : {&depths_mm, &speeds}) {
      if (v->empty()) throw ArgumentError("sweep grid axes must be nonempty");
      for (std::size_t i = 1; i < v->size(); ++i)
        if (!((*v)[i] > (*v)[i - 1])) throw ArgumentError("sweep grid centres must be strictly increasing");
    }
  }
};

// Linear axis: slide speed for sliding motions, tap oscillation speed otherwise.
inline double sweep_speed(const sim::MotionProfile& m, SpeedAxis axis) {
  if (axis == SpeedAxis::Angular) return m.angular_speed_deg_s;
  return sim::has_slide(m.kind) ? m.slide_speed_mm_s : m.compound_tap_speed_mm_s;
}

inline std::size_t nearest_centre(const std::vector<double>& centres, double v) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < centres.size(); ++i)
    if (std::abs(v - centres[i]) < std::abs(v - centres[best])) best = i;
  return best;
}

struct SweepCell {
  double depth_mm = 0.0;
  double speed = 0.0;
  std::size_t n = 0;
  std::size_t correct = 0;
  double accuracy = 0.0;  // correct / n, 0 when empty
  bool flagged = false;  // n < min_count
};

struct SweepResult {
  SweepGrid grid;
  std::vector<SweepCell> cells;  // depth-major

  const SweepCell& at(std::size_t di, std::size_t si) const { return cells.at(di * grid.speeds.size() + si); }

  // Pooled accuracy over all cells with the given depth centre index.
  double depth_accuracy(std::size_t di) const {
    std::size_t n = 0, c = 0;
    for (std::size_t si = 0; si < grid.speeds.size(); ++si) {
      n += at(di, si).n;
      c += at(di, si).correct;
    }
    return n == 0 ? 0.0 : static_cast<double>(c) / static_cast<double>(n);
  }
};

// Buckets trials by their recorded (depth, speed) and scores predictions
// (1-based texture ids, aligned with `trials`).
inline SweepResult generalization_sweep(const std::vector<sim::TrialRecord>& trials, const std::vector<int>& predicted,
                                        const SweepGrid& grid = {}) {
  grid.validate();
  if (trials.size() != predicted.size()) throw ArgumentError("one prediction per trial is required");
  SweepResult r;
  r.grid = grid;
  for (double d : grid.depths_mm)
    for (double s : grid.speeds) r.cells.push_back({d, s, 0, 0, 0.0, false});
  for (std::size_t i = 0; i < trials.size(); ++i) {
    const auto di = nearest_centre(grid.depths_mm, trials[i].motion.depth_mm);
    const auto si = nearest_centre(grid.speeds, sweep_speed(trials[i].motion, grid.axis));
    auto& cell = r.cells[di * grid.speeds.size() + si];
    ++cell.n;
    cell.correct += predicted[i] == trials[i].texture_id;
  }
  for (auto& c : r.cells) {
    c.accuracy = c.n == 0 ? 0.0 : static_cast<double>(c.correct) / static_cast<double>(c.n);
    c.flagged = c.n < grid.min_count;
  }
  return r;
}

inline void write_sweep_csv(std::ostream& out, const SweepResult& r) {
  out << "depth_mm,speed,accuracy,n\n";
  for (const auto& c : r.cells)
    out << format_double(c.depth_mm) << ',' << format_double(c.speed) << ',' << format_double(c.accuracy) << ','
        << c.n << '\n';
}

}  // namespace tactile::metrics
