#pragma once

#include <cmath>
#include <cstdint>
#include <ostream>
#include <string>
#include <vector>

#include "tactile/errors.hpp"
#include "tactile/format.hpp"
#include "tactile/parallel.hpp"
#include "tactile/snn/gradient.hpp"

namespace tactile::metrics {

struct CurvePoint {
  double length_ms = 0.0;
  double accuracy = 0.0;  // mean over runs
  std::size_t n = 0;  // test trials per run
  std::size_t runs = 1;
};

struct AccuracyCurve {
  std::string motion;
  std::vector<CurvePoint> points;
};

// Per-trial predictions (1-based) at every prefix length, [length][trial].
struct PrefixPredictions {
  std::vector<double> lengths_ms;
  std::vector<std::vector<int>> predicted;
};

// Steps covering `length_ms` at a model time step of dt_us, rounded up.
inline std::uint32_t steps_for_length(double length_ms, std::uint32_t dt_us) {
  return static_cast<std::uint32_t>(std::ceil(length_ms * 1000.0 / static_cast<double>(dt_us) - 1e-9));
}

// One forward pass per trial: the readout is causal, so the prediction for a
// clip of length L is the argmax of the per-step readout summed over the
// first L ms, accumulated in the same order as a standalone forward pass.
template <class Real>
PrefixPredictions prefix_predictions(const snn::CompiledNetwork<Real>& net, const std::vector<snn::Example>& set,
                                     std::uint32_t dt_us, double step_ms = 50.0, unsigned jobs = 1) {
  if (set.empty()) throw ArgumentError("empty test set");
  if (dt_us == 0 || !(step_ms > 0.0)) throw ArgumentError("time step and curve step must be positive");
  const std::uint32_t t_steps = set.front().input->t_steps;
  for (const auto& e : set)
    if (e.input->t_steps != t_steps) throw ArgumentError("test inputs differ in length");
  const double total_ms = static_cast<double>(t_steps) * dt_us / 1000.0;
  PrefixPredictions out;
  std::vector<std::uint32_t> cut;
  for (int k = 1; k * step_ms <= total_ms + 1e-9; ++k) {
    out.lengths_ms.push_back(k * step_ms);
    cut.push_back(std::min(t_steps, steps_for_length(k * step_ms, dt_us)));
  }
  if (cut.empty()) throw ArgumentError("inputs are shorter than one curve step");
  out.predicted.assign(cut.size(), std::vector<int>(set.size(), 0));
  snn::ForwardOptions fo;
  fo.record_readout = true;
  parallel_for(set.size(), jobs, [&](std::size_t i) {
    const auto r = snn::forward(net, *set[i].input, fo);
    std::vector<double> acc(r.scores.size(), 0.0);
    std::uint32_t t = 0;
    for (std::size_t k = 0; k < cut.size(); ++k) {
      for (; t < cut[k]; ++t)
        for (std::size_t c = 0; c < acc.size(); ++c) acc[c] += r.trace.readout[t][c];
      out.predicted[k][i] = static_cast<int>(snn::argmax_class(acc)) + 1;
    }
  });
  return out;
}

template <class Real>
AccuracyCurve accuracy_vs_length(const snn::CompiledNetwork<Real>& net, const std::vector<snn::Example>& set,
                                 std::uint32_t dt_us, double step_ms = 50.0, unsigned jobs = 1,
                                 const std::string& motion = {}) {
  const auto pp = prefix_predictions(net, set, dt_us, step_ms, jobs);
  AccuracyCurve curve;
  curve.motion = motion;
  for (std::size_t k = 0; k < pp.lengths_ms.size(); ++k) {
    std::size_t correct = 0;
    for (std::size_t i = 0; i < set.size(); ++i) correct += pp.predicted[k][i] == set[i].label;
    curve.points.push_back(
        {pp.lengths_ms[k], static_cast<double>(correct) / static_cast<double>(set.size()), set.size(), 1});
  }
  return curve;
}

// Pointwise mean of runs sharing the same lengths.
inline AccuracyCurve mean_curve(const std::vector<AccuracyCurve>& runs) {
  if (runs.empty()) throw ArgumentError("no curves to average");
  AccuracyCurve out = runs.front();
  for (auto& p : out.points) {
    p.accuracy = 0.0;
    p.runs = 0;
  }
  for (const auto& r : runs) {
    if (r.points.size() != out.points.size()) throw ArgumentError("curves differ in length");
    for (std::size_t k = 0; k < r.points.size(); ++k) {
      if (r.points[k].length_ms != out.points[k].length_ms) throw ArgumentError("curves differ in sample lengths");
      out.points[k].accuracy += r.points[k].accuracy * static_cast<double>(r.points[k].runs);
      out.points[k].runs += r.points[k].runs;
    }
  }
  for (auto& p : out.points) p.accuracy /= static_cast<double>(p.runs);
  return out;
}

struct ConvergenceReport {
  double final_accuracy = 0.0;
  double band = 0.05;
  double time_to_band_ms = 0.0;
};

// Smallest length from which the curve stays within `band` below its final
// value. A 1e-12 slack absorbs rounding in final - band.
inline ConvergenceReport time_to_band(const AccuracyCurve& curve, double band = 0.05) {
  if (curve.points.empty()) throw ArgumentError("empty accuracy curve");
  ConvergenceReport r;
  r.band = band;
  r.final_accuracy = curve.points.back().accuracy;
  const double floor = r.final_accuracy - band - 1e-12;
  std::size_t first = curve.points.size() - 1;
  while (first > 0 && curve.points[first - 1].accuracy >= floor) --first;
  r.time_to_band_ms = curve.points[first].length_ms;
  return r;
}

inline void write_curve_csv(std::ostream& out, const AccuracyCurve& curve) {
  out << "length_ms,accuracy,n\n";
  for (const auto& p : curve.points) out << format_double(p.length_ms) << ',' << format_double(p.accuracy) << ',' << p.n << '\n';
}

}  // namespace tactile::metrics
