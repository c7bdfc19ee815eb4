#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "tactile/errors.hpp"

namespace tactile::metrics {

// counts[true - 1][predicted - 1]
struct ConfusionMatrix {
  std::size_t classes = 10;
  std::vector<std::vector<std::size_t>> counts;

  std::size_t total() const {
    std::size_t n = 0;
    for (const auto& row : counts)
      for (auto v : row) n += v;
    return n;
  }
  std::size_t trace() const {
    std::size_t n = 0;
    for (std::size_t i = 0; i < counts.size(); ++i) n += counts[i][i];
    return n;
  }
  double accuracy() const { return total() == 0 ? 0.0 : static_cast<double>(trace()) / static_cast<double>(total()); }
};

inline ConfusionMatrix confusion(const std::vector<int>& truth, const std::vector<int>& predicted,
                                 std::size_t classes = 10) {
  if (truth.size() != predicted.size()) throw ArgumentError("truth and predictions differ in length");
  ConfusionMatrix m;
  m.classes = classes;
  m.counts.assign(classes, std::vector<std::size_t>(classes, 0));
  for (std::size_t i = 0; i < truth.size(); ++i) {
    if (truth[i] < 1 || truth[i] > static_cast<int>(classes) || predicted[i] < 1 ||
        predicted[i] > static_cast<int>(classes))
      throw ArgumentError("label outside 1.." + std::to_string(classes));
    ++m.counts[truth[i] - 1][predicted[i] - 1];
  }
  return m;
}

}  // namespace tactile::metrics
