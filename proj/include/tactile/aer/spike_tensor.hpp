#pragma once

#include <cstddef>
#include <cstdint>
#include <numeric>
#include <string>
#include <vector>

#include "tactile/errors.hpp"

namespace tactile::aer {

// Binned spike counts, row-major (t, y, x).
class SpikeTensor {
public:
  SpikeTensor() = default;

  SpikeTensor(std::uint32_t t_steps, std::uint16_t h, std::uint16_t w, std::uint32_t dt_us)
      : t_steps_(t_steps), h_(h), w_(w), dt_us_(dt_us),
        counts_(static_cast<std::size_t>(t_steps) * h * w, 0) {
    if (dt_us == 0) throw ArgumentError("spike tensor bin width must be positive");
  }

  SpikeTensor(std::uint32_t t_steps, std::uint16_t h, std::uint16_t w, std::uint32_t dt_us,
              std::vector<std::uint16_t> counts)
      : t_steps_(t_steps), h_(h), w_(w), dt_us_(dt_us), counts_(std::move(counts)) {
    if (dt_us == 0) throw ArgumentError("spike tensor bin width must be positive");
    if (counts_.size() != static_cast<std::size_t>(t_steps) * h * w)
      throw ArgumentError("spike tensor count buffer has " + std::to_string(counts_.size()) +
                          " entries, shape needs " +
                          std::to_string(static_cast<std::size_t>(t_steps) * h * w));
  }

  std::uint32_t t_steps() const noexcept { return t_steps_; }
  std::uint16_t height() const noexcept { return h_; }
  std::uint16_t width() const noexcept { return w_; }
  std::uint32_t dt_us() const noexcept { return dt_us_; }
  std::size_t frame_size() const noexcept { return static_cast<std::size_t>(h_) * w_; }

  std::uint16_t at(std::uint32_t t, std::uint16_t y, std::uint16_t x) const {
    return counts_[index(t, y, x)];
  }
  std::uint16_t& at(std::uint32_t t, std::uint16_t y, std::uint16_t x) { return counts_[index(t, y, x)]; }

  const std::vector<std::uint16_t>& counts() const noexcept { return counts_; }

  std::uint64_t total() const {
    return std::accumulate(counts_.begin(), counts_.end(), std::uint64_t{0});
  }

  friend bool operator==(const SpikeTensor&, const SpikeTensor&) = default;

private:
  std::size_t index(std::uint32_t t, std::uint16_t y, std::uint16_t x) const {
    return (static_cast<std::size_t>(t) * h_ + y) * w_ + x;
  }

  std::uint32_t t_steps_ = 0;
  std::uint16_t h_ = 0;
  std::uint16_t w_ = 0;
  std::uint32_t dt_us_ = 1000;
  std::vector<std::uint16_t> counts_;
};

}  // namespace tactile::aer
