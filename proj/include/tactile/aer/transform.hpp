#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "tactile/aer/event_stream.hpp"
#include "tactile/aer/spike_tensor.hpp"
#include "tactile/errors.hpp"

namespace tactile::aer {

// Square window cut from the sensor frame. The default is centred in 640x480.
struct CropSpec {
  std::uint16_t origin_x = 190;
  std::uint16_t origin_y = 110;
  std::uint16_t side = 260;
};

struct PoolGrid {
  std::uint16_t cells_x = 20;
  std::uint16_t cells_y = 20;
  std::uint16_t cell_side = 13;
};

struct BinOptions {
  std::uint32_t dt_us = 1000;
  std::uint32_t t_steps = 1000;
  bool binarize = false;  // clamp each bin to {0, 1}
};

struct BinResult {
  SpikeTensor tensor;
  std::size_t dropped = 0;  // events at or after t_steps * dt_us
};

inline EventStream crop(const EventStream& stream, const CropSpec& spec) {
  if (spec.side == 0 || spec.origin_x + spec.side > stream.width() ||
      spec.origin_y + spec.side > stream.height())
    throw ArgumentError("crop " + std::to_string(spec.side) + "px at (" +
                        std::to_string(spec.origin_x) + "," + std::to_string(spec.origin_y) +
                        ") exceeds " + std::to_string(stream.width()) + "x" +
                        std::to_string(stream.height()) + " frame");
  std::vector<Event> kept;
  for (const auto& e : stream.events()) {
    if (e.x < spec.origin_x || e.y < spec.origin_y) continue;
    const unsigned dx = e.x - spec.origin_x;
    const unsigned dy = e.y - spec.origin_y;
    if (dx >= spec.side || dy >= spec.side) continue;
    kept.push_back({e.t, static_cast<std::uint16_t>(dx), static_cast<std::uint16_t>(dy), e.polarity});
  }
  return {spec.side, spec.side, stream.duration_us(), std::move(kept)};
}

inline EventStream pool(const EventStream& stream, const PoolGrid& grid) {
  if (grid.cell_side == 0 || stream.width() != grid.cells_x * grid.cell_side ||
      stream.height() != grid.cells_y * grid.cell_side)
    throw ArgumentError("pool grid " + std::to_string(grid.cells_x) + "x" +
                        std::to_string(grid.cells_y) + " of " + std::to_string(grid.cell_side) +
                        "px does not tile a " + std::to_string(stream.width()) + "x" +
                        std::to_string(stream.height()) + " stream");
  std::vector<Event> cells;
  cells.reserve(stream.size());
  for (const auto& e : stream.events())
    cells.push_back({e.t, static_cast<std::uint16_t>(e.x / grid.cell_side),
                     static_cast<std::uint16_t>(e.y / grid.cell_side), e.polarity});
  return {grid.cells_x, grid.cells_y, stream.duration_us(), std::move(cells)};
}

namespace detail {

inline void bin_into(SpikeTensor& tensor, std::size_t& dropped, const Event& e, bool binarize) {
  const std::uint64_t k = e.t / tensor.dt_us();
  if (k >= tensor.t_steps()) {
    ++dropped;
    return;
  }
  auto& c = tensor.at(static_cast<std::uint32_t>(k), e.y, e.x);
  if (binarize) {
    c = 1;
  } else {
    if (c == std::numeric_limits<std::uint16_t>::max())
      throw ArgumentError("spike count overflow in bin " + std::to_string(k));
    ++c;
  }
}

}  // namespace detail

// Polarities are merged into one channel. With binarize set, the identity
// sum(counts) + dropped == |stream| no longer holds.
inline BinResult bin(const EventStream& stream, const BinOptions& opts = {}) {
  BinResult r{SpikeTensor(opts.t_steps, stream.height(), stream.width(), opts.dt_us), 0};
  for (const auto& e : stream.events()) detail::bin_into(r.tensor, r.dropped, e, opts.binarize);
  return r;
}

// Two-channel variant: index 0 holds OFF events, index 1 holds ON events.
inline std::array<BinResult, 2> bin_by_polarity(const EventStream& stream, const BinOptions& opts = {}) {
  std::array<BinResult, 2> r{
      BinResult{SpikeTensor(opts.t_steps, stream.height(), stream.width(), opts.dt_us), 0},
      BinResult{SpikeTensor(opts.t_steps, stream.height(), stream.width(), opts.dt_us), 0}};
  for (const auto& e : stream.events()) {
    auto& slot = r[e.polarity == Polarity::On ? 1 : 0];
    detail::bin_into(slot.tensor, slot.dropped, e, opts.binarize);
  }
  return r;
}

// Number of time steps covering length_ms at the tensor's bin width.
inline std::uint32_t clip_steps(const SpikeTensor& tensor, double length_ms) {
  const double full_ms = static_cast<double>(tensor.t_steps()) * tensor.dt_us() / 1000.0;
  if (!(length_ms > 0.0) || length_ms > full_ms)
    throw ArgumentError("clip length " + std::to_string(length_ms) + " ms outside (0, " +
                        std::to_string(full_ms) + "]");
  return static_cast<std::uint32_t>(std::ceil(length_ms * 1000.0 / tensor.dt_us() - 1e-9));
}

// Prefix of the time axis covering length_ms.
inline SpikeTensor clip(const SpikeTensor& tensor, double length_ms) {
  const std::uint32_t steps = clip_steps(tensor, length_ms);
  const auto n = static_cast<std::size_t>(steps) * tensor.frame_size();
  std::vector<std::uint16_t> prefix(tensor.counts().begin(), tensor.counts().begin() + n);
  return {steps, tensor.height(), tensor.width(), tensor.dt_us(), std::move(prefix)};
}

// The full crop -> pool -> bin chain with default geometry.
struct Preprocessing {
  CropSpec crop{};
  PoolGrid grid{};
  BinOptions binning{};

  BinResult operator()(const EventStream& raw) const { return bin(pool(aer::crop(raw, crop), grid), binning); }
};

}  // namespace tactile::aer
