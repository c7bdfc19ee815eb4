#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <memory>
#include <numeric>
#include <string>
#include <variant>
#include <vector>

#include "tactile/aer/spike_tensor.hpp"
#include "tactile/errors.hpp"
#include "tactile/snn/if_neuron.hpp"
#include "tactile/snn/network.hpp"

namespace tactile::snn {

// Input spikes stored per time step as ascending (flat index, count) pairs.
struct SparseInput {
  Shape shape{1, 20, 20};
  std::uint32_t t_steps = 0;
  std::vector<std::uint32_t> offsets{0};  // t_steps + 1 entries
  std::vector<std::uint32_t> index;
  std::vector<std::uint16_t> count;

  static SparseInput from_tensor(const aer::SpikeTensor& tensor) {
    SparseInput s;
    s.shape = {1, tensor.height(), tensor.width()};
    s.t_steps = tensor.t_steps();
    s.offsets.assign(1, 0);
    const std::size_t frame = tensor.frame_size();
    const auto& c = tensor.counts();
    for (std::uint32_t t = 0; t < tensor.t_steps(); ++t) {
      const std::size_t base = static_cast<std::size_t>(t) * frame;
      for (std::size_t i = 0; i < frame; ++i) {
        if (c[base + i] == 0) continue;
        s.index.push_back(static_cast<std::uint32_t>(i));
        s.count.push_back(c[base + i]);
      }
      s.offsets.push_back(static_cast<std::uint32_t>(s.index.size()));
    }
    return s;
  }

  // Two-channel input (channel 0 = OFF, channel 1 = ON).
  static SparseInput from_polarity_tensors(const aer::SpikeTensor& off, const aer::SpikeTensor& on) {
    if (off.t_steps() != on.t_steps() || off.height() != on.height() || off.width() != on.width())
      throw ArgumentError("polarity tensors differ in shape");
    SparseInput s;
    s.shape = {2, off.height(), off.width()};
    s.t_steps = off.t_steps();
    const std::size_t frame = off.frame_size();
    for (std::uint32_t t = 0; t < s.t_steps; ++t) {
      const std::size_t base = static_cast<std::size_t>(t) * frame;
      for (std::size_t i = 0; i < frame; ++i) {
        for (std::uint32_t ch = 0; ch < 2; ++ch) {
          const auto n = (ch == 0 ? off : on).counts()[base + i];
          if (n == 0) continue;
          s.index.push_back(static_cast<std::uint32_t>(i * 2 + ch));
          s.count.push_back(n);
        }
      }
      s.offsets.push_back(static_cast<std::uint32_t>(s.index.size()));
    }
    return s;
  }

  aer::SpikeTensor to_tensor(std::uint32_t dt_us = 1000) const {
    if (shape.c != 1) throw ArgumentError("only single-channel inputs convert to a SpikeTensor");
    aer::SpikeTensor tensor(t_steps, static_cast<std::uint16_t>(shape.h), static_cast<std::uint16_t>(shape.w), dt_us);
    for (std::uint32_t t = 0; t < t_steps; ++t)
      for (auto i = offsets[t]; i < offsets[t + 1]; ++i)
        tensor.at(t, static_cast<std::uint16_t>(index[i] / shape.w), static_cast<std::uint16_t>(index[i] % shape.w)) =
            count[i];
    return tensor;
  }

  // First `steps` time steps.
  SparseInput prefix(std::uint32_t steps) const {
    if (steps > t_steps) throw ArgumentError("prefix longer than the input");
    SparseInput s;
    s.shape = shape;
    s.t_steps = steps;
    s.offsets.assign(offsets.begin(), offsets.begin() + steps + 1);
    s.index.assign(index.begin(), index.begin() + offsets[steps]);
    s.count.assign(count.begin(), count.begin() + offsets[steps]);
    return s;
  }

  std::uint64_t total() const { return std::accumulate(count.begin(), count.end(), std::uint64_t{0}); }
};

enum class SpikeMode { Binary, Relaxed };

struct ForwardOptions {
  bool record_readout = false;  // per-step readout, needed for prefix evaluation
  bool record_spikes = false;  // per-step spike indices of every IF layer
  SpikeMode mode = SpikeMode::Binary;
  SurrogateSpec surrogate{};  // used by Relaxed mode and by tapes
};

// Activity record of one forward pass. Layers are indexed by IF layer
// (spike counts) or weighted layer (synaptic operations), in network order.
struct ForwardTrace {
  std::uint32_t t_steps = 0;
  std::vector<std::vector<std::uint32_t>> spikes_per_step;  // [if layer][t]
  std::vector<std::vector<std::uint64_t>> synops_per_step;  // [weighted layer][t]
  std::vector<std::vector<std::vector<std::uint32_t>>> spike_indices;  // [if layer][t] -> units, optional
  std::vector<std::vector<double>> readout;  // [t][class], optional

  std::uint64_t total_spikes() const {
    std::uint64_t n = 0;
    for (const auto& l : spikes_per_step) n = std::accumulate(l.begin(), l.end(), n);
    return n;
  }

  friend bool operator==(const ForwardTrace&, const ForwardTrace&) = default;
};

struct ForwardResult {
  std::vector<double> scores;  // readout summed over time, one per class
  ForwardTrace trace;
};

// What backpropagation needs from a forward pass: surrogate-active IF units
// and the (post-pooling) inputs of every weighted layer, per time step.
template <class Real>
struct Tape {
  struct ActiveUnits {
    std::vector<std::uint32_t> offsets{0};
    std::vector<std::uint32_t> unit;
    std::vector<Real> derivative;
  };
  struct LayerInputs {
    std::vector<std::uint32_t> offsets{0};
    std::vector<std::uint32_t> index;
    std::vector<Real> value;
  };
  std::uint32_t t_steps = 0;
  std::vector<ActiveUnits> active;  // one per hidden block
  std::vector<LayerInputs> inputs;  // one per block

  void clear(std::size_t blocks) {
    t_steps = 0;
    active.assign(blocks > 0 ? blocks - 1 : 0, ActiveUnits{});
    inputs.assign(blocks, LayerInputs{});
  }
};

// A weighted layer together with the pooling in front of it and the IF layer
// behind it (absent for the readout).
template <class Real>
struct Block {
  Shape raw_in;  // before pooling
  Shape in;  // after pooling
  std::vector<std::int32_t> pool_map;  // raw index -> pooled index, or -1; empty without pooling
  Real pool_scale = Real(1);

  bool conv = false;
  Conv2D conv_spec{};
  Shape out;
  std::vector<Real> weight;  // as stored in Parameters
  std::vector<Real> weight_t;  // input-major copy: linear [in][out], conv [ci][ky][kx][co]
  std::vector<Real> weight_back;  // conv only: [co][ky][kx][ci]
  std::vector<Real> bias;
  std::vector<std::uint32_t> fanout;  // per post-pooling input index

  bool has_if = false;
  IFConfig if_cfg{};
};

namespace detail {

inline std::uint32_t conv_fanout(const Shape& in, const Shape& out, const Conv2D& c, std::uint32_t iy, std::uint32_t ix) {
  std::uint32_t n = 0;
  for (std::uint32_t ky = 0; ky < c.kernel; ++ky) {
    const long ny = static_cast<long>(iy) + c.padding - ky;
    if (ny < 0 || ny % c.stride != 0 || ny / c.stride >= out.h) continue;
    for (std::uint32_t kx = 0; kx < c.kernel; ++kx) {
      const long nx = static_cast<long>(ix) + c.padding - kx;
      if (nx < 0 || nx % c.stride != 0 || nx / c.stride >= out.w) continue;
      ++n;
    }
  }
  return n * out.c;
}

}  // namespace detail

// Immutable, shareable execution plan for a (spec, parameters) pair.
template <class Real>
class CompiledNetwork {
public:
  CompiledNetwork(const NetworkSpec& spec, const Parameters<Real>& params) : spec_(spec) {
    spec.validate();
    check_compatible(spec, params);
    params.check_finite();
    const auto shapes = spec.shapes();
    Shape cur = spec.input;
    std::vector<std::int32_t> map;
    Real scale = Real(1);
    Shape raw = cur;
    std::size_t weighted = 0;
    for (std::size_t i = 0; i < spec.layers.size(); ++i) {
      const auto& l = spec.layers[i];
      if (auto* p = std::get_if<Pool>(&l)) {
        const Shape next = shapes[i];
        std::vector<std::int32_t> step(cur.size(), -1);
        for (std::uint32_t y = 0; y < next.h * p->window; ++y)
          for (std::uint32_t x = 0; x < next.w * p->window; ++x)
            for (std::uint32_t c = 0; c < cur.c; ++c)
              step[cur.index(c, y, x)] = static_cast<std::int32_t>(next.index(c, y / p->window, x / p->window));
        if (map.empty()) {
          map = std::move(step);
        } else {
          for (auto& m : map) m = m < 0 ? -1 : step[static_cast<std::size_t>(m)];
        }
        if (p->kind == PoolKind::Avg) scale *= Real(1) / static_cast<Real>(p->window * p->window);
        cur = next;
      } else if (std::holds_alternative<Conv2D>(l) || std::holds_alternative<Linear>(l)) {
        Block<Real> b;
        b.raw_in = raw;
        b.in = cur;
        b.pool_map = std::move(map);
        b.pool_scale = scale;
        b.out = shapes[i];
        const auto& lp = params.layers[weighted++];
        b.weight = lp.weight;
        b.bias = lp.bias;
        if (auto* c = std::get_if<Conv2D>(&l)) {
          b.conv = true;
          b.conv_spec = *c;
          b.fanout.resize(cur.size());
          for (std::uint32_t y = 0; y < cur.h; ++y)
            for (std::uint32_t x = 0; x < cur.w; ++x)
              for (std::uint32_t ci = 0; ci < cur.c; ++ci) b.fanout[cur.index(ci, y, x)] = detail::conv_fanout(cur, b.out, *c, y, x);
          // [ci][ky][kx][co] for the forward scatter, [co][ky][kx][ci] for backward.
          const std::uint32_t k = c->kernel;
          b.weight_t.resize(lp.weight.size());
          b.weight_back.resize(lp.weight.size());
          for (std::uint32_t co = 0; co < b.out.c; ++co)
            for (std::uint32_t ci = 0; ci < cur.c; ++ci)
              for (std::uint32_t ky = 0; ky < k; ++ky)
                for (std::uint32_t kx = 0; kx < k; ++kx) {
                  const Real w = lp.weight[((static_cast<std::size_t>(co) * cur.c + ci) * k + ky) * k + kx];
                  b.weight_t[((static_cast<std::size_t>(ci) * k + ky) * k + kx) * b.out.c + co] = w;
                  b.weight_back[((static_cast<std::size_t>(co) * k + ky) * k + kx) * cur.c + ci] = w;
                }
        } else {
          const std::size_t n_in = cur.size(), n_out = b.out.size();
          b.weight_t.resize(n_in * n_out);
          for (std::size_t o = 0; o < n_out; ++o)
            for (std::size_t k = 0; k < n_in; ++k) b.weight_t[k * n_out + o] = lp.weight[o * n_in + k];
          b.fanout.assign(n_in, static_cast<std::uint32_t>(n_out));
        }
        if (i + 1 < spec.layers.size()) {
          b.has_if = true;
          b.if_cfg = std::get<IF>(spec.layers[i + 1]).config;
          ++i;
        }
        blocks_.push_back(std::move(b));
        cur = shapes[i];
        raw = cur;
        map.clear();
        scale = Real(1);
      }
    }
  }

  const NetworkSpec& spec() const noexcept { return spec_; }
  const std::vector<Block<Real>>& blocks() const noexcept { return blocks_; }
  std::size_t num_classes() const { return blocks_.back().out.size(); }

private:
  NetworkSpec spec_;
  std::vector<Block<Real>> blocks_;
};

// Per-thread scratch buffers; reuse across calls to avoid reallocation.
template <class Real>
struct Workspace {
  std::vector<std::vector<Real>> membrane;
  std::vector<Real> current;
  std::vector<double> pooled_value;
  std::vector<std::uint32_t> pooled_events;
  std::vector<std::uint32_t> touched;
  struct Entry {
    std::uint32_t index;
    Real value;
    std::uint32_t events;
  };
  std::vector<Entry> entries, next_entries;
};

namespace detail {

// out = bias + W * in, accumulating contributions in ascending input order.
template <class Real, class Entry>
void scatter(const Block<Real>& b, const std::vector<Entry>& in, std::vector<Real>& out) {
  const std::size_t n_out_c = b.out.c;
  if (b.conv) {
    const auto& c = b.conv_spec;
    out.resize(b.out.size());
    for (std::size_t j = 0; j < out.size(); j += n_out_c) std::copy(b.bias.begin(), b.bias.end(), out.begin() + static_cast<std::ptrdiff_t>(j));
    const std::size_t cin = b.in.c;
    for (const auto& e : in) {
      const std::uint32_t ci = static_cast<std::uint32_t>(e.index % cin);
      const std::uint32_t pix = static_cast<std::uint32_t>(e.index / cin);
      const std::uint32_t iy = pix / b.in.w, ix = pix % b.in.w;
      const Real v = e.value;
      for (std::uint32_t ky = 0; ky < c.kernel; ++ky) {
        const long ny = static_cast<long>(iy) + c.padding - ky;
        if (ny < 0 || ny % c.stride != 0) continue;
        const long oy = ny / c.stride;
        if (oy >= b.out.h) continue;
        for (std::uint32_t kx = 0; kx < c.kernel; ++kx) {
          const long nx = static_cast<long>(ix) + c.padding - kx;
          if (nx < 0 || nx % c.stride != 0) continue;
          const long ox = nx / c.stride;
          if (ox >= b.out.w) continue;
          Real* o = out.data() + (static_cast<std::size_t>(oy) * b.out.w + ox) * n_out_c;
          const Real* w = b.weight_t.data() + ((static_cast<std::size_t>(ci) * c.kernel + ky) * c.kernel + kx) * n_out_c;
          for (std::size_t co = 0; co < n_out_c; ++co) o[co] += v * w[co];
        }
      }
    }
  } else {
    out.assign(b.bias.begin(), b.bias.end());
    const std::size_t n_out = b.out.size();
    Real* o = out.data();
    for (const auto& e : in) {
      const Real* w = b.weight_t.data() + static_cast<std::size_t>(e.index) * n_out;
      const Real v = e.value;
      for (std::size_t j = 0; j < n_out; ++j) o[j] += v * w[j];
    }
  }
}

}  // namespace detail

// Time-stepped execution. Membranes start at zero; the readout is the
// final linear layer's output summed over all steps. When `tape` is given,
// the quantities needed by backward() are recorded.
template <class Real>
ForwardResult forward(const CompiledNetwork<Real>& net, const SparseInput& input, const ForwardOptions& opts = {},
                      Tape<Real>* tape = nullptr, Workspace<Real>* ws_in = nullptr) {
  const auto& blocks = net.blocks();
  if (!(input.shape == net.spec().input))
    throw ArgumentError("input shape " + std::to_string(input.shape.c) + "x" + std::to_string(input.shape.h) + "x" +
                        std::to_string(input.shape.w) + " does not match the network");
  if (input.offsets.size() != static_cast<std::size_t>(input.t_steps) + 1)
    throw ArgumentError("malformed sparse input");
  Workspace<Real> local;
  auto& ws = ws_in ? *ws_in : local;
  const std::size_t n_blocks = blocks.size();
  const std::size_t n_if = n_blocks - 1;
  const bool relaxed = opts.mode == SpikeMode::Relaxed;

  ws.membrane.resize(n_if);
  for (std::size_t b = 0; b < n_if; ++b) ws.membrane[b].assign(blocks[b].out.size(), Real(0));

  ForwardResult result;
  auto& tr = result.trace;
  tr.t_steps = input.t_steps;
  tr.spikes_per_step.assign(n_if, std::vector<std::uint32_t>(input.t_steps, 0));
  tr.synops_per_step.assign(n_blocks, std::vector<std::uint64_t>(input.t_steps, 0));
  if (opts.record_spikes) tr.spike_indices.assign(n_if, std::vector<std::vector<std::uint32_t>>(input.t_steps));
  if (opts.record_readout) tr.readout.assign(input.t_steps, std::vector<double>(net.num_classes(), 0.0));
  result.scores.assign(net.num_classes(), 0.0);
  if (tape) {
    tape->clear(n_blocks);
    tape->t_steps = input.t_steps;
  }

  using Entry = typename Workspace<Real>::Entry;
  for (std::uint32_t t = 0; t < input.t_steps; ++t) {
    ws.entries.clear();
    for (auto i = input.offsets[t]; i < input.offsets[t + 1]; ++i)
      ws.entries.push_back({input.index[i], static_cast<Real>(input.count[i]), input.count[i]});

    for (std::size_t bi = 0; bi < n_blocks; ++bi) {
      const auto& b = blocks[bi];
      // Pooling: sum per cell in ascending input order, then scale.
      if (!b.pool_map.empty()) {
        ws.pooled_value.resize(b.in.size(), 0.0);
        ws.pooled_events.resize(b.in.size(), 0);
        ws.touched.clear();
        for (const auto& e : ws.entries) {
          const auto m = b.pool_map[e.index];
          if (m < 0) continue;
          if (ws.pooled_events[static_cast<std::size_t>(m)] == 0 && ws.pooled_value[static_cast<std::size_t>(m)] == 0.0)
            ws.touched.push_back(static_cast<std::uint32_t>(m));
          ws.pooled_value[static_cast<std::size_t>(m)] += static_cast<double>(e.value);
          ws.pooled_events[static_cast<std::size_t>(m)] += e.events;
        }
        std::sort(ws.touched.begin(), ws.touched.end());
        ws.touched.erase(std::unique(ws.touched.begin(), ws.touched.end()), ws.touched.end());
        ws.next_entries.clear();
        for (auto m : ws.touched) {
          ws.next_entries.push_back({m, static_cast<Real>(ws.pooled_value[m]) * b.pool_scale, ws.pooled_events[m]});
          ws.pooled_value[m] = 0.0;
          ws.pooled_events[m] = 0;
        }
        std::swap(ws.entries, ws.next_entries);
      }

      std::uint64_t synops = 0;
      for (const auto& e : ws.entries) synops += static_cast<std::uint64_t>(e.events) * b.fanout[e.index];
      tr.synops_per_step[bi][t] = synops;
      if (tape) {
        auto& rec = tape->inputs[bi];
        for (const auto& e : ws.entries) {
          rec.index.push_back(e.index);
          rec.value.push_back(e.value);
        }
        rec.offsets.push_back(static_cast<std::uint32_t>(rec.index.size()));
      }

      detail::scatter(b, ws.entries, ws.current);

      if (!b.has_if) {
        for (std::size_t j = 0; j < ws.current.size(); ++j) {
          result.scores[j] += static_cast<double>(ws.current[j]);
          if (opts.record_readout) tr.readout[t][j] = static_cast<double>(ws.current[j]);
        }
        break;
      }

      auto& v = ws.membrane[bi];
      const auto theta = static_cast<Real>(b.if_cfg.threshold);
      const bool has_floor = b.if_cfg.lower_bound.has_value();
      const auto floor = static_cast<Real>(b.if_cfg.lower_bound.value_or(0.0));
      ws.next_entries.clear();
      std::uint32_t n_spikes = 0;
      typename Tape<Real>::ActiveUnits* act = tape ? &tape->active[bi] : nullptr;
      for (std::size_t i = 0; i < v.size(); ++i) {
        if (relaxed) {
          v[i] += ws.current[i];
          const double u = static_cast<double>(v[i]) - b.if_cfg.threshold;
          const auto s = static_cast<Real>(opts.surrogate.relaxed(u));
          if (act) {
            const double d = opts.surrogate.derivative(u);
            if (d != 0.0) {
              act->unit.push_back(static_cast<std::uint32_t>(i));
              act->derivative.push_back(static_cast<Real>(d));
            }
          }
          if (s != Real(0)) ws.next_entries.push_back({static_cast<std::uint32_t>(i), s, 1});
          v[i] = b.if_cfg.reset == Reset::SubtractThreshold ? v[i] - theta * s : v[i] * (Real(1) - s);
          if (has_floor && v[i] < floor) v[i] = floor;
          continue;
        }
        if (act) {
          const double u = static_cast<double>(v[i] + ws.current[i]) - b.if_cfg.threshold;
          const double d = opts.surrogate.derivative(u);
          if (d != 0.0) {
            act->unit.push_back(static_cast<std::uint32_t>(i));
            act->derivative.push_back(static_cast<Real>(d));
          }
        }
        if (if_update(v[i], ws.current[i], theta, b.if_cfg.reset, has_floor, floor)) {
          ws.next_entries.push_back({static_cast<std::uint32_t>(i), Real(1), 1});
          ++n_spikes;
          if (opts.record_spikes) tr.spike_indices[bi][t].push_back(static_cast<std::uint32_t>(i));
        }
      }
      if (act) act->offsets.push_back(static_cast<std::uint32_t>(act->unit.size()));
      tr.spikes_per_step[bi][t] = n_spikes;
      std::swap(ws.entries, ws.next_entries);
    }
  }
  for (double s : result.scores)
    if (!std::isfinite(s)) throw NumericError("non-finite readout");
  return result;
}

template <class Real>
ForwardResult forward(const NetworkSpec& spec, const Parameters<Real>& params, const SparseInput& input,
                      const ForwardOptions& opts = {}) {
  return forward(CompiledNetwork<Real>(spec, params), input, opts);
}

// Zero-based argmax; ties resolve to the lowest index.
inline std::size_t argmax_class(const std::vector<double>& scores) {
  if (scores.empty()) throw ArgumentError("empty score vector");
  std::size_t best = 0;
  for (std::size_t i = 1; i < scores.size(); ++i)
    if (scores[i] > scores[best]) best = i;
  return best;
}

// Predicted texture id, 1-based.
template <class Real>
int predict(const CompiledNetwork<Real>& net, const SparseInput& input) {
  return static_cast<int>(argmax_class(forward(net, input).scores)) + 1;
}

template <class Real>
int predict(const NetworkSpec& spec, const Parameters<Real>& params, const SparseInput& input) {
  return predict(CompiledNetwork<Real>(spec, params), input);
}

struct SynopCount {
  std::vector<std::uint64_t> per_layer;  // one per weighted layer
  std::uint64_t total = 0;
};

// Synaptic operations: every spike (or input event) entering a weighted
// layer costs one operation per outgoing connection of its unit.
inline SynopCount count_synops(const ForwardTrace& trace) {
  SynopCount c;
  for (const auto& layer : trace.synops_per_step) {
    c.per_layer.push_back(std::accumulate(layer.begin(), layer.end(), std::uint64_t{0}));
    c.total += c.per_layer.back();
  }
  return c;
}

}  // namespace tactile::snn
