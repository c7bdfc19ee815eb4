#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <type_traits>
#include <variant>
#include <vector>

#include "tactile/errors.hpp"
#include "tactile/rng.hpp"

namespace tactile::snn {

enum class Reset { SubtractThreshold, ToZero };

struct IFConfig {
  double threshold = 1.0;
  Reset reset = Reset::SubtractThreshold;
  std::optional<double> lower_bound = 0.0;  // membrane floor; nullopt disables it
};

struct Conv2D {
  std::uint32_t out_channels = 1;
  std::uint32_t kernel = 3;
  std::uint32_t stride = 1;
  std::uint32_t padding = 0;
};

enum class PoolKind { Sum, Avg };

struct Pool {
  PoolKind kind = PoolKind::Avg;
  std::uint32_t window = 2;  // stride equals window; trailing rows/columns are dropped
};

struct Linear {
  std::uint32_t out_features = 1;
};

struct IF {
  IFConfig config{};
};

using LayerSpec = std::variant<Conv2D, Pool, Linear, IF>;

// Activations are stored channel-last: unit (ch, y, x) sits at (y * w + x) * c + ch.
struct Shape {
  std::uint32_t c = 1, h = 1, w = 1;
  std::size_t size() const { return static_cast<std::size_t>(c) * h * w; }
  std::size_t index(std::uint32_t ch, std::uint32_t y, std::uint32_t x) const {
    return (static_cast<std::size_t>(y) * w + x) * c + ch;
  }
  friend bool operator==(const Shape&, const Shape&) = default;
};

// Layer sequence plus input geometry. Structural rules enforced by validate():
// pools act on the network input or on IF outputs, every weighted layer but
// the last feeds exactly one IF layer, and the last layer is a weighted
// readout with num_classes outputs.
struct NetworkSpec {
  Shape input{1, 20, 20};
  std::vector<LayerSpec> layers;
  std::uint32_t num_classes = 10;

  // Conv(16,3x3,p1)-IF-AvgPool2 - Conv(32,3x3,p1)-IF-AvgPool2 - Linear(256)-IF - Linear(64)-IF - Linear(10)
  static NetworkSpec reference(std::uint32_t conv1 = 16, std::uint32_t conv2 = 32, std::uint32_t fc1 = 256,
                               std::uint32_t fc2 = 64, IFConfig if_cfg = {}) {
    NetworkSpec s;
    s.layers = {Conv2D{conv1, 3, 1, 1}, IF{if_cfg},  Pool{PoolKind::Avg, 2}, Conv2D{conv2, 3, 1, 1},
                IF{if_cfg},             Pool{PoolKind::Avg, 2}, Linear{fc1}, IF{if_cfg},
                Linear{fc2},            IF{if_cfg},  Linear{10}};
    return s;
  }

  // Output shape after each layer. Throws ArgumentError on inconsistency.
  std::vector<Shape> shapes() const {
    std::vector<Shape> out;
    Shape cur = input;
    if (cur.size() == 0) throw ArgumentError("empty network input shape");
    for (std::size_t i = 0; i < layers.size(); ++i) {
      const auto& l = layers[i];
      if (auto* c = std::get_if<Conv2D>(&l)) {
        if (c->kernel == 0 || c->stride == 0 || c->out_channels == 0) throw ArgumentError("degenerate conv layer");
        const long oh = (static_cast<long>(cur.h) + 2 * c->padding - c->kernel) / c->stride + 1;
        const long ow = (static_cast<long>(cur.w) + 2 * c->padding - c->kernel) / c->stride + 1;
        if (static_cast<long>(cur.h) + 2 * c->padding < c->kernel || oh <= 0 || ow <= 0)
          throw ArgumentError("conv layer " + std::to_string(i) + " kernel larger than its input");
        cur = {c->out_channels, static_cast<std::uint32_t>(oh), static_cast<std::uint32_t>(ow)};
      } else if (auto* p = std::get_if<Pool>(&l)) {
        if (p->window == 0 || cur.h < p->window || cur.w < p->window)
          throw ArgumentError("pool layer " + std::to_string(i) + " window exceeds its input");
        cur = {cur.c, cur.h / p->window, cur.w / p->window};
      } else if (auto* f = std::get_if<Linear>(&l)) {
        if (f->out_features == 0) throw ArgumentError("degenerate linear layer");
        cur = {f->out_features, 1, 1};
      } else if (auto* n = std::get_if<IF>(&l)) {
        if (!(n->config.threshold > 0.0)) throw ArgumentError("IF threshold must be positive");
      }
      out.push_back(cur);
    }
    return out;
  }

  void validate() const {
    const auto sh = shapes();
    if (layers.empty()) throw ArgumentError("network has no layers");
    auto weighted = [](const LayerSpec& l) { return std::holds_alternative<Conv2D>(l) || std::holds_alternative<Linear>(l); };
    for (std::size_t i = 0; i < layers.size(); ++i) {
      const auto& l = layers[i];
      const bool last = i + 1 == layers.size();
      if (weighted(l)) {
        if (!last && !std::holds_alternative<IF>(layers[i + 1]))
          throw ArgumentError("layer " + std::to_string(i) + ": hidden weighted layers must feed an IF layer");
      } else if (std::holds_alternative<IF>(l)) {
        if (i == 0 || !weighted(layers[i - 1]))
          throw ArgumentError("layer " + std::to_string(i) + ": IF must follow a weighted layer");
      } else if (std::holds_alternative<Pool>(l)) {
        if (i > 0 && !std::holds_alternative<IF>(layers[i - 1]) && !std::holds_alternative<Pool>(layers[i - 1]))
          throw ArgumentError("layer " + std::to_string(i) + ": pooling must follow the input or an IF layer");
      }
    }
    if (!std::holds_alternative<Linear>(layers.back()))
      throw ArgumentError("the readout must be a linear layer");
    if (sh.back().size() != num_classes)
      throw ArgumentError("readout has " + std::to_string(sh.back().size()) + " outputs, expected " +
                          std::to_string(num_classes));
  }

  // True for the Conv-IF-Pool x2, Linear-IF x2, Linear shape.
  bool is_reference_topology() const {
    if (layers.size() != 11) return false;
    const int pattern[11] = {0, 3, 1, 0, 3, 1, 2, 3, 2, 3, 2};
    for (std::size_t i = 0; i < 11; ++i)
      if (static_cast<int>(layers[i].index()) != pattern[i]) return false;
    return true;
  }

  // Canonical text form; hashed into parameter files.
  std::string canonical() const {
    std::ostringstream os;
    os << "in:" << input.c << 'x' << input.h << 'x' << input.w << ";classes:" << num_classes;
    for (const auto& l : layers) {
      std::visit(
          [&](const auto& v) {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, Conv2D>)
              os << ";conv:" << v.out_channels << ',' << v.kernel << ',' << v.stride << ',' << v.padding;
            else if constexpr (std::is_same_v<T, Pool>)
              os << ";pool:" << (v.kind == PoolKind::Avg ? "avg" : "sum") << ',' << v.window;
            else if constexpr (std::is_same_v<T, Linear>)
              os << ";linear:" << v.out_features;
            else
              os << ";if:" << v.config.threshold << ',' << (v.config.reset == Reset::SubtractThreshold ? "sub" : "zero")
                 << ',' << (v.config.lower_bound ? std::to_string(*v.config.lower_bound) : "none");
          },
          l);
    }
    return os.str();
  }

  std::uint64_t hash() const {
    std::uint64_t h = 0xcbf29ce484222325ULL;  // FNV-1a
    for (unsigned char ch : canonical()) {
      h ^= ch;
      h *= 0x100000001b3ULL;
    }
    return h;
  }
};

// Weights of one weighted layer. Conv weights are [out][in][ky][kx], linear
// weights [out][in] with inputs in channel-last order.
template <class Real>
struct LayerParams {
  std::string name;
  std::vector<std::uint32_t> weight_shape;
  std::vector<Real> weight;
  std::vector<Real> bias;

  friend bool operator==(const LayerParams&, const LayerParams&) = default;
};

template <class Real>
struct Parameters {
  std::uint64_t init_seed = 0;
  std::vector<LayerParams<Real>> layers;  // one per weighted layer, in order

  std::size_t count() const {
    std::size_t n = 0;
    for (const auto& l : layers) n += l.weight.size() + l.bias.size();
    return n;
  }

  void check_finite() const {
    for (const auto& l : layers) {
      for (auto v : l.weight)
        if (!std::isfinite(static_cast<double>(v))) throw NumericError(l.name + ": non-finite weight");
      for (auto v : l.bias)
        if (!std::isfinite(static_cast<double>(v))) throw NumericError(l.name + ": non-finite bias");
    }
  }

  template <class Other>
  Parameters<Other> cast() const {
    Parameters<Other> p;
    p.init_seed = init_seed;
    for (const auto& l : layers)
      p.layers.push_back({l.name, l.weight_shape, std::vector<Other>(l.weight.begin(), l.weight.end()),
                          std::vector<Other>(l.bias.begin(), l.bias.end())});
    return p;
  }

  friend bool operator==(const Parameters&, const Parameters&) = default;
};

// Shapes and names of the weight tensors `spec` requires, biases zeroed.
template <class Real>
Parameters<Real> zero_parameters(const NetworkSpec& spec) {
  spec.validate();
  const auto shapes = spec.shapes();
  Parameters<Real> p;
  Shape in = spec.input;
  for (std::size_t i = 0; i < spec.layers.size(); ++i) {
    const auto& l = spec.layers[i];
    if (auto* c = std::get_if<Conv2D>(&l)) {
      LayerParams<Real> lp;
      lp.name = "conv" + std::to_string(i);
      lp.weight_shape = {c->out_channels, in.c, c->kernel, c->kernel};
      lp.weight.assign(static_cast<std::size_t>(c->out_channels) * in.c * c->kernel * c->kernel, Real(0));
      lp.bias.assign(c->out_channels, Real(0));
      p.layers.push_back(std::move(lp));
    } else if (auto* f = std::get_if<Linear>(&l)) {
      LayerParams<Real> lp;
      lp.name = "linear" + std::to_string(i);
      lp.weight_shape = {f->out_features, static_cast<std::uint32_t>(in.size())};
      lp.weight.assign(static_cast<std::size_t>(f->out_features) * in.size(), Real(0));
      lp.bias.assign(f->out_features, Real(0));
      p.layers.push_back(std::move(lp));
    }
    in = shapes[i];
  }
  return p;
}

// Kaiming-normal weights (std = gain * sqrt(2 / fan_in)), zero biases.
template <class Real>
Parameters<Real> init_parameters(const NetworkSpec& spec, std::uint64_t seed, double gain = 1.0) {
  auto p = zero_parameters<Real>(spec);
  p.init_seed = seed;
  for (std::size_t li = 0; li < p.layers.size(); ++li) {
    auto& l = p.layers[li];
    std::size_t fan_in = 1;
    for (std::size_t d = 1; d < l.weight_shape.size(); ++d) fan_in *= l.weight_shape[d];
    auto rng = make_rng(seed, {0x696e6974u, li});
    std::normal_distribution<double> normal(0.0, gain * std::sqrt(2.0 / static_cast<double>(fan_in)));
    for (auto& w : l.weight) w = static_cast<Real>(normal(rng));
  }
  return p;
}

// Shape check of parameters against a spec.
template <class Real>
void check_compatible(const NetworkSpec& spec, const Parameters<Real>& params) {
  const auto expected = zero_parameters<Real>(spec);
  if (expected.layers.size() != params.layers.size())
    throw ArgumentError("parameter set has " + std::to_string(params.layers.size()) + " layers, network needs " +
                        std::to_string(expected.layers.size()));
  for (std::size_t i = 0; i < expected.layers.size(); ++i) {
    const auto& e = expected.layers[i];
    const auto& g = params.layers[i];
    if (e.weight_shape != g.weight_shape || e.weight.size() != g.weight.size() || e.bias.size() != g.bias.size())
      throw ArgumentError("parameter tensor " + std::to_string(i) + " has the wrong shape");
  }
}

}  // namespace tactile::snn
