#pragma once

// Shared test helpers: random small networks and a dense, per-neuron,
// per-step reference implementation of the spiking forward pass.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <random>
#include <vector>

#include "tactile/snn/engine.hpp"
#include "tactile/snn/gradient.hpp"

namespace tactile::oracle {

using snn::Shape;

// Random valid topology on a small input: optional input pooling, one or two
// conv-IF(-pool) stages, an optional hidden linear-IF, then the readout.
inline snn::NetworkSpec random_spec(std::mt19937_64& rng) {
  auto pick = [&](int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); };
  snn::NetworkSpec s;
  s.input = {static_cast<std::uint32_t>(pick(1, 2)), static_cast<std::uint32_t>(pick(5, 9)),
             static_cast<std::uint32_t>(pick(5, 9))};
  s.num_classes = static_cast<std::uint32_t>(pick(2, 5));
  auto if_cfg = [&] {
    snn::IFConfig c;
    c.threshold = std::uniform_real_distribution<double>(0.5, 1.5)(rng);
    c.reset = pick(0, 1) ? snn::Reset::SubtractThreshold : snn::Reset::ToZero;
    if (pick(0, 2) == 0)
      c.lower_bound.reset();
    else
      c.lower_bound = -std::uniform_real_distribution<double>(0.0, 1.0)(rng);
    return c;
  };
  if (pick(0, 3) == 0) s.layers.push_back(snn::Pool{pick(0, 1) ? snn::PoolKind::Avg : snn::PoolKind::Sum, 2});
  const int stages = pick(1, 2);
  for (int k = 0; k < stages; ++k) {
    const auto shape = s.layers.empty() ? s.input : s.shapes().back();
    const std::uint32_t kernel = static_cast<std::uint32_t>(std::min<int>(pick(1, 3), static_cast<int>(std::min(shape.h, shape.w))));
    s.layers.push_back(snn::Conv2D{static_cast<std::uint32_t>(pick(1, 4)), kernel,
                                   static_cast<std::uint32_t>(pick(1, 2)), static_cast<std::uint32_t>(pick(0, 1))});
    s.layers.push_back(snn::IF{if_cfg()});
    const auto out = s.shapes().back();
    if (out.h >= 2 && out.w >= 2 && pick(0, 1))
      s.layers.push_back(snn::Pool{pick(0, 1) ? snn::PoolKind::Avg : snn::PoolKind::Sum, 2});
  }
  if (pick(0, 1)) {
    s.layers.push_back(snn::Linear{static_cast<std::uint32_t>(pick(3, 12))});
    s.layers.push_back(snn::IF{if_cfg()});
  }
  s.layers.push_back(snn::Linear{s.num_classes});
  s.validate();
  return s;
}

// Parameters with a random bias so that units fire without input too.
inline snn::Parameters<float> random_params(const snn::NetworkSpec& spec, std::mt19937_64& rng, double gain = 1.5) {
  auto p = snn::init_parameters<float>(spec, rng(), gain);
  std::normal_distribution<double> n(0.0, 0.3);
  for (auto& l : p.layers)
    for (auto& b : l.bias) b = static_cast<float>(n(rng));
  return p;
}

inline snn::SparseInput random_input(std::mt19937_64& rng, const Shape& shape, std::uint32_t t_steps,
                                     double density = 0.2, int max_count = 3) {
  snn::SparseInput in;
  in.shape = shape;
  in.t_steps = t_steps;
  std::bernoulli_distribution on(density);
  std::uniform_int_distribution<int> count(1, max_count);
  for (std::uint32_t t = 0; t < t_steps; ++t) {
    for (std::uint32_t i = 0; i < shape.size(); ++i)
      if (on(rng)) {
        in.index.push_back(i);
        in.count.push_back(static_cast<std::uint16_t>(count(rng)));
      }
    in.offsets.push_back(static_cast<std::uint32_t>(in.index.size()));
  }
  return in;
}

struct DenseResult {
  std::vector<std::vector<std::vector<std::uint32_t>>> spikes;  // [if layer][t] -> ascending units
  std::vector<std::vector<double>> readout;  // [t][class]
  std::vector<double> scores;
};

// Straightforward time-stepped evaluation: every layer is recomputed densely
// at every step, each output unit summing bias + weight * input over its full
// receptive field. Activations use the channel-last flat index (y * w + x) * c + ch.
inline DenseResult dense_forward(const snn::NetworkSpec& spec, const snn::Parameters<float>& params,
                                 const snn::SparseInput& input) {
  const auto shapes = spec.shapes();
  DenseResult r;
  std::vector<std::vector<float>> membrane;
  std::size_t n_if = 0;
  for (std::size_t i = 0; i < spec.layers.size(); ++i)
    if (std::holds_alternative<snn::IF>(spec.layers[i])) {
      membrane.emplace_back(shapes[i].size(), 0.0f);
      ++n_if;
    }
  r.spikes.assign(n_if, std::vector<std::vector<std::uint32_t>>(input.t_steps));
  r.scores.assign(spec.num_classes, 0.0);

  for (std::uint32_t t = 0; t < input.t_steps; ++t) {
    std::vector<float> act(spec.input.size(), 0.0f);
    for (auto k = input.offsets[t]; k < input.offsets[t + 1]; ++k) act[input.index[k]] = input.count[k];
    Shape cur = spec.input;
    // Pending pooling: sums in double over the composite window, then one scale.
    std::uint32_t pool_factor = 1;
    float pool_scale = 1.0f;
    Shape pre_pool = cur;
    std::vector<float> pre_pool_act;
    std::size_t weighted = 0, if_index = 0;
    for (std::size_t li = 0; li < spec.layers.size(); ++li) {
      const auto& layer = spec.layers[li];
      if (const auto* p = std::get_if<snn::Pool>(&layer)) {
        if (pool_factor == 1) {
          pre_pool = cur;
          pre_pool_act = act;
        }
        pool_factor *= p->window;
        if (p->kind == snn::PoolKind::Avg) pool_scale *= 1.0f / static_cast<float>(p->window * p->window);
        cur = shapes[li];
        std::vector<float> pooled(cur.size());
        for (std::uint32_t y = 0; y < cur.h; ++y)
          for (std::uint32_t x = 0; x < cur.w; ++x)
            for (std::uint32_t c = 0; c < cur.c; ++c) {
              double sum = 0.0;
              for (std::uint32_t dy = 0; dy < pool_factor; ++dy)
                for (std::uint32_t dx = 0; dx < pool_factor; ++dx)
                  sum += pre_pool_act[pre_pool.index(c, y * pool_factor + dy, x * pool_factor + dx)];
              pooled[cur.index(c, y, x)] = static_cast<float>(sum) * pool_scale;
            }
        act = std::move(pooled);
        continue;
      }
      if (const auto* conv = std::get_if<snn::Conv2D>(&layer)) {
        const auto& lp = params.layers[weighted++];
        const Shape out = shapes[li];
        const std::uint32_t k = conv->kernel;
        std::vector<float> next(out.size());
        for (std::uint32_t oy = 0; oy < out.h; ++oy)
          for (std::uint32_t ox = 0; ox < out.w; ++ox)
            for (std::uint32_t co = 0; co < out.c; ++co) {
              float acc = lp.bias[co];
              for (std::uint32_t ky = 0; ky < k; ++ky) {
                const long iy = static_cast<long>(oy * conv->stride + ky) - conv->padding;
                if (iy < 0 || iy >= static_cast<long>(cur.h)) continue;
                for (std::uint32_t kx = 0; kx < k; ++kx) {
                  const long ix = static_cast<long>(ox * conv->stride + kx) - conv->padding;
                  if (ix < 0 || ix >= static_cast<long>(cur.w)) continue;
                  for (std::uint32_t ci = 0; ci < cur.c; ++ci) {
                    const float v = act[cur.index(ci, static_cast<std::uint32_t>(iy), static_cast<std::uint32_t>(ix))];
                    if (v == 0.0f) continue;
                    acc += v * lp.weight[((static_cast<std::size_t>(co) * cur.c + ci) * k + ky) * k + kx];
                  }
                }
              }
              next[out.index(co, oy, ox)] = acc;
            }
        act = std::move(next);
        cur = out;
      } else if (std::holds_alternative<snn::Linear>(layer)) {
        const auto& lp = params.layers[weighted++];
        const Shape out = shapes[li];
        std::vector<float> next(out.size());
        for (std::size_t o = 0; o < out.size(); ++o) {
          float acc = lp.bias[o];
          for (std::size_t i = 0; i < act.size(); ++i)
            if (act[i] != 0.0f) acc += act[i] * lp.weight[o * act.size() + i];
          next[o] = acc;
        }
        act = std::move(next);
        cur = out;
        if (li + 1 == spec.layers.size()) {
          r.readout.emplace_back(act.begin(), act.end());
          for (std::size_t o = 0; o < act.size(); ++o) r.scores[o] += static_cast<double>(act[o]);
        }
      } else {
        const auto& cfg = std::get<snn::IF>(layer).config;
        auto& v = membrane[if_index];
        const float theta = static_cast<float>(cfg.threshold);
        for (std::size_t i = 0; i < v.size(); ++i) {
          v[i] += act[i];
          const bool spike = v[i] >= theta;
          if (spike) v[i] = cfg.reset == snn::Reset::SubtractThreshold ? v[i] - theta : 0.0f;
          if (cfg.lower_bound && v[i] < static_cast<float>(*cfg.lower_bound)) v[i] = static_cast<float>(*cfg.lower_bound);
          act[i] = spike ? 1.0f : 0.0f;
          if (spike) r.spikes[if_index][t].push_back(static_cast<std::uint32_t>(i));
        }
        ++if_index;
      }
      pool_factor = 1;
      pool_scale = 1.0f;
    }
  }
  return r;
}

inline bool same_bits(double a, double b) { return std::memcmp(&a, &b, sizeof a) == 0; }

// One hidden weighted layer (conv or linear) with IF, then the readout.
inline snn::NetworkSpec one_hidden_layer(std::mt19937_64& rng) {
  snn::NetworkSpec s;
  s.input = {static_cast<std::uint32_t>(1 + rng() % 2), static_cast<std::uint32_t>(3 + rng() % 3),
             static_cast<std::uint32_t>(3 + rng() % 3)};
  s.num_classes = static_cast<std::uint32_t>(2 + rng() % 3);
  if (rng() % 2)
    s.layers.push_back(snn::Conv2D{static_cast<std::uint32_t>(1 + rng() % 3), 2 + static_cast<std::uint32_t>(rng() % 2),
                                   1, static_cast<std::uint32_t>(rng() % 2)});
  else
    s.layers.push_back(snn::Linear{static_cast<std::uint32_t>(2 + rng() % 6)});
  s.layers.push_back(
      snn::IF{snn::IFConfig{0.5 + 0.1 * static_cast<double>(rng() % 10), snn::Reset::SubtractThreshold, 0.0}});
  s.layers.push_back(snn::Linear{s.num_classes});
  s.validate();
  return s;
}

inline double loss_at(const snn::NetworkSpec& spec, const snn::Parameters<double>& p, const snn::SparseInput& in,
                      int label, const snn::GradientOptions& go) {
  snn::ForwardOptions fo;
  fo.mode = snn::SpikeMode::Relaxed;
  fo.surrogate = go.surrogate;
  const auto r = snn::forward(spec, p, in, fo);
  return snn::cross_entropy(r.scores, static_cast<std::size_t>(label - 1), go.logit_scale).loss;
}

// Largest |analytic - fd| / max(|analytic|, |fd|, 1e-6) over every parameter,
// with central differences of step h.
inline double worst_fd_error(const snn::NetworkSpec& spec, const snn::Parameters<double>& p,
                             const snn::SparseInput& in, int label, const snn::GradientOptions& go, double h = 1e-5) {
  const auto g = snn::surrogate_grad(spec, p, {snn::Example{&in, label}}, go);
  double worst = 0.0;
  for (std::size_t l = 0; l < p.layers.size(); ++l)
    for (int which = 0; which < 2; ++which) {
      const std::size_t n = which ? p.layers[l].bias.size() : p.layers[l].weight.size();
      for (std::size_t i = 0; i < n; ++i) {
        auto a = p, b = p;
        (which ? a.layers[l].bias[i] : a.layers[l].weight[i]) += h;
        (which ? b.layers[l].bias[i] : b.layers[l].weight[i]) -= h;
        const double fd = (loss_at(spec, a, in, label, go) - loss_at(spec, b, in, label, go)) / (2 * h);
        const double an = which ? g.grads.layers[l].bias[i] : g.grads.layers[l].weight[i];
        worst = std::max(worst, std::abs(an - fd) / std::max({std::abs(an), std::abs(fd), 1e-6}));
      }
    }
  return worst;
}

}  // namespace tactile::oracle
