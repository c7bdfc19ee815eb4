#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <sstream>
#include <string>
#include <vector>

#include "tactile/errors.hpp"
#include "tactile/parallel.hpp"
#include "tactile/snn/engine.hpp"

namespace tactile::snn {

// Parameter gradients, laid out like Parameters.
struct Gradients {
  struct Layer {
    std::vector<double> weight;
    std::vector<double> bias;
  };
  std::vector<Layer> layers;

  template <class Real>
  static Gradients zeros_like(const Parameters<Real>& p) {
    Gradients g;
    for (const auto& l : p.layers) g.layers.push_back({std::vector<double>(l.weight.size(), 0.0), std::vector<double>(l.bias.size(), 0.0)});
    return g;
  }

  void add(const Gradients& o) {
    for (std::size_t i = 0; i < layers.size(); ++i) {
      for (std::size_t j = 0; j < layers[i].weight.size(); ++j) layers[i].weight[j] += o.layers[i].weight[j];
      for (std::size_t j = 0; j < layers[i].bias.size(); ++j) layers[i].bias[j] += o.layers[i].bias[j];
    }
  }

  void scale(double s) {
    for (auto& l : layers) {
      for (auto& v : l.weight) v *= s;
      for (auto& v : l.bias) v *= s;
    }
  }

  bool finite() const {
    for (const auto& l : layers) {
      for (double v : l.weight)
        if (!std::isfinite(v)) return false;
      for (double v : l.bias)
        if (!std::isfinite(v)) return false;
    }
    return true;
  }
};

struct LossResult {
  double loss = 0.0;
  std::vector<double> grad;  // d loss / d scores
};

// Cross-entropy on logits = logit_scale * scores; label is zero-based.
inline LossResult cross_entropy(const std::vector<double>& scores, std::size_t label, double logit_scale) {
  if (label >= scores.size()) throw ArgumentError("label out of range");
  double mx = -std::numeric_limits<double>::infinity();
  for (double s : scores) mx = std::max(mx, logit_scale * s);
  double z = 0.0;
  for (double s : scores) z += std::exp(logit_scale * s - mx);
  LossResult r;
  r.loss = mx + std::log(z) - logit_scale * scores[label];
  r.grad.resize(scores.size());
  for (std::size_t i = 0; i < scores.size(); ++i)
    r.grad[i] = logit_scale * (std::exp(logit_scale * scores[i] - mx) / z - (i == label ? 1.0 : 0.0));
  return r;
}

// Backpropagation through time over a recorded tape. The reset is treated as
// a constant and the membrane floor as the identity, so the gradient reaching
// a layer's input current at step t is the sum of (upstream spike gradient x
// surrogate derivative) over steps >= t. Only surrogate-active units carry
// gradient, which keeps the pass sparse. Adds into `out`.
template <class Real>
void backward(const CompiledNetwork<Real>& net, const Tape<Real>& tape, const std::vector<double>& score_grad,
              Gradients& out) {
  const auto& blocks = net.blocks();
  const std::size_t nb = blocks.size();
  const std::uint32_t T = tape.t_steps;
  if (score_grad.size() != net.num_classes()) throw ArgumentError("score gradient has the wrong size");
  if (tape.inputs.size() != nb || tape.active.size() + 1 != nb) throw ArgumentError("tape does not match the network");

  // Readout: every step sees the same output gradient.
  {
    const auto& b = blocks.back();
    auto& g = out.layers.back();
    const std::size_t n_in = b.in.size();
    std::vector<double> input_sum(n_in, 0.0);
    const auto& rec = tape.inputs.back();
    for (std::size_t i = 0; i < rec.index.size(); ++i) input_sum[rec.index[i]] += static_cast<double>(rec.value[i]);
    for (std::size_t o = 0; o < score_grad.size(); ++o) {
      g.bias[o] += static_cast<double>(T) * score_grad[o];
      for (std::size_t k = 0; k < n_in; ++k) g.weight[o * n_in + k] += score_grad[o] * input_sum[k];
    }
  }
  if (nb == 1) return;

  // upstream[b]: gradient w.r.t. the (pooled) input of block b, summed over
  // the current and later steps. Constant for the readout.
  std::vector<std::vector<Real>> upstream(nb);
  {
    const auto& b = blocks.back();
    upstream[nb - 1].assign(b.in.size(), Real(0));
    for (std::size_t k = 0; k < b.in.size(); ++k) {
      double acc = 0.0;
      for (std::size_t o = 0; o < score_grad.size(); ++o)
        acc += static_cast<double>(b.weight[o * b.in.size() + k]) * score_grad[o];
      upstream[nb - 1][k] = static_cast<Real>(acc);
    }
  }
  for (std::size_t bi = 1; bi + 1 < nb; ++bi) upstream[bi].assign(blocks[bi].in.size(), Real(0));
  std::vector<std::vector<Real>> current_grad(nb - 1);  // running d loss / d input current
  std::vector<std::vector<Real>> weight_acc(nb - 1);  // input-major dW, same layout as Block::weight_t
  std::vector<std::vector<double>> bias_acc(nb - 1);
  std::vector<char> any(nb - 1, 0);
  for (std::size_t bi = 0; bi + 1 < nb; ++bi) {
    current_grad[bi].assign(blocks[bi].out.size(), Real(0));
    weight_acc[bi].assign(blocks[bi].weight.size(), Real(0));
    bias_acc[bi].assign(blocks[bi].bias.size(), 0.0);
  }

  for (std::uint32_t tt = T; tt-- > 0;) {
    for (std::size_t bi = nb - 1; bi-- > 0;) {
      const auto& b = blocks[bi];
      const auto& above = blocks[bi + 1];
      const auto& act = tape.active[bi];
      auto& R = current_grad[bi];
      const auto& up = upstream[bi + 1];
      const std::size_t cout = b.out.c;
      for (auto a = act.offsets[tt]; a < act.offsets[tt + 1]; ++a) {
        const std::uint32_t unit = act.unit[a];
        Real ds;
        if (above.pool_map.empty()) {
          ds = up[unit];
        } else {
          const auto m = above.pool_map[unit];
          if (m < 0) continue;
          ds = above.pool_scale * up[static_cast<std::size_t>(m)];
        }
        const Real delta = ds * act.derivative[a];
        if (delta == Real(0)) continue;
        any[bi] = 1;
        R[unit] += delta;
        bias_acc[bi][b.conv ? unit % cout : unit] += static_cast<double>(delta) * static_cast<double>(tt + 1);
        if (bi == 0) continue;
        Real* U = upstream[bi].data();
        if (b.conv) {
          const auto& c = b.conv_spec;
          const std::uint32_t co = unit % static_cast<std::uint32_t>(cout);
          const std::uint32_t pix = unit / static_cast<std::uint32_t>(cout);
          const long oy = pix / b.out.w, ox = pix % b.out.w;
          const std::size_t cin = b.in.c;
          for (std::uint32_t ky = 0; ky < c.kernel; ++ky) {
            const long iy = oy * c.stride - c.padding + ky;
            if (iy < 0 || iy >= b.in.h) continue;
            for (std::uint32_t kx = 0; kx < c.kernel; ++kx) {
              const long ix = ox * c.stride - c.padding + kx;
              if (ix < 0 || ix >= b.in.w) continue;
              Real* u = U + (static_cast<std::size_t>(iy) * b.in.w + ix) * cin;
              const Real* w = b.weight_back.data() + ((static_cast<std::size_t>(co) * c.kernel + ky) * c.kernel + kx) * cin;
              for (std::size_t ci = 0; ci < cin; ++ci) u[ci] += w[ci] * delta;
            }
          }
        } else {
          const std::size_t n_in = b.in.size();
          const Real* w = b.weight.data() + static_cast<std::size_t>(unit) * n_in;
          for (std::size_t k = 0; k < n_in; ++k) U[k] += w[k] * delta;
        }
      }

      if (!any[bi]) continue;
      const auto& rec = tape.inputs[bi];
      Real* dW = weight_acc[bi].data();
      if (b.conv) {
        const auto& c = b.conv_spec;
        const std::size_t cin = b.in.c;
        for (auto e = rec.offsets[tt]; e < rec.offsets[tt + 1]; ++e) {
          const std::uint32_t ci = static_cast<std::uint32_t>(rec.index[e] % cin);
          const std::uint32_t pix = static_cast<std::uint32_t>(rec.index[e] / cin);
          const std::uint32_t iy = pix / b.in.w, ix = pix % b.in.w;
          const Real val = rec.value[e];
          for (std::uint32_t ky = 0; ky < c.kernel; ++ky) {
            const long ny = static_cast<long>(iy) + c.padding - ky;
            if (ny < 0 || ny % c.stride != 0 || ny / c.stride >= b.out.h) continue;
            for (std::uint32_t kx = 0; kx < c.kernel; ++kx) {
              const long nx = static_cast<long>(ix) + c.padding - kx;
              if (nx < 0 || nx % c.stride != 0 || nx / c.stride >= b.out.w) continue;
              const Real* r = R.data() + (static_cast<std::size_t>(ny / c.stride) * b.out.w + nx / c.stride) * cout;
              Real* w = dW + ((static_cast<std::size_t>(ci) * c.kernel + ky) * c.kernel + kx) * cout;
              for (std::size_t co = 0; co < cout; ++co) w[co] += r[co] * val;
            }
          }
        }
      } else {
        const std::size_t n_out = b.out.size();
        for (auto e = rec.offsets[tt]; e < rec.offsets[tt + 1]; ++e) {
          Real* w = dW + static_cast<std::size_t>(rec.index[e]) * n_out;
          const Real val = rec.value[e];
          for (std::size_t o = 0; o < n_out; ++o) w[o] += R[o] * val;
        }
      }
    }
  }

  for (std::size_t bi = 0; bi + 1 < nb; ++bi) {
    const auto& b = blocks[bi];
    auto& g = out.layers[bi];
    for (std::size_t j = 0; j < g.bias.size(); ++j) g.bias[j] += bias_acc[bi][j];
    const auto& acc = weight_acc[bi];
    if (b.conv) {
      const std::size_t k = b.conv_spec.kernel, cin = b.in.c, cout = b.out.c;
      for (std::size_t co = 0; co < cout; ++co)
        for (std::size_t ci = 0; ci < cin; ++ci)
          for (std::size_t ky = 0; ky < k; ++ky)
            for (std::size_t kx = 0; kx < k; ++kx)
              g.weight[((co * cin + ci) * k + ky) * k + kx] += static_cast<double>(acc[((ci * k + ky) * k + kx) * cout + co]);
    } else {
      const std::size_t n_in = b.in.size(), n_out = b.out.size();
      for (std::size_t kk = 0; kk < n_in; ++kk)
        for (std::size_t o = 0; o < n_out; ++o) g.weight[o * n_in + kk] += static_cast<double>(acc[kk * n_out + o]);
    }
  }
}

struct Example {
  const SparseInput* input = nullptr;
  int label = 1;  // texture id, 1-based
};

struct BatchGradient {
  double loss = 0.0;  // summed over the batch
  std::size_t correct = 0;
  Gradients grads;  // summed over the batch
};

struct GradientOptions {
  SurrogateSpec surrogate{};
  double logit_scale = 1.0;
  SpikeMode mode = SpikeMode::Binary;
  unsigned jobs = 1;
};

// Loss and parameter gradients over a batch. Per-example results are reduced
// in batch order, so the outcome does not depend on the thread count.
template <class Real>
BatchGradient surrogate_grad(const CompiledNetwork<Real>& net, const Parameters<Real>& params,
                             const std::vector<Example>& batch, const GradientOptions& opts) {
  if (batch.empty()) throw ArgumentError("empty batch");
  std::vector<Gradients> per(batch.size());
  std::vector<double> losses(batch.size());
  std::vector<char> hit(batch.size());
  ForwardOptions fo;
  fo.mode = opts.mode;
  fo.surrogate = opts.surrogate;
  parallel_for(batch.size(), opts.jobs, [&](std::size_t i) {
    const auto& ex = batch[i];
    if (ex.label < 1 || static_cast<std::size_t>(ex.label) > net.num_classes())
      throw ArgumentError("label " + std::to_string(ex.label) + " out of range");
    Tape<Real> tape;
    const auto res = forward(net, *ex.input, fo, &tape);
    const auto lr = cross_entropy(res.scores, static_cast<std::size_t>(ex.label - 1), opts.logit_scale);
    losses[i] = lr.loss;
    hit[i] = argmax_class(res.scores) + 1 == static_cast<std::size_t>(ex.label);
    per[i] = Gradients::zeros_like(params);
    backward(net, tape, lr.grad, per[i]);
  });
  BatchGradient out;
  out.grads = Gradients::zeros_like(params);
  for (std::size_t i = 0; i < batch.size(); ++i) {
    if (!std::isfinite(losses[i])) {
      std::ostringstream os;
      os << "non-finite loss " << losses[i] << " at batch position " << i << " (label " << batch[i].label
         << ", " << batch[i].input->total() << " input events)";
      throw NumericError(os.str());
    }
    out.loss += losses[i];
    out.correct += hit[i];
    out.grads.add(per[i]);
  }
  if (!out.grads.finite()) throw NumericError("non-finite gradient (batch loss " + std::to_string(out.loss) + ")");
  return out;
}

template <class Real>
BatchGradient surrogate_grad(const NetworkSpec& spec, const Parameters<Real>& params, const std::vector<Example>& batch,
                             const GradientOptions& opts) {
  return surrogate_grad(CompiledNetwork<Real>(spec, params), params, batch, opts);
}

}  // namespace tactile::snn
