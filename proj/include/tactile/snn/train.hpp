#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <numeric>
#include <ostream>
#include <string>
#include <vector>

#include "tactile/errors.hpp"
#include "tactile/format.hpp"
#include "tactile/parallel.hpp"
#include "tactile/rng.hpp"
#include "tactile/snn/gradient.hpp"

namespace tactile::snn {

struct TrainConfig {
  double lr = 2e-3;
  int epochs = 20;
  std::size_t batch_size = 16;
  std::uint64_t seed = 1;
  double val_fraction = 0.1;  // per class; 0 disables validation
  double logit_scale = 0.05;
  double init_gain = 1.0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double grad_clip = 0.0;  // global norm; 0 disables
  SurrogateSpec surrogate{};
  unsigned jobs = 1;
};

struct LogRow {
  int epoch = 0;
  std::string split;
  double loss = 0.0;
  double accuracy = 0.0;
};

struct TrainResult {
  Parameters<float> params;  // best-validation (or final) parameters
  int best_epoch = 0;
  std::vector<LogRow> log;
};

// Loss went non-finite. Carries the last parameters that produced finite values.
class DivergenceError : public NumericError {
public:
  DivergenceError(const std::string& what, Parameters<float> last_good, int epoch)
      : NumericError(what), last_good_(std::move(last_good)), epoch_(epoch) {}
  const Parameters<float>& last_good() const noexcept { return last_good_; }
  int epoch() const noexcept { return epoch_; }

private:
  Parameters<float> last_good_;
  int epoch_;
};

inline void write_log_csv(std::ostream& out, const std::vector<LogRow>& log) {
  out << "epoch,split,loss,accuracy\n";
  for (const auto& r : log) out << r.epoch << ',' << r.split << ',' << format_double(r.loss) << ',' << format_double(r.accuracy) << '\n';
}

struct Evaluation {
  double loss = 0.0;  // mean
  double accuracy = 0.0;
  std::vector<int> predictions;
};

template <class Real>
Evaluation evaluate(const CompiledNetwork<Real>& net, const std::vector<Example>& set, double logit_scale, unsigned jobs = 1) {
  Evaluation ev;
  if (set.empty()) return ev;
  std::vector<double> loss(set.size());
  ev.predictions.resize(set.size());
  parallel_for(set.size(), jobs, [&](std::size_t i) {
    const auto r = forward(net, *set[i].input);
    loss[i] = cross_entropy(r.scores, static_cast<std::size_t>(set[i].label - 1), logit_scale).loss;
    ev.predictions[i] = static_cast<int>(argmax_class(r.scores)) + 1;
  });
  std::size_t correct = 0;
  for (std::size_t i = 0; i < set.size(); ++i) {
    ev.loss += loss[i];
    correct += ev.predictions[i] == set[i].label;
  }
  ev.loss /= static_cast<double>(set.size());
  ev.accuracy = static_cast<double>(correct) / static_cast<double>(set.size());
  return ev;
}

// Seeded stratified split: a val_fraction share of each class is held out.
inline void split_validation(const std::vector<Example>& data, double val_fraction, std::uint64_t seed,
                             std::vector<Example>& train, std::vector<Example>& val) {
  std::map<int, std::vector<std::size_t>> by_class;
  for (std::size_t i = 0; i < data.size(); ++i) by_class[data[i].label].push_back(i);
  std::vector<char> is_val(data.size(), 0);
  for (auto& [label, ids] : by_class) {
    auto rng = make_rng(seed, {0x76616cu, static_cast<std::uint64_t>(label)});
    std::shuffle(ids.begin(), ids.end(), rng);
    const auto n_val = static_cast<std::size_t>(std::lround(val_fraction * static_cast<double>(ids.size())));
    for (std::size_t k = 0; k < n_val && k + 1 < ids.size(); ++k) is_val[ids[k]] = 1;
  }
  for (std::size_t i = 0; i < data.size(); ++i) (is_val[i] ? val : train).push_back(data[i]);
}

// Adam on float parameters with double master copies. Deterministic for a
// given seed and independent of cfg.jobs. `progress` (optional) is called
// after every epoch.
inline TrainResult train(const NetworkSpec& spec, const std::vector<Example>& data, const TrainConfig& cfg,
                         const std::function<void(const LogRow&)>& progress = {}) {
  if (data.empty()) throw ArgumentError("empty training set");
  for (const auto& e : data)
    if (e.label < 1 || static_cast<std::uint32_t>(e.label) > spec.num_classes)
      throw ArgumentError("label " + std::to_string(e.label) + " out of range");
  if (cfg.epochs < 0 || cfg.batch_size == 0) throw ArgumentError("epochs must be >= 0 and batch size > 0");
  if (!(cfg.lr >= 0.0)) throw ArgumentError("learning rate must be nonnegative");

  std::vector<Example> train_set, val_set;
  if (cfg.val_fraction > 0.0)
    split_validation(data, cfg.val_fraction, cfg.seed, train_set, val_set);
  else
    train_set = data;

  auto params = init_parameters<float>(spec, cfg.seed, cfg.init_gain);
  auto master = params.cast<double>();
  auto m1 = Gradients::zeros_like(params), m2 = Gradients::zeros_like(params);
  TrainResult result;
  result.params = params;
  double best_val = -1.0, best_val_loss = 0.0;
  std::uint64_t step = 0;

  GradientOptions go;
  go.surrogate = cfg.surrogate;
  go.logit_scale = cfg.logit_scale;
  go.jobs = cfg.jobs;

  std::vector<std::size_t> order(train_set.size());
  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    auto rng = make_rng(cfg.seed, {0x65706fu, static_cast<std::uint64_t>(epoch)});
    std::shuffle(order.begin(), order.end(), rng);
    double loss_sum = 0.0;
    std::size_t correct = 0;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      std::vector<Example> batch;
      for (std::size_t k = start; k < std::min(order.size(), start + cfg.batch_size); ++k) batch.push_back(train_set[order[k]]);
      BatchGradient bg;
      try {
        bg = surrogate_grad(CompiledNetwork<float>(spec, params), params, batch, go);
      } catch (const NumericError& e) {
        throw DivergenceError(std::string("training diverged in epoch ") + std::to_string(epoch) + ": " + e.what(),
                              params, epoch);
      }
      loss_sum += bg.loss;
      correct += bg.correct;
      bg.grads.scale(1.0 / static_cast<double>(batch.size()));
      if (cfg.grad_clip > 0.0) {
        double norm = 0.0;
        for (const auto& l : bg.grads.layers) {
          for (double v : l.weight) norm += v * v;
          for (double v : l.bias) norm += v * v;
        }
        norm = std::sqrt(norm);
        if (norm > cfg.grad_clip) bg.grads.scale(cfg.grad_clip / norm);
      }
      ++step;
      const double c1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(step));
      const double c2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(step));
      auto update = [&](std::vector<double>& w, std::vector<float>& out, std::vector<double>& a, std::vector<double>& b,
                        const std::vector<double>& g) {
        for (std::size_t j = 0; j < w.size(); ++j) {
          a[j] = cfg.beta1 * a[j] + (1.0 - cfg.beta1) * g[j];
          b[j] = cfg.beta2 * b[j] + (1.0 - cfg.beta2) * g[j] * g[j];
          w[j] -= cfg.lr * (a[j] / c1) / (std::sqrt(b[j] / c2) + cfg.eps);
          out[j] = static_cast<float>(w[j]);
        }
      };
      for (std::size_t li = 0; li < params.layers.size(); ++li) {
        update(master.layers[li].weight, params.layers[li].weight, m1.layers[li].weight, m2.layers[li].weight,
               bg.grads.layers[li].weight);
        update(master.layers[li].bias, params.layers[li].bias, m1.layers[li].bias, m2.layers[li].bias,
               bg.grads.layers[li].bias);
      }
    }
    const LogRow tr{epoch, "train", loss_sum / static_cast<double>(train_set.size()),
                    static_cast<double>(correct) / static_cast<double>(train_set.size())};
    result.log.push_back(tr);
    if (progress) progress(tr);
    Evaluation ev;
    try {
      const CompiledNetwork<float> net(spec, params);
      if (!val_set.empty()) ev = evaluate(net, val_set, cfg.logit_scale, cfg.jobs);
    } catch (const NumericError& e) {
      throw DivergenceError(std::string("training diverged in epoch ") + std::to_string(epoch) + ": " + e.what(),
                            result.params, epoch);
    }
    if (!val_set.empty()) {
      const LogRow vr{epoch, "val", ev.loss, ev.accuracy};
      result.log.push_back(vr);
      if (progress) progress(vr);
      if (ev.accuracy > best_val || (ev.accuracy == best_val && ev.loss < best_val_loss)) {
        best_val = ev.accuracy;
        best_val_loss = ev.loss;
        result.params = params;
        result.best_epoch = epoch;
      }
    } else {
      result.params = params;
      result.best_epoch = epoch;
    }
  }
  return result;
}

}  // namespace tactile::snn
