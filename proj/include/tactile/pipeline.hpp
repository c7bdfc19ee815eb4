#pragma once

#include <filesystem>
#include <json.hpp>
#include <string>
#include <vector>

#include "tactile/aer/io.hpp"
#include "tactile/aer/transform.hpp"
#include "tactile/parallel.hpp"
#include "tactile/sim/dataset.hpp"
#include "tactile/snn/gradient.hpp"

namespace tactile {

// How recorded trials become network inputs. The classifier runs on
// dt_us-wide bins; 1000 us reproduces the 1000-step tensor exactly.
struct InputConfig {
  std::uint32_t dt_us = 10'000;
  std::uint32_t duration_us = aer::kTrialDurationUs;
  bool polarity_channels = false;  // keep ON/OFF apart as two input channels
  bool binarize = false;

  std::uint32_t t_steps() const { return duration_us / dt_us; }

  void validate() const {
    if (dt_us == 0 || duration_us == 0 || duration_us % dt_us != 0)
      throw ArgumentError("input time step must divide the trial duration");
  }

  snn::Shape shape() const { return {polarity_channels ? 2u : 1u, 20, 20}; }
};

inline nlohmann::json to_json(const InputConfig& c) {
  return {{"dt_us", c.dt_us},
          {"duration_us", c.duration_us},
          {"polarity_channels", c.polarity_channels},
          {"binarize", c.binarize}};
}

inline InputConfig input_config_from_json(const nlohmann::json& j) {
  InputConfig c;
  c.dt_us = j.value("dt_us", c.dt_us);
  c.duration_us = j.value("duration_us", c.duration_us);
  c.polarity_channels = j.value("polarity_channels", c.polarity_channels);
  c.binarize = j.value("binarize", c.binarize);
  c.validate();
  return c;
}

inline snn::SparseInput to_input(const aer::EventStream& raw, const InputConfig& cfg) {
  aer::Preprocessing pre;
  pre.binning = {cfg.dt_us, cfg.t_steps(), cfg.binarize};
  if (!cfg.polarity_channels) return snn::SparseInput::from_tensor(pre(raw).tensor);
  const auto parts = aer::bin_by_polarity(aer::pool(aer::crop(raw, pre.crop), pre.grid), pre.binning);
  return snn::SparseInput::from_polarity_tensors(parts[0].tensor, parts[1].tensor);
}

// Trials of a built dataset restricted to one split ("" keeps all).
inline std::vector<sim::TrialRecord> select_split(const sim::DatasetIndex& index, const std::string& split) {
  std::vector<sim::TrialRecord> out;
  for (const auto& t : index.trials)
    if (split.empty() || t.split == split) out.push_back(t);
  return out;
}

inline std::vector<snn::SparseInput> load_inputs(const std::filesystem::path& dataset_dir,
                                                 const std::vector<sim::TrialRecord>& trials, const InputConfig& cfg,
                                                 unsigned jobs = 1) {
  cfg.validate();
  std::vector<snn::SparseInput> inputs(trials.size());
  parallel_for(trials.size(), jobs,
               [&](std::size_t i) { inputs[i] = to_input(aer::read_events(dataset_dir / trials[i].file), cfg); });
  return inputs;
}

inline std::vector<snn::Example> make_examples(const std::vector<snn::SparseInput>& inputs,
                                               const std::vector<sim::TrialRecord>& trials) {
  std::vector<snn::Example> out;
  for (std::size_t i = 0; i < trials.size(); ++i) out.push_back({&inputs[i], trials[i].texture_id});
  return out;
}

}  // namespace tactile
