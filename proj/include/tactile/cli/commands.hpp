#pragma once

#include <CLI11.hpp>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <json.hpp>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "tactile/aer/io.hpp"
#include "tactile/errors.hpp"
#include "tactile/metrics/report.hpp"
#include "tactile/metrics/stats.hpp"
#include "tactile/pipeline.hpp"
#include "tactile/sim/dataset.hpp"
#include "tactile/sim/trial.hpp"
#include "tactile/snn/params_io.hpp"
#include "tactile/snn/spec_json.hpp"
#include "tactile/snn/train.hpp"

namespace tactile::cli {

namespace fs = std::filesystem;
using nlohmann::json;

inline constexpr const char* kToolVersion = "1.0.0";

// --- config file ---------------------------------------------------------------

// JSON config for CLI11. Top-level keys set global options, an object keyed
// by a subcommand name sets that subcommand's options. Command-line values
// win over the file, the file wins over built-in defaults.
class JsonConfig : public CLI::Config {
public:
  std::string to_config(const CLI::App*, bool, bool, std::string) const override { return "{}"; }

  std::vector<CLI::ConfigItem> from_config(std::istream& input) const override {
    json j;
    try {
      input >> j;
    } catch (const json::exception& e) {
      throw CLI::ConversionError(std::string("config file is not valid JSON: ") + e.what());
    }
    if (!j.is_object()) throw CLI::ConversionError("config file must hold a JSON object");
    std::vector<CLI::ConfigItem> items;
    flatten(j, {}, items);
    return items;
  }

private:
  static void flatten(const json& j, const std::vector<std::string>& parents, std::vector<CLI::ConfigItem>& out) {
    for (auto it = j.begin(); it != j.end(); ++it) {
      if (it->is_object()) {
        auto p = parents;
        p.push_back(it.key());
        flatten(*it, p, out);
        continue;
      }
      CLI::ConfigItem item;
      item.parents = parents;
      item.name = it.key();
      auto scalar = [](const json& v) { return v.is_string() ? v.get<std::string>() : v.dump(); };
      if (it->is_array())
        for (const auto& v : *it) item.inputs.push_back(scalar(v));
      else
        item.inputs.push_back(scalar(*it));
      out.push_back(std::move(item));
    }
  }
};

// --- run records -----------------------------------------------------------------

inline std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

// JSON objects serialise with sorted keys, so the hash ignores field order.
inline std::string config_hash(const json& config) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a(config.dump())));
  return buf;
}

struct RunRecord {
  std::string command;
  json config;
  std::vector<std::string> outputs;
  unsigned jobs = 1;
  double wall_time_s = 0.0;
  std::string started;

  json to_json() const {
    return {{"command", command},         {"config", config},   {"config_hash", config_hash(config)},
            {"tool_version", kToolVersion}, {"jobs", jobs},       {"started", started},
            {"wall_time_s", wall_time_s}, {"outputs", outputs}};
  }
};

inline std::string utc_now() {
  const auto t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

inline void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out << text;
  if (!out) throw IoError("failed writing " + path.string());
}

inline void write_run_record(const fs::path& dir, const RunRecord& r) {
  write_text(dir / ("run_" + r.command + ".json"), r.to_json().dump(2) + "\n");
}

// --- models ------------------------------------------------------------------------

// A parameter file plus its JSON sidecar (<model>.json) describing the
// network, the input pipeline and the scoring scale.
struct Model {
  snn::NetworkSpec spec;
  snn::Parameters<float> params;
  InputConfig input;
  double logit_scale = 0.05;
  json meta;
};

inline fs::path sidecar_path(const fs::path& model) { return fs::path(model.string() + ".json"); }

inline json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

inline Model load_model(const fs::path& path) {
  Model m;
  m.meta = read_json(sidecar_path(path));
  try {
    m.spec = snn::network_spec_from_json(m.meta.at("network"));
    m.input = input_config_from_json(m.meta.at("input"));
    m.logit_scale = m.meta.value("logit_scale", 0.05);
  } catch (const json::exception& e) {
    throw FormatError(sidecar_path(path).string() + ": " + e.what());
  }
  if (!(m.input.shape() == m.spec.input))
    throw IncompatibleModelError(path.string() + ": input pipeline does not match the network input shape");
  m.params = snn::load_params(path, m.spec);
  return m;
}

inline void save_model(const fs::path& path, const Model& m) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  snn::save_params(path, m.spec, m.params);
  json meta = m.meta;
  meta["network"] = snn::to_json(m.spec);
  meta["input"] = to_json(m.input);
  meta["logit_scale"] = m.logit_scale;
  write_text(sidecar_path(path), meta.dump(2) + "\n");
}

// --- shared helpers ----------------------------------------------------------------

struct Globals {
  std::optional<std::uint64_t> seed;
  unsigned jobs = 1;
  std::string config;
};

inline fs::path dir_of(const fs::path& file) { return file.has_parent_path() ? file.parent_path() : fs::path("."); }

inline json motion_json(const sim::MotionProfile& m) {
  json j;
  sim::to_json(j, m);
  return j;
}

struct LoadedSplit {
  sim::DatasetIndex index;
  std::vector<sim::TrialRecord> trials;
  std::vector<snn::SparseInput> inputs;
  std::vector<snn::Example> examples;
};

inline LoadedSplit load_split(const fs::path& data, const std::string& split, const InputConfig& input, unsigned jobs) {
  LoadedSplit s;
  s.index = sim::load_index(data / "index.json");
  s.trials = select_split(s.index, split == "all" ? "" : split);
  s.inputs = load_inputs(data, s.trials, input, jobs);
  s.examples = make_examples(s.inputs, s.trials);
  return s;
}

// --- subcommands ---------------------------------------------------------------------

struct GenDatasetOptions {
  std::string manifest;
  std::string out;
};

inline int gen_dataset(const GenDatasetOptions& o, const Globals& g, std::ostream& log) {
  auto m = sim::load_manifest(o.manifest);
  if (g.seed) m.seed = *g.seed;
  const auto t0 = std::chrono::steady_clock::now();
  RunRecord rec{"gen-dataset", {}, {}, g.jobs, 0.0, utc_now()};
  json mj;
  sim::to_json(mj, m);
  rec.config = {{"manifest", mj}, {"out", o.out}};
  const auto idx = sim::build_dataset(m, o.out, g.jobs);
  rec.outputs.push_back("index.json");
  for (const auto& t : idx.trials) rec.outputs.push_back(t.file);
  rec.wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  write_run_record(o.out, rec);
  log << "wrote " << idx.trials.size() << " trials to " << o.out << "\n";
  return 0;
}

struct TrainOptions {
  std::string data;
  std::string out;
  std::string split = "train";
  std::string network;  // JSON file; empty selects the reference network
  std::string log_csv;  // default <out>.log.csv
  int epochs = 20;
  double lr = 2e-3;
  std::size_t batch = 16;
  double val_fraction = 0.1;
  double logit_scale = 0.05;
  double init_gain = 1.0;
  double grad_clip = 0.0;
  std::string surrogate = "boxcar";
  double surrogate_width = 1.0;
  std::uint32_t dt_us = 10'000;
  bool polarity = false;
  bool binarize = false;
};

inline snn::SurrogateSpec parse_surrogate(const std::string& kind, double width) {
  snn::SurrogateSpec s;
  if (kind == "boxcar")
    s.kind = snn::SurrogateKind::Boxcar;
  else if (kind == "fast_sigmoid")
    s.kind = snn::SurrogateKind::FastSigmoid;
  else
    throw ArgumentError("unknown surrogate '" + kind + "'");
  if (!(width > 0.0)) throw ArgumentError("surrogate width must be positive");
  s.width = width;
  return s;
}

inline int train(const TrainOptions& o, const Globals& g, std::ostream& log) {
  const auto t0 = std::chrono::steady_clock::now();
  InputConfig input{o.dt_us, aer::kTrialDurationUs, o.polarity, o.binarize};
  input.validate();
  auto spec = o.network.empty() ? snn::NetworkSpec::reference() : snn::network_spec_from_json(read_json(o.network));
  spec.input = input.shape();
  spec.validate();

  snn::TrainConfig cfg;
  cfg.epochs = o.epochs;
  cfg.lr = o.lr;
  cfg.batch_size = o.batch;
  cfg.seed = g.seed.value_or(1);
  cfg.val_fraction = o.val_fraction;
  cfg.logit_scale = o.logit_scale;
  cfg.init_gain = o.init_gain;
  cfg.grad_clip = o.grad_clip;
  cfg.surrogate = parse_surrogate(o.surrogate, o.surrogate_width);
  cfg.jobs = g.jobs;

  const json train_cfg = {{"epochs", cfg.epochs},         {"lr", cfg.lr},
                          {"batch", cfg.batch_size},      {"seed", cfg.seed},
                          {"val_fraction", cfg.val_fraction}, {"logit_scale", cfg.logit_scale},
                          {"init_gain", cfg.init_gain},   {"grad_clip", cfg.grad_clip},
                          {"surrogate", o.surrogate},     {"surrogate_width", o.surrogate_width},
                          {"optimizer", "adam"},          {"beta1", cfg.beta1},
                          {"beta2", cfg.beta2},           {"eps", cfg.eps},
                          {"loss", "softmax cross-entropy on scaled summed readout"}};
  RunRecord rec{"train", {}, {}, g.jobs, 0.0, utc_now()};
  rec.config = {{"data", o.data}, {"out", o.out},   {"split", o.split}, {"network", snn::to_json(spec)},
                {"input", to_json(input)}, {"train", train_cfg}};

  const auto set = load_split(o.data, o.split, input, g.jobs);
  if (set.examples.empty()) throw ArgumentError("no trials in split '" + o.split + "'");
  log << "training on " << set.examples.size() << " trials\n";

  const fs::path out = o.out;
  const fs::path log_path = o.log_csv.empty() ? fs::path(o.out + ".log.csv") : fs::path(o.log_csv);
  Model model{spec, {}, input, cfg.logit_scale, {}};
  model.meta = {{"format", "tactile-model"}, {"train", train_cfg}, {"dataset", set.index.name}};
  snn::TrainResult result;
  try {
    result = snn::train(spec, set.examples, cfg, [&](const snn::LogRow& r) {
      log << "epoch " << r.epoch << ' ' << r.split << " loss " << r.loss << " accuracy " << r.accuracy << "\n";
    });
  } catch (const snn::DivergenceError& e) {
    Model last = model;
    last.params = e.last_good();
    last.meta["diverged_epoch"] = e.epoch();
    const fs::path p = o.out + ".last_good";
    save_model(p, last);
    throw NumericError(std::string(e.what()) + "; last good parameters saved to " + p.string());
  }
  model.params = result.params;
  model.meta["best_epoch"] = result.best_epoch;
  save_model(out, model);
  std::ostringstream csv;
  snn::write_log_csv(csv, result.log);
  write_text(log_path, csv.str());
  rec.outputs = {out.filename().string(), sidecar_path(out).filename().string(), log_path.filename().string()};
  rec.wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  write_run_record(dir_of(out), rec);
  log << "best epoch " << result.best_epoch << ", model written to " << o.out << "\n";
  return 0;
}

struct EvalOptions {
  std::string model;
  std::string data;
  std::string split = "test";
  std::string out;
};

inline int eval(const EvalOptions& o, const Globals& g, std::ostream& log) {
  const auto t0 = std::chrono::steady_clock::now();
  const auto model = load_model(o.model);
  const auto set = load_split(o.data, o.split, model.input, g.jobs);
  if (set.examples.empty()) throw ArgumentError("no trials in split '" + o.split + "'");
  const snn::CompiledNetwork<float> net(model.spec, model.params);
  const auto ev = snn::evaluate(net, set.examples, model.logit_scale, g.jobs);
  std::vector<int> truth;
  for (const auto& t : set.trials) truth.push_back(t.texture_id);
  const auto cm = metrics::confusion(truth, ev.predictions, model.spec.num_classes);

  std::ostringstream pred;
  pred << "id,texture_id,predicted\n";
  for (std::size_t i = 0; i < set.trials.size(); ++i)
    pred << set.trials[i].id << ',' << truth[i] << ',' << ev.predictions[i] << '\n';
  const json summary = {{"model", o.model},         {"data", o.data},
                        {"split", o.split},         {"n", set.trials.size()},
                        {"accuracy", ev.accuracy},  {"loss", ev.loss},
                        {"confusion", metrics::to_json(cm)}};
  const fs::path dir = o.out;
  write_text(dir / "eval.json", summary.dump(2) + "\n");
  write_text(dir / "predictions.csv", pred.str());
  RunRecord rec{"eval", {{"model", o.model}, {"data", o.data}, {"split", o.split}, {"out", o.out}},
                {"eval.json", "predictions.csv"}, g.jobs, 0.0, utc_now()};
  rec.wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  write_run_record(dir, rec);
  log << "accuracy " << ev.accuracy << " on " << set.trials.size() << " trials\n";
  return 0;
}

struct CurveOptions {
  std::string model;
  std::string data;
  std::string split = "test";
  double step_ms = 50.0;
  double band = 0.05;
  std::string out = "curve.csv";
};

inline int curve(const CurveOptions& o, const Globals& g, std::ostream& log) {
  const auto t0 = std::chrono::steady_clock::now();
  const auto model = load_model(o.model);
  const auto set = load_split(o.data, o.split, model.input, g.jobs);
  const snn::CompiledNetwork<float> net(model.spec, model.params);
  std::string motion;
  if (!set.trials.empty()) motion = std::string(sim::to_string(set.trials.front().motion.kind));
  const auto c = metrics::accuracy_vs_length(net, set.examples, model.input.dt_us, o.step_ms, g.jobs, motion);
  const auto conv = metrics::time_to_band(c, o.band);
  std::ostringstream csv;
  metrics::write_curve_csv(csv, c);
  const fs::path out = o.out;
  const fs::path summary = fs::path(o.out).replace_extension(".json");
  write_text(out, csv.str());
  write_text(summary, json{{"curve", metrics::to_json(c)}, {"convergence", metrics::to_json(conv)}}.dump(2) + "\n");
  RunRecord rec{"curve",
                {{"model", o.model}, {"data", o.data}, {"split", o.split}, {"step_ms", o.step_ms}, {"band", o.band},
                 {"out", o.out}},
                {out.filename().string(), summary.filename().string()},
                g.jobs,
                0.0,
                utc_now()};
  rec.wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  write_run_record(dir_of(out), rec);
  log << "final accuracy " << conv.final_accuracy << ", within " << o.band << " from " << conv.time_to_band_ms
      << " ms\n";
  return 0;
}

struct SweepOptions {
  std::string model;
  std::string data;
  std::string split = "test";
  std::string axis = "linear";
  std::vector<double> depths{0.5, 1.0, 1.5, 2.0, 2.5};
  std::vector<double> speeds{10.0, 20.0, 30.0, 40.0, 50.0};
  std::size_t min_count = 5;
  std::string out;
};

inline int sweep(const SweepOptions& o, const Globals& g, std::ostream& log) {
  const auto t0 = std::chrono::steady_clock::now();
  const auto model = load_model(o.model);
  const auto set = load_split(o.data, o.split, model.input, g.jobs);
  const snn::CompiledNetwork<float> net(model.spec, model.params);
  const auto ev = snn::evaluate(net, set.examples, model.logit_scale, g.jobs);
  metrics::SweepGrid grid;
  grid.depths_mm = o.depths;
  grid.speeds = o.speeds;
  grid.min_count = o.min_count;
  if (o.axis == "linear")
    grid.axis = metrics::SpeedAxis::Linear;
  else if (o.axis == "angular")
    grid.axis = metrics::SpeedAxis::Angular;
  else
    throw ArgumentError("axis must be 'linear' or 'angular'");
  const auto r = metrics::generalization_sweep(set.trials, ev.predictions, grid);
  std::ostringstream csv;
  metrics::write_sweep_csv(csv, r);
  const fs::path dir = o.out;
  write_text(dir / "sweep.csv", csv.str());
  write_text(dir / "sweep.json", json{{"accuracy", ev.accuracy}, {"sweep", metrics::to_json(r)}}.dump(2) + "\n");
  RunRecord rec{"sweep",
                {{"model", o.model},
                 {"data", o.data},
                 {"split", o.split},
                 {"axis", o.axis},
                 {"depths", o.depths},
                 {"speeds", o.speeds},
                 {"min_count", o.min_count},
                 {"out", o.out}},
                {"sweep.csv", "sweep.json"},
                g.jobs,
                0.0,
                utc_now()};
  rec.wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  write_run_record(dir, rec);
  std::size_t flagged = 0;
  for (const auto& c : r.cells) flagged += c.flagged;
  log << r.cells.size() << " cells, " << flagged << " below " << o.min_count << " trials\n";
  return 0;
}

struct PowerOptions {
  std::vector<std::string> data;
  std::string model;  // optional; adds synop rates
  std::string split = "all";
  std::string calibration;  // optional PowerModel JSON; default fits the measured motion powers
  std::uint32_t dt_us = 10'000;
  std::string out;
};

struct MotionRates {
  std::string dataset;
  std::string motion;
  std::size_t trials = 0;
  double event_rate = 0.0;  // network input events per second
  double synop_rate = 0.0;
};

inline MotionRates measure_rates(const fs::path& data, const std::string& split, const std::optional<Model>& model,
                                 std::uint32_t dt_us, unsigned jobs) {
  const InputConfig input = model ? model->input : InputConfig{dt_us};
  const auto set = load_split(data, split, input, jobs);
  if (set.trials.empty()) throw ArgumentError(data.string() + ": no trials in split '" + split + "'");
  MotionRates r;
  r.dataset = set.index.name;
  r.motion = std::string(sim::to_string(set.trials.front().motion.kind));
  for (const auto& t : set.trials)
    if (t.motion.kind != set.trials.front().motion.kind)
      throw ArgumentError(data.string() + ": power reports need single-motion datasets");
  r.trials = set.trials.size();
  std::vector<std::uint64_t> synops(set.inputs.size(), 0);
  if (model) {
    const snn::CompiledNetwork<float> net(model->spec, model->params);
    parallel_for(set.inputs.size(), jobs,
                 [&](std::size_t i) { synops[i] = snn::count_synops(snn::forward(net, set.inputs[i]).trace).total; });
  }
  double events = 0.0, ops = 0.0;
  for (std::size_t i = 0; i < set.inputs.size(); ++i) {
    events += static_cast<double>(set.inputs[i].total());
    ops += static_cast<double>(synops[i]);
  }
  const double seconds = static_cast<double>(r.trials) * input.duration_us * 1e-6;
  r.event_rate = events / seconds;
  r.synop_rate = ops / seconds;
  return r;
}

inline int power_report(const PowerOptions& o, const Globals& g, std::ostream& log) {
  const auto t0 = std::chrono::steady_clock::now();
  if (o.data.empty()) throw ArgumentError("power-report needs at least one --data directory");
  std::optional<Model> model;
  if (!o.model.empty()) model = load_model(o.model);
  std::vector<MotionRates> rates;
  for (const auto& d : o.data) rates.push_back(measure_rates(d, o.split, model, o.dt_us, g.jobs));

  std::vector<metrics::PowerObservation> obs;
  std::vector<std::size_t> obs_row;
  for (std::size_t i = 0; i < rates.size(); ++i)
    if (auto mw = metrics::measured_power_mw(rates[i].motion)) {
      obs.push_back({rates[i].synop_rate, rates[i].event_rate, *mw});
      obs_row.push_back(i);
    }
  metrics::PowerModel pm;
  json calibration;
  if (!o.calibration.empty()) {
    pm = metrics::power_model_from_json(read_json(o.calibration));
    calibration = {{"source", o.calibration}};
  } else {
    const auto cal = metrics::calibrate_power(obs);
    pm = cal.model;
    calibration = {{"source", "measured motion powers"},
                   {"residual_norm_mw", cal.residual_norm},
                   {"residuals_mw", cal.residuals_mw}};
  }
  std::vector<std::optional<double>> loo(rates.size());
  if (obs.size() >= 2) {
    const auto pred = metrics::leave_one_out(obs);
    for (std::size_t k = 0; k < obs.size(); ++k) loo[obs_row[k]] = pred[k];
  }

  std::ostringstream csv;
  csv << "dataset,motion,trials,event_rate,synop_rate,estimated_mw,measured_mw,loo_mw\n";
  json rows = json::array();
  for (std::size_t i = 0; i < rates.size(); ++i) {
    const auto& r = rates[i];
    const double est = metrics::estimate_power(pm, r.synop_rate, r.event_rate);
    const auto measured = metrics::measured_power_mw(r.motion);
    csv << r.dataset << ',' << r.motion << ',' << r.trials << ',' << format_double(r.event_rate) << ','
        << format_double(r.synop_rate) << ',' << format_double(est) << ','
        << (measured ? format_double(*measured) : "") << ',' << (loo[i] ? format_double(*loo[i]) : "") << '\n';
    json row = {{"dataset", r.dataset},     {"motion", r.motion},         {"trials", r.trials},
                {"event_rate", r.event_rate}, {"synop_rate", r.synop_rate}, {"estimated_mw", est}};
    row["measured_mw"] = measured ? json(*measured) : json(nullptr);
    row["loo_mw"] = loo[i] ? json(*loo[i]) : json(nullptr);
    rows.push_back(row);
  }
  const fs::path dir = o.out;
  write_text(dir / "power.csv", csv.str());
  write_text(dir / "power.json",
             json{{"model", metrics::to_json(pm)}, {"calibration", calibration}, {"motions", rows}}.dump(2) + "\n");
  RunRecord rec{"power-report",
                {{"data", o.data},
                 {"model", o.model},
                 {"split", o.split},
                 {"calibration", o.calibration},
                 {"dt_us", o.dt_us},
                 {"out", o.out}},
                {"power.csv", "power.json"},
                g.jobs,
                0.0,
                utc_now()};
  rec.wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  write_run_record(dir, rec);
  log << "idle " << pm.idle_mw << " mW, " << pm.energy_per_synop_nj << " nJ/synop, " << pm.energy_per_input_event_nj
      << " nJ/event\n";
  return 0;
}

struct InspectOptions {
  std::string path;
};

// Prints a summary of an event file, spike tensor, parameter file or
// dataset directory/index. Read-only: no run record is written.
inline int inspect(const InspectOptions& o, std::ostream& out) {
  fs::path p = o.path;
  if (fs::is_directory(p)) p /= "index.json";
  if (p.extension() == ".json") {
    const auto idx = sim::load_index(p);
    std::size_t train = 0;
    for (const auto& t : idx.trials) train += t.split == "train";
    out << "dataset " << idx.name << "\ncreated " << idx.created << "\ntexture library v"
        << idx.texture_library_version << "\ntrials " << idx.trials.size() << " (train " << train << ", test "
        << idx.trials.size() - train << ")\n";
    return 0;
  }
  const auto bytes = aer::detail::slurp(p);
  const std::string magic(bytes.data(), std::min<std::size_t>(4, bytes.size()));
  if (magic == "AERT") {
    const auto s = aer::decode_events(bytes, p.string());
    std::size_t on = 0;
    for (const auto& e : s.events()) on += e.polarity == aer::Polarity::On;
    out << "event stream " << p.string() << "\nwidth " << s.width() << "\nheight " << s.height() << "\nduration_us "
        << s.duration_us() << "\nevents " << s.size() << " (on " << on << ", off " << s.size() - on << ")\n";
    if (s.size() > 0) out << "t_first_us " << s.events().front().t << "\nt_last_us " << s.events().back().t << "\n";
    return 0;
  }
  if (magic == "SPKT") {
    const auto t = aer::decode_tensor(bytes, p.string());
    out << "spike tensor " << p.string() << "\nt_steps " << t.t_steps() << "\nheight " << t.height() << "\nwidth "
        << t.width() << "\ndt_us " << t.dt_us() << "\ntotal " << t.total() << "\n";
    return 0;
  }
  if (magic == "SNNP") {
    const auto m = load_model(p);
    out << "parameters " << p.string() << "\nnetwork " << m.spec.canonical() << "\ncount " << m.params.count()
        << "\ninit_seed " << m.params.init_seed << "\ndt_us " << m.input.dt_us << "\n";
    return 0;
  }
  throw FormatError(p.string() + ": unrecognised file type");
}

// --- entry point ---------------------------------------------------------------------

// Returns 0 on success, 1 on operational failure, 2 on usage errors.
inline int run_command(int argc, const char* const* argv, std::ostream& out = std::cout,
                       std::ostream& err = std::cerr) {
  CLI::App app{"Neuromorphic tactile texture pipeline", "tactile_cli"};
  app.require_subcommand(1);
  app.fallthrough();
  app.config_formatter(std::make_shared<JsonConfig>());
  app.set_config("--config", "", "JSON config file (command-line flags take precedence)");

  Globals g;
  std::uint64_t seed = 0;
  auto* seed_opt = app.add_option("--seed", seed, "Global seed");
  app.add_option("--jobs", g.jobs, "Worker threads")->check(CLI::Range(1u, 1024u));

  GenDatasetOptions gen;
  auto* gen_cmd = app.add_subcommand("gen-dataset", "Simulate a dataset from a manifest");
  gen_cmd->add_option("--manifest", gen.manifest, "Dataset manifest (JSON)")->required();
  gen_cmd->add_option("--out", gen.out, "Output directory")->required();

  TrainOptions tr;
  auto* train_cmd = app.add_subcommand("train", "Train the spiking classifier");
  train_cmd->add_option("--data", tr.data, "Dataset directory")->required();
  train_cmd->add_option("--out", tr.out, "Parameter file to write")->required();
  train_cmd->add_option("--split", tr.split, "Index split to train on")->capture_default_str();
  train_cmd->add_option("--network", tr.network, "Network spec (JSON); reference network if omitted");
  train_cmd->add_option("--log", tr.log_csv, "Training log CSV (default <out>.log.csv)");
  train_cmd->add_option("--epochs", tr.epochs)->capture_default_str()->check(CLI::NonNegativeNumber);
  train_cmd->add_option("--lr", tr.lr)->capture_default_str()->check(CLI::NonNegativeNumber);
  train_cmd->add_option("--batch", tr.batch)->capture_default_str()->check(CLI::PositiveNumber);
  train_cmd->add_option("--val-fraction", tr.val_fraction)->capture_default_str()->check(CLI::Range(0.0, 0.9));
  train_cmd->add_option("--logit-scale", tr.logit_scale)->capture_default_str()->check(CLI::PositiveNumber);
  train_cmd->add_option("--init-gain", tr.init_gain)->capture_default_str()->check(CLI::PositiveNumber);
  train_cmd->add_option("--grad-clip", tr.grad_clip)->capture_default_str()->check(CLI::NonNegativeNumber);
  train_cmd->add_option("--surrogate", tr.surrogate)
      ->capture_default_str()
      ->check(CLI::IsMember({"boxcar", "fast_sigmoid"}));
  train_cmd->add_option("--surrogate-width", tr.surrogate_width)->capture_default_str();
  train_cmd->add_option("--dt-us", tr.dt_us, "Model time step in microseconds")->capture_default_str();
  train_cmd->add_flag("--polarity", tr.polarity, "Keep ON/OFF events as two input channels");
  train_cmd->add_flag("--binarize", tr.binarize, "Clamp input bins to {0,1}");

  EvalOptions ev;
  auto* eval_cmd = app.add_subcommand("eval", "Evaluate a model on a dataset split");
  eval_cmd->add_option("--model", ev.model, "Parameter file")->required();
  eval_cmd->add_option("--data", ev.data, "Dataset directory")->required();
  eval_cmd->add_option("--split", ev.split, "train, test or all")->capture_default_str();
  eval_cmd->add_option("--out", ev.out, "Report directory")->required();

  CurveOptions cu;
  auto* curve_cmd = app.add_subcommand("curve", "Accuracy against sample length");
  curve_cmd->add_option("--model", cu.model, "Parameter file")->required();
  curve_cmd->add_option("--data", cu.data, "Dataset directory")->required();
  curve_cmd->add_option("--split", cu.split, "train, test or all")->capture_default_str();
  curve_cmd->add_option("--step", cu.step_ms, "Length step in ms")->capture_default_str()->check(CLI::PositiveNumber);
  curve_cmd->add_option("--band", cu.band, "Error band for convergence")->capture_default_str();
  curve_cmd->add_option("--out", cu.out, "CSV path; a JSON summary is written next to it")->capture_default_str();

  SweepOptions sw;
  auto* sweep_cmd = app.add_subcommand("sweep", "Accuracy per depth/speed cell");
  sweep_cmd->add_option("--model", sw.model, "Parameter file")->required();
  sweep_cmd->add_option("--data", sw.data, "Dataset directory")->required();
  sweep_cmd->add_option("--split", sw.split, "train, test or all")->capture_default_str();
  sweep_cmd->add_option("--axis", sw.axis, "Speed axis")->capture_default_str()->check(
      CLI::IsMember({"linear", "angular"}));
  sweep_cmd->add_option("--depths", sw.depths, "Depth cell centres (mm)")->capture_default_str();
  sweep_cmd->add_option("--speeds", sw.speeds, "Speed cell centres")->capture_default_str();
  sweep_cmd->add_option("--min-count", sw.min_count, "Cells with fewer trials are flagged")->capture_default_str();
  sweep_cmd->add_option("--out", sw.out, "Report directory")->required();

  PowerOptions pw;
  auto* power_cmd = app.add_subcommand("power-report", "Event-rate power estimates per motion");
  power_cmd->add_option("--data", pw.data, "Dataset directories, one motion each")->required();
  power_cmd->add_option("--model", pw.model, "Parameter file; adds synaptic-operation rates");
  power_cmd->add_option("--split", pw.split, "train, test or all")->capture_default_str();
  power_cmd->add_option("--calibration", pw.calibration, "Power model JSON instead of fitting");
  power_cmd->add_option("--dt-us", pw.dt_us, "Bin width when no model is given")->capture_default_str();
  power_cmd->add_option("--out", pw.out, "Report directory")->required();

  InspectOptions in;
  auto* inspect_cmd = app.add_subcommand("inspect", "Summarise an artifact");
  inspect_cmd->add_option("path", in.path, "Event file, tensor, parameter file or dataset")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err) == 0 ? 0 : 2;
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err) == 0 ? 0 : 2;
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e, out, err) == 0 ? 0 : 2;
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return 2;
  }
  if (seed_opt->count() > 0) g.seed = seed;

  try {
    if (*gen_cmd) return gen_dataset(gen, g, err);
    if (*train_cmd) return train(tr, g, err);
    if (*eval_cmd) return eval(ev, g, err);
    if (*curve_cmd) return curve(cu, g, err);
    if (*sweep_cmd) return sweep(sw, g, err);
    if (*power_cmd) return power_report(pw, g, err);
    if (*inspect_cmd) return inspect(in, out);
  } catch (const ArgumentError& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}

}  // namespace tactile::cli
