// Acceptance run: one PASS/FAIL line per criterion on stdout, progress and
// measured values on stderr, and a JSON report in the work directory.

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <numeric>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "support.hpp"
#include "tactile/aer/transform.hpp"
#include "tactile/metrics/curve.hpp"
#include "tactile/metrics/power.hpp"
#include "tactile/metrics/stats.hpp"
#include "tactile/metrics/sweep.hpp"
#include "tactile/pipeline.hpp"
#include "tactile/sim/dataset.hpp"
#include "tactile/sim/trial.hpp"
#include "tactile/snn/params_io.hpp"
#include "tactile/snn/spec_json.hpp"
#include "tactile/snn/train.hpp"

using namespace tactile;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

struct Context {
  fs::path work;
  fs::path configs = TACTILE_CONFIG_DIR;
  unsigned jobs = 1;
  bool reuse = false;
  json report = json::object();
  std::map<int, std::string> lines;
  int failures = 0;
};

void verdict(Context& ctx, int id, bool pass, const std::string& detail, json values = json::object()) {
  const auto line = std::string(pass ? "PASS" : "FAIL") + " criterion " + std::to_string(id) + ": " + detail;
  std::cerr << line << std::endl;
  ctx.lines[id] = line;
  values["pass"] = pass;
  values["detail"] = detail;
  ctx.report[std::to_string(id)] = std::move(values);
  if (!pass) ++ctx.failures;
}

std::string fmt(double v, int digits = 4) {
  std::ostringstream os;
  os.precision(digits);
  os << v;
  return os.str();
}

json read_json_file(const fs::path& p) {
  std::ifstream in(p);
  if (!in) throw IoError("cannot read " + p.string());
  return json::parse(in);
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

// ---- datasets and models -------------------------------------------------

struct Dataset {
  sim::DatasetManifest manifest;
  std::vector<sim::TrialRecord> trials;
  std::vector<snn::SparseInput> inputs;

  std::vector<snn::Example> examples(const std::string& split) const {
    std::vector<snn::Example> out;
    for (std::size_t i = 0; i < trials.size(); ++i)
      if (split.empty() || trials[i].split == split) out.push_back({&inputs[i], trials[i].texture_id});
    return out;
  }
  std::vector<sim::TrialRecord> records(const std::string& split) const {
    std::vector<sim::TrialRecord> out;
    for (const auto& t : trials)
      if (split.empty() || t.split == split) out.push_back(t);
    return out;
  }
};

sim::DatasetManifest manifest_from(const Context& ctx, const std::string& config, std::uint64_t seed,
                                   int per_texture) {
  auto m = sim::load_manifest(ctx.configs / (config + ".json"));
  m.seed = seed;
  m.trials_per_texture = per_texture;
  return m;
}

Dataset simulate(const Context& ctx, const sim::DatasetManifest& m, const InputConfig& input) {
  Dataset d;
  d.manifest = m;
  d.trials = sim::plan_trials(m);
  d.inputs.resize(d.trials.size());
  parallel_for(d.trials.size(), ctx.jobs,
               [&](std::size_t i) { d.inputs[i] = to_input(sim::simulate_trial(d.trials[i].spec()), input); });
  return d;
}

struct Recipe {
  snn::NetworkSpec spec;
  snn::TrainConfig train;
  InputConfig input;
};

Recipe reference_recipe(const Context& ctx) {
  Recipe r;
  r.spec = snn::network_spec_from_json(read_json_file(ctx.configs / "reference_network.json"));
  const auto t = read_json_file(ctx.configs / "train.json").at("train");
  r.train.epochs = t.at("epochs").get<int>();
  r.train.lr = t.at("lr").get<double>();
  r.train.batch_size = t.at("batch").get<std::size_t>();
  r.train.logit_scale = t.at("logit-scale").get<double>();
  r.input.dt_us = t.at("dt-us").get<std::uint32_t>();
  r.input.validate();
  r.train.jobs = ctx.jobs;
  return r;
}

struct Model {
  snn::NetworkSpec spec;
  snn::Parameters<float> params;
  snn::CompiledNetwork<float> net() const { return {spec, params}; }
};

// Trains on the train split, or loads an earlier result when reusing.
Model train_model(const Context& ctx, const Recipe& recipe, const Dataset& data, std::uint64_t seed,
                  const std::string& name) {
  const auto path = ctx.work / "models" / (name + ".snnp");
  Model m{recipe.spec, {}};
  if (ctx.reuse && fs::exists(path)) {
    m.params = snn::load_params(path, recipe.spec);
    return m;
  }
  auto cfg = recipe.train;
  cfg.seed = seed;
  const auto t0 = Clock::now();
  m.params = snn::train(recipe.spec, data.examples("train"), cfg).params;
  std::cerr << "  trained " << name << " in " << fmt(seconds_since(t0), 3) << " s\n";
  fs::create_directories(path.parent_path());
  snn::save_params(path, recipe.spec, m.params);
  return m;
}

double test_accuracy(const Context& ctx, const Model& m, const Dataset& d, const Recipe& r) {
  return snn::evaluate(m.net(), d.examples("test"), r.train.logit_scale, ctx.jobs).accuracy;
}

const std::vector<std::string> kMotions{"tap", "rotate", "slide", "tap_rotate", "tap_slide", "slide_rotate"};

// ---- criterion 1 ---------------------------------------------------------

void criterion_1(Context& ctx) {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(101);
  const int networks = 10'000;
  std::uint64_t spikes = 0;
  int mismatches = 0;
  for (int rep = 0; rep < networks; ++rep) {
    const auto spec = oracle::random_spec(rng);
    const auto params = oracle::random_params(spec, rng);
    const auto input = oracle::random_input(rng, spec.input, 1 + static_cast<std::uint32_t>(rng() % 20));
    snn::ForwardOptions o;
    o.record_readout = true;
    o.record_spikes = true;
    const auto got = snn::forward(spec, params, input, o);
    const auto want = oracle::dense_forward(spec, params, input);
    bool same = got.trace.spike_indices == want.spikes;
    for (std::size_t t = 0; same && t < input.t_steps; ++t)
      for (std::size_t c = 0; c < spec.num_classes; ++c)
        same = same && oracle::same_bits(got.trace.readout[t][c], want.readout[t][c]);
    for (std::size_t c = 0; c < spec.num_classes; ++c) same = same && oracle::same_bits(got.scores[c], want.scores[c]);
    mismatches += !same;
    spikes += got.trace.total_spikes();
  }
  const double secs = seconds_since(t0);
  verdict(ctx, 1, mismatches == 0 && secs < 60.0,
          std::to_string(networks) + " networks, " + std::to_string(mismatches) + " mismatches, " +
              std::to_string(spikes) + " spikes compared, " + fmt(secs, 3) + " s",
          {{"networks", networks}, {"mismatches", mismatches}, {"spikes", spikes}, {"seconds", secs}});
}

// ---- criterion 2 ---------------------------------------------------------

void criterion_2(Context& ctx) {
  std::mt19937_64 rng(202);
  auto pick = [&](int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); };
  const int streams = 1000;
  int bad = 0;
  std::uint64_t events_seen = 0, dropped_seen = 0;
  for (int rep = 0; rep < streams; ++rep) {
    const auto w = static_cast<std::uint16_t>(pick(40, 640)), h = static_cast<std::uint16_t>(pick(40, 480));
    const auto dur = static_cast<std::uint32_t>(pick(100'000, 1'200'000));
    std::vector<aer::Event> ev(static_cast<std::size_t>(pick(0, 3000)));
    for (auto& e : ev)
      e = {static_cast<std::uint32_t>(pick(0, static_cast<int>(dur) - 1)), static_cast<std::uint16_t>(pick(0, w - 1)),
           static_cast<std::uint16_t>(pick(0, h - 1)), static_cast<aer::Polarity>(pick(0, 1))};
    const aer::EventStream raw(w, h, dur, ev);

    const auto cell = static_cast<std::uint16_t>(pick(1, 13));
    const auto cells = static_cast<std::uint16_t>(pick(1, std::min(20, std::min<int>(w, h) / cell)));
    const auto side = static_cast<std::uint16_t>(cells * cell);
    const aer::CropSpec cs{static_cast<std::uint16_t>(pick(0, w - side)), static_cast<std::uint16_t>(pick(0, h - side)),
                           side};
    const std::uint32_t dts[] = {500, 1000, 2000, 5000, 10000};
    const std::uint32_t dt = dts[pick(0, 4)];
    const auto steps = static_cast<std::uint32_t>(pick(1, static_cast<int>(1'100'000 / dt)));
    const bool binarize = pick(0, 3) == 0;

    const auto cropped = aer::crop(raw, cs);
    const auto pooled = aer::pool(cropped, {cells, cells, cell});
    const auto binned = aer::bin(pooled, {dt, steps, binarize});

    // Oracle: per-event window test, linear scan for the cell, dense counts.
    std::vector<aer::Event> want_crop, want_pool;
    std::size_t outside = 0, want_dropped = 0;
    std::vector<std::uint32_t> dense(static_cast<std::size_t>(steps) * cells * cells, 0);
    for (const auto& e : raw.events()) {
      const bool in = e.x >= cs.origin_x && e.x < cs.origin_x + side && e.y >= cs.origin_y && e.y < cs.origin_y + side;
      if (!in) {
        ++outside;
        continue;
      }
      const auto lx = static_cast<std::uint16_t>(e.x - cs.origin_x), ly = static_cast<std::uint16_t>(e.y - cs.origin_y);
      want_crop.push_back({e.t, lx, ly, e.polarity});
      std::uint16_t cx = 0, cy = 0;
      for (std::uint16_t c = 0; c < cells; ++c) {
        if (lx >= c * cell && lx < (c + 1) * cell) cx = c;
        if (ly >= c * cell && ly < (c + 1) * cell) cy = c;
      }
      want_pool.push_back({e.t, cx, cy, e.polarity});
      bool placed = false;
      for (std::uint32_t k = e.t / dt; k < steps && !placed; ++k)
        if (e.t >= k * dt && e.t < (k + 1) * dt) {
          auto& c = dense[(static_cast<std::size_t>(k) * cells + cy) * cells + cx];
          c = binarize ? 1 : c + 1;
          placed = true;
        }
      want_dropped += !placed;
    }
    bool ok = cropped.events() == want_crop && pooled.events() == want_pool && binned.dropped == want_dropped;
    ok = ok && want_crop.size() + outside == raw.size() && pooled.size() == cropped.size();
    for (std::size_t i = 0; ok && i < dense.size(); ++i) ok = binned.tensor.counts()[i] == dense[i];
    if (!binarize) ok = ok && binned.tensor.total() + binned.dropped == pooled.size();

    const double full_ms = static_cast<double>(steps) * dt / 1000.0;
    const double length = std::uniform_real_distribution<double>(0.0, full_ms)(rng) + 1e-3;
    const double clip_ms = std::min(length, full_ms);
    const auto clipped = aer::clip(binned.tensor, clip_ms);
    std::uint32_t want_steps = 0;
    while (static_cast<double>(want_steps) * dt < clip_ms * 1000.0 - 1e-6) ++want_steps;
    ok = ok && clipped.t_steps() == want_steps;
    std::uint64_t head = 0, tail = 0;
    for (std::size_t i = 0; i < dense.size(); ++i) {
      if (i < static_cast<std::size_t>(want_steps) * cells * cells) {
        head += dense[i];
        ok = ok && clipped.counts()[i] == dense[i];
      } else {
        tail += dense[i];
      }
    }
    ok = ok && clipped.total() == head && head + tail == binned.tensor.total();
    bad += !ok;
    events_seen += raw.size();
    dropped_seen += binned.dropped;
  }
  verdict(ctx, 2, bad == 0,
          std::to_string(streams) + " streams (" + std::to_string(events_seen) + " events, " +
              std::to_string(dropped_seen) + " past the last bin), " + std::to_string(bad) + " disagreements",
          {{"streams", streams}, {"disagreements", bad}, {"events", events_seen}});
}

// ---- criteria 3, 4, 7, 10 (fixed-motion datasets) -------------------------

struct FixedRun {
  std::map<std::string, Dataset> train_sets;
  std::map<std::string, Model> models;
};

void criterion_3(Context& ctx, const Recipe& recipe, FixedRun& run) {
  json values;
  bool pass = true;
  std::string detail;
  double total_secs = 0.0;
  for (const std::string motion : {"slide", "slide_rotate"}) {
    const auto t0 = Clock::now();
    auto d = simulate(ctx, manifest_from(ctx, "fixed_" + motion, 1, 100), recipe.input);
    auto m = train_model(ctx, recipe, d, 1, "fixed_" + motion);
    const double acc = test_accuracy(ctx, m, d, recipe);
    const double secs = seconds_since(t0);
    total_secs += secs;
    pass = pass && acc >= 0.9;
    detail += motion + " " + fmt(acc) + " (" + fmt(secs, 3) + " s), ";
    values[motion] = {{"test_accuracy", acc}, {"seconds", secs}, {"test_trials", d.examples("test").size()}};
    run.train_sets[motion] = std::move(d);
    run.models.emplace(motion, std::move(m));
  }
  pass = pass && total_secs < 1800.0;
  verdict(ctx, 3, pass, detail + "total " + fmt(total_secs, 4) + " s", values);
}

void criterion_4_and_7(Context& ctx, const Recipe& recipe, FixedRun& run) {
  json values;
  std::map<std::string, metrics::AccuracyCurve> curves;
  std::map<std::string, double> spearman, ttb;
  for (const auto& motion : kMotions) {
    if (!run.models.count(motion)) {
      auto d = simulate(ctx, manifest_from(ctx, "fixed_" + motion, 1, 100), recipe.input);
      run.models.emplace(motion, train_model(ctx, recipe, d, 1, "fixed_" + motion));
      run.train_sets[motion] = std::move(d);
    }
    const auto net = run.models.at(motion).net();
    std::vector<metrics::AccuracyCurve> per_seed;
    for (std::uint64_t s = 1; s <= 10; ++s) {
      const auto d = simulate(ctx, manifest_from(ctx, "fixed_" + motion, 1000 + s, 10), recipe.input);
      per_seed.push_back(metrics::accuracy_vs_length(net, d.examples(""), recipe.input.dt_us, 50.0, ctx.jobs, motion));
    }
    const auto curve = metrics::mean_curve(per_seed);
    std::vector<double> len, acc;
    for (const auto& p : curve.points) {
      len.push_back(p.length_ms);
      acc.push_back(p.accuracy);
    }
    spearman[motion] = metrics::spearman(len, acc);
    ttb[motion] = metrics::time_to_band(curve, 0.05).time_to_band_ms;
    values[motion] = {{"spearman", spearman[motion]}, {"time_to_band_ms", ttb[motion]}, {"mean_accuracy", acc}};
    std::cerr << "  curve " << motion << ": spearman " << fmt(spearman[motion]) << ", time to band " << ttb[motion]
              << " ms, final " << fmt(acc.back()) << "\n";
  }
  bool pass = true;
  std::string detail = "spearman";
  for (const auto& motion : kMotions) {
    pass = pass && spearman[motion] >= 0.8;
    detail += " " + motion + "=" + fmt(spearman[motion], 3);
  }
  double slow_sliding = std::max(ttb["slide"], ttb["slide_rotate"]);
  double fast_tapping = std::min({ttb["tap"], ttb["tap_slide"], ttb["tap_rotate"]});
  pass = pass && slow_sliding <= fast_tapping;
  detail += "; time to band slide/slide_rotate " + fmt(ttb["slide"]) + "/" + fmt(ttb["slide_rotate"]) +
            " ms vs tap family min " + fmt(fast_tapping) + " ms";
  verdict(ctx, 4, pass, detail, values);

  // Power: event rates of each motion's held-out trials; the network rates
  // of each motion's own model are reported alongside.
  json pv;
  const bool idle_exact = metrics::estimate_power(metrics::PowerModel{}, 0.0, 0.0) == 2.42;
  std::vector<metrics::PowerObservation> obs, with_synops;
  std::vector<std::string> names;
  for (const auto& motion : kMotions) {
    const auto& d = run.train_sets.at(motion);
    const auto set = d.examples("test");
    const auto net = run.models.at(motion).net();
    double events = 0.0, synops = 0.0;
    for (const auto& e : set) {
      events += static_cast<double>(e.input->total());
      synops += static_cast<double>(snn::count_synops(snn::forward(net, *e.input).trace).total);
    }
    const double secs = static_cast<double>(set.size()) * recipe.input.duration_us * 1e-6;
    const double mw = *metrics::measured_power_mw(motion);
    obs.push_back({0.0, events / secs, mw});
    with_synops.push_back({synops / secs, events / secs, mw});
    names.push_back(motion);
  }
  const auto loo = metrics::leave_one_out(obs);
  const auto loo_synops = metrics::leave_one_out(with_synops);
  double worst = 0.0, worst_synops = 0.0;
  for (std::size_t i = 0; i < obs.size(); ++i) {
    const double err = std::abs(loo[i] - obs[i].measured_mw) / obs[i].measured_mw;
    worst = std::max(worst, err);
    worst_synops = std::max(worst_synops, std::abs(loo_synops[i] - obs[i].measured_mw) / obs[i].measured_mw);
    pv[names[i]] = {{"event_rate", obs[i].event_rate}, {"synop_rate", with_synops[i].synop_rate},
                    {"measured_mw", obs[i].measured_mw}, {"loo_mw", loo[i]}, {"loo_with_synops_mw", loo_synops[i]}};
  }
  const auto fit = metrics::calibrate_power(obs).model;
  bool ordered = true;
  for (std::size_t i = 0; i < obs.size(); ++i)
    for (std::size_t j = 0; j < obs.size(); ++j)
      if (obs[i].event_rate < obs[j].event_rate)
        ordered = ordered && metrics::estimate_power(fit, 0.0, obs[i].event_rate) <
                                 metrics::estimate_power(fit, 0.0, obs[j].event_rate);
  pv["worst_loo_error"] = worst;
  pv["worst_loo_error_with_synops"] = worst_synops;
  pv["energy_per_input_event_nj"] = fit.energy_per_input_event_nj;
  verdict(ctx, 7, idle_exact && worst <= 0.15 && ordered,
          std::string("idle ") + (idle_exact ? "2.42 exact" : "wrong") + ", worst leave-one-out error " +
              fmt(100 * worst, 3) + "% (with network synops " + fmt(100 * worst_synops, 3) + "%), ordering " +
              (ordered ? "preserved" : "broken"),
          pv);
}

void criterion_10(Context& ctx, const Recipe& recipe, const FixedRun& run) {
  const auto& d = run.train_sets.at("slide");
  const auto net = run.models.at("slide").net();
  aer::Preprocessing pre;
  pre.binning = {recipe.input.dt_us, recipe.input.t_steps(), false};
  std::size_t compared = 0, mismatches = 0;
  for (const auto& t : d.records("test")) {
    const auto tensor = pre(sim::simulate_trial(t.spec())).tensor;
    snn::ForwardOptions fo;
    fo.record_readout = true;
    const auto full = snn::forward(net, snn::SparseInput::from_tensor(tensor), fo);
    for (int length = 50; length <= 950; length += 50) {
      const auto clipped = aer::clip(tensor, length);
      const auto part = snn::forward(net, snn::SparseInput::from_tensor(clipped));
      std::vector<double> want(full.scores.size(), 0.0);
      for (std::uint32_t s = 0; s < clipped.t_steps(); ++s)
        for (std::size_t c = 0; c < want.size(); ++c) want[c] += full.trace.readout[s][c];
      bool same = clipped.t_steps() == metrics::steps_for_length(length, recipe.input.dt_us);
      for (std::size_t c = 0; c < want.size(); ++c) same = same && oracle::same_bits(part.scores[c], want[c]);
      mismatches += !same;
      ++compared;
    }
  }
  verdict(ctx, 10, mismatches == 0 && compared > 0,
          std::to_string(compared) + " (trial, length) pairs at 50..950 ms, " + std::to_string(mismatches) +
              " differ from the readout prefix",
          {{"compared", compared}, {"mismatches", mismatches}});
}

// ---- criteria 5 and 6 (varied datasets) ----------------------------------

void criteria_5_and_6(Context& ctx, const Recipe& recipe) {
  const std::vector<std::string> motions{"slide", "slide_rotate"};
  std::map<std::string, std::vector<double>> acc;
  std::map<std::string, std::vector<sim::TrialRecord>> pooled_trials;
  std::map<std::string, std::vector<int>> pooled_pred;
  for (std::uint64_t s = 1; s <= 5; ++s)
    for (const auto& motion : motions) {
      const auto d = simulate(ctx, manifest_from(ctx, "varied_" + motion, s, 100), recipe.input);
      const auto m = train_model(ctx, recipe, d, s, "varied_" + motion + "_" + std::to_string(s));
      const auto ev = snn::evaluate(m.net(), d.examples("test"), recipe.train.logit_scale, ctx.jobs);
      acc[motion].push_back(ev.accuracy);
      const auto recs = d.records("test");
      pooled_trials[motion].insert(pooled_trials[motion].end(), recs.begin(), recs.end());
      pooled_pred[motion].insert(pooled_pred[motion].end(), ev.predictions.begin(), ev.predictions.end());
      std::cerr << "  varied " << motion << " seed " << s << ": " << fmt(ev.accuracy) << "\n";
    }
  double margin = 0.0;
  for (std::size_t i = 0; i < 5; ++i) margin += (acc["slide_rotate"][i] - acc["slide"][i]) / 5.0;
  const double mean_slide = std::accumulate(acc["slide"].begin(), acc["slide"].end(), 0.0) / 5.0;
  const double mean_sr = std::accumulate(acc["slide_rotate"].begin(), acc["slide_rotate"].end(), 0.0) / 5.0;
  verdict(ctx, 5, margin >= 0.0,
          "mean test accuracy slide_rotate " + fmt(mean_sr) + " vs slide " + fmt(mean_slide) + ", margin " +
              fmt(margin) + " over 5 seeds",
          {{"slide", acc["slide"]}, {"slide_rotate", acc["slide_rotate"]}, {"margin", margin}});

  // Analytic event counts along depth for the fixed slide profiles, all textures.
  json v6;
  bool increasing = true;
  const std::vector<double> depths{0.5, 1.0, 1.5, 2.0, 2.5};
  for (const auto& motion : motions) {
    const auto base = sim::load_manifest(ctx.configs / ("fixed_" + motion + ".json")).motion;
    for (int texture = 1; texture <= 10; ++texture) {
      std::vector<double> mu;
      for (double depth : depths) {
        auto profile = base;
        profile.depth_mm = depth;
        mu.push_back(sim::expected_event_count({texture, profile, 1, nullptr}));
      }
      for (std::size_t k = 1; k < mu.size(); ++k) increasing = increasing && mu[k] > mu[k - 1];
      v6["expected_events"][motion][std::to_string(texture)] = mu;
    }
  }
  bool deeper_better = true;
  std::string detail = std::string("expected events ") + (increasing ? "strictly increase" : "do not increase") +
                       " with depth; sweep accuracy at 0.5/2.5 mm:";
  for (const auto& motion : motions) {
    const auto sweep = metrics::generalization_sweep(pooled_trials[motion], pooled_pred[motion]);
    const double shallow = sweep.depth_accuracy(0), deep = sweep.depth_accuracy(depths.size() - 1);
    deeper_better = deeper_better && deep >= shallow;
    detail += " " + motion + " " + fmt(shallow, 3) + "/" + fmt(deep, 3);
    std::vector<double> per_depth;
    for (std::size_t k = 0; k < depths.size(); ++k) per_depth.push_back(sweep.depth_accuracy(k));
    v6["sweep_depth_accuracy"][motion] = per_depth;
  }
  verdict(ctx, 6, increasing && deeper_better, detail, v6);
}

// ---- criterion 8 ---------------------------------------------------------

void criterion_8(Context& ctx) {
  std::mt19937_64 rng(808);
  snn::GradientOptions go;
  go.surrogate = {snn::SurrogateKind::FastSigmoid, 2.0};
  go.mode = snn::SpikeMode::Relaxed;
  go.logit_scale = 0.8;
  const int cases = 100;
  double worst = 0.0;
  int over = 0;
  for (int rep = 0; rep < cases; ++rep) {
    const auto spec = oracle::one_hidden_layer(rng);
    const auto p = oracle::random_params(spec, rng).cast<double>();
    const auto in = oracle::random_input(rng, spec.input, 1, 0.5);
    const int label = 1 + static_cast<int>(rng() % spec.num_classes);
    const double e = oracle::worst_fd_error(spec, p, in, label, go);
    over += e >= 1e-4;
    worst = std::max(worst, e);
  }
  verdict(ctx, 8, over == 0,
          std::to_string(cases) + " cases, worst relative error " + fmt(worst, 3) + ", " + std::to_string(over) +
              " above 1e-4",
          {{"cases", cases}, {"worst_relative_error", worst}});
}

// ---- criterion 9 ---------------------------------------------------------

int shell(const std::string& cmd) {
  const int rc = std::system(cmd.c_str());
  return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

std::map<std::string, std::string> artifact_bytes(const fs::path& root) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::recursive_directory_iterator(root)) {
    if (!e.is_regular_file()) continue;
    const auto name = e.path().filename().string();
    if (name.rfind("run_", 0) == 0) continue;  // run records carry timings
    out[fs::relative(e.path(), root).string()] = slurp(e.path());
  }
  return out;
}

void criterion_9(Context& ctx) {
  const auto base = ctx.work / "cli";
  fs::remove_all(base);
  fs::create_directories(base);
  auto manifest = read_json_file(ctx.configs / "fixed_slide_rotate.json");
  manifest["trials_per_texture"] = 10;
  std::ofstream(base / "manifest.json") << manifest.dump(2);
  const std::string cli = TACTILE_CLI_PATH;
  const auto live = base / "run";
  std::vector<std::map<std::string, std::string>> runs;
  std::vector<std::string> hashes;
  bool ok = true;
  for (const char* jobs : {"1", "1", "8"}) {
    fs::remove_all(live);
    const std::string j = std::string(" --jobs ") + jobs + " ";
    const std::string quiet = " > " + (base / "log.txt").string() + " 2>&1";
    ok = ok && shell(cli + j + "gen-dataset --manifest " + (base / "manifest.json").string() + " --out " +
                     (live / "data").string() + quiet) == 0;
    ok = ok && shell(cli + j + "--config " + (ctx.configs / "train.json").string() + " train --data " +
                     (live / "data").string() + " --out " + (live / "model/model.snnp").string() + " --network " +
                     (ctx.configs / "reference_network.json").string() + " --epochs 2" + quiet) == 0;
    ok = ok && shell(cli + j + "eval --model " + (live / "model/model.snnp").string() + " --data " +
                     (live / "data").string() + " --out " + (live / "eval").string() + quiet) == 0;
    if (!ok) break;
    runs.push_back(artifact_bytes(live));
    hashes.push_back(read_json_file(live / "model/run_train.json").at("config_hash").get<std::string>());
  }
  std::size_t files = runs.empty() ? 0 : runs.front().size();
  const bool repeat = ok && runs[0] == runs[1];
  const bool jobs_free = ok && runs[0] == runs[2];
  const bool same_hash = ok && hashes[0] == hashes[1] && hashes[0] == hashes[2];
  verdict(ctx, 9, ok && repeat && jobs_free && same_hash && files > 0,
          std::string(ok ? "" : "a command failed; ") + std::to_string(files) + " artifacts, repeat run " +
              (repeat ? "identical" : "differs") + ", --jobs 1 vs 8 " + (jobs_free ? "identical" : "differs") +
              ", train config hash " + (same_hash ? "stable" : "unstable"),
          {{"artifacts", files}});
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Acceptance checks for the tactile texture pipeline"};
  Context ctx;
  std::string work = "acceptance_work";
  std::vector<int> only;
  app.add_option("--work-dir", work, "Scratch directory for models and CLI runs")->capture_default_str();
  app.add_option("--only", only, "Run just these criteria")->delimiter(',');
  app.add_option("--jobs", ctx.jobs, "Worker threads (0 = all cores)")->capture_default_str();
  app.add_flag("--reuse", ctx.reuse, "Load models trained by an earlier run");
  CLI11_PARSE(app, argc, argv);
  if (ctx.jobs == 0) ctx.jobs = std::max(1u, std::thread::hardware_concurrency());
  ctx.work = work;
  if (!ctx.reuse) fs::remove_all(ctx.work / "models");
  fs::create_directories(ctx.work);

  const auto wanted = [&](std::initializer_list<int> ids) {
    if (only.empty()) return true;
    for (int id : ids)
      if (std::find(only.begin(), only.end(), id) != only.end()) return true;
    return false;
  };
  const auto guarded = [&](std::initializer_list<int> ids, auto&& fn) {
    if (!wanted(ids)) return;
    const auto t0 = Clock::now();
    try {
      fn();
    } catch (const std::exception& e) {
      for (int id : ids)
        if (!ctx.report.contains(std::to_string(id))) verdict(ctx, id, false, std::string("error: ") + e.what());
    }
    std::cerr << "  [" << fmt(seconds_since(t0), 4) << " s]\n";
  };

  const auto recipe = reference_recipe(ctx);
  FixedRun fixed;
  guarded({1}, [&] { criterion_1(ctx); });
  guarded({2}, [&] { criterion_2(ctx); });
  guarded({8}, [&] { criterion_8(ctx); });
  guarded({9}, [&] { criterion_9(ctx); });
  guarded({3, 4, 7, 10}, [&] { criterion_3(ctx, recipe, fixed); });
  guarded({10}, [&] { criterion_10(ctx, recipe, fixed); });
  guarded({4, 7}, [&] { criterion_4_and_7(ctx, recipe, fixed); });
  guarded({5, 6}, [&] { criteria_5_and_6(ctx, recipe); });

  for (const auto& [id, line] : ctx.lines) std::cout << line << '\n';
  std::ofstream(ctx.work / "acceptance.json") << ctx.report.dump(2) << '\n';
  return ctx.failures == 0 ? 0 : 1;
}
