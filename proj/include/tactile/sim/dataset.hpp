#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "tactile/aer/io.hpp"
#include "tactile/errors.hpp"
#include "tactile/parallel.hpp"
#include "tactile/rng.hpp"
#include "tactile/sim/motion.hpp"
#include "tactile/sim/texture.hpp"
#include "tactile/sim/trial.hpp"

namespace tactile::sim {

using nlohmann::json;

struct Range {
  double lo = 0.0;
  double hi = 0.0;
  bool contains(double v) const { return v >= lo && v <= hi; }
};

enum class Placement { Fixed, Jitter, Random };

struct DatasetManifest {
  std::string name = "dataset";
  MotionProfile motion{};  // base profile; randomized fields are overwritten per trial
  std::vector<int> textures{1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
  int trials_per_texture = 100;
  std::uint64_t seed = 1;
  double test_fraction = 0.2;
  Placement placement = Placement::Jitter;
  double jitter_mm = 8.0;
  std::optional<Range> depth_mm;
  std::optional<Range> linear_speed_mm_s;  // slide speed and compound tap speed
  std::optional<Range> angular_speed_deg_s;

  bool randomized() const { return depth_mm || linear_speed_mm_s || angular_speed_deg_s; }

  void validate() const {
    if (trials_per_texture < 0) throw ArgumentError("trials_per_texture must be nonnegative");
    if (!(test_fraction >= 0.0 && test_fraction <= 1.0)) throw ArgumentError("test_fraction outside [0, 1]");
    for (int t : textures) texture_by_id(t);
    if (depth_mm && (depth_mm->lo < 0.0 || depth_mm->hi > kMaxDepthMm || depth_mm->lo > depth_mm->hi))
      throw ArgumentError("depth range must lie within [0, 3] mm");
    for (const auto* r : {&linear_speed_mm_s, &angular_speed_deg_s})
      if (*r && ((*r)->lo < 0.0 || (*r)->lo > (*r)->hi)) throw ArgumentError("invalid speed range");
    if (jitter_mm < 0.0) throw ArgumentError("jitter must be nonnegative");
  }
};

struct TrialRecord {
  std::size_t id = 0;
  std::string file;
  int texture_id = 1;
  std::string label;
  std::string split = "train";
  MotionProfile motion{};
  std::uint64_t seed = 0;

  TrialSpec spec() const { return {texture_id, motion, seed, nullptr}; }
};

struct DatasetIndex {
  std::string name;
  std::string created;
  int texture_library_version = kTextureLibraryVersion;
  json manifest;
  std::vector<TrialRecord> trials;
};

// --- JSON mapping -----------------------------------------------------------

inline void to_json(json& j, const MotionProfile& m) {
  j = json{{"kind", std::string(to_string(m.kind))},
           {"depth_mm", m.depth_mm},
           {"slide_speed_mm_s", m.slide_speed_mm_s},
           {"slide_distance_mm", m.slide_distance_mm},
           {"angular_speed_deg_s", m.angular_speed_deg_s},
           {"rotation_deg", m.rotation_deg},
           {"tap_speed_mm_s", m.tap_speed_mm_s},
           {"compound_tap_speed_mm_s", m.compound_tap_speed_mm_s},
           {"duration_ms", m.duration_ms},
           {"start_x_mm", m.start_x_mm},
           {"start_y_mm", m.start_y_mm}};
}

inline void from_json(const json& j, MotionProfile& m) {
  m = MotionProfile{};
  if (j.contains("kind")) m.kind = motion_from_string(j.at("kind").get<std::string>());
  auto opt = [&](const char* key, double& field) {
    if (j.contains(key)) field = j.at(key).get<double>();
  };
  opt("depth_mm", m.depth_mm);
  opt("slide_speed_mm_s", m.slide_speed_mm_s);
  opt("slide_distance_mm", m.slide_distance_mm);
  opt("angular_speed_deg_s", m.angular_speed_deg_s);
  opt("rotation_deg", m.rotation_deg);
  opt("tap_speed_mm_s", m.tap_speed_mm_s);
  opt("compound_tap_speed_mm_s", m.compound_tap_speed_mm_s);
  opt("duration_ms", m.duration_ms);
  opt("start_x_mm", m.start_x_mm);
  opt("start_y_mm", m.start_y_mm);
}

inline std::string to_string(Placement p) {
  switch (p) {
    case Placement::Fixed: return "fixed";
    case Placement::Jitter: return "jitter";
    case Placement::Random: return "random";
  }
  return "?";
}

inline Placement placement_from_string(const std::string& s) {
  if (s == "fixed") return Placement::Fixed;
  if (s == "jitter") return Placement::Jitter;
  if (s == "random") return Placement::Random;
  throw ArgumentError("unknown placement '" + s + "'");
}

inline void to_json(json& j, const DatasetManifest& m) {
  j = json{{"name", m.name},
           {"motion", m.motion},
           {"textures", m.textures},
           {"trials_per_texture", m.trials_per_texture},
           {"seed", m.seed},
           {"test_fraction", m.test_fraction},
           {"placement", to_string(m.placement)},
           {"jitter_mm", m.jitter_mm}};
  json ranges = json::object();
  auto put = [&](const char* key, const std::optional<Range>& r) {
    if (r) ranges[key] = {r->lo, r->hi};
  };
  put("depth_mm", m.depth_mm);
  put("linear_speed_mm_s", m.linear_speed_mm_s);
  put("angular_speed_deg_s", m.angular_speed_deg_s);
  if (!ranges.empty()) j["ranges"] = ranges;
}

inline void from_json(const json& j, DatasetManifest& m) {
  m = DatasetManifest{};
  if (j.contains("name")) m.name = j.at("name").get<std::string>();
  if (j.contains("motion")) m.motion = j.at("motion").get<MotionProfile>();
  if (j.contains("textures")) m.textures = j.at("textures").get<std::vector<int>>();
  if (j.contains("trials_per_texture")) m.trials_per_texture = j.at("trials_per_texture").get<int>();
  if (j.contains("seed")) m.seed = j.at("seed").get<std::uint64_t>();
  if (j.contains("test_fraction")) m.test_fraction = j.at("test_fraction").get<double>();
  if (j.contains("placement")) m.placement = placement_from_string(j.at("placement").get<std::string>());
  if (j.contains("jitter_mm")) m.jitter_mm = j.at("jitter_mm").get<double>();
  if (j.contains("ranges")) {
    const auto& r = j.at("ranges");
    auto get = [&](const char* key, std::optional<Range>& out) {
      if (!r.contains(key)) return;
      const auto v = r.at(key).get<std::vector<double>>();
      if (v.size() != 2) throw ArgumentError(std::string("range ") + key + " needs [lo, hi]");
      out = Range{v[0], v[1]};
    };
    get("depth_mm", m.depth_mm);
    get("linear_speed_mm_s", m.linear_speed_mm_s);
    get("angular_speed_deg_s", m.angular_speed_deg_s);
  }
}

inline void to_json(json& j, const TrialRecord& t) {
  j = json{{"id", t.id},         {"file", t.file},   {"texture_id", t.texture_id}, {"label", t.label},
           {"split", t.split},   {"motion", t.motion}, {"seed", t.seed}};
}

inline void from_json(const json& j, TrialRecord& t) {
  t.id = j.at("id").get<std::size_t>();
  t.file = j.value("file", std::string{});
  t.texture_id = j.at("texture_id").get<int>();
  t.label = j.value("label", texture_by_id(t.texture_id).label());
  t.split = j.value("split", std::string{"train"});
  t.motion = j.at("motion").get<MotionProfile>();
  t.seed = j.at("seed").get<std::uint64_t>();
}

inline json index_to_json(const DatasetIndex& idx) {
  return json{{"name", idx.name},
              {"created", idx.created},
              {"texture_library_version", idx.texture_library_version},
              {"manifest", idx.manifest},
              {"trials", idx.trials}};
}

inline DatasetIndex index_from_json(const json& j) {
  DatasetIndex idx;
  idx.name = j.at("name").get<std::string>();
  idx.created = j.value("created", std::string{});
  idx.texture_library_version = j.value("texture_library_version", kTextureLibraryVersion);
  idx.manifest = j.value("manifest", json::object());
  idx.trials = j.at("trials").get<std::vector<TrialRecord>>();
  return idx;
}

inline DatasetManifest load_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open manifest " + path.string());
  try {
    auto m = json::parse(in).get<DatasetManifest>();
    m.validate();
    return m;
  } catch (const json::exception& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

inline DatasetIndex load_index(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open dataset index " + path.string());
  try {
    return index_from_json(json::parse(in));
  } catch (const json::exception& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

// --- planning -----------------------------------------------------------------

// Reproducible-build convention: SOURCE_DATE_EPOCH when set, otherwise the
// epoch, so that regenerated indices stay byte-identical.
inline std::string creation_stamp() {
  std::time_t t = 0;
  if (const char* env = std::getenv("SOURCE_DATE_EPOCH")) t = static_cast<std::time_t>(std::strtoll(env, nullptr, 10));
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

// Draws the motion of one trial. Every trial has its own random stream keyed
// by (manifest seed, trial id), so plans do not depend on generation order.
inline MotionProfile sample_motion(const DatasetManifest& m, std::size_t trial_id) {
  auto rng = make_rng(m.seed, {0x6d6f74u, trial_id});
  MotionProfile p = m.motion;
  const double dur_s = p.duration_ms / 1000.0;
  if (m.depth_mm) p.depth_mm = uniform(rng, m.depth_mm->lo, m.depth_mm->hi);
  if (m.linear_speed_mm_s) {
    if (has_slide(p.kind)) {
      p.slide_speed_mm_s = uniform(rng, m.linear_speed_mm_s->lo, m.linear_speed_mm_s->hi);
      p.slide_distance_mm = p.slide_speed_mm_s * dur_s;
    }
    if (has_tap(p.kind) && p.kind != MotionKind::Tap)
      p.compound_tap_speed_mm_s = uniform(rng, m.linear_speed_mm_s->lo, m.linear_speed_mm_s->hi);
  }
  if (m.angular_speed_deg_s && has_rotation(p.kind)) {
    p.angular_speed_deg_s = uniform(rng, m.angular_speed_deg_s->lo, m.angular_speed_deg_s->hi);
    p.rotation_deg = p.angular_speed_deg_s * dur_s;
  }
  const double r = kSensorRadiusMm;
  const double x_lo = r, x_hi = kPanelExtentMm - r - p.slide_travel_mm();
  const double y_lo = r, y_hi = kPanelExtentMm - r;
  if (x_hi < x_lo) throw ArgumentError("slide travel does not fit on the panel");
  switch (m.placement) {
    case Placement::Fixed: break;
    case Placement::Jitter:
      p.start_x_mm = std::clamp(p.start_x_mm + uniform(rng, -m.jitter_mm, m.jitter_mm), x_lo, x_hi);
      p.start_y_mm = std::clamp(p.start_y_mm + uniform(rng, -m.jitter_mm, m.jitter_mm), y_lo, y_hi);
      break;
    case Placement::Random:
      p.start_x_mm = uniform(rng, x_lo, x_hi);
      p.start_y_mm = uniform(rng, y_lo, y_hi);
      break;
  }
  p.validate();
  return p;
}

// Trials are texture-major; the last test_fraction of each texture's trials
// form the held-out split.
inline std::vector<TrialRecord> plan_trials(const DatasetManifest& m) {
  m.validate();
  std::vector<TrialRecord> trials;
  const int n = m.trials_per_texture;
  const int n_test = static_cast<int>(std::lround(n * m.test_fraction));
  for (int texture : m.textures) {
    for (int j = 0; j < n; ++j) {
      TrialRecord t;
      t.id = trials.size();
      char name[32];
      std::snprintf(name, sizeof name, "trial_%05zu.aer", t.id);
      t.file = name;
      t.texture_id = texture;
      t.label = texture_by_id(texture).label();
      t.split = j >= n - n_test ? "test" : "train";
      t.motion = sample_motion(m, t.id);
      t.seed = derive_seed(m.seed, {0x747269u, t.id});
      trials.push_back(std::move(t));
    }
  }
  return trials;
}

// Simulates every planned trial into out_dir and writes index.json. Output
// is identical for any job count.
inline DatasetIndex build_dataset(const DatasetManifest& m, const std::filesystem::path& out_dir, unsigned jobs = 1) {
  DatasetIndex idx;
  idx.name = m.name;
  idx.created = creation_stamp();
  idx.manifest = m;
  idx.trials = plan_trials(m);
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) throw IoError("cannot create " + out_dir.string() + ": " + ec.message());
  parallel_for(idx.trials.size(), jobs, [&](std::size_t i) {
    const auto& t = idx.trials[i];
    aer::write_events(simulate_trial(t.spec()), out_dir / t.file);
  });
  std::ofstream out(out_dir / "index.json", std::ios::trunc);
  if (!out) throw IoError("cannot write " + (out_dir / "index.json").string());
  out << index_to_json(idx).dump(2) << '\n';
  return idx;
}

}  // namespace tactile::sim
