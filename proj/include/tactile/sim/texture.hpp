#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <string>
#include <vector>

#include "tactile/errors.hpp"
#include "tactile/rng.hpp"

namespace tactile::sim {

inline constexpr double kPanelExtentMm = 100.0;
inline constexpr int kTextureCount = 10;
// Bumped whenever a texture definition below changes; datasets record it.
inline constexpr int kTextureLibraryVersion = 1;

// One oriented sinusoidal component: amplitude * sin(2 pi f (u cos a + v sin a) + phase).
struct Grating {
  double frequency = 0.0;  // cycles/mm
  double amplitude = 0.0;  // mm
  double orientation = 0.0;  // rad
  double phase = 0.0;  // rad
};

// Band-limited noise realised as `components` random gratings whose
// frequencies lie in [f_min, f_max]. Its RMS height equals `amplitude`.
struct NoiseBand {
  double amplitude = 0.0;
  double f_min = 0.5;
  double f_max = 2.0;
  int components = 0;
};

struct HeightSample {
  double height = 0.0;  // mm
  double du = 0.0;  // dh/du
  double dv = 0.0;  // dh/dv
};

// Procedural stand-in for a physical texture panel; a deterministic smooth
// height field over [0, 100] x [0, 100] mm.
class TextureField {
public:
  TextureField(int texture_id, std::string label, std::vector<Grating> spectrum, NoiseBand noise,
               std::uint64_t noise_seed)
      : id_(texture_id), label_(std::move(label)), spectrum_(std::move(spectrum)), noise_(noise),
        noise_seed_(noise_seed) {
    for (const auto& g : spectrum_)
      if (g.amplitude < 0.0 || g.frequency < 0.0) throw ArgumentError("texture grating with negative amplitude or frequency");
    if (noise_.amplitude < 0.0 || noise_.components < 0 || noise_.f_min < 0.0 || noise_.f_max < noise_.f_min)
      throw ArgumentError("invalid texture noise band");
    components_ = spectrum_;
    if (noise_.components > 0 && noise_.amplitude > 0.0) {
      auto rng = make_rng(noise_seed_, {static_cast<std::uint64_t>(texture_id)});
      const double amp = noise_.amplitude * std::sqrt(2.0 / noise_.components);
      for (int k = 0; k < noise_.components; ++k) {
        Grating g;
        g.frequency = uniform(rng, noise_.f_min, noise_.f_max);
        g.orientation = uniform(rng, 0.0, std::numbers::pi);
        g.phase = uniform(rng, 0.0, 2.0 * std::numbers::pi);
        g.amplitude = amp;
        components_.push_back(g);
      }
    }
    for (const auto& g : components_) {
      const double k = 2.0 * std::numbers::pi * g.frequency;
      waves_.push_back({k * std::cos(g.orientation), k * std::sin(g.orientation), g.phase, g.amplitude});
    }
  }

  int id() const noexcept { return id_; }
  const std::string& label() const noexcept { return label_; }
  const std::vector<Grating>& spectrum() const noexcept { return spectrum_; }
  const NoiseBand& noise() const noexcept { return noise_; }
  std::uint64_t noise_seed() const noexcept { return noise_seed_; }
  double extent_mm() const noexcept { return kPanelExtentMm; }

  HeightSample sample(double u, double v) const {
    check_extent(u, v);
    HeightSample s;
    for (const auto& w : waves_) {
      const double arg = w.ku * u + w.kv * v + w.phase;
      const double sn = std::sin(arg);
      const double cs = std::cos(arg);
      s.height += w.amplitude * sn;
      s.du += w.amplitude * w.ku * cs;
      s.dv += w.amplitude * w.kv * cs;
    }
    return s;
  }

  double height(double u, double v) const { return sample(u, v).height; }

private:
  struct Wave {
    double ku, kv, phase, amplitude;
  };

  void check_extent(double u, double v) const {
    if (!(u >= 0.0 && u <= kPanelExtentMm && v >= 0.0 && v <= kPanelExtentMm))
      throw ArgumentError("texture query (" + std::to_string(u) + ", " + std::to_string(v) +
                          ") mm outside the 100 mm panel");
  }

  int id_;
  std::string label_;
  std::vector<Grating> spectrum_;
  NoiseBand noise_;
  std::uint64_t noise_seed_;
  std::vector<Grating> components_;
  std::vector<Wave> waves_;
};

// The ten panel textures, ids 1..10. Parameters are fixed per library
// version so that class definitions are reproducible across datasets.
inline const std::vector<TextureField>& texture_library() {
  static const std::vector<TextureField> library = [] {
    constexpr double pi = std::numbers::pi;
    std::vector<TextureField> t;
    t.emplace_back(1, "Acrylic", std::vector<Grating>{}, NoiseBand{0.004, 0.2, 0.8, 6}, 101);
    t.emplace_back(2, "Fashion Fabric", std::vector<Grating>{{1.8, 0.033, 0.0}, {1.8, 0.033, pi / 2}},
                   NoiseBand{0.010, 1.0, 3.0, 8}, 102);
    t.emplace_back(3, "Cotton", std::vector<Grating>{{0.22, 0.090, pi / 4}}, NoiseBand{0.006, 1.0, 2.5, 8}, 103);
    t.emplace_back(4, "Nylon", std::vector<Grating>{{3.0, 0.009, 0.3}}, NoiseBand{0.006, 2.0, 4.0, 8}, 104);
    t.emplace_back(5, "Fur", std::vector<Grating>{}, NoiseBand{0.100, 0.15, 1.5, 16}, 105);
    t.emplace_back(6, "Wood", std::vector<Grating>{{0.25, 0.120, pi / 2 - 0.25}}, NoiseBand{0.006, 0.5, 1.5, 6}, 106);
    t.emplace_back(7, "Mesh", std::vector<Grating>{{0.3, 0.100, pi / 6}, {0.3, 0.100, pi / 6 + pi / 2}},
                   NoiseBand{0.020, 1.0, 2.0, 4}, 107);
    t.emplace_back(8, "Felt", std::vector<Grating>{}, NoiseBand{0.050, 0.4, 1.2, 12}, 108);
    t.emplace_back(9, "Wool", std::vector<Grating>{{0.16, 0.080, pi / 2 + 0.35}}, NoiseBand{0.060, 0.8, 2.0, 12}, 109);
    t.emplace_back(10, "Canvas", std::vector<Grating>{{0.4, 0.110, 0.0}, {0.4, 0.070, pi / 2}},
                   NoiseBand{0.035, 1.0, 2.5, 6}, 110);
    return t;
  }();
  return library;
}

inline const TextureField& texture_by_id(int texture_id) {
  if (texture_id < 1 || texture_id > kTextureCount)
    throw ArgumentError("texture id " + std::to_string(texture_id) + " outside 1..10");
  return texture_library()[static_cast<std::size_t>(texture_id - 1)];
}

}  // namespace tactile::sim
