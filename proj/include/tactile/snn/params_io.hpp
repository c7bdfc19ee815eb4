#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "tactile/aer/io.hpp"
#include "tactile/errors.hpp"
#include "tactile/snn/network.hpp"

namespace tactile::snn {

// Parameter file layout (little-endian):
//   "SNNP" | u32 version | u64 spec hash | u64 init seed | u32 tensor count
//   per tensor: u16 name length | name | u32 rank | u32 dims[rank] | f32 values
// Tensors appear as "<layer>.weight", "<layer>.bias" in layer order.
inline constexpr std::array<char, 4> kParamsMagic{'S', 'N', 'N', 'P'};
inline constexpr std::uint32_t kParamsVersion = 1;

inline std::vector<char> encode_params(const NetworkSpec& spec, const Parameters<float>& params) {
  check_compatible(spec, params);
  aer::detail::ByteWriter w;
  w.raw(kParamsMagic.data(), kParamsMagic.size());
  w.u32(kParamsVersion);
  w.u64(spec.hash());
  w.u64(params.init_seed);
  w.u32(static_cast<std::uint32_t>(params.layers.size() * 2));
  auto tensor = [&](const std::string& name, const std::vector<std::uint32_t>& dims, const std::vector<float>& v) {
    w.u16(static_cast<std::uint16_t>(name.size()));
    w.raw(name.data(), name.size());
    w.u32(static_cast<std::uint32_t>(dims.size()));
    for (auto d : dims) w.u32(d);
    for (float x : v) w.f32(x);
  };
  for (const auto& l : params.layers) {
    tensor(l.name + ".weight", l.weight_shape, l.weight);
    tensor(l.name + ".bias", {static_cast<std::uint32_t>(l.bias.size())}, l.bias);
  }
  return w.bytes();
}

// Decodes and validates a parameter file against `spec`. Nothing is returned
// unless the whole file is well formed.
inline Parameters<float> decode_params(const NetworkSpec& spec, const std::vector<char>& bytes,
                                       const std::string& context = "parameter file") {
  aer::detail::ByteReader r(bytes, context);
  std::array<char, 4> magic{};
  r.raw(magic.data(), magic.size(), "magic");
  if (magic != kParamsMagic) throw FormatError(context + ": bad magic");
  const auto version = r.u32("version");
  if (version != kParamsVersion) throw FormatError(context + ": unsupported version " + std::to_string(version));
  const auto hash = r.u64("spec hash");
  if (hash != spec.hash())
    throw IncompatibleModelError(context + ": written for a different network (spec hash mismatch)");
  auto params = zero_parameters<float>(spec);
  params.init_seed = r.u64("init seed");
  const auto count = r.u32("tensor count");
  if (count != params.layers.size() * 2)
    throw FormatError(context + ": expected " + std::to_string(params.layers.size() * 2) + " tensors, found " +
                      std::to_string(count));
  auto read_tensor = [&](const std::string& name, const std::vector<std::uint32_t>& dims, std::vector<float>& out) {
    const auto len = r.u16("tensor name length");
    std::string got(len, '\0');
    r.raw(got.data(), len, "tensor name");
    if (got != name) throw FormatError(context + ": expected tensor " + name + ", found " + got);
    const auto rank = r.u32("tensor rank");
    if (rank != dims.size()) throw FormatError(context + ": " + name + " has rank " + std::to_string(rank));
    for (auto d : dims)
      if (r.u32("tensor dimension") != d) throw FormatError(context + ": " + name + " has the wrong shape");
    r.need(out.size() * 4, "tensor data");
    for (auto& v : out) {
      v = r.f32("tensor data");
      if (!std::isfinite(v)) throw FormatError(context + ": non-finite value in " + name);
    }
  };
  for (auto& l : params.layers) {
    read_tensor(l.name + ".weight", l.weight_shape, l.weight);
    read_tensor(l.name + ".bias", {static_cast<std::uint32_t>(l.bias.size())}, l.bias);
  }
  if (r.remaining() != 0) throw FormatError(context + ": trailing bytes after the last tensor");
  return params;
}

inline void save_params(const std::filesystem::path& path, const NetworkSpec& spec, const Parameters<float>& params) {
  aer::detail::dump(path, encode_params(spec, params));
}

inline Parameters<float> load_params(const std::filesystem::path& path, const NetworkSpec& spec) {
  return decode_params(spec, aer::detail::slurp(path), path.string());
}

}  // namespace tactile::snn
