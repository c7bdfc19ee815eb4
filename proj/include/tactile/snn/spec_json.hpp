#pragma once

#include <json.hpp>
#include <string>

#include "tactile/errors.hpp"
#include "tactile/snn/network.hpp"

namespace tactile::snn {

using nlohmann::json;

inline json to_json(const IFConfig& c) {
  json j = {{"threshold", c.threshold}, {"reset", c.reset == Reset::SubtractThreshold ? "subtract" : "zero"}};
  j["lower_bound"] = c.lower_bound ? json(*c.lower_bound) : json(nullptr);
  return j;
}

inline IFConfig if_config_from_json(const json& j) {
  IFConfig c;
  c.threshold = j.value("threshold", 1.0);
  const auto reset = j.value("reset", std::string("subtract"));
  if (reset == "subtract")
    c.reset = Reset::SubtractThreshold;
  else if (reset == "zero")
    c.reset = Reset::ToZero;
  else
    throw ArgumentError("unknown reset mode '" + reset + "'");
  if (j.contains("lower_bound")) {
    if (j["lower_bound"].is_null())
      c.lower_bound.reset();
    else
      c.lower_bound = j["lower_bound"].get<double>();
  }
  return c;
}

inline json to_json(const NetworkSpec& s) {
  json layers = json::array();
  for (const auto& l : s.layers) {
    std::visit(
        [&](const auto& v) {
          using T = std::decay_t<decltype(v)>;
          if constexpr (std::is_same_v<T, Conv2D>)
            layers.push_back({{"type", "conv"},
                              {"out_channels", v.out_channels},
                              {"kernel", v.kernel},
                              {"stride", v.stride},
                              {"padding", v.padding}});
          else if constexpr (std::is_same_v<T, Pool>)
            layers.push_back({{"type", "pool"}, {"kind", v.kind == PoolKind::Avg ? "avg" : "sum"}, {"window", v.window}});
          else if constexpr (std::is_same_v<T, Linear>)
            layers.push_back({{"type", "linear"}, {"out_features", v.out_features}});
          else
            layers.push_back({{"type", "if"}, {"config", to_json(v.config)}});
        },
        l);
  }
  return {{"input", {s.input.c, s.input.h, s.input.w}}, {"num_classes", s.num_classes}, {"layers", layers}};
}

// Accepts either a full layer list or {"reference": {conv1, conv2, fc1, fc2}}.
inline NetworkSpec network_spec_from_json(const json& j) {
  NetworkSpec s;
  if (j.contains("reference")) {
    const auto& r = j["reference"];
    s = NetworkSpec::reference(r.value("conv1", 16u), r.value("conv2", 32u), r.value("fc1", 256u), r.value("fc2", 64u),
                               r.contains("if") ? if_config_from_json(r["if"]) : IFConfig{});
  } else {
    for (const auto& l : j.at("layers")) {
      const auto type = l.at("type").get<std::string>();
      if (type == "conv")
        s.layers.push_back(Conv2D{l.at("out_channels").get<std::uint32_t>(), l.value("kernel", 3u), l.value("stride", 1u),
                                  l.value("padding", 0u)});
      else if (type == "pool")
        s.layers.push_back(Pool{l.value("kind", std::string("avg")) == "sum" ? PoolKind::Sum : PoolKind::Avg,
                                l.value("window", 2u)});
      else if (type == "linear")
        s.layers.push_back(Linear{l.at("out_features").get<std::uint32_t>()});
      else if (type == "if")
        s.layers.push_back(IF{l.contains("config") ? if_config_from_json(l["config"]) : IFConfig{}});
      else
        throw ArgumentError("unknown layer type '" + type + "'");
    }
    s.num_classes = j.value("num_classes", 10u);
  }
  if (j.contains("input")) {
    const auto in = j["input"].get<std::vector<std::uint32_t>>();
    if (in.size() != 3) throw ArgumentError("network input must be [channels, height, width]");
    s.input = {in[0], in[1], in[2]};
  }
  s.validate();
  return s;
}

}  // namespace tactile::snn
