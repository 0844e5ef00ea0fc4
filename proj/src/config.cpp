#include "longdance/config.hpp"

#include <fmt/format.h>

#include <fstream>
#include <functional>
#include <map>

#include "longdance/error.hpp"

namespace longdance {

using nlohmann::json;

namespace {

using Setter = std::function<void(const json&)>;

template <typename T>
Setter set(T& field) {
  return [&field](const json& v) { field = v.get<T>(); };
}

void apply_section(const json& j, const std::string& section, const std::map<std::string, Setter>& fields) {
  if (!j.is_object()) throw ConfigError(fmt::format("config section '{}' must be an object", section));
  for (const auto& [key, value] : j.items()) {
    const auto it = fields.find(key);
    if (it == fields.end()) throw ConfigError(fmt::format("unknown config key '{}.{}'", section, key));
    try {
      it->second(value);
    } catch (const json::exception& e) {
      throw ConfigError(fmt::format("config key '{}.{}': {}", section, key, e.what()));
    } catch (const InvalidArgument& e) {
      throw ConfigError(fmt::format("config key '{}.{}': {}", section, key, e.what()));
    }
  }
}

}  // namespace

RunConfig RunConfig::large() {
  RunConfig c;
  c.model.width = 512;
  c.model.heads = 4;
  c.diffusion.steps = 1000;
  c.training.batch = 126;
  c.training.lr = 1e-4;
  return c;
}

RunConfig RunConfig::merge(const RunConfig& base, const json& j) {
  RunConfig c = base;
  if (!j.is_object()) throw ConfigError("config document must be a JSON object");
  for (const auto& [key, value] : j.items()) {
    if (key == "model") {
      apply_section(value, key,
                    {{"width", set(c.model.width)},
                     {"heads", set(c.model.heads)},
                     {"blocks", set(c.model.blocks)},
                     {"ffn_mult", set(c.model.ffn_mult)},
                     {"temporal_conv_kernel", set(c.model.temporal_conv_kernel)}});
    } else if (key == "windows") {
      apply_section(
          value, key,
          {{"music", set(c.windows.music)}, {"past", set(c.windows.past)}, {"future", set(c.windows.future)}});
    } else if (key == "diffusion") {
      apply_section(value, key, {{"steps", set(c.diffusion.steps)}, {"schedule", [&](const json& v) {
                                                                       c.diffusion.schedule =
                                                                           parse_schedule_kind(v.get<std::string>());
                                                                     }}});
    } else if (key == "training") {
      apply_section(value, key,
                    {{"lr", set(c.training.lr)},
                     {"batch", set(c.training.batch)},
                     {"steps", set(c.training.steps)},
                     {"optimizer", set(c.training.optimizer)},
                     {"checkpoint_every", set(c.training.checkpoint_every)},
                     {"normalizer_min_std", set(c.training.normalizer_min_std)}});
    } else if (key == "loss") {
      apply_section(value, key,
                    {{"mi", set(c.loss.mi)},
                     {"mp", set(c.loss.mp)},
                     {"pos", set(c.loss.pos)},
                     {"vel", set(c.loss.vel)},
                     {"contact", set(c.loss.contact)},
                     {"mi_clamp", set(c.loss.mi_clamp)}});
    } else if (key == "metrics") {
      apply_section(value, key,
                    {{"beat_sigma", set(c.metrics.beat.sigma)},
                     {"beat_smooth_window", set(c.metrics.beat.smooth_window)},
                     {"beat_min_gap", set(c.metrics.beat.min_gap)},
                     {"tau_pose", set(c.metrics.freezing.tau_pose)},
                     {"tau_trans", set(c.metrics.freezing.tau_trans)},
                     {"freezing_chunk", set(c.metrics.freezing.chunk)}});
    } else if (key == "data") {
      apply_section(value, key, {{"manifest", set(c.data.manifest)}});
    } else if (key == "out") {
      c.out = value.get<std::string>();
    } else if (key == "seed") {
      if (!value.is_number_unsigned()) throw ConfigError("seed must be a non-negative integer");
      c.seed = value.get<uint64_t>();
    } else {
      throw ConfigError(fmt::format("unknown config key '{}'", key));
    }
  }
  c.validate();
  return c;
}

json RunConfig::to_json() const {
  return {
      {"model",
       {{"width", model.width},
        {"heads", model.heads},
        {"blocks", model.blocks},
        {"ffn_mult", model.ffn_mult},
        {"temporal_conv_kernel", model.temporal_conv_kernel}}},
      {"windows", {{"music", windows.music}, {"past", windows.past}, {"future", windows.future}}},
      {"diffusion", {{"steps", diffusion.steps}, {"schedule", to_string(diffusion.schedule)}}},
      {"training",
       {{"lr", training.lr},
        {"batch", training.batch},
        {"steps", training.steps},
        {"optimizer", training.optimizer},
        {"checkpoint_every", training.checkpoint_every},
        {"normalizer_min_std", training.normalizer_min_std}}},
      {"loss",
       {{"mi", loss.mi},
        {"mp", loss.mp},
        {"pos", loss.pos},
        {"vel", loss.vel},
        {"contact", loss.contact},
        {"mi_clamp", loss.mi_clamp}}},
      {"metrics",
       {{"beat_sigma", metrics.beat.sigma},
        {"beat_smooth_window", metrics.beat.smooth_window},
        {"beat_min_gap", metrics.beat.min_gap},
        {"tau_pose", metrics.freezing.tau_pose},
        {"tau_trans", metrics.freezing.tau_trans},
        {"freezing_chunk", metrics.freezing.chunk}}},
      {"data", {{"manifest", data.manifest}}},
      {"out", out},
      {"seed", seed},
  };
}

void RunConfig::validate() const {
  auto require = [](bool ok, const std::string& what) {
    if (!ok) throw ConfigError(what);
  };
  require(model.width > 0 && model.heads > 0 && model.width % model.heads == 0,
          fmt::format("model.width {} must be a positive multiple of model.heads {}", model.width, model.heads));
  require(model.blocks >= 1, "model.blocks must be >= 1");
  require(model.ffn_mult >= 1, "model.ffn_mult must be >= 1");
  require(model.temporal_conv_kernel >= 1 && model.temporal_conv_kernel % 2 == 1,
          "model.temporal_conv_kernel must be odd");
  require(windows.music > 0 && windows.past > 0 && windows.future > 0, "window sizes must be positive");
  require(windows.music >= windows.past + windows.future, "music window must cover past and future");
  require(diffusion.steps >= 2, "diffusion.steps must be >= 2");
  require(training.lr > 0, "training.lr must be positive");
  require(training.batch >= 1 && training.steps >= 0, "training.batch >= 1 and training.steps >= 0");
  require(training.optimizer == "adam" || training.optimizer == "adamw", "training.optimizer must be adam or adamw");
  require(training.checkpoint_every >= 0, "training.checkpoint_every must be >= 0");
  require(training.normalizer_min_std > 0, "training.normalizer_min_std must be positive");
  try {
    loss.validate();
  } catch (const InvalidArgument& e) {
    throw ConfigError(e.what());
  }
  require(metrics.beat.sigma > 0 && metrics.beat.smooth_window >= 1 && metrics.beat.min_gap >= 1,
          "metrics beat options must be positive");
  require(metrics.freezing.tau_pose >= 0 && metrics.freezing.tau_trans >= 0 && metrics.freezing.chunk >= 2,
          "freezing thresholds must be non-negative and the chunk >= 2 frames");
}

RunConfig load_config(const std::filesystem::path& path, const RunConfig& base) {
  std::ifstream in(path);
  if (!in) throw ConfigError(fmt::format("cannot open config '{}'", path.string()));
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError(fmt::format("config '{}' is not valid JSON: {}", path.string(), e.what()));
  }
  return RunConfig::merge(base, j);
}

}  // namespace longdance
