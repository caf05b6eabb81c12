#include "ale/config.hpp"

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <map>
#include <mutex>
#include <sstream>

#include "ale/errors.hpp"
#include "ale/rng.hpp"
#include "ale/toy_backend.hpp"

namespace ale {
namespace {

using nlohmann::json;

std::map<std::string, BackendFactory>& factory_registry() {
  static std::map<std::string, BackendFactory> registry;
  return registry;
}

std::mutex& registry_mutex() {
  static std::mutex m;
  return m;
}

template <typename T>
T get_or_throw(const json& j, const std::string& key, const char* type_name) {
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    throw ValidationError("config key \"" + key + "\" must be a " + type_name);
  }
}

}  // namespace

json default_config() {
  json j;
  j["edit"]["steps"]             = 15;
  j["edit"]["dilation"]          = 0.01;
  j["edit"]["eos_strategy"]      = "ore";
  j["edit"]["edit_type"]         = "color";
  j["edit"]["schedule"]          = nullptr;  // per-type default applies
  j["edit"]["seed"]              = 0;
  j["backend"]["kind"]           = "toy";
  j["backend"]["toy_params"]     = "";
  j["encoder"]["context_length"] = 77;
  j["encoder"]["dim"]            = 32;
  j["encoder"]["seed"]           = 17;
  j["encoder"]["contextual"]     = false;
  j["scorer"]["seed"]            = 99;
  j["scorer"]["bins"]            = 8;
  j["segmenter"]["endpoint"]     = "";
  j["masks"]                     = "";
  j["out"]                       = "edited.png";
  j["workers"]                   = 1;
  j["debug"]                     = false;
  return j;
}

json load_config_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open config file " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  json j;
  try {
    j = json::parse(ss.str());
  } catch (const json::exception& e) {
    throw ValidationError("config file " + path + " is not valid JSON: " +
                          e.what());
  }
  if (!j.is_object())
    throw ValidationError("config file " + path + " must hold a JSON object");
  return j;
}

json merge_config(json base, const json& overlay) {
  if (!base.is_object() || !overlay.is_object()) return overlay;
  for (const auto& [key, value] : overlay.items()) {
    if (base.contains(key) && base[key].is_object() && value.is_object())
      base[key] = merge_config(base[key], value);
    else
      base[key] = value;
  }
  return base;
}

std::string config_hash(const json& effective) {
  // nlohmann objects serialize with sorted keys, so the dump is canonical.
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx",
                static_cast<unsigned long long>(fnv1a(effective.dump())));
  return buf;
}

ResolvedConfig resolve_config(const json& flag_overrides,
                              const json& file_json) {
  json file_layer = file_json;
  if (file_layer.is_null() || (file_layer.is_object() && file_layer.empty())) {
    if (const char* env = std::getenv("ALE_CONFIG"); env && *env)
      file_layer = load_config_file(env);
    else
      file_layer = json::object();
  }

  json effective = merge_config(default_config(), file_layer);
  if (!flag_overrides.is_null())
    effective = merge_config(effective, flag_overrides);

  ResolvedConfig r;
  r.effective   = effective;
  r.config_hash = config_hash(effective);

  const json& edit = effective.at("edit");
  r.edit.steps          = get_or_throw<int>(edit, "steps", "number");
  r.edit.dilation_ratio = get_or_throw<double>(edit, "dilation", "number");
  r.edit.eos_strategy =
      parse_eos_strategy(get_or_throw<std::string>(edit, "eos_strategy", "string"));
  r.edit.edit_type = get_or_throw<std::string>(edit, "edit_type", "string");
  if (!edit.at("schedule").is_null())
    r.edit.schedule_fraction = get_or_throw<double>(edit, "schedule", "number");
  r.edit.seed = get_or_throw<std::uint64_t>(edit, "seed", "number");

  r.backend_kind    = get_or_throw<std::string>(effective.at("backend"), "kind", "string");
  r.toy_params_path = get_or_throw<std::string>(effective.at("backend"),
                                                "toy_params", "string");

  const json& enc = effective.at("encoder");
  r.encoder.context_length = get_or_throw<int>(enc, "context_length", "number");
  r.encoder.dim            = get_or_throw<int>(enc, "dim", "number");
  r.encoder.seed           = get_or_throw<std::uint64_t>(enc, "seed", "number");
  r.encoder.contextual     = get_or_throw<bool>(enc, "contextual", "boolean");

  const json& sc = effective.at("scorer");
  r.scorer.seed = get_or_throw<std::uint64_t>(sc, "seed", "number");
  r.scorer.bins = get_or_throw<int>(sc, "bins", "number");

  r.segmenter_endpoint = get_or_throw<std::string>(effective.at("segmenter"),
                                                   "endpoint", "string");
  r.masks_dir = effective.at("masks").get<std::string>();
  r.out_path  = effective.at("out").get<std::string>();
  r.workers   = effective.at("workers").get<int>();
  r.debug     = effective.at("debug").get<bool>();
  if (r.workers < 1) throw ValidationError("workers must be >= 1");
  return r;
}

void register_backend_factory(const std::string& kind, BackendFactory factory) {
  std::lock_guard<std::mutex> lock(registry_mutex());
  factory_registry()[kind] = std::move(factory);
}

std::unique_ptr<Backend> make_backend(const ResolvedConfig& config) {
  if (config.backend_kind == "toy")
    return std::make_unique<ToyBackend>(
        ToyBackend::from_golden(config.toy_params_path));

  BackendFactory factory;
  {
    std::lock_guard<std::mutex> lock(registry_mutex());
    auto it = factory_registry().find(config.backend_kind);
    if (it != factory_registry().end()) factory = it->second;
  }
  if (!factory)
    throw ValidationError(
        "backend kind \"" + config.backend_kind +
        "\" is not registered in this build; link an integration package "
        "that provides it or use \"toy\"");
  return factory(config);
}

}  // namespace ale
