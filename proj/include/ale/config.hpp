#pragma once

#include <functional>
#include <memory>
#include <string>

#include <json.hpp>

#include "ale/backend.hpp"
#include "ale/encoder.hpp"
#include "ale/sampler.hpp"
#include "ale/scorer.hpp"

namespace ale {

// Effective settings after merging built-in defaults, the optional config
// file (path in the ALE_CONFIG environment variable) and command-line
// overrides, in ascending precedence.
struct ResolvedConfig {
  EditConfig edit;
  std::string backend_kind = "toy";
  std::string toy_params_path;  // empty resolves the bundled golden file
  MockEncoderConfig encoder;
  MockScorerConfig scorer;
  std::string segmenter_endpoint;
  std::string masks_dir;
  std::string out_path = "edited.png";
  int workers = 1;
  bool debug  = false;

  nlohmann::json effective;  // canonical merged document
  std::string config_hash;   // stable hash of `effective`
};

nlohmann::json default_config();
nlohmann::json load_config_file(const std::string& path);

// Deep merge: objects merge key by key, anything else is replaced.
nlohmann::json merge_config(nlohmann::json base, const nlohmann::json& overlay);

// file_json empty: consult ALE_CONFIG; set: use as the config file layer.
ResolvedConfig resolve_config(const nlohmann::json& flag_overrides,
                              const nlohmann::json& file_json = {});

std::string config_hash(const nlohmann::json& effective);

// Backend discovery. "toy" is built in; other kinds must be registered by an
// integration package before use.
using BackendFactory =
    std::function<std::unique_ptr<Backend>(const ResolvedConfig&)>;
void register_backend_factory(const std::string& kind, BackendFactory factory);
std::unique_ptr<Backend> make_backend(const ResolvedConfig& config);

}  // namespace ale
