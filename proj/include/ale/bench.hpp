#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "ale/backend.hpp"
#include "ale/metrics.hpp"
#include "ale/sampler.hpp"
#include "ale/types.hpp"

namespace ale {

// The five benchmark edit types. Color+material and triple combinations are
// deliberately not part of the grid.
const std::vector<std::string>& edit_types();

struct AttributeDictionaries {
  std::vector<std::string> colors;
  std::vector<std::string> objects;
  std::vector<std::string> materials;

  static AttributeDictionaries defaults();
  static AttributeDictionaries load(const std::string& path);
};

struct SampledAttributes {
  std::optional<std::string> color;
  std::optional<std::string> new_object;
  std::optional<std::string> material;
};

// Bare target phrase per template, no article:
//   color            -> "{color}-colored {object}"
//   object           -> "{new_object}"
//   material         -> "{object} made of {material}"
//   color+object     -> "{color}-colored {new_object}"
//   object+material  -> "{new_object} made of {material}"
std::string render_prompt(const std::string& edit_type,
                          const std::string& src_object,
                          const SampledAttributes& attrs);

// "an" before a leading vowel, "a" otherwise.
std::string article_for(const std::string& phrase);

struct ManifestObject {
  std::string name;
  std::string mask_path;  // empty means no prepared mask
  std::optional<std::string> color;     // declared existing attribute
  std::optional<std::string> material;
};

struct ManifestImage {
  std::string id;
  std::string path;
  std::vector<ManifestObject> objects;
};

struct ImageManifest {
  std::vector<ManifestImage> images;

  static ImageManifest load(const std::string& path);
};

struct ScenarioObject {
  int manifest_index = 0;  // position in the image's object list
  std::string name;
  std::string source_prompt;
  std::string target_prompt;
  std::string stripped_prompt;
  SampledAttributes attributes;
};

struct Scenario {
  std::string id;
  std::string image_id;
  std::string edit_type;
  int k        = 0;
  int instance = 0;  // 1-based
  std::uint64_t seed = 0;
  std::vector<ScenarioObject> objects;
};

struct GenerateOptions {
  std::uint64_t seed = 0;
  int instances_per_cell = 10;
  std::vector<int> object_counts = {1, 2, 3};
};

// Full grid: every image x edit type x K x instance. Per-scenario seeds are
// stable hashes of (seed, scenario id), so regeneration is bit-identical and
// independent of traversal order.
std::vector<Scenario> generate_scenarios(const ImageManifest& manifest,
                                         const GenerateOptions& options);

std::string scenarios_to_json(const std::vector<Scenario>& scenarios);
std::vector<Scenario> scenarios_from_json(const std::string& json_text);

struct BenchDeps {
  const Backend* backend = nullptr;
  const TextEncoder* encoder = nullptr;
  const SimilarityScorer* scorer = nullptr;
  MetricAdapters adapters;
};

struct BenchOptions {
  std::string manifest_dir;  // base for relative manifest paths
  std::string out_dir;
  EditConfig edit;     // edit_type/seed are overridden per scenario
  int workers = 1;
  bool resume = true;
};

struct BenchSummary {
  int completed = 0;
  int failed    = 0;
  int skipped   = 0;
};

// Runs every scenario, writes reports/<id>.json per scenario plus
// aggregate.csv and failures.csv. Scenarios whose report already parses are
// skipped when resume is on; individual failures never abort the run.
BenchSummary run_benchmark(const std::vector<Scenario>& scenarios,
                           const ImageManifest& manifest,
                           const BenchDeps& deps, const BenchOptions& options);

// Rebuilds aggregate.csv from the reports directory. Throws IoError when no
// report is present.
void write_aggregate(const std::string& out_dir);
std::vector<LeakageReport> load_reports(const std::string& out_dir);

}  // namespace ale
