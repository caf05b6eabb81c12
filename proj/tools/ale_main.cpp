#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include "ale/bench.hpp"
#include "ale/config.hpp"
#include "ale/errors.hpp"
#include "ale/image_io.hpp"
#include "ale/sampler.hpp"
#include "ale/segmenter.hpp"
#include "ale/toy_backend.hpp"

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

struct EditFlags {
  std::string image;
  std::vector<std::string> pairs;
  std::string masks;
  std::string segmenter_endpoint;
  int steps = 0;
  double schedule = 0.0;
  std::string edit_type;
  std::string eos_strategy;
  double dilation = 0.0;
  std::uint64_t seed = 0;
  std::string backend;
  std::string out;
  bool debug = false;
};

struct BenchFlags {
  std::string manifest;
  std::string scenarios;
  std::string out;
  std::uint64_t seed = 0;
  int instances = 10;
  int workers = 1;
  bool no_resume = false;
};

// "src->tgt" or "src->tgt->stripped".
ale::ObjectPromptPair parse_pair(const std::string& raw, int index) {
  std::vector<std::string> parts;
  std::size_t pos = 0;
  for (;;) {
    const std::size_t arrow = raw.find("->", pos);
    if (arrow == std::string::npos) {
      parts.push_back(raw.substr(pos));
      break;
    }
    parts.push_back(raw.substr(pos, arrow - pos));
    pos = arrow + 2;
  }
  if (parts.size() < 2 || parts.size() > 3)
    throw ale::ValidationError("--pair expects \"source->target\" (got \"" +
                               raw + "\")");
  ale::ObjectPromptPair pair;
  pair.index  = index;
  pair.source = parts[0];
  pair.target = parts[1];
  if (parts.size() == 3) pair.stripped = parts[2];
  return pair;
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ale::IoError("cannot write " + path);
  out << text;
}

std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ale::IoError("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

int cmd_edit(const EditFlags& flags, const json& overrides) {
  const ale::ResolvedConfig config = ale::resolve_config(overrides);

  const ale::Image image = ale::load_image_png(flags.image);
  std::vector<ale::ObjectPromptPair> pairs;
  for (std::size_t i = 0; i < flags.pairs.size(); ++i)
    pairs.push_back(parse_pair(flags.pairs[i], static_cast<int>(i) + 1));

  std::unique_ptr<ale::MaskProvider> provider;
  std::unique_ptr<ale::SegmenterClient> segmenter;
  if (!config.masks_dir.empty()) {
    const std::string stem = fs::path(flags.image).stem().string();
    provider = std::make_unique<ale::FileMaskProvider>(ale::find_mask_files(
        config.masks_dir, stem, static_cast<int>(pairs.size())));
  } else if (!config.segmenter_endpoint.empty()) {
    segmenter =
        std::make_unique<ale::HttpSegmenterClient>(config.segmenter_endpoint);
    provider = std::make_unique<ale::SegmenterMaskProvider>(*segmenter);
  } else {
    throw ale::ValidationError(
        "no mask source: pass --masks <dir> or --segmenter-endpoint <url> "
        "(config keys masks / segmenter.endpoint)");
  }

  const std::unique_ptr<ale::Backend> backend = ale::make_backend(config);
  const ale::MockEncoder encoder(config.encoder);

  ale::EditRequest request;
  request.image  = image;
  request.pairs  = pairs;
  request.config = config.edit;

  const ale::EditResult result =
      ale::run_edit(request, *backend, encoder, *provider);

  ale::save_image_png(config.out_path, result.image);

  json sidecar;
  sidecar["image"]       = flags.image;
  sidecar["out"]         = config.out_path;
  sidecar["backend"]     = config.backend_kind;
  sidecar["seed"]        = config.edit.seed;
  sidecar["config_hash"] = config.config_hash;
  sidecar["steps"]       = config.edit.steps;
  sidecar["dilation"]    = config.edit.dilation_ratio;
  sidecar["edit_type"]   = config.edit.edit_type;
  sidecar["eos_strategy"]      = ale::to_string(config.edit.eos_strategy);
  sidecar["schedule_fraction"] = result.schedule_fraction;
  sidecar["injected_steps"]    = result.injected_steps;
  sidecar["fallback"]          = result.fallback;
  sidecar["fallback_reason"]   = result.fallback_reason;
  json jpairs = json::array();
  for (const auto& p : pairs) {
    json jp;
    jp["source"] = p.source;
    jp["target"] = p.target;
    jpairs.push_back(std::move(jp));
  }
  sidecar["pairs"] = std::move(jpairs);
  write_text(config.out_path + ".json", sidecar.dump(2) + "\n");

  if (config.debug) {
    json steps = json::array();
    for (const auto& t : result.trace) {
      json js;
      js["step"]           = t.step;
      js["injected"]       = t.injected;
      js["alpha_bar_next"] = t.alpha_bar_next;
      steps.push_back(std::move(js));
    }
    write_text(config.out_path + ".trace.json", steps.dump(2) + "\n");
  }

  if (result.fallback)
    std::fprintf(stderr,
                 "warning: %s; edited without cross-attention masking and "
                 "background blending\n",
                 result.fallback_reason.c_str());
  return 0;
}

int cmd_bench_generate(const BenchFlags& flags) {
  const ale::ImageManifest manifest = ale::ImageManifest::load(flags.manifest);
  ale::GenerateOptions options;
  options.seed               = flags.seed;
  options.instances_per_cell = flags.instances;
  const std::vector<ale::Scenario> scenarios =
      ale::generate_scenarios(manifest, options);
  write_text(flags.out, ale::scenarios_to_json(scenarios));
  std::printf("generated %zu scenarios -> %s\n", scenarios.size(),
              flags.out.c_str());
  return 0;
}

int cmd_bench_run(const BenchFlags& flags, const json& overrides) {
  const ale::ResolvedConfig config = ale::resolve_config(overrides);
  const ale::ImageManifest manifest = ale::ImageManifest::load(flags.manifest);
  const std::vector<ale::Scenario> scenarios =
      ale::scenarios_from_json(read_text(flags.scenarios));

  const std::unique_ptr<ale::Backend> backend = ale::make_backend(config);
  const ale::MockEncoder encoder(config.encoder);
  const ale::MockScorer scorer(config.scorer);

  ale::BenchDeps deps;
  deps.backend = backend.get();
  deps.encoder = &encoder;
  deps.scorer  = &scorer;

  ale::BenchOptions options;
  options.manifest_dir = fs::path(flags.manifest).parent_path().string();
  options.out_dir      = flags.out;
  options.edit         = config.edit;
  options.workers      = flags.workers;
  options.resume       = !flags.no_resume;

  const ale::BenchSummary summary =
      ale::run_benchmark(scenarios, manifest, deps, options);
  std::printf("completed %d, failed %d, skipped %d -> %s\n", summary.completed,
              summary.failed, summary.skipped, flags.out.c_str());
  return 0;
}

int cmd_bench_report(const BenchFlags& flags) {
  try {
    ale::write_aggregate(flags.out);
  } catch (const ale::IoError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  std::printf("aggregate written to %s/aggregate.csv\n", flags.out.c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"attribute-leakage-free multi-object image editing"};
  app.require_subcommand(1);

  EditFlags edit_flags;
  BenchFlags bench_flags;

  CLI::App* edit = app.add_subcommand("edit", "edit one image");
  edit->add_option("--image", edit_flags.image, "source image PNG")->required();
  auto* pair_opt = edit->add_option("--pair", edit_flags.pairs,
                                    "object prompt pair \"source->target\"");
  pair_opt->required();
  auto* masks_opt = edit->add_option("--masks", edit_flags.masks,
                                     "directory with prepared object masks");
  auto* seg_opt   = edit->add_option("--segmenter-endpoint",
                                     edit_flags.segmenter_endpoint,
                                     "segmentation service base URL");
  auto* steps_opt = edit->add_option("--steps", edit_flags.steps,
                                     "denoising steps");
  auto* sched_opt = edit->add_option("--schedule", edit_flags.schedule,
                                     "self-attention injection fraction [0,1]");
  auto* type_opt  = edit->add_option("--edit-type", edit_flags.edit_type,
                                     "color|object|material|color+object|object+material");
  auto* eos_opt   = edit->add_option("--eos-strategy", edit_flags.eos_strategy,
                                     "ore|naive|zeros|bos|empty|ets");
  auto* dil_opt   = edit->add_option("--dilation", edit_flags.dilation,
                                     "mask dilation ratio");
  auto* seed_opt  = edit->add_option("--seed", edit_flags.seed, "noise seed");
  auto* back_opt  = edit->add_option("--backend", edit_flags.backend,
                                     "backend kind (toy)");
  auto* out_opt   = edit->add_option("--out", edit_flags.out, "output PNG path");
  auto* debug_opt = edit->add_flag("--debug", edit_flags.debug,
                                   "write a per-step trace next to the output");

  CLI::App* bench = app.add_subcommand("bench", "benchmark grid tooling");
  bench->require_subcommand(1);

  CLI::App* gen = bench->add_subcommand("generate", "derive the scenario grid");
  gen->add_option("--manifest", bench_flags.manifest, "image manifest JSON")
      ->required();
  gen->add_option("--out", bench_flags.out, "scenario JSON output")->required();
  gen->add_option("--seed", bench_flags.seed, "grid seed");
  gen->add_option("--instances", bench_flags.instances,
                  "instances per (image, type, K) cell");

  CLI::App* run = bench->add_subcommand("run", "run scenarios and score them");
  run->add_option("--manifest", bench_flags.manifest, "image manifest JSON")
      ->required();
  run->add_option("--scenarios", bench_flags.scenarios, "scenario JSON file")
      ->required();
  run->add_option("--out", bench_flags.out, "report output directory")
      ->required();
  run->add_option("--workers", bench_flags.workers, "worker threads");
  run->add_flag("--no-resume", bench_flags.no_resume,
                "recompute reports that already exist");
  auto* run_steps = run->add_option("--steps", edit_flags.steps,
                                    "denoising steps");
  auto* run_eos   = run->add_option("--eos-strategy", edit_flags.eos_strategy,
                                    "ore|naive|zeros|bos|empty|ets");
  auto* run_dil   = run->add_option("--dilation", edit_flags.dilation,
                                    "mask dilation ratio");

  CLI::App* report = bench->add_subcommand("report", "rebuild aggregate.csv");
  report->add_option("--out", bench_flags.out, "report output directory")
      ->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    // Help and version land here with code 0; real parse errors are
    // validation failures.
    return code == 0 ? 0 : 2;
  }

  try {
    json overrides = json::object();
    if (*steps_opt || *run_steps) overrides["edit"]["steps"] = edit_flags.steps;
    if (*sched_opt) overrides["edit"]["schedule"] = edit_flags.schedule;
    if (*type_opt) overrides["edit"]["edit_type"] = edit_flags.edit_type;
    if (*eos_opt || *run_eos)
      overrides["edit"]["eos_strategy"] = edit_flags.eos_strategy;
    if (*dil_opt || *run_dil)
      overrides["edit"]["dilation"] = edit_flags.dilation;
    if (*seed_opt) overrides["edit"]["seed"] = edit_flags.seed;
    if (*back_opt) overrides["backend"]["kind"] = edit_flags.backend;
    if (*seg_opt)
      overrides["segmenter"]["endpoint"] = edit_flags.segmenter_endpoint;
    if (*masks_opt) overrides["masks"] = edit_flags.masks;
    if (*out_opt) overrides["out"] = edit_flags.out;
    if (*debug_opt) overrides["debug"] = true;

    if (edit->parsed()) return cmd_edit(edit_flags, overrides);
    if (gen->parsed()) return cmd_bench_generate(bench_flags);
    if (run->parsed()) return cmd_bench_run(bench_flags, overrides);
    if (report->parsed()) return cmd_bench_report(bench_flags);
    return 2;
  } catch (const ale::ValidationError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 3;
  }
}
