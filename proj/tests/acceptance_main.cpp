// Acceptance gate: one self-contained check per release criterion, each
// printed as a single PASS/FAIL line. The process exits nonzero when any
// primary check fails; the final SKIP line covers the optional hosted-backend
// ablation, which this build has no backend for.

#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>
#include <string>
#include <unistd.h>
#include <variant>
#include <vector>

#include "ale/attention.hpp"
#include "ale/backend.hpp"
#include "ale/bench.hpp"
#include "ale/config.hpp"
#include "ale/encoder.hpp"
#include "ale/errors.hpp"
#include "ale/image_io.hpp"
#include "ale/mask.hpp"
#include "ale/metrics.hpp"
#include "ale/prompt.hpp"
#include "ale/rng.hpp"
#include "ale/sampler.hpp"
#include "ale/schedule.hpp"
#include "ale/scorer.hpp"
#include "ale/toy_backend.hpp"

namespace fs = std::filesystem;
using namespace ale;

namespace {

struct Check {
  bool ok = true;
  std::string why;

  void require(bool cond, const std::string& message) {
    if (!cond && ok) {
      ok  = false;
      why = message;
    }
  }
};

double max_abs(const Matrix& a, const Matrix& b) {
  return (a.cast<double>() - b.cast<double>()).cwiseAbs().maxCoeff();
}

bool same_bits(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) return false;
  return std::memcmp(a.data(), b.data(),
                     sizeof(Scalar) * static_cast<std::size_t>(a.size())) == 0;
}

// Row storage is not contiguous in column-major matrices; compare elements.
bool rows_same_bits(const Matrix& a, int ra, const Matrix& b, int rb) {
  if (a.cols() != b.cols()) return false;
  for (int j = 0; j < a.cols(); ++j) {
    const Scalar x = a(ra, j), y = b(rb, j);
    if (std::memcmp(&x, &y, sizeof(Scalar)) != 0) return false;
  }
  return true;
}

Image random_image(Rng& rng, int h, int w) {
  Image img(h, w);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      img(y, x) = static_cast<Scalar>(rng.next_uniform());
  return img;
}

MaskImage rect_mask(int h, int w, int y0, int x0, int bh, int bw) {
  MaskImage m = MaskImage::Zero(h, w);
  m.block(y0, x0, bh, bw).setConstant(1);
  return m;
}

// Hands a fixed set of raw masks to the pipeline, like a file provider
// would, without touching the filesystem.
struct MemoryMaskProvider : MaskProvider {
  RawMasks raw;
  std::variant<RawMasks, FallbackSignal> acquire(
      const Image&, const std::vector<std::string>&) override {
    return raw;
  }
};

// Backend whose clean-latent prediction is the identity, so both branches
// predict the same clean latent whenever their inputs agree.
struct IdentityBackend : Backend {
  LatentShape latent_shape() const override { return {4, 8, 8}; }
  std::vector<Resolution> attention_resolutions() const override {
    return {{8, 8}};
  }
  Latent encode_image(const Image&) const override {
    return Latent::zero(4, 8, 8);
  }
  Image decode_latent(const Latent&) const override { return Image(16, 16); }
  ForwardResult forward(const Latent& z, int, const Conditioning&,
                        const StepControls&) const override {
    ForwardResult r;
    r.z0_pred = z;
    return r;
  }
};

struct TempTree {
  fs::path root;
  explicit TempTree(const std::string& tag) {
    root = fs::temp_directory_path() /
           ("ale_acceptance_" + tag + "_" + std::to_string(::getpid()));
    fs::remove_all(root);
    fs::create_directories(root);
  }
  ~TempTree() {
    std::error_code ec;
    fs::remove_all(root, ec);
  }
  std::string file(const std::string& name) const {
    return (root / name).string();
  }
};

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// --- criterion bodies ------------------------------------------------------

// A two-object edit on the bundled deterministic backend must leave every
// background pixel of the final target latent equal to the source's clean
// latent, with zero tolerance.
void check_background_exactness(Check& c) {
  const ToyBackend backend = ToyBackend::from_golden();
  const MockEncoder encoder;
  Rng rng(2026);

  EditRequest request;
  request.image = random_image(rng, 32, 32);
  request.pairs = {{1, "a wolf", "a red-colored wolf", std::nullopt},
                   {2, "a bus", "a blue-colored bus", std::nullopt}};
  request.config.steps    = 15;
  request.config.seed     = 7;
  request.config.edit_type = "color";

  MemoryMaskProvider provider;
  provider.raw.masks = {rect_mask(32, 32, 4, 2, 9, 12),
                        rect_mask(32, 32, 18, 16, 10, 14)};

  const EditResult result = run_edit(request, backend, encoder, provider);
  c.require(!result.fallback, "edit fell back; masks were available");

  // The same raw masks and settings rebuild the same pyramid.
  const MaskSet masks = build_mask_set(provider.raw,
                                       request.config.dilation_ratio,
                                       backend.attention_resolutions());
  const Resolution latent_res{backend.latent_shape().height,
                              backend.latent_shape().width};
  const ArrayX bg = flatten_mask(masks.at(latent_res).background);
  c.require(bg.sum() > 0, "latent-level background is empty");
  c.require(static_cast<int>(bg.size()) - static_cast<int>(bg.sum()) > 0,
            "latent-level foreground is empty");

  const Latent z0_src = backend.encode_image(request.image);
  double worst = 0.0;
  for (int p = 0; p < bg.size(); ++p) {
    if (bg[p] == 0) continue;
    worst = std::max(
        worst, (result.z_tgt_final.values.col(p).cast<double>() -
                z0_src.values.col(p).cast<double>()).cwiseAbs().maxCoeff());
  }
  c.require(worst == 0.0,
            "background latent deviates by " + std::to_string(worst));
}

// The source branch never inverts numerically: its clean latent is carried
// forward, every noisy latent reconstructs from it exactly, and the terminal
// step returns it bit for bit.
void check_virtual_inversion(Check& c) {
  const ToyBackend backend = ToyBackend::from_golden();
  const MockEncoder encoder;
  Rng rng(31);

  const Image image = random_image(rng, 32, 32);
  const Latent z0   = backend.encode_image(image);

  const std::vector<ObjectPromptPair> pairs = {
      {1, "a wolf", "a red-colored wolf", std::nullopt}};
  const OreSet ore =
      encode_object_restricted(pairs, PromptSide::Source, encoder,
                               EosStrategy::Ore);
  Conditioning cond;
  cond.keys       = &ore.base_plain;
  cond.base_value = &ore.base;

  const int steps = 15;
  Rng noise_rng(77);
  DualBranchState state =
      init_dual_branch(z0, NoiseSchedule::pow2(steps), noise_rng);
  const LatentShape shape = backend.latent_shape();

  for (int n = 0; n < steps; ++n) {
    const Latent eps =
        noise_rng.normal_latent(shape.channels, shape.height, shape.width);
    const SourceStepResult r = source_step(state, backend, cond, eps);

    // Independent replay of the closed form that produced z_next.
    const Latent replay =
        advance_source(state.z0_src, eps, state.schedule.sqrt_alpha[n + 1],
                       state.schedule.sqrt_one_minus[n + 1]);
    c.require(max_abs(replay.values, r.z_next.values) == 0.0,
              "step " + std::to_string(n) +
                  ": reconstruction deviates from the source latent");
    c.require(same_bits(state.z0_src.values, z0.values),
              "step " + std::to_string(n) + ": the carried clean latent drifted");

    state.z_src = r.z_next;
    state.z_tgt = r.z_next;
    state.fresh_noise.push_back(eps);
    state.step += 1;
  }
  c.require(max_abs(state.z_src.values, z0.values) == 0.0,
            "the terminal latent does not equal the clean latent");
}

// Perturbing one object's value matrix may only change output rows inside
// that object's mask; rows outside must be exactly unchanged.
void check_blend_locality(Check& c) {
  Rng rng(404);
  const int P = 64, L = 12, d = 6;
  int interior_hits = 0;

  for (int trial = 0; trial < 100; ++trial) {
    const int k = 2 + static_cast<int>(trial % 2);

    AttentionContext ctx;
    ctx.map        = attention_map(rng.normal_matrix(P, d),
                                   rng.normal_matrix(L, d));
    ctx.base_value = rng.normal_matrix(L, d);
    ctx.resolution = {8, 8};
    ctx.layer      = "self_8x8";

    std::vector<int> owner(P);
    for (int p = 0; p < P; ++p)
      owner[p] = static_cast<int>(rng.next_below(k + 1));  // k means background
    const int j = static_cast<int>(rng.next_below(k));
    owner[static_cast<std::size_t>(rng.next_below(P))] = j;  // never empty

    ctx.object_masks.assign(k, ArrayX::Zero(P));
    ctx.background_mask = ArrayX::Zero(P);
    for (int p = 0; p < P; ++p) {
      if (owner[p] == k)
        ctx.background_mask[p] = 1;
      else
        ctx.object_masks[owner[p]][p] = 1;
    }
    for (int i = 0; i < k; ++i)
      ctx.object_values.push_back(rng.normal_matrix(L, d));

    const Matrix base = rgb_cam_blend(ctx);
    AttentionContext perturbed = ctx;
    perturbed.object_values[j] += 0.5f * rng.normal_matrix(L, d);
    const Matrix out = rgb_cam_blend(perturbed);

    bool inside_changed = false;
    for (int p = 0; p < P; ++p) {
      const double diff = (out.row(p).cast<double>() -
                           base.row(p).cast<double>()).cwiseAbs().maxCoeff();
      if (ctx.object_masks[j][p] == 0) {
        c.require(diff == 0.0, "trial " + std::to_string(trial) +
                                   ": leakage outside the perturbed mask");
      } else if (diff != 0.0) {
        inside_changed = true;
      }
    }
    if (inside_changed) ++interior_hits;
  }
  c.require(interior_hits >= 99,
            "perturbation visible inside its own mask in only " +
                std::to_string(interior_hits) + "/100 trials");
}

// With a single object owning every pixel, the masked blend reduces to plain
// unmasked attention against that object's values.
void check_blend_reduction(Check& c) {
  Rng rng(505);
  const int P = 48, L = 10, d = 7;
  for (int trial = 0; trial < 50; ++trial) {
    AttentionContext ctx;
    ctx.map        = attention_map(rng.normal_matrix(P, d),
                                   rng.normal_matrix(L, d));
    ctx.base_value = rng.normal_matrix(L, d);
    ctx.object_values.push_back(rng.normal_matrix(L, d));
    ctx.object_masks.push_back(ArrayX::Ones(P));
    ctx.background_mask = ArrayX::Zero(P);
    ctx.resolution      = {8, 6};

    const Matrix blended  = rgb_cam_blend(ctx);
    const Matrix unmasked = ctx.map * ctx.object_values[0];
    c.require(max_abs(blended, unmasked) <= 1e-6,
              "trial " + std::to_string(trial) + ": reduction deviates by " +
                  std::to_string(max_abs(blended, unmasked)));
  }
}

// Spliced token spans must equal the isolated per-object encoding bit for
// bit, and editing one object's prompt must leave every other object's
// restricted embedding untouched.
void check_ore_splice(Check& c) {
  MockEncoderConfig cfg;
  cfg.contextual = true;  // isolated and in-context rows genuinely differ
  const MockEncoder encoder(cfg);

  const std::vector<std::string> nouns = {"wolf", "bus",  "river", "lantern",
                                          "crow", "tower"};
  const std::vector<std::string> mods  = {"red",   "blue",  "golden", "rusty",
                                          "pale",  "dark",  "glass",  "stone",
                                          "round", "sharp", "soft",   "wild"};
  Rng rng(606);

  for (int trial = 0; trial < 50; ++trial) {
    const int k = 1 + static_cast<int>(rng.next_below(3));
    std::vector<ObjectPromptPair> pairs;
    for (int i = 0; i < k; ++i) {
      const std::string noun = nouns[rng.next_below(nouns.size())];
      const std::string mod  = mods[rng.next_below(mods.size())];
      pairs.push_back({i + 1, "a " + noun, "a " + mod + " " + noun,
                       std::nullopt});
    }

    const OreSet ore = encode_object_restricted(pairs, PromptSide::Target,
                                                encoder, EosStrategy::Ore);
    for (int j = 0; j < k; ++j) {
      const EmbeddingMatrix iso = encoder.encode(pairs[j].target);
      const TokenSpan span      = ore.spans[j];
      for (int t = 0; t < span.size(); ++t) {
        c.require(rows_same_bits(ore.base.rows, span.begin + t, iso.rows, 1 + t),
                  "trial " + std::to_string(trial) + ": spliced row " +
                      std::to_string(span.begin + t) +
                      " differs from the isolated encoding");
      }
    }

    if (k < 2) continue;
    const int j = static_cast<int>(rng.next_below(k));
    std::vector<ObjectPromptPair> mutated = pairs;
    mutated[j].target += " statue";
    const OreSet after = encode_object_restricted(mutated, PromptSide::Target,
                                                  encoder, EosStrategy::Ore);
    for (int i = 0; i < k; ++i) {
      if (i == j) continue;
      c.require(same_bits(ore.per_object[i].rows, after.per_object[i].rows),
                "trial " + std::to_string(trial) + ": object " +
                    std::to_string(i) + " changed when object " +
                    std::to_string(j) + " was edited");
    }
  }
}

// Leakage scores must equal a direct enumeration of their definitions, with
// no tolerance, and the interior score must vanish for a single object.
void check_leakage_oracle(Check& c) {
  const MockScorer scorer;
  Rng rng(707);

  for (int k = 1; k <= 3; ++k) {
    const int H = 36, W = 36;
    Image edited = random_image(rng, H, W) * 0.2f;
    std::vector<MaskImage> masks;
    std::vector<std::string> prompts;
    for (int i = 0; i < k; ++i) {
      masks.push_back(rect_mask(H, W, 2 + 11 * i, 3 + 10 * i, 8, 7));
      prompts.push_back("a painted item number " + std::to_string(i));
      fill_text_patch(edited, masks.back(), prompts.back());
    }

    const std::optional<double> tels_lib = tels(edited, masks, prompts, scorer);
    const std::optional<double> tils_lib = tils(edited, masks, prompts, scorer);

    // Direct enumeration of the definitions.
    MaskImage uni = MaskImage::Zero(H, W);
    for (const auto& m : masks) uni = uni.max(m);
    MaskImage background = (uni == 0).cast<std::uint8_t>();

    Image bg_only(H, W);
    for (int y = 0; y < H; ++y)
      for (int x = 0; x < W; ++x)
        bg_only(y, x) = background(y, x) ? edited(y, x) : 0.0f;
    double tels_sum = 0.0;
    for (const auto& p : prompts) tels_sum += scorer.score(bg_only, p);
    const double tels_expected = tels_sum / static_cast<double>(k);

    c.require(tels_lib.has_value(), "background score is missing");
    c.require(*tels_lib == tels_expected, "background score " +
                                              std::to_string(*tels_lib) +
                                              " != enumeration " +
                                              std::to_string(tels_expected));

    if (k == 1) {
      c.require(!tils_lib.has_value(),
                "interior score must be absent for one object");
    } else {
      double sum = 0.0;
      int pairs_n = 0;
      for (int i = 0; i < k; ++i)
        for (int j = 0; j < k; ++j) {
          if (i == j) continue;
          Image region(H, W);
          for (int y = 0; y < H; ++y)
            for (int x = 0; x < W; ++x)
              region(y, x) = masks[j](y, x) ? edited(y, x) : 0.0f;
          sum += scorer.score(region, prompts[i]);
          ++pairs_n;
        }
      const double tils_expected = sum / pairs_n;
      c.require(tils_lib.has_value(), "interior score is missing");
      c.require(*tils_lib == tils_expected, "interior score " +
                                                std::to_string(*tils_lib) +
                                                " != enumeration " +
                                                std::to_string(tils_expected));
    }
  }
}

// When both branches predict identical clean latents and consume the same
// fresh noise, their trajectories coincide bit for bit; decoupling the noise
// breaks the identity at every non-terminal step.
void check_branch_coupling(Check& c) {
  const IdentityBackend backend;
  const LatentShape shape = backend.latent_shape();
  const int steps         = 15;
  const NoiseSchedule sched = NoiseSchedule::pow2(steps);

  Rng init_rng(808);
  const Latent z0 = init_rng.normal_latent(shape.channels, shape.height,
                                           shape.width);

  Rng shared(909);
  DualBranchState st = init_dual_branch(z0, sched, shared);
  c.require(same_bits(st.z_src.values, st.z_tgt.values),
            "branches start from different latents");
  for (int n = 0; n < steps; ++n) {
    const Latent eps =
        shared.normal_latent(shape.channels, shape.height, shape.width);
    const Latent p_src = backend.forward(st.z_src, n, {}, {}).z0_pred;
    const Latent p_tgt = backend.forward(st.z_tgt, n, {}, {}).z0_pred;
    st.z_src = advance_source(st.z0_src, eps, sched.sqrt_alpha[n + 1],
                              sched.sqrt_one_minus[n + 1]);
    st.z_tgt = advance_target(st.z0_src, p_src, p_tgt, eps,
                              sched.sqrt_alpha[n + 1],
                              sched.sqrt_one_minus[n + 1]);
    c.require(same_bits(st.z_src.values, st.z_tgt.values),
              "step " + std::to_string(n) +
                  ": coupled branches disagree bitwise");
  }

  // Negative control: a private noise stream for the target must separate
  // the branches at every step that still adds noise.
  Rng src_rng(909), tgt_rng(910);
  DualBranchState neg = init_dual_branch(z0, sched, src_rng);
  Latent z_tgt        = neg.z_tgt;
  for (int n = 0; n < steps; ++n) {
    const Latent eps_src =
        src_rng.normal_latent(shape.channels, shape.height, shape.width);
    const Latent eps_tgt =
        tgt_rng.normal_latent(shape.channels, shape.height, shape.width);
    const Latent p_src = backend.forward(neg.z_src, n, {}, {}).z0_pred;
    const Latent p_tgt = backend.forward(z_tgt, n, {}, {}).z0_pred;
    neg.z_src = advance_source(neg.z0_src, eps_src, sched.sqrt_alpha[n + 1],
                               sched.sqrt_one_minus[n + 1]);
    z_tgt     = advance_target(neg.z0_src, p_src, p_tgt, eps_tgt,
                               sched.sqrt_alpha[n + 1],
                               sched.sqrt_one_minus[n + 1]);
    if (n + 1 < steps)
      c.require(!same_bits(neg.z_src.values, z_tgt.values),
                "step " + std::to_string(n) +
                    ": decoupled branches still agree");
  }
}

// Injection window arithmetic and the per-edit-type defaults, end to end
// through configuration resolution.
void check_schedule_semantics(Check& c) {
  c.require(resolve_schedule(1.0, 15).active_count == 15, "(1.0, 15) != 15");
  c.require(resolve_schedule(0.0, 15).active_count == 0, "(0.0, 15) != 0");
  c.require(resolve_schedule(0.6, 15).active_count == 9, "(0.6, 15) != 9");
  c.require(resolve_schedule(0.5, 15).active_count == 8, "(0.5, 15) != 8");

  const std::vector<std::pair<std::string, double>> defaults = {
      {"color", 1.0},
      {"object", 0.5},
      {"material", 0.6},
      {"color+object", 0.5},
      {"object+material", 0.5}};
  unsetenv("ALE_CONFIG");
  for (const auto& [type, fraction] : defaults) {
    nlohmann::json flags;
    flags["edit"]["edit_type"] = type;
    const ResolvedConfig r = resolve_config(flags);
    c.require(!r.edit.schedule_fraction.has_value(),
              type + ": an explicit fraction overrides the default");
    c.require(resolve_schedule_fraction(r.edit) == fraction,
              type + ": default fraction is not " + std::to_string(fraction));
  }
}

// Ratio-driven dilation radius plus equivalence with a stamped morphological
// oracle on a 768x768 grid.
void check_dilation(Check& c) {
  const int radius = dilation_radius(0.01, 768, 768);
  c.require(radius == 7, "ratio 0.01 on 768x768 gives radius " +
                             std::to_string(radius) + ", expected 7");

  Rng rng(1111);
  MaskImage mask = MaskImage::Zero(768, 768);
  for (int i = 0; i < 220; ++i)
    mask(rng.next_below(768), rng.next_below(768)) = 1;

  const MaskImage dilated = dilate_mask(mask, radius);

  // Independent oracle: stamp a clipped square around every set pixel.
  MaskImage oracle = MaskImage::Zero(768, 768);
  for (int y = 0; y < 768; ++y)
    for (int x = 0; x < 768; ++x) {
      if (!mask(y, x)) continue;
      const int y0 = std::max(0, y - radius), y1 = std::min(767, y + radius);
      const int x0 = std::max(0, x - radius), x1 = std::min(767, x + radius);
      oracle.block(y0, x0, y1 - y0 + 1, x1 - x0 + 1).setConstant(1);
    }
  c.require((dilated == oracle).all(),
            "dilation disagrees with the stamped oracle");
}

// Grid cardinality and bit-identical regeneration of the scenario file.
void check_benchmark_grid(Check& c) {
  TempTree tree("grid");
  auto write_manifest = [&](const std::string& name, int images) {
    std::ostringstream js;
    js << "{\"images\":[";
    for (int i = 0; i < images; ++i) {
      if (i) js << ',';
      js << "{\"id\":\"img" << i << "\",\"path\":\"img" << i
         << ".png\",\"objects\":[{\"name\":\"cat\"},{\"name\":\"dog\"},"
            "{\"name\":\"boat\"}]}";
    }
    js << "]}";
    std::ofstream(tree.file(name)) << js.str();
    return ImageManifest::load(tree.file(name));
  };

  GenerateOptions options;
  options.seed = 2024;
  const auto grid20 = generate_scenarios(write_manifest("m20.json", 20),
                                         options);
  c.require(grid20.size() == 3000, "20-image grid has " +
                                       std::to_string(grid20.size()) +
                                       " scenarios, expected 3000");
  const auto grid2 = generate_scenarios(write_manifest("m2.json", 2), options);
  c.require(grid2.size() == 300, "2-image grid has " +
                                     std::to_string(grid2.size()) +
                                     " scenarios, expected 300");

  const auto again = generate_scenarios(write_manifest("m20b.json", 20),
                                        options);
  c.require(scenarios_to_json(grid20) == scenarios_to_json(again),
            "regeneration under the same seed is not bit-identical");

  std::set<std::string> ids;
  for (const auto& sc : grid20) ids.insert(sc.id);
  c.require(ids.size() == grid20.size(), "scenario ids collide");
}

// Two CLI invocations with one seed and one configuration must produce
// byte-identical images and sidecars.
void check_cli_determinism(Check& c) {
#ifndef ALE_CLI_PATH
  c.require(false, "CLI path not provided at build time");
#else
  unsetenv("ALE_CONFIG");
  TempTree tree("cli");
  Rng rng(1234);
  const Image input   = random_image(rng, 32, 32);
  const MaskImage m1  = rect_mask(32, 32, 3, 4, 10, 9);
  const MaskImage m2  = rect_mask(32, 32, 17, 18, 11, 10);

  for (const char* sub : {"a", "b"}) {
    fs::create_directories(tree.root / sub / "masks");
    save_image_png((tree.root / sub / "input.png").string(), input);
    save_mask_png((tree.root / sub / "masks" / "input_obj1.png").string(), m1);
    save_mask_png((tree.root / sub / "masks" / "input_obj2.png").string(), m2);

    const std::string cmd =
        "cd '" + (tree.root / sub).string() + "' && '" + ALE_CLI_PATH +
        "' edit --image input.png --masks masks"
        " --pair 'a wolf->a red-colored wolf'"
        " --pair 'a bus->a blue-colored bus'"
        " --seed 11 --steps 15 --out out.png > log.txt 2>&1";
    const int code = std::system(cmd.c_str());
    c.require(code == 0, std::string("CLI run in ") + sub +
                             " exited with code " + std::to_string(code));
  }
  if (!c.ok) return;

  const std::string png_a  = slurp((tree.root / "a" / "out.png").string());
  const std::string png_b  = slurp((tree.root / "b" / "out.png").string());
  const std::string side_a = slurp((tree.root / "a" / "out.png.json").string());
  const std::string side_b = slurp((tree.root / "b" / "out.png.json").string());
  c.require(!png_a.empty(), "first run wrote no image");
  c.require(png_a == png_b, "output images differ between identical runs");
  c.require(!side_a.empty(), "first run wrote no sidecar");
  c.require(side_a == side_b, "sidecars differ between identical runs");
#endif
}

struct Criterion {
  int id;
  const char* name;
  double budget_seconds;  // 0 means no stated bound
  std::function<void(Check&)> body;
};

}  // namespace

int main() {
  const std::vector<Criterion> criteria = {
      {1, "background latent pixels survive a two-object edit untouched", 10.0,
       check_background_exactness},
      {2, "the source branch recovers its clean latent exactly at every step",
       5.0, check_virtual_inversion},
      {3, "perturbing one value matrix never changes pixels outside its mask",
       10.0, check_blend_locality},
      {4, "a full-mask single-object blend equals unmasked attention", 0.0,
       check_blend_reduction},
      {5, "spliced token spans match isolated encodings bit for bit", 0.0,
       check_ore_splice},
      {6, "leakage scores equal their brute-force enumeration", 0.0,
       check_leakage_oracle},
      {7, "equal predictions with shared noise keep both branches identical",
       0.0, check_branch_coupling},
      {8, "injection windows and per-type defaults resolve as documented", 0.0,
       check_schedule_semantics},
      {9, "mask dilation matches a stamped morphological oracle", 0.0,
       check_dilation},
      {10, "the benchmark grid is complete and regenerates bit-identically",
       5.0, check_benchmark_grid},
      {11, "two identical CLI runs produce byte-identical artifacts", 0.0,
       check_cli_determinism},
  };

  int failures = 0;
  for (const auto& cr : criteria) {
    Check check;
    const auto start = std::chrono::steady_clock::now();
    try {
      cr.body(check);
    } catch (const std::exception& e) {
      check.require(false, std::string("unexpected exception: ") + e.what());
    }
    const double elapsed =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
            .count();
    if (cr.budget_seconds > 0 && elapsed >= cr.budget_seconds)
      check.require(false, "exceeded the " +
                               std::to_string(cr.budget_seconds) +
                               " second budget");

    if (check.ok) {
      std::printf("[%2d] PASS (%.2fs) %s\n", cr.id, elapsed, cr.name);
    } else {
      std::printf("[%2d] FAIL (%.2fs) %s: %s\n", cr.id, elapsed, cr.name,
                  check.why.c_str());
      ++failures;
    }
  }

  std::printf(
      "[12] SKIP directional ablation on a hosted diffusion backend "
      "(no such backend is linked into this build)\n");

  if (failures) {
    std::printf("%d of 11 acceptance checks failed\n", failures);
    return 1;
  }
  std::printf("all 11 acceptance checks passed\n");
  return 0;
}
