#include <doctest.h>

#include <cmath>
#include <vector>

#include "ale/errors.hpp"
#include "ale/image_io.hpp"
#include "ale/mask.hpp"
#include "ale/sampler.hpp"
#include "ale/toy_backend.hpp"
#include "test_util.hpp"

using namespace ale;
using test_util::exact_equal;
using test_util::max_abs_diff;
using test_util::same_bits;

namespace {

// Conditioning-blind deterministic backend: the prediction depends only on
// the latent and step, so source and target predictions coincide whenever
// their latents do.
class HalfBackend : public Backend {
 public:
  HalfBackend(int c, int h, int w) : c_(c), h_(h), w_(w) {}

  LatentShape latent_shape() const override { return {c_, h_, w_}; }
  std::vector<Resolution> attention_resolutions() const override { return {}; }

  Latent encode_image(const Image& image) const override {
    Latent z;
    z.channels = c_;
    z.height   = h_;
    z.width    = w_;
    z.values   = Matrix::Constant(c_, h_ * w_, image(0, 0));
    return z;
  }
  Image decode_latent(const Latent& z) const override {
    return Image::Constant(h_, w_, z.values(0, 0));
  }
  ForwardResult forward(const Latent& z, int step, const Conditioning&,
                        const StepControls&) const override {
    ForwardResult r;
    r.z0_pred = z;
    r.z0_pred.values =
        Scalar(0.5) * z.values + Matrix::Constant(c_, h_ * w_,
                                                  Scalar(0.01) * Scalar(step));
    return r;
  }

 private:
  int c_, h_, w_;
};

Latent random_latent(Rng& rng, int c = 2, int h = 4, int w = 4) {
  return rng.normal_latent(c, h, w);
}

}  // namespace

TEST_CASE("per-type schedule fraction defaults") {
  CHECK(default_schedule_fraction("color") == 1.0);
  CHECK(default_schedule_fraction("object") == 0.5);
  CHECK(default_schedule_fraction("material") == 0.6);
  CHECK(default_schedule_fraction("color+object") == 0.5);
  CHECK(default_schedule_fraction("object+material") == 0.5);
  CHECK_THROWS_AS(default_schedule_fraction("texture"), RangeError);

  EditConfig cfg;
  cfg.edit_type = "material";
  CHECK(resolve_schedule_fraction(cfg) == 0.6);
  cfg.schedule_fraction = 0.25;
  CHECK(resolve_schedule_fraction(cfg) == 0.25);
  cfg.schedule_fraction = 1.5;
  CHECK_THROWS_AS(resolve_schedule_fraction(cfg), RangeError);
}

TEST_CASE("both branches start from one shared noise draw") {
  Rng rng(50);
  Latent z0 = random_latent(rng);
  Rng noise(51);
  const DualBranchState state =
      init_dual_branch(z0, NoiseSchedule::pow2(15), noise);
  CHECK(same_bits(state.z_src.values, state.z_tgt.values));
  CHECK(state.step == 0);
  CHECK(state.schedule.steps() == 15);
  // The draw is the seed's first normal latent, nothing else.
  Rng replay(51);
  CHECK(same_bits(state.z_src.values, replay.normal_latent(2, 4, 4).values));
}

TEST_CASE("consistent_noise matches the scalar definition") {
  Rng rng(52);
  const Latent z0 = random_latent(rng);
  const Latent z  = random_latent(rng);
  const Scalar a = 0.25f, b = std::sqrt(1.0f - 0.0625f);
  const Latent eps = consistent_noise(z, z0, a, b);
  for (int i = 0; i < z.values.rows(); ++i)
    for (int j = 0; j < z.values.cols(); ++j) {
      const double expect =
          (static_cast<double>(z.values(i, j)) - 0.25 * z0.values(i, j)) /
          static_cast<double>(b);
      CHECK(std::abs(eps.values(i, j) - expect) < 1e-5);
    }
  // Renoising with the consistent noise lands back on z.
  const Latent back = advance_source(z0, eps, a, b);
  CHECK(max_abs_diff(back.values, z.values) < 1e-5);

  CHECK_THROWS_AS(consistent_noise(z, z0, 1.0f, 0.0f), ScheduleError);
}

TEST_CASE("advance_source is the closed-form renoise") {
  Rng rng(53);
  const Latent z0  = random_latent(rng);
  const Latent eps = random_latent(rng);
  const Latent out = advance_source(z0, eps, 0.5f, 0.25f);
  for (int i = 0; i < out.values.rows(); ++i)
    for (int j = 0; j < out.values.cols(); ++j)
      CHECK(out.values(i, j) ==
            0.5f * z0.values(i, j) + 0.25f * eps.values(i, j));
}

TEST_CASE("advance_target with equal predictions reduces to advance_source") {
  Rng rng(54);
  const Latent z0   = random_latent(rng);
  const Latent pred = random_latent(rng);
  const Latent eps  = random_latent(rng);
  const Latent via_target =
      advance_target(z0, pred, pred, eps, 0.125f, 0.9921567f);
  const Latent via_source = advance_source(z0, eps, 0.125f, 0.9921567f);
  CHECK(same_bits(via_target.values, via_source.values));
}

TEST_CASE("prediction offsets scale with the next noise level") {
  Rng rng(55);
  const Latent z0   = random_latent(rng);
  const Latent pred = random_latent(rng);
  const Latent eps  = random_latent(rng);
  Latent shifted    = pred;
  shifted.values.array() += 0.75f;
  const NoiseSchedule s = NoiseSchedule::pow2(8);
  for (int n = 0; n < 8; ++n) {
    const Latent a = advance_source(z0, eps, s.sqrt_alpha[n + 1],
                                    s.sqrt_one_minus[n + 1]);
    const Latent b = advance_target(z0, pred, shifted, eps,
                                    s.sqrt_alpha[n + 1],
                                    s.sqrt_one_minus[n + 1]);
    Matrix diff = b.values - a.values;
    const Matrix expect =
        Matrix::Constant(diff.rows(), diff.cols(), s.sqrt_alpha[n + 1] * 0.75f);
    CHECK(max_abs_diff(diff, expect) < 1e-5);
  }
}

// The source trajectory is a pure closed form of the clean latent and the
// recorded noise; the model prediction never enters it. Every point is
// reconstructable from outside, and the terminal point is the clean latent
// itself, with zero error.
TEST_CASE("source trajectory equals its closed form at every step") {
  const int N = 15;
  HalfBackend backend(2, 4, 4);
  Rng source_rng(56);
  Latent z0 = random_latent(source_rng);

  Rng rng(57);
  DualBranchState state = init_dual_branch(z0, NoiseSchedule::pow2(N), rng);
  Conditioning cond;

  std::vector<Latent> trajectory;
  for (int n = 0; n < N; ++n) {
    const Latent eps_fresh = rng.normal_latent(2, 4, 4);
    SourceStepResult res   = source_step(state, backend, cond, eps_fresh);
    state.z_src = res.z_next;
    state.z_tgt = res.z_next;
    state.fresh_noise.push_back(eps_fresh);
    state.step = n + 1;
    trajectory.push_back(state.z_src);
  }

  // Independent reconstruction from (z0, noise) alone.
  for (int n = 0; n < N; ++n) {
    const Latent expect =
        advance_source(z0, state.fresh_noise[n], state.schedule.sqrt_alpha[n + 1],
                       state.schedule.sqrt_one_minus[n + 1]);
    CHECK(max_abs_diff(trajectory[n].values, expect.values) == 0.0);
    CHECK(same_bits(trajectory[n].values, expect.values));
  }
  // The maintained clean latent never drifted.
  CHECK(same_bits(state.z0_src.values, z0.values));
  // Terminal level 1 recovers the clean latent exactly.
  CHECK(max_abs_diff(trajectory[N - 1].values, z0.values) == 0.0);
}

TEST_CASE("coupled branches stay bit-identical; decoupled noise breaks them") {
  const int N = 15;
  HalfBackend backend(2, 4, 4);
  Rng source_rng(58);
  Latent z0 = random_latent(source_rng);

  SUBCASE("shared fresh noise keeps the branches equal for all steps") {
    Rng rng(59);
    DualBranchState state = init_dual_branch(z0, NoiseSchedule::pow2(N), rng);
    Conditioning cond;
    for (int n = 0; n < N; ++n) {
      const Latent eps_fresh = rng.normal_latent(2, 4, 4);
      SourceStepResult src   = source_step(state, backend, cond, eps_fresh);
      const Latent tgt_next  = target_step(state, backend, cond, StepControls{},
                                           src.z0_pred, eps_fresh);
      CHECK(same_bits(src.z_next.values, tgt_next.values));
      state.z_src = src.z_next;
      state.z_tgt = tgt_next;
      state.step  = n + 1;
    }
  }

  SUBCASE("decoupled noise is a negative control") {
    Rng rng(59);
    Rng other(60);
    DualBranchState state = init_dual_branch(z0, NoiseSchedule::pow2(N), rng);
    Conditioning cond;
    bool diverged = false;
    for (int n = 0; n < N; ++n) {
      const Latent eps_fresh = rng.normal_latent(2, 4, 4);
      const Latent eps_other = other.normal_latent(2, 4, 4);
      SourceStepResult src   = source_step(state, backend, cond, eps_fresh);
      const Latent tgt_next  = target_step(state, backend, cond, StepControls{},
                                           src.z0_pred, eps_other);
      // The terminal step multiplies both noises by zero, so equality there
      // is expected; divergence must show up on every earlier step.
      if (n < N - 1 && !same_bits(src.z_next.values, tgt_next.values))
        diverged = true;
      state.z_src = src.z_next;
      state.z_tgt = tgt_next;
      state.step  = n + 1;
    }
    CHECK(diverged);
  }
}

TEST_CASE("background_blend copies background columns verbatim") {
  Rng rng(61);
  const Latent src = random_latent(rng, 3, 2, 4);
  const Latent tgt = random_latent(rng, 3, 2, 4);
  ArrayX background = ArrayX::Zero(8);
  background(1) = 1;
  background(4) = 1;
  background(7) = 1;
  const Latent out = background_blend(src, tgt, background);
  for (int p = 0; p < 8; ++p) {
    const auto& want = background(p) != 0 ? src : tgt;
    CHECK(same_bits(out.values.col(p), want.values.col(p)));
  }
  ArrayX wrong = ArrayX::Zero(5);
  CHECK_THROWS_AS(background_blend(src, tgt, wrong), ShapeError);
}

TEST_CASE("step functions reject exhausted or invalid states") {
  HalfBackend backend(2, 4, 4);
  Rng rng(62);
  DualBranchState state =
      init_dual_branch(random_latent(rng), NoiseSchedule::pow2(2), rng);
  state.step = 2;
  const Latent eps = random_latent(rng);
  Conditioning cond;
  CHECK_THROWS_AS(source_step(state, backend, cond, eps), ScheduleError);
  CHECK_THROWS_AS(target_step(state, backend, cond, StepControls{}, eps, eps),
                  ScheduleError);
}

TEST_CASE("a single-step run still ends on the clean latent") {
  HalfBackend backend(2, 4, 4);
  Rng source_rng(63);
  Latent z0 = random_latent(source_rng);
  Rng rng(64);
  DualBranchState state = init_dual_branch(z0, NoiseSchedule::pow2(1), rng);
  Conditioning cond;
  const Latent eps     = rng.normal_latent(2, 4, 4);
  SourceStepResult res = source_step(state, backend, cond, eps);
  CHECK(max_abs_diff(res.z_next.values, z0.values) == 0.0);
}

namespace {

struct MissProvider : MaskProvider {
  std::variant<RawMasks, FallbackSignal> acquire(
      const Image&, const std::vector<std::string>&) override {
    return FallbackSignal{"no region matched the prompt"};
  }
};

Image test_image() {
  Image img = Image::Zero(32, 32);
  for (int y = 6; y < 20; ++y)
    for (int x = 8; x < 24; ++x) img(y, x) = 0.55f;
  return img;
}

EditRequest toy_request() {
  EditRequest req;
  req.image = test_image();
  req.pairs = {{1, "a wolf", "a red-colored wolf", std::nullopt}};
  return req;
}

}  // namespace

TEST_CASE("run_edit validates its request") {
  ToyBackend backend = ToyBackend::from_golden();
  MockEncoder encoder;
  MissProvider provider;
  EditRequest req = toy_request();
  req.config.steps = 0;
  CHECK_THROWS_AS(run_edit(req, backend, encoder, provider), RangeError);
  req = toy_request();
  req.image = Image();
  CHECK_THROWS_AS(run_edit(req, backend, encoder, provider), ValidationError);
}

TEST_CASE("segmentation miss falls back to an unmasked edit") {
  ToyBackend backend = ToyBackend::from_golden();
  MockEncoder encoder;
  MissProvider provider;
  const EditResult result = run_edit(toy_request(), backend, encoder, provider);
  CHECK(result.fallback);
  CHECK(result.fallback_reason == "no region matched the prompt");
  CHECK(result.image.rows() == 32);
  CHECK(result.image.cols() == 32);
  CHECK(static_cast<int>(result.trace.size()) == 15);
}

TEST_CASE("masked run_edit blends the background and reports its schedule") {
  ToyBackend backend = ToyBackend::from_golden();
  MockEncoder encoder;

  test_util::TempDir dir("sampler_masks");
  MaskImage m = MaskImage::Zero(32, 32);
  m.block(4, 6, 14, 18).setConstant(1);
  save_mask_png(dir.file("obj1.png"), m);
  FileMaskProvider provider(
      find_mask_files(dir.path().string(), "image", 1));

  EditRequest req = toy_request();
  req.config.edit_type = "material";
  req.config.seed      = 12;
  const EditResult result = run_edit(req, backend, encoder, provider);

  CHECK_FALSE(result.fallback);
  CHECK(result.schedule_fraction == 0.6);
  CHECK(result.injected_steps == 9);  // ceil(0.6 * 15)
  int injected = 0;
  for (const auto& t : result.trace) injected += t.injected ? 1 : 0;
  CHECK(injected == 9);

  // Criterion: background latent pixels equal the source clean latent.
  const Latent z0 = backend.encode_image(req.image);
  // Rebuild the mask pyramid exactly as the pipeline does.
  RawMasks raw;
  raw.masks = {m};
  const MaskSet set = build_mask_set(raw, req.config.dilation_ratio,
                                     backend.attention_resolutions());
  const ArrayX bg = flatten_mask(set.at({16, 16}).background);
  REQUIRE(bg.size() == result.z_tgt_final.values.cols());
  bool any_background = false, any_object_changed = false;
  for (int p = 0; p < bg.size(); ++p) {
    if (bg(p) != 0) {
      any_background = true;
      CHECK(max_abs_diff(result.z_tgt_final.values.col(p),
                         z0.values.col(p)) == 0.0);
    } else if (max_abs_diff(result.z_tgt_final.values.col(p),
                            z0.values.col(p)) != 0.0) {
      any_object_changed = true;
    }
  }
  CHECK(any_background);
  CHECK(any_object_changed);

  // Determinism: an identical request reproduces identical bits.
  const EditResult again = run_edit(req, backend, encoder, provider);
  CHECK(same_bits(result.z_tgt_final.values, again.z_tgt_final.values));
  CHECK(exact_equal(result.image, again.image));
}
