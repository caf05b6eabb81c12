#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "ale/backend.hpp"
#include "ale/prompt.hpp"
#include "ale/rng.hpp"
#include "ale/schedule.hpp"
#include "ale/types.hpp"

namespace ale {

struct EditConfig {
  int steps             = 15;
  double dilation_ratio = 0.01;
  EosStrategy eos_strategy = EosStrategy::Ore;
  std::string edit_type    = "color";
  // Explicit injection fraction; unset falls back to the edit type default.
  std::optional<double> schedule_fraction;
  std::uint64_t seed = 0;
};

// Default self-attention injection fraction per edit type.
double default_schedule_fraction(const std::string& edit_type);
double resolve_schedule_fraction(const EditConfig& config);

struct EditRequest {
  Image image;
  std::vector<ObjectPromptPair> pairs;
  EditConfig config;
};

// Both branches of one run. The source branch keeps its clean latent
// explicitly; that closed-form link is what makes the inversion virtual.
struct DualBranchState {
  Latent z_src;
  Latent z_tgt;
  Latent z0_src;
  int step = 0;  // next step to execute
  NoiseSchedule schedule;
  std::vector<Latent> fresh_noise;  // recorded per executed step
};

DualBranchState init_dual_branch(Latent z0_src, NoiseSchedule schedule,
                                 Rng& rng);

// eps = (z - sqrt(ab) z0) / sqrt(1 - ab); the noise that explains z exactly.
Latent consistent_noise(const Latent& z, const Latent& z0, Scalar sqrt_alpha,
                        Scalar sqrt_one_minus);

// Next source latent, synthesized directly from the clean latent:
// sqrt(ab') z0 + sqrt(1 - ab') eps.
Latent advance_source(const Latent& z0_src, const Latent& eps,
                      Scalar sqrt_alpha_next, Scalar sqrt_one_minus_next);

// Next target latent: the source's clean latent shifted by the prediction
// difference, renoised with the same fresh draw the source consumed.
Latent advance_target(const Latent& z0_src, const Latent& z0_pred_src,
                      const Latent& z0_pred_tgt, const Latent& eps,
                      Scalar sqrt_alpha_next, Scalar sqrt_one_minus_next);

// Background pixels copy the source latent verbatim; edited regions keep the
// target. Exact copy, no arithmetic, so background bits cannot drift.
Latent background_blend(const Latent& z_src, const Latent& z_tgt,
                        const ArrayX& background_mask);

struct SourceStepResult {
  Latent z_next;
  Latent eps_consistent;
  Latent z0_pred;
  CapturedQK captured;
};

// One source-branch step: consistency prediction, closed-form noise, fresh
// renoise. Throws ScheduleError when the entering level has alpha_bar = 1
// before the terminal step.
SourceStepResult source_step(const DualBranchState& state,
                             const Backend& backend, const Conditioning& cond,
                             const Latent& eps_fresh);

Latent target_step(const DualBranchState& state, const Backend& backend,
                   const Conditioning& cond, const StepControls& controls,
                   const Latent& z0_pred_src, const Latent& eps_fresh,
                   ForwardResult* out_forward = nullptr);

struct StepTrace {
  int step = 0;
  bool injected = false;
  Scalar alpha_bar_next = 0;
};

struct EditResult {
  Image image;
  Latent z_tgt_final;
  Latent z_src_final;
  bool fallback = false;
  std::string fallback_reason;
  double schedule_fraction = 0.0;
  int injected_steps = 0;
  std::vector<StepTrace> trace;
};

// Full pipeline: prompts, masks (or fallback), dual-branch loop with
// injection and per-step background blending, final decode.
EditResult run_edit(const EditRequest& request, const Backend& backend,
                    const TextEncoder& encoder, MaskProvider& masks);

}  // namespace ale
