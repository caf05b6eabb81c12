#pragma once

#include <string>
#include <vector>

#include "ale/types.hpp"

namespace ale {

// Query/key pair of one self-attention layer.
struct AttentionQK {
  Matrix q;  // P x d
  Matrix k;  // P x d
};

// Inputs to one masked cross-attention blend at one layer and resolution.
// `map` is the P x L row-stochastic attention map computed from the plain
// base-prompt keys; `object_values` and `base_value` are the projected value
// matrices; the flattened masks must partition the P pixels.
struct AttentionContext {
  Matrix map;                         // P x L
  std::vector<Matrix> object_values;  // K entries, L x d_v
  Matrix base_value;                  // L x d_v
  std::vector<ArrayX> object_masks;   // K entries, length P, entries 0/1
  ArrayX background_mask;             // length P
  std::string layer;
  Resolution resolution;
};

// A = sum_i (map .* m_i) V_i + (map .* m_back) V_base, masks broadcast across
// the token axis. Each output row is therefore the attention readout of
// exactly one value matrix: the one owning that pixel.
Matrix rgb_cam_blend(const AttentionContext& ctx);

// Row-softmax of Q K^T / sqrt(d). Shared by the toy backend and tests.
Matrix attention_map(const Matrix& q, const Matrix& k);

// Self-attention injection window: the first ceil(fraction * total) steps,
// counted from the noisiest step 0.
struct InjectionSchedule {
  double fraction  = 0.0;
  int total_steps  = 0;
  int active_count = 0;

  bool active(int step) const { return step >= 0 && step < active_count; }
  std::vector<int> active_steps() const;
};

InjectionSchedule resolve_schedule(double fraction, int total_steps);

// Picks the source pair while the schedule is active, the target's own pair
// otherwise. Shape agreement is enforced only when injection happens.
const AttentionQK& inject_self_attention(const AttentionQK& source,
                                         const AttentionQK& target, int step,
                                         const InjectionSchedule& schedule);

}  // namespace ale
