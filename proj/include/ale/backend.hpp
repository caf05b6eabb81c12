#pragma once

#include <memory>
#include <string>
#include <vector>

#include "ale/attention.hpp"
#include "ale/encoder.hpp"
#include "ale/mask.hpp"
#include "ale/types.hpp"

namespace ale {

struct LatentShape {
  int channels = 0;
  int height   = 0;
  int width    = 0;
};

// Self-attention tensors captured during one forward pass, keyed by layer.
struct CapturedQK {
  std::vector<std::pair<std::string, AttentionQK>> layers;

  const AttentionQK* find(const std::string& layer) const {
    for (const auto& [name, qk] : layers)
      if (name == layer) return &qk;
    return nullptr;
  }
};

// Prompt conditioning for one forward pass. `keys` drives the cross-attention
// map and is always the plain (unspliced) base encoding. When both
// `object_values` and `masks` are set the cross-attention readout is blended
// per region; otherwise `base_value` conditions every pixel.
struct Conditioning {
  const EmbeddingMatrix* keys       = nullptr;
  const EmbeddingMatrix* base_value = nullptr;
  const std::vector<EmbeddingMatrix>* object_values = nullptr;
  const MaskSet* masks = nullptr;
};

struct StepControls {
  // Self-attention Q/K recorded from the source branch; null runs the
  // layer's own projections.
  const CapturedQK* inject = nullptr;
};

struct ForwardResult {
  Latent z0_pred;
  CapturedQK captured;
};

// Denoising model contract. Implementations must be deterministic and
// side-effect free: same inputs, same prediction, bit for bit.
class Backend {
 public:
  virtual ~Backend() = default;

  virtual LatentShape latent_shape() const                  = 0;
  virtual std::vector<Resolution> attention_resolutions() const = 0;

  virtual Latent encode_image(const Image& image) const = 0;
  virtual Image decode_latent(const Latent& z) const    = 0;

  // Consistency-style prediction of the clean latent from z at `step`.
  virtual ForwardResult forward(const Latent& z, int step,
                                const Conditioning& cond,
                                const StepControls& controls) const = 0;
};

}  // namespace ale
