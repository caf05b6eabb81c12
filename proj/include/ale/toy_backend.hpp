#pragma once

#include <cstdint>
#include <string>

#include "ale/backend.hpp"

namespace ale {

struct ToyBackendConfig {
  int channels       = 4;
  int height         = 16;
  int width          = 16;
  int context_length = 77;
  int embed_dim      = 32;
  int attn_dim       = 16;
  int value_dim      = 16;
  std::uint64_t seed = 2024;
};

// Fixed parameters of the toy denoiser: one self-attention and one
// cross-attention block at each resolution (full and half), combined by a
// pixelwise linear head. Generated once from the config seed and stored as a
// golden file so every platform loads identical bits.
struct ToyParams {
  struct Block {
    Matrix wq, wk, wv, wo;      // self-attention projections
    Matrix wcq, wck, wcv, wco;  // cross-attention projections
  };
  Block full;  // latent resolution
  Block half;  // 2x2-pooled resolution
  Matrix head_cross_full, head_cross_half, head_self;  // c x c
  Vector time_embed, bias;                             // c
};

// Deterministic small denoiser over a 2x-downscaled grayscale image space.
// encode/decode is an exact space-to-depth bijection, so a clean latent
// round-trips to the source image bit for bit.
class ToyBackend : public Backend {
 public:
  ToyBackend(ToyBackendConfig config, ToyParams params);

  static ToyParams generate_params(const ToyBackendConfig& config);
  static ToyBackend load(const std::string& path);
  static void save(const std::string& path, const ToyBackendConfig& config,
                   const ToyParams& params);
  // Loads the golden file; `path` empty resolves the ALE_TOY_PARAMS
  // environment variable, then the source-tree data directory.
  static ToyBackend from_golden(const std::string& path = "");

  LatentShape latent_shape() const override;
  std::vector<Resolution> attention_resolutions() const override;
  Latent encode_image(const Image& image) const override;
  Image decode_latent(const Latent& z) const override;
  ForwardResult forward(const Latent& z, int step, const Conditioning& cond,
                        const StepControls& controls) const override;

  const ToyBackendConfig& config() const { return config_; }
  const ToyParams& params() const { return params_; }

 private:
  ToyBackendConfig config_;
  ToyParams params_;
};

}  // namespace ale
