#include "ale/toy_backend.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <memory>

#include "ale/errors.hpp"
#include "ale/rng.hpp"

namespace ale {
namespace {

constexpr char kMagic[8] = {'A', 'L', 'E', 'T', 'O', 'Y', 'P', '1'};
constexpr std::uint32_t kVersion = 1;

Matrix random_matrix(Rng& rng, int rows, int cols) {
  const Scalar scale = Scalar(1) / std::sqrt(static_cast<Scalar>(rows));
  Matrix m(rows, cols);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j)
      m(i, j) = static_cast<Scalar>(rng.next_normal()) * scale;
  return m;
}

ToyParams::Block random_block(Rng& rng, const ToyBackendConfig& c) {
  ToyParams::Block b;
  b.wq  = random_matrix(rng, c.channels, c.attn_dim);
  b.wk  = random_matrix(rng, c.channels, c.attn_dim);
  b.wv  = random_matrix(rng, c.channels, c.attn_dim);
  b.wo  = random_matrix(rng, c.attn_dim, c.channels);
  b.wcq = random_matrix(rng, c.channels, c.attn_dim);
  b.wck = random_matrix(rng, c.embed_dim, c.attn_dim);
  b.wcv = random_matrix(rng, c.embed_dim, c.value_dim);
  b.wco = random_matrix(rng, c.value_dim, c.channels);
  return b;
}

void write_u32(std::FILE* f, std::uint32_t v) {
  unsigned char b[4];
  for (int i = 0; i < 4; ++i) b[i] = (v >> (8 * i)) & 0xff;
  if (std::fwrite(b, 1, 4, f) != 4) throw IoError("short write");
}

void write_u64(std::FILE* f, std::uint64_t v) {
  unsigned char b[8];
  for (int i = 0; i < 8; ++i) b[i] = (v >> (8 * i)) & 0xff;
  if (std::fwrite(b, 1, 8, f) != 8) throw IoError("short write");
}

std::uint32_t read_u32(std::FILE* f) {
  unsigned char b[4];
  if (std::fread(b, 1, 4, f) != 4) throw IoError("truncated parameter file");
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b[i]) << (8 * i);
  return v;
}

std::uint64_t read_u64(std::FILE* f) {
  unsigned char b[8];
  if (std::fread(b, 1, 8, f) != 8) throw IoError("truncated parameter file");
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
  return v;
}

void write_matrix(std::FILE* f, const Matrix& m) {
  for (int i = 0; i < m.rows(); ++i)
    for (int j = 0; j < m.cols(); ++j) {
      static_assert(sizeof(Scalar) == 4);
      std::uint32_t bits;
      const Scalar v = m(i, j);
      std::memcpy(&bits, &v, 4);
      write_u32(f, bits);
    }
}

Matrix read_matrix(std::FILE* f, int rows, int cols) {
  Matrix m(rows, cols);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) {
      const std::uint32_t bits = read_u32(f);
      Scalar v;
      std::memcpy(&v, &bits, 4);
      m(i, j) = v;
    }
  return m;
}

std::string default_golden_path() {
  if (const char* env = std::getenv("ALE_TOY_PARAMS"); env && *env)
    return env;
#ifdef ALE_SOURCE_DATA_DIR
  return std::string(ALE_SOURCE_DATA_DIR) + "/toy_backend_params.bin";
#else
  return "data/toy_backend_params.bin";
#endif
}

ArrayX flat_mask_at(const MaskSet& masks, const Resolution& res, int index) {
  const MaskLevel& level = masks.at(res);
  return index < 0 ? flatten_mask(level.background)
                   : flatten_mask(level.objects[index]);
}

}  // namespace

ToyBackend::ToyBackend(ToyBackendConfig config, ToyParams params)
    : config_(config), params_(std::move(params)) {
  if (config_.height % 2 || config_.width % 2)
    throw BackendError("toy latent sides must be even");
}

ToyParams ToyBackend::generate_params(const ToyBackendConfig& c) {
  Rng rng(c.seed);
  ToyParams p;
  p.full            = random_block(rng, c);
  p.half            = random_block(rng, c);
  p.head_cross_full = random_matrix(rng, c.channels, c.channels);
  p.head_cross_half = random_matrix(rng, c.channels, c.channels);
  p.head_self       = random_matrix(rng, c.channels, c.channels);
  p.time_embed      = random_matrix(rng, c.channels, 1);
  p.bias            = random_matrix(rng, c.channels, 1);
  return p;
}

void ToyBackend::save(const std::string& path, const ToyBackendConfig& c,
                      const ToyParams& p) {
  std::unique_ptr<std::FILE, int (*)(std::FILE*)> f(
      std::fopen(path.c_str(), "wb"), &std::fclose);
  if (!f) throw IoError("cannot write " + path);
  if (std::fwrite(kMagic, 1, 8, f.get()) != 8) throw IoError("short write");
  write_u32(f.get(), kVersion);
  write_u32(f.get(), static_cast<std::uint32_t>(c.channels));
  write_u32(f.get(), static_cast<std::uint32_t>(c.height));
  write_u32(f.get(), static_cast<std::uint32_t>(c.width));
  write_u32(f.get(), static_cast<std::uint32_t>(c.context_length));
  write_u32(f.get(), static_cast<std::uint32_t>(c.embed_dim));
  write_u32(f.get(), static_cast<std::uint32_t>(c.attn_dim));
  write_u32(f.get(), static_cast<std::uint32_t>(c.value_dim));
  write_u64(f.get(), c.seed);

  for (const auto* b : {&p.full, &p.half}) {
    write_matrix(f.get(), b->wq);
    write_matrix(f.get(), b->wk);
    write_matrix(f.get(), b->wv);
    write_matrix(f.get(), b->wo);
    write_matrix(f.get(), b->wcq);
    write_matrix(f.get(), b->wck);
    write_matrix(f.get(), b->wcv);
    write_matrix(f.get(), b->wco);
  }
  write_matrix(f.get(), p.head_cross_full);
  write_matrix(f.get(), p.head_cross_half);
  write_matrix(f.get(), p.head_self);
  write_matrix(f.get(), p.time_embed);
  write_matrix(f.get(), p.bias);
}

ToyBackend ToyBackend::load(const std::string& path) {
  std::unique_ptr<std::FILE, int (*)(std::FILE*)> f(
      std::fopen(path.c_str(), "rb"), &std::fclose);
  if (!f) throw IoError("cannot open toy parameter file " + path);
  char magic[8];
  if (std::fread(magic, 1, 8, f.get()) != 8 ||
      std::memcmp(magic, kMagic, 8) != 0)
    throw BackendError(path + " is not a toy parameter file");
  if (read_u32(f.get()) != kVersion)
    throw BackendError("unsupported toy parameter file version in " + path);

  ToyBackendConfig c;
  c.channels       = static_cast<int>(read_u32(f.get()));
  c.height         = static_cast<int>(read_u32(f.get()));
  c.width          = static_cast<int>(read_u32(f.get()));
  c.context_length = static_cast<int>(read_u32(f.get()));
  c.embed_dim      = static_cast<int>(read_u32(f.get()));
  c.attn_dim       = static_cast<int>(read_u32(f.get()));
  c.value_dim      = static_cast<int>(read_u32(f.get()));
  c.seed           = read_u64(f.get());

  ToyParams p;
  for (auto* b : {&p.full, &p.half}) {
    b->wq  = read_matrix(f.get(), c.channels, c.attn_dim);
    b->wk  = read_matrix(f.get(), c.channels, c.attn_dim);
    b->wv  = read_matrix(f.get(), c.channels, c.attn_dim);
    b->wo  = read_matrix(f.get(), c.attn_dim, c.channels);
    b->wcq = read_matrix(f.get(), c.channels, c.attn_dim);
    b->wck = read_matrix(f.get(), c.embed_dim, c.attn_dim);
    b->wcv = read_matrix(f.get(), c.embed_dim, c.value_dim);
    b->wco = read_matrix(f.get(), c.value_dim, c.channels);
  }
  p.head_cross_full = read_matrix(f.get(), c.channels, c.channels);
  p.head_cross_half = read_matrix(f.get(), c.channels, c.channels);
  p.head_self       = read_matrix(f.get(), c.channels, c.channels);
  p.time_embed      = read_matrix(f.get(), c.channels, 1);
  p.bias            = read_matrix(f.get(), c.channels, 1);
  return ToyBackend(c, std::move(p));
}

ToyBackend ToyBackend::from_golden(const std::string& path) {
  return load(path.empty() ? default_golden_path() : path);
}

LatentShape ToyBackend::latent_shape() const {
  return {config_.channels, config_.height, config_.width};
}

std::vector<Resolution> ToyBackend::attention_resolutions() const {
  return {{config_.height, config_.width},
          {config_.height / 2, config_.width / 2}};
}

Latent ToyBackend::encode_image(const Image& image) const {
  const int h = config_.height, w = config_.width;
  if (image.rows() != 2 * h || image.cols() != 2 * w)
    throw ValidationError("backend expects a " + std::to_string(2 * h) + "x" +
                          std::to_string(2 * w) + " image, got " +
                          std::to_string(image.rows()) + "x" +
                          std::to_string(image.cols()));
  if (config_.channels != 4)
    throw BackendError("space-to-depth codec needs 4 channels");

  // Space-to-depth: channel index encodes the sub-pixel, value range [-1, 1].
  Latent z = Latent::zero(config_.channels, h, w);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      for (int dy = 0; dy < 2; ++dy)
        for (int dx = 0; dx < 2; ++dx)
          z.values(2 * dy + dx, y * w + x) =
              Scalar(2) * image(2 * y + dy, 2 * x + dx) - Scalar(1);
  return z;
}

Image ToyBackend::decode_latent(const Latent& z) const {
  const int h = config_.height, w = config_.width;
  if (z.channels != config_.channels || z.height != h || z.width != w)
    throw ShapeError("latent does not match the backend shape");

  Image image(2 * h, 2 * w);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      for (int dy = 0; dy < 2; ++dy)
        for (int dx = 0; dx < 2; ++dx) {
          const Scalar v =
              (z.values(2 * dy + dx, y * w + x) + Scalar(1)) / Scalar(2);
          image(2 * y + dy, 2 * x + dx) =
              std::min(Scalar(1), std::max(Scalar(0), v));
        }
  return image;
}

ForwardResult ToyBackend::forward(const Latent& z, int step,
                                  const Conditioning& cond,
                                  const StepControls& controls) const {
  const int h = config_.height, w = config_.width, c = config_.channels;
  if (z.channels != c || z.height != h || z.width != w)
    throw ShapeError("latent does not match the backend shape");
  if (!cond.keys || !cond.base_value)
    throw BackendError("forward needs key and base value embeddings");
  if (cond.keys->dim() != config_.embed_dim ||
      cond.keys->context_length() != config_.context_length)
    throw ShapeError("key embedding does not match the backend contract");
  const bool masked = cond.object_values && cond.masks;
  if (masked && cond.object_values->size() !=
                    static_cast<std::size_t>(cond.masks->k))
    throw ShapeError("object value count does not match the mask set");

  const Scalar time = std::sin(Scalar(0.35) * static_cast<Scalar>(step + 1));

  // Tokens at full resolution and 2x2-average-pooled half resolution.
  Matrix x_full = z.values.transpose();  // P x c
  const int hh = h / 2, hw = w / 2;
  Matrix x_half(hh * hw, c);
  for (int y = 0; y < hh; ++y)
    for (int x = 0; x < hw; ++x) {
      const int p = y * hw + x;
      x_half.row(p) =
          Scalar(0.25) *
          (x_full.row((2 * y) * w + 2 * x) + x_full.row((2 * y) * w + 2 * x + 1) +
           x_full.row((2 * y + 1) * w + 2 * x) +
           x_full.row((2 * y + 1) * w + 2 * x + 1));
    }

  ForwardResult result;
  Matrix self_out_full, cross_out_full, cross_out_half;

  struct Stage {
    const ToyParams::Block* block;
    Matrix* tokens;
    Resolution res;
    std::string layer;
  };
  const Stage stages[2] = {
      {&params_.full, &x_full, {h, w}, "self_" + std::to_string(h) + "x" + std::to_string(w)},
      {&params_.half, &x_half, {hh, hw}, "self_" + std::to_string(hh) + "x" + std::to_string(hw)},
  };

  for (int s = 0; s < 2; ++s) {
    const Stage& st = stages[s];
    Matrix tokens = *st.tokens;
    tokens.rowwise() += (params_.time_embed * time).transpose();

    AttentionQK own;
    own.q = tokens * st.block->wq;
    own.k = tokens * st.block->wk;
    const Matrix v_self = tokens * st.block->wv;

    const AttentionQK* used = &own;
    if (controls.inject) {
      const AttentionQK* injected = controls.inject->find(st.layer);
      if (!injected)
        throw ShapeError("injected Q/K missing layer " + st.layer);
      if (injected->q.rows() != own.q.rows() ||
          injected->q.cols() != own.q.cols() ||
          injected->k.rows() != own.k.rows() ||
          injected->k.cols() != own.k.cols())
        throw ShapeError("injected Q/K shape mismatch at layer " + st.layer);
      used = injected;
    }
    result.captured.layers.push_back({st.layer, *used});

    const Matrix self_out =
        attention_map(used->q, used->k) * v_self * st.block->wo;
    const Matrix feat = tokens + self_out;

    const Matrix map =
        attention_map(feat * st.block->wcq, cond.keys->rows * st.block->wck);
    Matrix attended;
    if (masked) {
      AttentionContext ctx;
      ctx.map        = map;
      ctx.base_value = cond.base_value->rows * st.block->wcv;
      for (const auto& e : *cond.object_values)
        ctx.object_values.push_back(e.rows * st.block->wcv);
      for (int i = 0; i < cond.masks->k; ++i)
        ctx.object_masks.push_back(flat_mask_at(*cond.masks, st.res, i));
      ctx.background_mask = flat_mask_at(*cond.masks, st.res, -1);
      ctx.layer      = st.layer;
      ctx.resolution = st.res;
      attended = rgb_cam_blend(ctx);
    } else {
      attended = map * (cond.base_value->rows * st.block->wcv);
    }
    const Matrix cross_out = attended * st.block->wco;

    if (s == 0) {
      self_out_full  = self_out;
      cross_out_full = cross_out;
    } else {
      cross_out_half = cross_out;
    }
  }

  // Pixelwise head: embeddings influence a pixel only through the
  // cross-attention rows that own it (directly at full resolution, through
  // its parent cell at half resolution).
  Latent out = z;
  out.values = z.values + params_.head_cross_full * cross_out_full.transpose() +
               params_.head_self * self_out_full.transpose();
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      out.values.col(y * w + x) +=
          params_.head_cross_half *
          cross_out_half.row((y / 2) * hw + (x / 2)).transpose();
  out.values.colwise() += params_.bias;
  result.z0_pred = std::move(out);
  return result;
}

}  // namespace ale
