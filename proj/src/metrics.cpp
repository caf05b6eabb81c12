#include "ale/metrics.hpp"

#include <json.hpp>

#include <cmath>

#include "ale/errors.hpp"

namespace ale {
namespace {

using nlohmann::json;

void check_mask_shapes(const Image& image,
                       const std::vector<MaskImage>& masks) {
  for (const auto& m : masks)
    if (m.rows() != image.rows() || m.cols() != image.cols())
      throw MaskShapeError("metric mask does not match the image size");
}

json opt_to_json(const std::optional<double>& v) {
  return v ? json(*v) : json(nullptr);
}

std::optional<double> opt_from_json(const json& j) {
  if (j.is_null()) return std::nullopt;
  return j.get<double>();
}

}  // namespace

Image apply_mask(const Image& image, const MaskImage& mask) {
  if (mask.rows() != image.rows() || mask.cols() != image.cols())
    throw MaskShapeError("mask does not match the image size");
  Image out = Image::Zero(image.rows(), image.cols());
  for (Eigen::Index y = 0; y < image.rows(); ++y)
    for (Eigen::Index x = 0; x < image.cols(); ++x)
      if (mask(y, x)) out(y, x) = image(y, x);
  return out;
}

MaskImage union_mask(const std::vector<MaskImage>& masks) {
  if (masks.empty()) throw MaskShapeError("union of zero masks");
  MaskImage out = MaskImage::Zero(masks[0].rows(), masks[0].cols());
  for (const auto& m : masks) {
    if (m.rows() != out.rows() || m.cols() != out.cols())
      throw MaskShapeError("mask size mismatch in union");
    for (Eigen::Index y = 0; y < m.rows(); ++y)
      for (Eigen::Index x = 0; x < m.cols(); ++x)
        if (m(y, x)) out(y, x) = 1;
  }
  return out;
}

MaskImage complement_mask(const MaskImage& mask) {
  MaskImage out(mask.rows(), mask.cols());
  for (Eigen::Index y = 0; y < mask.rows(); ++y)
    for (Eigen::Index x = 0; x < mask.cols(); ++x)
      out(y, x) = mask(y, x) ? 0 : 1;
  return out;
}

std::optional<double> tels(const Image& edited,
                           const std::vector<MaskImage>& object_masks,
                           const std::vector<std::string>& target_prompts,
                           const SimilarityScorer& scorer) {
  if (object_masks.size() != target_prompts.size() || object_masks.empty())
    throw ValidationError("tels needs one mask per target prompt");
  check_mask_shapes(edited, object_masks);

  const MaskImage background = complement_mask(union_mask(object_masks));
  if ((background != 0).count() == 0) return std::nullopt;

  const Image region = apply_mask(edited, background);
  double sum = 0.0;
  for (const auto& prompt : target_prompts) sum += scorer.score(region, prompt);
  return sum / static_cast<double>(target_prompts.size());
}

std::optional<double> tils(const Image& edited,
                           const std::vector<MaskImage>& object_masks,
                           const std::vector<std::string>& target_prompts,
                           const SimilarityScorer& scorer) {
  const std::size_t k = object_masks.size();
  if (k != target_prompts.size() || k == 0)
    throw ValidationError("tils needs one mask per target prompt");
  check_mask_shapes(edited, object_masks);
  if (k == 1) return std::nullopt;

  double sum = 0.0;
  for (std::size_t j = 0; j < k; ++j) {
    const Image region = apply_mask(edited, object_masks[j]);
    for (std::size_t i = 0; i < k; ++i) {
      if (i == j) continue;
      sum += scorer.score(region, target_prompts[i]);
    }
  }
  return sum / static_cast<double>(k * (k - 1));
}

double editing_performance(const Image& edited,
                           const std::string& joined_target_prompt,
                           const SimilarityScorer& scorer) {
  return scorer.score(edited, joined_target_prompt);
}

BackgroundPreservation background_preservation(const Image& edited,
                                               const Image& source,
                                               const MaskImage& background) {
  if (edited.rows() != source.rows() || edited.cols() != source.cols())
    throw ShapeError("edited and source image sizes differ");
  if (background.rows() != edited.rows() || background.cols() != edited.cols())
    throw MaskShapeError("background mask does not match the image size");

  const int h = static_cast<int>(edited.rows());
  const int w = static_cast<int>(edited.cols());

  std::int64_t count = 0;
  double sq_sum = 0.0;
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      if (!background(y, x)) continue;
      const double d = static_cast<double>(edited(y, x)) - source(y, x);
      sq_sum += d * d;
      ++count;
    }
  if (count == 0) throw EmptyBackground("background mask has no pixels");

  BackgroundPreservation out;
  out.mse  = sq_sum / static_cast<double>(count);
  out.psnr = out.mse == 0.0 ? 99.0
                            : std::min(99.0, 10.0 * std::log10(1.0 / out.mse));

  // 11x11 Gaussian window, sigma 1.5, renormalized over background support.
  constexpr int kRadius = 5;
  constexpr double kC1  = 0.01 * 0.01;
  constexpr double kC2  = 0.03 * 0.03;
  double gauss[2 * kRadius + 1][2 * kRadius + 1];
  for (int dy = -kRadius; dy <= kRadius; ++dy)
    for (int dx = -kRadius; dx <= kRadius; ++dx)
      gauss[dy + kRadius][dx + kRadius] =
          std::exp(-(dy * dy + dx * dx) / (2.0 * 1.5 * 1.5));

  double ssim_sum = 0.0;
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      if (!background(y, x)) continue;
      double wsum = 0.0, mx = 0.0, my = 0.0;
      for (int dy = -kRadius; dy <= kRadius; ++dy)
        for (int dx = -kRadius; dx <= kRadius; ++dx) {
          const int yy = y + dy, xx = x + dx;
          if (yy < 0 || yy >= h || xx < 0 || xx >= w || !background(yy, xx))
            continue;
          const double g = gauss[dy + kRadius][dx + kRadius];
          wsum += g;
          mx += g * edited(yy, xx);
          my += g * source(yy, xx);
        }
      mx /= wsum;  // wsum > 0: the center pixel itself is in the background
      my /= wsum;
      double vx = 0.0, vy = 0.0, cov = 0.0;
      for (int dy = -kRadius; dy <= kRadius; ++dy)
        for (int dx = -kRadius; dx <= kRadius; ++dx) {
          const int yy = y + dy, xx = x + dx;
          if (yy < 0 || yy >= h || xx < 0 || xx >= w || !background(yy, xx))
            continue;
          const double g  = gauss[dy + kRadius][dx + kRadius] / wsum;
          const double ex = edited(yy, xx) - mx;
          const double ey = source(yy, xx) - my;
          vx += g * ex * ex;
          vy += g * ey * ey;
          cov += g * ex * ey;
        }
      ssim_sum += ((2.0 * mx * my + kC1) * (2.0 * cov + kC2)) /
                  ((mx * mx + my * my + kC1) * (vx + vy + kC2));
    }
  out.ssim = ssim_sum / static_cast<double>(count);
  return out;
}

LeakageReport compute_leakage_report(
    const Image& edited, const Image& source,
    const std::vector<MaskImage>& object_masks,
    const std::vector<std::string>& target_prompts,
    const std::string& joined_target_prompt, const SimilarityScorer& scorer,
    const MetricAdapters& adapters) {
  LeakageReport r;
  r.k    = static_cast<int>(object_masks.size());
  r.tels = tels(edited, object_masks, target_prompts, scorer);
  r.tils = tils(edited, object_masks, target_prompts, scorer);
  r.editing_performance =
      editing_performance(edited, joined_target_prompt, scorer);

  const MaskImage background = complement_mask(union_mask(object_masks));
  const BackgroundPreservation bp =
      background_preservation(edited, source, background);
  r.psnr = bp.psnr;
  r.ssim = bp.ssim;
  r.mse  = bp.mse;

  if (adapters.lpips) r.lpips = adapters.lpips(edited, source);
  if (adapters.structure_distance)
    r.structure_distance = adapters.structure_distance(edited, source);
  return r;
}

std::string report_to_json(const LeakageReport& r) {
  json j;
  j["scenario_id"]         = r.scenario_id;
  j["image_id"]            = r.image_id;
  j["edit_type"]           = r.edit_type;
  j["k"]                   = r.k;
  j["seed"]                = r.seed;
  j["tels"]                = opt_to_json(r.tels);
  j["tils"]                = opt_to_json(r.tils);
  j["editing_performance"] = r.editing_performance;
  j["psnr"]                = r.psnr;
  j["ssim"]                = r.ssim;
  j["mse"]                 = r.mse;
  j["lpips"]               = opt_to_json(r.lpips);
  j["structure_distance"]  = opt_to_json(r.structure_distance);
  j["fallback"]            = r.fallback;
  j["error"]               = r.error;
  return j.dump(2) + "\n";
}

LeakageReport report_from_json(const std::string& json_text) {
  const json j = json::parse(json_text);
  LeakageReport r;
  r.scenario_id         = j.at("scenario_id").get<std::string>();
  r.image_id            = j.at("image_id").get<std::string>();
  r.edit_type           = j.at("edit_type").get<std::string>();
  r.k                   = j.at("k").get<int>();
  r.seed                = j.at("seed").get<std::uint64_t>();
  r.tels                = opt_from_json(j.at("tels"));
  r.tils                = opt_from_json(j.at("tils"));
  r.editing_performance = j.at("editing_performance").get<double>();
  r.psnr                = j.at("psnr").get<double>();
  r.ssim                = j.at("ssim").get<double>();
  r.mse                 = j.at("mse").get<double>();
  r.lpips               = opt_from_json(j.at("lpips"));
  r.structure_distance  = opt_from_json(j.at("structure_distance"));
  r.fallback            = j.at("fallback").get<bool>();
  r.error               = j.at("error").get<std::string>();
  return r;
}

}  // namespace ale
