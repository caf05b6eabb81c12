#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "ale/scorer.hpp"
#include "ale/types.hpp"

namespace ale {

// Zeroes every pixel outside the mask. Scorers see exact zeros there.
Image apply_mask(const Image& image, const MaskImage& mask);

MaskImage union_mask(const std::vector<MaskImage>& masks);
MaskImage complement_mask(const MaskImage& mask);

// Target-exterior leakage: mean over target prompts of the scorer response
// on the background (everything outside the union of object masks). Absent
// when no background pixel exists.
std::optional<double> tels(const Image& edited,
                           const std::vector<MaskImage>& object_masks,
                           const std::vector<std::string>& target_prompts,
                           const SimilarityScorer& scorer);

// Target-interior leakage: mean over ordered pairs i != j of the scorer
// response for prompt i on object j's region. Absent for a single object.
std::optional<double> tils(const Image& edited,
                           const std::vector<MaskImage>& object_masks,
                           const std::vector<std::string>& target_prompts,
                           const SimilarityScorer& scorer);

double editing_performance(const Image& edited,
                           const std::string& joined_target_prompt,
                           const SimilarityScorer& scorer);

struct BackgroundPreservation {
  double psnr = 0.0;  // capped at 99 when the background is identical
  double ssim = 0.0;
  double mse  = 0.0;
};

// PSNR / SSIM / MSE over background pixels only. SSIM uses an 11x11 Gaussian
// window (sigma 1.5) with weights renormalized over the background support.
// Throws EmptyBackground when the mask has no pixel set.
BackgroundPreservation background_preservation(const Image& edited,
                                               const Image& source,
                                               const MaskImage& background);

// Optional full-reference metrics an integrator can plug in.
struct MetricAdapters {
  std::function<double(const Image& edited, const Image& source)> lpips;
  std::function<double(const Image& edited, const Image& source)>
      structure_distance;
};

struct LeakageReport {
  std::string scenario_id;
  std::string image_id;
  std::string edit_type;
  int k = 0;
  std::uint64_t seed = 0;
  std::optional<double> tels;
  std::optional<double> tils;
  double editing_performance = 0.0;
  double psnr = 0.0;
  double ssim = 0.0;
  double mse  = 0.0;
  std::optional<double> lpips;
  std::optional<double> structure_distance;
  bool fallback = false;
  std::string error;  // empty on success
};

LeakageReport compute_leakage_report(
    const Image& edited, const Image& source,
    const std::vector<MaskImage>& object_masks,
    const std::vector<std::string>& target_prompts,
    const std::string& joined_target_prompt, const SimilarityScorer& scorer,
    const MetricAdapters& adapters = {});

std::string report_to_json(const LeakageReport& report);
LeakageReport report_from_json(const std::string& json_text);

}  // namespace ale
