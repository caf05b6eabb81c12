#pragma once

#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "ale/types.hpp"

namespace ale {

enum class MaskProvenance { File, Segmenter };

// Raised instead of an error when segmentation misses: the edit proceeds
// with cross-attention masking and background blending disabled.
struct FallbackSignal {
  std::string reason;
};

// Disjoint object masks plus the background complement at one resolution.
struct MaskLevel {
  std::vector<MaskImage> objects;
  MaskImage background;
};

// Object masks and their multi-resolution pyramid. Every level partitions
// its pixel grid: object masks are pairwise disjoint and together with the
// background cover every pixel exactly once.
struct MaskSet {
  int k = 0;
  MaskLevel full;  // image resolution, after dilation and disjointification
  std::map<Resolution, MaskLevel> pyramid;
  int dilation_radius_px = 0;
  MaskProvenance provenance = MaskProvenance::File;
  std::vector<double> confidences;  // empty for file masks

  Resolution full_resolution() const {
    return {static_cast<int>(full.background.rows()),
            static_cast<int>(full.background.cols())};
  }
  // Level lookup; the full-resolution level answers its own size.
  const MaskLevel& at(const Resolution& res) const;
};

// Undilated masks as they came from a provider.
struct RawMasks {
  std::vector<MaskImage> masks;
  std::vector<double> confidences;  // empty when the source has none
  MaskProvenance provenance = MaskProvenance::File;
};

class MaskProvider {
 public:
  virtual ~MaskProvider() = default;
  // phrases[i] is the source prompt of object i+1.
  virtual std::variant<RawMasks, FallbackSignal> acquire(
      const Image& image, const std::vector<std::string>& phrases) = 0;
};

// Reads one PNG per object, in index order. Masks must match the image size.
class FileMaskProvider : public MaskProvider {
 public:
  explicit FileMaskProvider(std::vector<std::string> paths);
  std::variant<RawMasks, FallbackSignal> acquire(
      const Image& image, const std::vector<std::string>& phrases) override;

 private:
  std::vector<std::string> paths_;
};

// Resolves `<stem>_obj<i>.png` (falling back to `obj<i>.png`) inside `dir`
// for i = 1..k. Throws IoError when a file is missing.
std::vector<std::string> find_mask_files(const std::string& dir,
                                         const std::string& stem, int k);

// radius = floor(ratio * min(H, W)); ratio 0.01 on a 768-pixel side gives 7.
int dilation_radius(double ratio, int height, int width);

// Binary dilation with a (2r+1)^2 square element, clipped at the borders.
MaskImage dilate_mask(const MaskImage& mask, int radius);

// Overlapping pixels go to the mask with the higher confidence; ties and
// missing confidences go to the lower object index.
std::vector<MaskImage> disjointify(const std::vector<MaskImage>& masks,
                                   const std::vector<double>& confidences);

MaskImage build_background(const std::vector<MaskImage>& objects, int height,
                           int width);

// Area-average box filter to the target grid, then threshold >= 0.5.
MaskImage downsample_mask(const MaskImage& mask, const Resolution& res);

bool is_partition(const MaskLevel& level);

// Dilates, disjointifies, derives the background and builds the pyramid for
// every requested resolution (full resolution entries are skipped; `full`
// already covers them).
MaskSet build_mask_set(const RawMasks& raw, double dilation_ratio,
                       const std::vector<Resolution>& resolutions);

// Full acquisition: provider, shape validation, dilation, pyramid.
std::variant<MaskSet, FallbackSignal> acquire_masks(
    const Image& image, const std::vector<std::string>& phrases,
    MaskProvider& provider, double dilation_ratio,
    const std::vector<Resolution>& resolutions);

}  // namespace ale
