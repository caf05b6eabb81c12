#include "ale/mask.hpp"

#include <algorithm>
#include <filesystem>
#include <numeric>

#include "ale/errors.hpp"
#include "ale/image_io.hpp"

namespace ale {
namespace {

void check_same_shape(const std::vector<MaskImage>& masks, int h, int w) {
  for (std::size_t i = 0; i < masks.size(); ++i) {
    if (masks[i].rows() != h || masks[i].cols() != w)
      throw MaskShapeError("mask " + std::to_string(i + 1) + " is " +
                           std::to_string(masks[i].rows()) + "x" +
                           std::to_string(masks[i].cols()) + ", expected " +
                           std::to_string(h) + "x" + std::to_string(w));
  }
}

// Priority order for overlap resolution: confidence descending, then index.
std::vector<std::size_t> priority_order(std::size_t n,
                                        const std::vector<double>& conf) {
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  if (conf.size() == n) {
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) {
                       return conf[a] > conf[b];
                     });
  }
  return order;
}

MaskLevel level_from_disjoint(std::vector<MaskImage> objects, int h, int w) {
  MaskLevel level;
  level.background = build_background(objects, h, w);
  level.objects    = std::move(objects);
  return level;
}

}  // namespace

const MaskLevel& MaskSet::at(const Resolution& res) const {
  if (res == full_resolution()) return full;
  auto it = pyramid.find(res);
  if (it == pyramid.end())
    throw ShapeError("no mask level prepared for " + std::to_string(res.height) +
                     "x" + std::to_string(res.width));
  return it->second;
}

FileMaskProvider::FileMaskProvider(std::vector<std::string> paths)
    : paths_(std::move(paths)) {}

std::variant<RawMasks, FallbackSignal> FileMaskProvider::acquire(
    const Image& image, const std::vector<std::string>& phrases) {
  if (paths_.size() != phrases.size())
    throw MaskShapeError("have " + std::to_string(paths_.size()) +
                         " mask files for " + std::to_string(phrases.size()) +
                         " objects");
  RawMasks raw;
  raw.provenance = MaskProvenance::File;
  for (const auto& p : paths_) raw.masks.push_back(load_mask_png(p));
  check_same_shape(raw.masks, static_cast<int>(image.rows()),
                   static_cast<int>(image.cols()));
  return raw;
}

std::vector<std::string> find_mask_files(const std::string& dir,
                                         const std::string& stem, int k) {
  namespace fs = std::filesystem;
  std::vector<std::string> paths;
  for (int i = 1; i <= k; ++i) {
    const fs::path named = fs::path(dir) / (stem + "_obj" + std::to_string(i) + ".png");
    const fs::path plain = fs::path(dir) / ("obj" + std::to_string(i) + ".png");
    if (fs::exists(named))
      paths.push_back(named.string());
    else if (fs::exists(plain))
      paths.push_back(plain.string());
    else
      throw IoError("no mask file for object " + std::to_string(i) + " in " +
                    dir + " (looked for " + named.filename().string() +
                    " and " + plain.filename().string() + ")");
  }
  return paths;
}

int dilation_radius(double ratio, int height, int width) {
  if (ratio < 0.0 || ratio > 0.25)
    throw RangeError("dilation ratio must lie in [0, 0.25]");
  return static_cast<int>(ratio * std::min(height, width));
}

MaskImage dilate_mask(const MaskImage& mask, int radius) {
  if (radius < 0) throw RangeError("dilation radius must be >= 0");
  const int h = static_cast<int>(mask.rows());
  const int w = static_cast<int>(mask.cols());
  if (radius == 0) return mask;

  // Integral image of foreground counts; a pixel dilates to 1 when its
  // clipped (2r+1)^2 window contains any foreground.
  std::vector<std::int64_t> integral(
      static_cast<std::size_t>(h + 1) * (w + 1), 0);
  auto at = [&](int y, int x) -> std::int64_t& {
    return integral[static_cast<std::size_t>(y) * (w + 1) + x];
  };
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      at(y + 1, x + 1) =
          at(y, x + 1) + at(y + 1, x) - at(y, x) + (mask(y, x) ? 1 : 0);

  MaskImage out(h, w);
  for (int y = 0; y < h; ++y) {
    const int y0 = std::max(0, y - radius);
    const int y1 = std::min(h - 1, y + radius);
    for (int x = 0; x < w; ++x) {
      const int x0 = std::max(0, x - radius);
      const int x1 = std::min(w - 1, x + radius);
      const std::int64_t count =
          at(y1 + 1, x1 + 1) - at(y0, x1 + 1) - at(y1 + 1, x0) + at(y0, x0);
      out(y, x) = count > 0 ? 1 : 0;
    }
  }
  return out;
}

std::vector<MaskImage> disjointify(const std::vector<MaskImage>& masks,
                                   const std::vector<double>& confidences) {
  if (masks.empty()) return {};
  const int h = static_cast<int>(masks[0].rows());
  const int w = static_cast<int>(masks[0].cols());
  check_same_shape(masks, h, w);

  std::vector<MaskImage> out(masks.size(), MaskImage::Zero(h, w));
  MaskImage claimed = MaskImage::Zero(h, w);
  for (std::size_t idx : priority_order(masks.size(), confidences)) {
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x)
        if (masks[idx](y, x) && !claimed(y, x)) {
          out[idx](y, x)  = 1;
          claimed(y, x)   = 1;
        }
  }
  return out;
}

MaskImage build_background(const std::vector<MaskImage>& objects, int height,
                           int width) {
  check_same_shape(objects, height, width);
  MaskImage bg = MaskImage::Constant(height, width, 1);
  for (const auto& m : objects)
    for (int y = 0; y < height; ++y)
      for (int x = 0; x < width; ++x)
        if (m(y, x)) bg(y, x) = 0;
  return bg;
}

MaskImage downsample_mask(const MaskImage& mask, const Resolution& res) {
  const int H = static_cast<int>(mask.rows());
  const int W = static_cast<int>(mask.cols());
  if (res.height < 1 || res.width < 1 || res.height > H || res.width > W)
    throw ShapeError("cannot downsample " + std::to_string(H) + "x" +
                     std::to_string(W) + " mask to " +
                     std::to_string(res.height) + "x" +
                     std::to_string(res.width));
  if (res.height == H && res.width == W) return mask;

  // Exact box filter: target cell (i, j) covers the source rectangle
  // [i*H/h, (i+1)*H/h) x [j*W/w, (j+1)*W/w), with fractional edge overlap.
  MaskImage out(res.height, res.width);
  const double sy = static_cast<double>(H) / res.height;
  const double sx = static_cast<double>(W) / res.width;
  for (int i = 0; i < res.height; ++i) {
    const double ry0 = i * sy, ry1 = (i + 1) * sy;
    for (int j = 0; j < res.width; ++j) {
      const double rx0 = j * sx, rx1 = (j + 1) * sx;
      double acc = 0.0;
      for (int y = static_cast<int>(ry0); y < ry1 && y < H; ++y) {
        const double wy =
            std::min<double>(y + 1, ry1) - std::max<double>(y, ry0);
        if (wy <= 0.0) continue;
        for (int x = static_cast<int>(rx0); x < rx1 && x < W; ++x) {
          const double wx =
              std::min<double>(x + 1, rx1) - std::max<double>(x, rx0);
          if (wx <= 0.0) continue;
          if (mask(y, x)) acc += wy * wx;
        }
      }
      out(i, j) = acc / (sy * sx) >= 0.5 ? 1 : 0;
    }
  }
  return out;
}

bool is_partition(const MaskLevel& level) {
  if (level.background.size() == 0) return false;
  const int h = static_cast<int>(level.background.rows());
  const int w = static_cast<int>(level.background.cols());
  for (const auto& m : level.objects)
    if (m.rows() != h || m.cols() != w) return false;
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      int cover = level.background(y, x) ? 1 : 0;
      for (const auto& m : level.objects) cover += m(y, x) ? 1 : 0;
      if (cover != 1) return false;
    }
  return true;
}

MaskSet build_mask_set(const RawMasks& raw, double dilation_ratio,
                       const std::vector<Resolution>& resolutions) {
  if (raw.masks.empty()) throw MaskShapeError("no object masks supplied");
  const int h = static_cast<int>(raw.masks[0].rows());
  const int w = static_cast<int>(raw.masks[0].cols());
  check_same_shape(raw.masks, h, w);

  MaskSet set;
  set.k                  = static_cast<int>(raw.masks.size());
  set.provenance         = raw.provenance;
  set.confidences        = raw.confidences;
  set.dilation_radius_px = dilation_radius(dilation_ratio, h, w);

  std::vector<MaskImage> dilated;
  dilated.reserve(raw.masks.size());
  for (const auto& m : raw.masks)
    dilated.push_back(dilate_mask(m, set.dilation_radius_px));

  set.full = level_from_disjoint(disjointify(dilated, raw.confidences), h, w);

  for (const auto& res : resolutions) {
    if ((res.height == h && res.width == w) || set.pyramid.count(res)) continue;
    std::vector<MaskImage> small;
    small.reserve(set.full.objects.size());
    for (const auto& m : set.full.objects)
      small.push_back(downsample_mask(m, res));
    // Thresholding can reintroduce overlap; restore disjointness with the
    // same priority rule before deriving the level background.
    set.pyramid.emplace(res,
                        level_from_disjoint(disjointify(small, raw.confidences),
                                            res.height, res.width));
  }
  return set;
}

std::variant<MaskSet, FallbackSignal> acquire_masks(
    const Image& image, const std::vector<std::string>& phrases,
    MaskProvider& provider, double dilation_ratio,
    const std::vector<Resolution>& resolutions) {
  auto acquired = provider.acquire(image, phrases);
  if (std::holds_alternative<FallbackSignal>(acquired))
    return std::get<FallbackSignal>(acquired);

  const RawMasks& raw = std::get<RawMasks>(acquired);
  check_same_shape(raw.masks, static_cast<int>(image.rows()),
                   static_cast<int>(image.cols()));
  return build_mask_set(raw, dilation_ratio, resolutions);
}

}  // namespace ale
