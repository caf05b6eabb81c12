#include "ale/scorer.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>

#include "ale/errors.hpp"
#include "ale/rng.hpp"

namespace ale {
namespace {

std::string lowercase(const std::string& s) {
  std::string out = s;
  std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) {
    return static_cast<char>(std::tolower(c));
  });
  return out;
}

}  // namespace

MockScorer::MockScorer(MockScorerConfig cfg) : cfg_(cfg) {
  if (cfg_.bins < 2) throw RangeError("mock scorer needs at least two bins");
}

std::vector<double> MockScorer::text_distribution(const std::string& text) const {
  Rng rng(fnv1a_u64(cfg_.seed, fnv1a(lowercase(text))));
  std::vector<double> w(cfg_.bins);
  double sum = 0.0;
  for (double& v : w) {
    v = 0.2 + rng.next_uniform();
    sum += v;
  }
  for (double& v : w) v /= sum;
  return w;
}

double MockScorer::score(const Image& image, const std::string& text) const {
  std::vector<double> hist(cfg_.bins, 0.0);
  double count = 0.0;
  for (Eigen::Index y = 0; y < image.rows(); ++y)
    for (Eigen::Index x = 0; x < image.cols(); ++x) {
      const Scalar v = image(y, x);
      if (v <= Scalar(0)) continue;  // zeros mark pixels outside the region
      const int bin = std::min(cfg_.bins - 1,
                               static_cast<int>(v * static_cast<Scalar>(cfg_.bins)));
      hist[bin] += 1.0;
      count += 1.0;
    }
  if (count == 0.0) return 0.0;

  const std::vector<double> t = text_distribution(text);
  double dot = 0.0, nh = 0.0, nt = 0.0;
  for (int i = 0; i < cfg_.bins; ++i) {
    dot += hist[i] * t[i];
    nh += hist[i] * hist[i];
    nt += t[i] * t[i];
  }
  if (nh == 0.0) return 0.0;
  return 100.0 * dot / std::sqrt(nh * nt);
}

std::unique_ptr<SimilarityScorer> make_mock_scorer(MockScorerConfig cfg) {
  return std::make_unique<MockScorer>(cfg);
}

void fill_text_patch(Image& image, const MaskImage& mask,
                     const std::string& text, const MockScorerConfig& cfg) {
  if (image.rows() != mask.rows() || image.cols() != mask.cols())
    throw ShapeError("patch mask does not match the image size");

  const MockScorer scorer(cfg);
  const std::vector<double> dist = scorer.text_distribution(text);
  std::vector<double> cdf(dist.size());
  double acc = 0.0;
  for (std::size_t i = 0; i < dist.size(); ++i) {
    acc += dist[i];
    cdf[i] = acc;
  }

  Rng rng(fnv1a_u64(cfg.seed ^ 0x5151u, fnv1a(lowercase(text))));
  for (Eigen::Index y = 0; y < mask.rows(); ++y)
    for (Eigen::Index x = 0; x < mask.cols(); ++x) {
      if (!mask(y, x)) continue;
      const double u = rng.next_uniform();
      int bin = 0;
      while (bin + 1 < static_cast<int>(cdf.size()) && u > cdf[bin]) ++bin;
      // Intensity inside the chosen bin, strictly positive so the pixel is
      // never mistaken for masked-out background.
      const double inner = std::max(rng.next_uniform(), 1e-3);
      image(y, x) = static_cast<Scalar>((bin + inner) / dist.size());
    }
}

}  // namespace ale
