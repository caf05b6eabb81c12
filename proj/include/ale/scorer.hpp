#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "ale/types.hpp"

namespace ale {

// Text-image similarity on a 0..100 scale. Implementations score a full-size
// image whose pixels outside the region of interest are exact zeros.
class SimilarityScorer {
 public:
  virtual ~SimilarityScorer() = default;
  virtual double score(const Image& image, const std::string& text) const = 0;
};

struct MockScorerConfig {
  std::uint64_t seed = 99;
  int bins           = 8;
};

// Deterministic stand-in: the text hashes to an intensity distribution, the
// image pools its nonzero pixels into an intensity histogram, and the score
// is 100 times their cosine. An all-zero region scores a fixed floor of 0.
class MockScorer : public SimilarityScorer {
 public:
  explicit MockScorer(MockScorerConfig cfg = {});
  double score(const Image& image, const std::string& text) const override;

  // The distribution the scorer associates with `text`; exposed so fixtures
  // can synthesize matching patches.
  std::vector<double> text_distribution(const std::string& text) const;

 private:
  MockScorerConfig cfg_;
};

std::unique_ptr<SimilarityScorer> make_mock_scorer(MockScorerConfig cfg = {});

// Test fixture: fills the masked pixels of `image` with intensities drawn
// from the scorer distribution of `text`, so that region scores higher for
// `text` than for unrelated prompts.
void fill_text_patch(Image& image, const MaskImage& mask,
                     const std::string& text, const MockScorerConfig& cfg = {});

}  // namespace ale
