#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "ale/types.hpp"

namespace ale {

using TokenId = std::int32_t;

// One encoded prompt. Row 0 is BOS, rows 1..content_len-2 are prompt tokens,
// row content_len-1 is the first EOS, rows >= content_len are padded EOS.
struct EmbeddingMatrix {
  Matrix rows;                    // L x d
  std::vector<TokenId> token_ids; // length L
  int content_len = 0;            // non-pad rows, BOS and first EOS included

  int context_length() const { return static_cast<int>(rows.rows()); }
  int dim() const { return static_cast<int>(rows.cols()); }
};

// Adapter seam for a real text encoder. Implementations must be
// deterministic: equal text, equal output.
class TextEncoder {
 public:
  virtual ~TextEncoder() = default;

  virtual std::vector<TokenId> tokenize(const std::string& text) const = 0;
  virtual EmbeddingMatrix encode(const std::string& text) const        = 0;

  virtual int context_length() const = 0;
  virtual int dim() const            = 0;
};

struct MockEncoderConfig {
  int context_length = 77;
  int dim            = 32;
  std::uint64_t seed = 17;
  // When true, token rows are keyed by their whole token prefix instead of
  // the token id alone, so a prompt encoded inside a longer base yields
  // different token rows than the same prompt encoded in isolation. The EOS
  // rows are prefix-keyed in both modes.
  bool contextual = false;
};

// Word-level deterministic encoder. Rows are pseudo-random unit vectors:
// token rows are keyed by token id (or token prefix, see config), and every
// EOS row shares one vector keyed by the full content token sequence, which
// mimics how an autoregressive encoder entangles EOS state with the prompt.
class MockEncoder : public TextEncoder {
 public:
  explicit MockEncoder(MockEncoderConfig cfg = {});

  std::vector<TokenId> tokenize(const std::string& text) const override;
  EmbeddingMatrix encode(const std::string& text) const override;

  int context_length() const override { return cfg_.context_length; }
  int dim() const override { return cfg_.dim; }

  static constexpr TokenId kBos = 0;
  static constexpr TokenId kEos = 1;

 private:
  MockEncoderConfig cfg_;
};

std::unique_ptr<TextEncoder> make_mock_encoder(MockEncoderConfig cfg = {});

}  // namespace ale
