#pragma once

#include <memory>
#include <string>

#include "ale/mask.hpp"
#include "ale/types.hpp"

namespace ale {

struct SegmentResponse {
  MaskImage mask;
  double confidence = 0.0;
  bool success      = false;
};

// Text-prompted segmentation service contract. A miss (success = false or an
// empty mask) is an expected outcome; only transport problems raise.
class SegmenterClient {
 public:
  virtual ~SegmenterClient() = default;
  virtual SegmentResponse segment(const Image& image,
                                  const std::string& phrase) = 0;
};

// JSON-over-HTTP transport: POST <endpoint>/segment with
//   {"image": "<base64 PNG>", "phrase": "..."}
// expecting {"success": bool, "confidence": number, "mask": "<base64 PNG>"}.
// Non-2xx responses and connection failures throw SegmenterUnavailable.
class HttpSegmenterClient : public SegmenterClient {
 public:
  explicit HttpSegmenterClient(std::string endpoint,
                               int timeout_seconds = 10);
  SegmentResponse segment(const Image& image,
                          const std::string& phrase) override;

 private:
  std::string endpoint_;
  int timeout_seconds_;
};

// MaskProvider backed by a segmenter. Any per-object miss converts the whole
// acquisition into a FallbackSignal.
class SegmenterMaskProvider : public MaskProvider {
 public:
  explicit SegmenterMaskProvider(SegmenterClient& client);
  std::variant<RawMasks, FallbackSignal> acquire(
      const Image& image, const std::vector<std::string>& phrases) override;

 private:
  SegmenterClient* client_;
};

std::string base64_encode(const std::vector<std::uint8_t>& bytes);
std::vector<std::uint8_t> base64_decode(const std::string& text);

}  // namespace ale
