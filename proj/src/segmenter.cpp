#include "ale/segmenter.hpp"

#include <httplib.h>
#include <json.hpp>

#include "ale/errors.hpp"
#include "ale/image_io.hpp"

namespace ale {
namespace {

constexpr char kAlphabet[] =
    "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";

int decode_char(char c) {
  if (c >= 'A' && c <= 'Z') return c - 'A';
  if (c >= 'a' && c <= 'z') return c - 'a' + 26;
  if (c >= '0' && c <= '9') return c - '0' + 52;
  if (c == '+') return 62;
  if (c == '/') return 63;
  return -1;
}

}  // namespace

std::string base64_encode(const std::vector<std::uint8_t>& bytes) {
  std::string out;
  out.reserve((bytes.size() + 2) / 3 * 4);
  for (std::size_t i = 0; i < bytes.size(); i += 3) {
    std::uint32_t chunk = static_cast<std::uint32_t>(bytes[i]) << 16;
    if (i + 1 < bytes.size()) chunk |= static_cast<std::uint32_t>(bytes[i + 1]) << 8;
    if (i + 2 < bytes.size()) chunk |= bytes[i + 2];
    out.push_back(kAlphabet[(chunk >> 18) & 63]);
    out.push_back(kAlphabet[(chunk >> 12) & 63]);
    out.push_back(i + 1 < bytes.size() ? kAlphabet[(chunk >> 6) & 63] : '=');
    out.push_back(i + 2 < bytes.size() ? kAlphabet[chunk & 63] : '=');
  }
  return out;
}

std::vector<std::uint8_t> base64_decode(const std::string& text) {
  std::vector<std::uint8_t> out;
  std::uint32_t chunk = 0;
  int have = 0;
  for (char c : text) {
    if (c == '=' || c == '\n' || c == '\r') continue;
    const int v = decode_char(c);
    if (v < 0) throw IoError("invalid base64 payload");
    chunk = (chunk << 6) | static_cast<std::uint32_t>(v);
    if (++have == 4) {
      out.push_back((chunk >> 16) & 0xff);
      out.push_back((chunk >> 8) & 0xff);
      out.push_back(chunk & 0xff);
      have  = 0;
      chunk = 0;
    }
  }
  if (have == 2) {
    out.push_back((chunk >> 4) & 0xff);
  } else if (have == 3) {
    out.push_back((chunk >> 10) & 0xff);
    out.push_back((chunk >> 2) & 0xff);
  } else if (have == 1) {
    throw IoError("truncated base64 payload");
  }
  return out;
}

HttpSegmenterClient::HttpSegmenterClient(std::string endpoint,
                                         int timeout_seconds)
    : endpoint_(std::move(endpoint)), timeout_seconds_(timeout_seconds) {
  if (endpoint_.empty())
    throw ValidationError("segmenter endpoint must not be empty");
}

SegmentResponse HttpSegmenterClient::segment(const Image& image,
                                             const std::string& phrase) {
  httplib::Client client(endpoint_);
  client.set_connection_timeout(timeout_seconds_, 0);
  client.set_read_timeout(timeout_seconds_, 0);

  nlohmann::json body;
  body["image"]  = base64_encode(encode_image_png(image));
  body["phrase"] = phrase;

  const httplib::Result res =
      client.Post("/segment", body.dump(), "application/json");
  if (!res)
    throw SegmenterUnavailable("segmenter at " + endpoint_ +
                               " is unreachable: " + to_string(res.error()));
  if (res->status < 200 || res->status >= 300)
    throw SegmenterUnavailable("segmenter at " + endpoint_ +
                               " answered HTTP " + std::to_string(res->status));

  try {
    const nlohmann::json j = nlohmann::json::parse(res->body);
    SegmentResponse out;
    out.success    = j.at("success").get<bool>();
    out.confidence = j.value("confidence", 0.0);
    if (out.success)
      out.mask = decode_mask_png(base64_decode(j.at("mask").get<std::string>()));
    return out;
  } catch (const nlohmann::json::exception& e) {
    throw SegmenterUnavailable("segmenter response is malformed: " +
                               std::string(e.what()));
  }
}

SegmenterMaskProvider::SegmenterMaskProvider(SegmenterClient& client)
    : client_(&client) {}

std::variant<RawMasks, FallbackSignal> SegmenterMaskProvider::acquire(
    const Image& image, const std::vector<std::string>& phrases) {
  RawMasks raw;
  raw.provenance = MaskProvenance::Segmenter;
  for (const auto& phrase : phrases) {
    const SegmentResponse res = client_->segment(image, phrase);
    if (!res.success)
      return FallbackSignal{"segmentation failed for \"" + phrase + "\""};
    if ((res.mask != 0).count() == 0)
      return FallbackSignal{"segmentation returned an empty mask for \"" +
                            phrase + "\""};
    raw.masks.push_back(res.mask);
    raw.confidences.push_back(res.confidence);
  }
  return raw;
}

}  // namespace ale
