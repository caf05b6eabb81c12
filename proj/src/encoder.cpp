#include "ale/encoder.hpp"

#include <cctype>

#include "ale/errors.hpp"
#include "ale/rng.hpp"

namespace ale {
namespace {

std::vector<std::string> split_words(const std::string& text) {
  std::vector<std::string> words;
  std::string cur;
  for (char ch : text) {
    if (std::isspace(static_cast<unsigned char>(ch))) {
      if (!cur.empty()) {
        words.push_back(cur);
        cur.clear();
      }
    } else {
      cur.push_back(
          static_cast<char>(std::tolower(static_cast<unsigned char>(ch))));
    }
  }
  if (!cur.empty()) words.push_back(cur);
  return words;
}

Vector unit_vector(std::uint64_t key, int dim) {
  Rng rng(key);
  Vector v(dim);
  for (int i = 0; i < dim; ++i) v[i] = static_cast<Scalar>(rng.next_normal());
  const Scalar n = v.norm();
  // A zero draw of all coordinates has vanishing probability; guard anyway.
  return n > Scalar(0) ? Vector(v / n) : Vector(Vector::Unit(dim, 0));
}

std::uint64_t hash_ids(const std::vector<TokenId>& ids, std::size_t count,
                       std::uint64_t seed) {
  std::uint64_t h = fnv1a_u64(seed);
  for (std::size_t i = 0; i < count; ++i)
    h = fnv1a_u64(static_cast<std::uint64_t>(ids[i]), h);
  return h;
}

}  // namespace

MockEncoder::MockEncoder(MockEncoderConfig cfg) : cfg_(cfg) {
  if (cfg_.context_length < 2 || cfg_.dim < 1)
    throw RangeError("mock encoder needs context_length >= 2 and dim >= 1");
}

std::vector<TokenId> MockEncoder::tokenize(const std::string& text) const {
  std::vector<TokenId> ids;
  for (const auto& w : split_words(text)) {
    // Ids 0 and 1 are reserved for BOS/EOS.
    const std::uint64_t h = fnv1a(w);
    ids.push_back(static_cast<TokenId>(2 + h % 0x7ffffffdull));
  }
  return ids;
}

EmbeddingMatrix MockEncoder::encode(const std::string& text) const {
  const int L = cfg_.context_length;
  const int d = cfg_.dim;

  std::vector<TokenId> words = tokenize(text);
  if (static_cast<int>(words.size()) > L - 2)
    throw OverflowError("prompt has " + std::to_string(words.size()) +
                        " tokens; at most " + std::to_string(L - 2) +
                        " fit the context window");

  EmbeddingMatrix out;
  out.rows.resize(L, d);
  out.token_ids.assign(L, kEos);
  out.token_ids[0] = kBos;
  for (std::size_t i = 0; i < words.size(); ++i)
    out.token_ids[i + 1] = words[i];
  out.content_len = static_cast<int>(words.size()) + 2;

  out.rows.row(0) = unit_vector(fnv1a_u64(cfg_.seed, fnv1a("bos")), d);
  for (std::size_t i = 0; i < words.size(); ++i) {
    const std::uint64_t key =
        cfg_.contextual
            ? hash_ids(words, i + 1, cfg_.seed)
            : fnv1a_u64(static_cast<std::uint64_t>(words[i]), cfg_.seed);
    out.rows.row(i + 1) = unit_vector(key, d);
  }

  // Every EOS position (first EOS and padding) carries the same vector, and
  // that vector depends on the entire prompt.
  const Vector eos =
      unit_vector(fnv1a_u64(fnv1a("eos"), hash_ids(words, words.size(), cfg_.seed)),
                  d);
  for (int r = static_cast<int>(words.size()) + 1; r < L; ++r)
    out.rows.row(r) = eos;

  return out;
}

std::unique_ptr<TextEncoder> make_mock_encoder(MockEncoderConfig cfg) {
  return std::make_unique<MockEncoder>(cfg);
}

}  // namespace ale
