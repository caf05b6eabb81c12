#include "ale/prompt.hpp"

#include <algorithm>
#include <cctype>

#include "ale/errors.hpp"

namespace ale {
namespace {

const char* kConnective = " and ";

std::string trimmed(const std::string& s) {
  auto b = s.begin();
  auto e = s.end();
  while (b != e && std::isspace(static_cast<unsigned char>(*b))) ++b;
  while (e != b && std::isspace(static_cast<unsigned char>(*(e - 1)))) --e;
  return std::string(b, e);
}

const std::string& pick(const ObjectPromptPair& p, PromptSide side) {
  return side == PromptSide::Source ? p.source : p.target;
}

void validate_pairs(const std::vector<ObjectPromptPair>& pairs,
                    PromptSide side) {
  if (pairs.empty()) throw EmptyRequest("no object prompt pairs given");
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    if (pairs[i].index != static_cast<int>(i) + 1)
      throw ValidationError("object indices must be contiguous from 1; pair " +
                            std::to_string(i) + " has index " +
                            std::to_string(pairs[i].index));
    if (trimmed(pick(pairs[i], side)).empty())
      throw EmptyRequest("object " + std::to_string(i + 1) +
                         " has an empty prompt");
  }
}

std::string join_prompts(const std::vector<std::string>& prompts) {
  std::string out;
  for (std::size_t i = 0; i < prompts.size(); ++i) {
    if (i) out += kConnective;
    out += prompts[i];
  }
  return out;
}

void check_fits(const std::string& base_text, const TextEncoder& encoder) {
  const int n   = static_cast<int>(encoder.tokenize(base_text).size());
  const int max = encoder.context_length() - 2;  // BOS and first EOS
  if (n > max)
    throw OverflowError("joined base prompt has " + std::to_string(n) +
                        " tokens; at most " + std::to_string(max) + " fit");
}

// Finds each object's token-id subsequence inside the base tokenization,
// scanning left to right so repeated objects resolve in declaration order.
// If a subsequence is missing (a tokenizer merged across a boundary), falls
// back to cumulative-offset arithmetic over per-object token counts.
std::vector<TokenSpan> map_spans(const std::vector<std::vector<TokenId>>& objs,
                                 const std::vector<TokenId>& base_ids,
                                 int connective_tokens) {
  std::vector<TokenSpan> spans(objs.size());
  bool found_all = true;
  std::size_t from = 0;
  for (std::size_t i = 0; i < objs.size() && found_all; ++i) {
    const auto& o = objs[i];
    auto it = std::search(base_ids.begin() + from, base_ids.end(), o.begin(),
                          o.end());
    if (o.empty() || it == base_ids.end()) {
      found_all = false;
      break;
    }
    const int pos  = static_cast<int>(it - base_ids.begin());
    spans[i].begin = pos + 1;  // rows shift by one for BOS
    spans[i].end   = pos + 1 + static_cast<int>(o.size());
    from           = static_cast<std::size_t>(pos) + o.size();
  }
  if (found_all) return spans;

  int row = 1;
  for (std::size_t i = 0; i < objs.size(); ++i) {
    spans[i].begin = row;
    spans[i].end   = row + static_cast<int>(objs[i].size());
    row = spans[i].end + connective_tokens;
  }
  return spans;
}

void check_embedding(const EmbeddingMatrix& e, int L, int d,
                     const std::string& what) {
  if (e.context_length() != L || e.dim() != d ||
      static_cast<int>(e.token_ids.size()) != L || e.content_len < 2 ||
      e.content_len > L)
    throw EncoderShapeError("encoder returned a malformed embedding for " +
                            what);
}

}  // namespace

std::string to_string(EosStrategy s) {
  switch (s) {
    case EosStrategy::Ore:   return "ore";
    case EosStrategy::Naive: return "naive";
    case EosStrategy::Zeros: return "zeros";
    case EosStrategy::Bos:   return "bos";
    case EosStrategy::Empty: return "empty";
    case EosStrategy::Ets:   return "ets";
  }
  return "ore";
}

EosStrategy parse_eos_strategy(const std::string& name) {
  if (name == "ore")   return EosStrategy::Ore;
  if (name == "naive") return EosStrategy::Naive;
  if (name == "zeros") return EosStrategy::Zeros;
  if (name == "bos")   return EosStrategy::Bos;
  if (name == "empty") return EosStrategy::Empty;
  if (name == "ets")   return EosStrategy::Ets;
  throw RangeError("unknown EOS strategy: " + name);
}

std::string build_base_prompt(const std::vector<ObjectPromptPair>& pairs,
                              PromptSide side, const TextEncoder& encoder) {
  validate_pairs(pairs, side);
  std::vector<std::string> prompts;
  prompts.reserve(pairs.size());
  for (const auto& p : pairs) prompts.push_back(trimmed(pick(p, side)));
  const std::string base = join_prompts(prompts);
  check_fits(base, encoder);
  return base;
}

OreSet encode_object_restricted(const std::vector<ObjectPromptPair>& pairs,
                                PromptSide side, const TextEncoder& encoder,
                                EosStrategy strategy) {
  const std::string base_text = build_base_prompt(pairs, side, encoder);
  const int L = encoder.context_length();
  const int d = encoder.dim();

  OreSet out;
  out.strategy   = strategy;
  out.base_plain = encoder.encode(base_text);
  check_embedding(out.base_plain, L, d, "base prompt");

  std::vector<std::vector<TokenId>> obj_ids;
  for (const auto& p : pairs) {
    out.per_object.push_back(encoder.encode(trimmed(pick(p, side))));
    check_embedding(out.per_object.back(), L, d, "object prompt");
    obj_ids.push_back(encoder.tokenize(trimmed(pick(p, side))));
  }

  const std::vector<TokenId> base_ids = encoder.tokenize(base_text);
  const int connective_tokens =
      static_cast<int>(encoder.tokenize("and").size());
  out.spans = map_spans(obj_ids, base_ids, connective_tokens);
  for (const auto& s : out.spans) {
    if (s.begin < 1 || s.end > out.base_plain.content_len - 1)
      throw EncoderShapeError("object span escapes the base prompt content");
  }

  out.base = out.base_plain;
  const int pad_begin = out.base.content_len;
  switch (strategy) {
    case EosStrategy::Ore:
      for (std::size_t i = 0; i < out.spans.size(); ++i) {
        const TokenSpan& s = out.spans[i];
        out.base.rows.middleRows(s.begin, s.size()) =
            out.per_object[i].rows.middleRows(1, s.size());
      }
      break;
    case EosStrategy::Naive:
      break;
    case EosStrategy::Zeros:
      out.base.rows.bottomRows(L - pad_begin).setZero();
      break;
    case EosStrategy::Bos:
      for (int r = pad_begin; r < L; ++r)
        out.base.rows.row(r) = out.base_plain.rows.row(0);
      break;
    case EosStrategy::Empty: {
      const EmbeddingMatrix empty = encoder.encode("");
      check_embedding(empty, L, d, "empty prompt");
      out.base.rows.bottomRows(L - pad_begin) =
          empty.rows.bottomRows(L - pad_begin);
      break;
    }
    case EosStrategy::Ets: {
      std::vector<std::string> stripped;
      for (const auto& p : pairs) {
        if (!p.stripped || trimmed(*p.stripped).empty())
          throw MissingStrippedPrompt(
              "strategy ets needs a stripped prompt for object " +
              std::to_string(p.index));
        stripped.push_back(trimmed(*p.stripped));
      }
      const std::string stripped_base = join_prompts(stripped);
      check_fits(stripped_base, encoder);
      const EmbeddingMatrix enc = encoder.encode(stripped_base);
      check_embedding(enc, L, d, "stripped prompt");
      out.base.rows.bottomRows(L - pad_begin) =
          enc.rows.bottomRows(L - pad_begin);
      break;
    }
  }
  return out;
}

}  // namespace ale
