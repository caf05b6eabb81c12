#pragma once

#include <optional>
#include <string>
#include <vector>

#include "ale/encoder.hpp"
#include "ale/types.hpp"

namespace ale {

// One object under edit. Indices are 1-based and must be contiguous in the
// order the pairs are supplied.
struct ObjectPromptPair {
  int index = 0;
  std::string source;
  std::string target;
  // Attribute-free wording of the target prompt; required by EosStrategy::Ets.
  std::optional<std::string> stripped;
};

enum class PromptSide { Source, Target };

// How the padded-EOS rows of the base embedding are treated. Token-span
// splicing happens only under Ore; the other strategies leave token rows
// untouched and rewrite rows >= content_len.
enum class EosStrategy { Ore, Naive, Zeros, Bos, Empty, Ets };

std::string to_string(EosStrategy s);
EosStrategy parse_eos_strategy(const std::string& name);

// Half-open row range [begin, end) of one object's tokens inside the encoded
// base prompt. Row 0 (BOS) is never part of a span.
struct TokenSpan {
  int begin = 0;
  int end   = 0;
  int size() const { return end - begin; }
};

struct OreSet {
  EmbeddingMatrix base;        // base embedding after strategy treatment
  EmbeddingMatrix base_plain;  // untouched encoding; attention keys use this
  std::vector<EmbeddingMatrix> per_object;
  std::vector<TokenSpan> spans;
  EosStrategy strategy = EosStrategy::Ore;
};

// Joins the per-object prompts for one side with " and ". Throws EmptyRequest
// for no pairs or a blank prompt, OverflowError when the joined prompt cannot
// fit the encoder context window.
std::string build_base_prompt(const std::vector<ObjectPromptPair>& pairs,
                              PromptSide side, const TextEncoder& encoder);

// Encodes each object prompt in isolation, locates its tokens inside the base
// prompt, and assembles the base embedding per strategy.
OreSet encode_object_restricted(const std::vector<ObjectPromptPair>& pairs,
                                PromptSide side, const TextEncoder& encoder,
                                EosStrategy strategy);

}  // namespace ale
