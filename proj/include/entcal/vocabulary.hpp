// Copyright 2026 The entcal Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <istream>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace entcal {

using TokenId = std::int32_t;

enum class Origin { kCorpusTarget, kGenerated };

struct TokenSequence {
  std::vector<TokenId> ids;
  Origin origin = Origin::kCorpusTarget;
};

// Reserved ids, always present and in this order at the front of the table.
struct SpecialIds {
  TokenId pad = 0;
  TokenId unk = 1;
  TokenId bos = 2;
  TokenId eos = 3;
};

inline constexpr std::string_view kPadSurface = "<pad>";
inline constexpr std::string_view kUnkSurface = "<unk>";
inline constexpr std::string_view kBosSurface = "<s>";
inline constexpr std::string_view kEosSurface = "</s>";
inline constexpr std::size_t kNumSpecials = 4;

// Dense token table: ids are 0..size()-1 and every token maps back to its id.
class Vocabulary {
 public:
  Vocabulary();  // specials only
  explicit Vocabulary(const std::vector<std::string>& regular_tokens);

  std::size_t size() const { return tokens_.size(); }
  const SpecialIds& specials() const { return specials_; }

  // UNK for unknown tokens.
  TokenId id_of(std::string_view token) const;
  // Throws kInvalidId for out-of-range ids.
  const std::string& token(TokenId id) const;
  bool contains(std::string_view token) const;
  bool is_special(TokenId id) const {
    return id >= 0 && static_cast<std::size_t>(id) < kNumSpecials;
  }

  const std::vector<std::string>& tokens() const { return tokens_; }

  // Stable across processes; used to pin profiles to a tokenizer.
  std::string hash() const;

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, TokenId> ids_;
  SpecialIds specials_;
};

// Lowercased whitespace tokenization shared by every text entry point.
std::vector<std::string> tokenize(std::string_view text);

// Frequency-desc then lexicographic ordering; tokens below min_count are
// dropped. Each line of `corpus` is one sentence. Throws kCorpusEmpty.
Vocabulary build_vocabulary(std::istream& corpus, int min_count);
Vocabulary build_vocabulary(const std::vector<std::string>& lines,
                            int min_count);

// BOS + ids (OOV -> UNK). No EOS.
TokenSequence encode_text(const Vocabulary& vocab, std::string_view text);

// Space-joined surface forms with BOS/EOS/PAD dropped.
std::string decode_tokens(const Vocabulary& vocab, std::span<const TokenId> ids);

}  // namespace entcal
