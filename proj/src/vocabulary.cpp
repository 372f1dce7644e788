// Copyright 2026 The entcal Authors
// SPDX-License-Identifier: Apache-2.0

#include "entcal/vocabulary.hpp"

#include <algorithm>
#include <cctype>
#include <map>

#include "entcal/error.hpp"
#include "entcal/util.hpp"

namespace entcal {

Vocabulary::Vocabulary() : Vocabulary(std::vector<std::string>{}) {}

Vocabulary::Vocabulary(const std::vector<std::string>& regular_tokens) {
  tokens_.reserve(kNumSpecials + regular_tokens.size());
  tokens_.emplace_back(kPadSurface);
  tokens_.emplace_back(kUnkSurface);
  tokens_.emplace_back(kBosSurface);
  tokens_.emplace_back(kEosSurface);
  for (const auto& t : regular_tokens) tokens_.push_back(t);
  for (std::size_t i = 0; i < tokens_.size(); ++i) {
    auto [it, inserted] = ids_.emplace(tokens_[i], static_cast<TokenId>(i));
    if (!inserted) {
      throw Error(ErrorCode::kInvalidParameter,
                  "duplicate vocabulary token '" + tokens_[i] + "'");
    }
  }
}

TokenId Vocabulary::id_of(std::string_view token) const {
  auto it = ids_.find(std::string(token));
  return it == ids_.end() ? specials_.unk : it->second;
}

const std::string& Vocabulary::token(TokenId id) const {
  if (id < 0 || static_cast<std::size_t>(id) >= tokens_.size()) {
    throw Error(ErrorCode::kInvalidId,
                "token id " + std::to_string(id) + " outside vocabulary of " +
                    std::to_string(tokens_.size()));
  }
  return tokens_[static_cast<std::size_t>(id)];
}

bool Vocabulary::contains(std::string_view token) const {
  return ids_.count(std::string(token)) != 0;
}

std::string Vocabulary::hash() const {
  std::uint64_t h = fnv1a("entcal-vocab");
  for (const auto& t : tokens_) {
    h = fnv1a(t, h);
    h = fnv1a("\n", h);
  }
  return hash_hex(h);
}

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : text) {
    if (std::isspace(static_cast<unsigned char>(c))) {
      if (!cur.empty()) out.push_back(std::move(cur));
      cur.clear();
    } else {
      cur.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    }
  }
  if (!cur.empty()) out.push_back(std::move(cur));
  return out;
}

Vocabulary build_vocabulary(const std::vector<std::string>& lines,
                            int min_count) {
  if (min_count < 1) {
    throw Error(ErrorCode::kInvalidParameter, "min_count must be >= 1");
  }
  std::map<std::string, long long> freq;
  std::size_t n_tokens = 0;
  for (const auto& line : lines) {
    for (auto& t : tokenize(line)) {
      ++freq[t];
      ++n_tokens;
    }
  }
  if (n_tokens == 0) throw Error(ErrorCode::kCorpusEmpty, "corpus is empty");

  std::vector<std::pair<std::string, long long>> kept;
  for (auto& [tok, n] : freq) {
    if (n < min_count) continue;
    // Corpus text that collides with a reserved surface form is folded into
    // the special entry.
    if (tok == kPadSurface || tok == kUnkSurface || tok == kBosSurface ||
        tok == kEosSurface) {
      continue;
    }
    kept.emplace_back(tok, n);
  }
  std::stable_sort(kept.begin(), kept.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  std::vector<std::string> tokens;
  tokens.reserve(kept.size());
  for (auto& [tok, n] : kept) tokens.push_back(tok);
  return Vocabulary(tokens);
}

Vocabulary build_vocabulary(std::istream& corpus, int min_count) {
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(corpus, line)) lines.push_back(line);
  return build_vocabulary(lines, min_count);
}

TokenSequence encode_text(const Vocabulary& vocab, std::string_view text) {
  TokenSequence seq;
  seq.ids.push_back(vocab.specials().bos);
  const auto& sp = vocab.specials();
  for (const auto& t : tokenize(text)) {
    TokenId id = vocab.id_of(t);
    // Control tokens are never produced from text.
    if (id == sp.bos || id == sp.eos || id == sp.pad) id = sp.unk;
    seq.ids.push_back(id);
  }
  return seq;
}

std::string decode_tokens(const Vocabulary& vocab, std::span<const TokenId> ids) {
  const auto& sp = vocab.specials();
  std::string out;
  for (TokenId id : ids) {
    const std::string& surface = vocab.token(id);
    if (id == sp.bos || id == sp.eos || id == sp.pad) continue;
    if (!out.empty()) out.push_back(' ');
    out += surface;
  }
  return out;
}

}  // namespace entcal
