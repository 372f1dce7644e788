// Copyright 2026 The entcal Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <istream>
#include <memory>
#include <ostream>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "entcal/distribution.hpp"
#include "entcal/vocabulary.hpp"

namespace entcal {

inline constexpr int kMaxOrder = 6;

enum class Smoothing { kWittenBell };

// Interpolated Witten-Bell n-gram model:
//
//   p(w | h) = (c(h, w) + T(h) * p(w | h')) / (c(h) + T(h))
//
// where T(h) is the number of distinct successors of h and h' drops the
// oldest token of h. The recursion bottoms out in a uniform distribution over
// the vocabulary, so every probability is strictly positive. Histories never
// seen in training fall through to the next shorter one.
class NGramModel {
 public:
  struct Successors {
    std::uint64_t total = 0;
    std::vector<std::pair<TokenId, std::uint64_t>> counts;  // sorted by id
  };

  struct History {
    std::array<TokenId, kMaxOrder - 1> ids{};
    std::uint8_t len = 0;
    bool operator==(const History& o) const;
  };
  struct HistoryHash {
    std::size_t operator()(const History& h) const;
  };
  using Table = std::unordered_map<History, Successors, HistoryHash>;

  NGramModel(Vocabulary vocab, int order, std::vector<Table> tables);

  int order() const { return order_; }
  Smoothing smoothing() const { return Smoothing::kWittenBell; }
  const Vocabulary& vocab() const { return vocab_; }
  // tables()[k] holds histories of length k.
  const std::vector<Table>& tables() const { return tables_; }

  // Uses at most order()-1 trailing tokens of `context`.
  ConditionalDistribution next_distribution(std::span<const TokenId> context) const;
  std::vector<double> next_probs(std::span<const TokenId> context) const;

  // Hash of the canonical serialization.
  const std::string& fingerprint() const { return fingerprint_; }

  void save(std::ostream& out) const;
  static NGramModel load(std::istream& in);
  void save_file(const std::string& path) const;
  static NGramModel load_file(const std::string& path);

 private:
  Vocabulary vocab_;
  int order_;
  std::vector<Table> tables_;
  std::vector<double> base_;  // order-1 level, precomputed
  std::string fingerprint_;
};

// Each line is one sentence framed as BOS ... EOS. Throws kCorpusEmpty,
// kInvalidParameter for order outside [1, kMaxOrder], kDegenerateVocab when
// the vocabulary holds nothing but reserved tokens.
NGramModel train_ngram(const std::vector<std::string>& lines,
                       const Vocabulary& vocab, int order);
NGramModel train_ngram(std::istream& corpus, const Vocabulary& vocab, int order);

// Per-token perplexity (EOS included) over `lines`.
double perplexity(const NGramModel& model, const std::vector<std::string>& lines);

}  // namespace entcal
