// Copyright 2026 The entcal Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <memory>
#include <span>
#include <string>
#include <string_view>

#include "entcal/distribution.hpp"
#include "entcal/ngram_model.hpp"
#include "entcal/vocabulary.hpp"

namespace entcal {

struct VocabInfo {
  std::size_t vocab_size = 0;
  TokenId bos = 0;
  TokenId eos = 0;
  TokenId unk = 0;
};

// Source of next-token distributions. next_distribution must be a pure
// function of the context.
class ModelProvider {
 public:
  virtual ~ModelProvider() = default;

  virtual VocabInfo vocab_info() const = 0;
  virtual ConditionalDistribution next_distribution(
      std::span<const TokenId> context) const = 0;
  virtual TokenSequence encode(std::string_view text) const = 0;
  virtual std::string decode(std::span<const TokenId> ids) const = 0;
  // Identifies the model a profile was estimated against.
  virtual std::string fingerprint() const = 0;
  // Token table when the provider is backed by a local vocabulary.
  virtual const Vocabulary* vocabulary() const { return nullptr; }
};

inline ConditionalDistribution next_distribution(const ModelProvider& provider,
                                                 const TokenSequence& context) {
  return provider.next_distribution(context.ids);
}

class NGramProvider final : public ModelProvider {
 public:
  explicit NGramProvider(std::shared_ptr<const NGramModel> model)
      : model_(std::move(model)) {}

  VocabInfo vocab_info() const override;
  ConditionalDistribution next_distribution(
      std::span<const TokenId> context) const override {
    return model_->next_distribution(context);
  }
  TokenSequence encode(std::string_view text) const override {
    return encode_text(model_->vocab(), text);
  }
  std::string decode(std::span<const TokenId> ids) const override {
    return decode_tokens(model_->vocab(), ids);
  }
  std::string fingerprint() const override { return model_->fingerprint(); }
  const Vocabulary* vocabulary() const override { return &model_->vocab(); }

  const NGramModel& model() const { return *model_; }

 private:
  std::shared_ptr<const NGramModel> model_;
};

struct CopyCacheOptions {
  std::size_t match_len = 3;
  double prior = 1.0;
};

// In-context copy cache over a base provider. Earlier positions whose
// preceding match_len tokens equal the current suffix vote for the token
// that followed them; with C votes over T distinct tokens the vote
// distribution is mixed in with weight C / (C + T + prior).
class CopyCacheProvider final : public ModelProvider {
 public:
  CopyCacheProvider(std::shared_ptr<const ModelProvider> base, CopyCacheOptions options = {});

  VocabInfo vocab_info() const override { return base_->vocab_info(); }
  ConditionalDistribution next_distribution(
      std::span<const TokenId> context) const override;
  TokenSequence encode(std::string_view text) const override { return base_->encode(text); }
  std::string decode(std::span<const TokenId> ids) const override {
    return base_->decode(ids);
  }
  std::string fingerprint() const override;
  const Vocabulary* vocabulary() const override { return base_->vocabulary(); }

  const CopyCacheOptions& options() const { return options_; }

 private:
  std::shared_ptr<const ModelProvider> base_;
  CopyCacheOptions options_;
};

}  // namespace entcal
