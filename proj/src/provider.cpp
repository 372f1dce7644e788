// Copyright 2026 The entcal Authors
// SPDX-License-Identifier: Apache-2.0

#include "entcal/provider.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "entcal/error.hpp"
#include "entcal/util.hpp"

namespace entcal {

VocabInfo NGramProvider::vocab_info() const {
  const auto& vocab = model_->vocab();
  return VocabInfo{vocab.size(), vocab.specials().bos, vocab.specials().eos,
                   vocab.specials().unk};
}

CopyCacheProvider::CopyCacheProvider(std::shared_ptr<const ModelProvider> base,
                                     CopyCacheOptions options)
    : base_(std::move(base)), options_(options) {
  if (!base_) throw Error(ErrorCode::kInvalidParameter, "copy cache needs a base provider");
  if (options_.match_len < 1) throw Error(ErrorCode::kInvalidParameter, "match_len must be >= 1");
  if (!(options_.prior > 0.0)) throw Error(ErrorCode::kInvalidParameter, "prior must be > 0");
}

ConditionalDistribution CopyCacheProvider::next_distribution(
    std::span<const TokenId> context) const {
  auto dist = base_->next_distribution(context);
  const std::size_t n = context.size();
  const std::size_t m = options_.match_len;
  if (n <= m) return dist;
  const auto suffix = context.subspan(n - m);
  std::map<TokenId, double> votes;
  double total = 0.0;
  for (std::size_t j = m; j < n; ++j) {
    if (std::equal(suffix.begin(), suffix.end(), context.begin() + static_cast<std::ptrdiff_t>(j - m))) {
      votes[context[j]] += 1.0;
      total += 1.0;
    }
  }
  if (votes.empty()) return dist;
  const double lambda = total / (total + static_cast<double>(votes.size()) + options_.prior);
  const double keep = std::log1p(-lambda);
  for (double& lp : dist.logprobs) lp += keep;
  for (const auto& [id, c] : votes) {
    auto& lp = dist.logprobs[static_cast<std::size_t>(id)];
    lp = std::log(std::exp(lp) + lambda * c / total);
  }
  return dist;
}

std::string CopyCacheProvider::fingerprint() const {
  return hash_hex(fnv1a(base_->fingerprint() + "/copy/" + std::to_string(options_.match_len) +
                        "/" + format_roundtrip(options_.prior)));
}

}  // namespace entcal
