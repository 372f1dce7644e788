// Copyright 2026 The entcal Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "entcal/vocabulary.hpp"

namespace entcal {

// Next-token distribution as natural-log probabilities. Distributions served
// by a provider have full support; truncated ones carry -inf for removed
// tokens.
struct ConditionalDistribution {
  std::vector<double> logprobs;
  std::size_t step = 0;

  std::size_t size() const { return logprobs.size(); }
  double prob(TokenId id) const;
  std::vector<double> probs() const;

  static ConditionalDistribution from_probs(std::span<const double> probs,
                                            std::size_t step = 0);
};

inline constexpr double kNormalizationTolerance = 1e-6;

// Sum of exp(logprobs).
double total_mass(const ConditionalDistribution& dist);

// Throws kInvalidDistribution when |sum p - 1| > kNormalizationTolerance.
void check_normalized(const ConditionalDistribution& dist);

// -sum p log p in nats; zero-probability entries contribute nothing.
double entropy_nats(const ConditionalDistribution& dist);

// -log p(token) in nats.
double surprisal_nats(const ConditionalDistribution& dist, TokenId token);

// Highest-probability token, ties to the lower id.
TokenId argmax(const ConditionalDistribution& dist);

// Token ids ordered by probability desc, ties to the lower id.
std::vector<TokenId> rank_tokens(const ConditionalDistribution& dist);

// Trailing-window mean: out[t] = mean(values[max(0, t - window) .. t]),
// window inclusive of t, shrinking at the start.
std::vector<double> smooth_trace(std::span<const double> values, int window);

}  // namespace entcal
