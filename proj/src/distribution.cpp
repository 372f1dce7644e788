// Copyright 2026 The entcal Authors
// SPDX-License-Identifier: Apache-2.0

#include "entcal/distribution.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "entcal/error.hpp"

namespace entcal {

double ConditionalDistribution::prob(TokenId id) const {
  if (id < 0 || static_cast<std::size_t>(id) >= logprobs.size()) {
    throw Error(ErrorCode::kInvalidId,
                "token id " + std::to_string(id) + " outside distribution");
  }
  return std::exp(logprobs[static_cast<std::size_t>(id)]);
}

std::vector<double> ConditionalDistribution::probs() const {
  std::vector<double> p(logprobs.size());
  for (std::size_t i = 0; i < p.size(); ++i) p[i] = std::exp(logprobs[i]);
  return p;
}

ConditionalDistribution ConditionalDistribution::from_probs(
    std::span<const double> probs, std::size_t step) {
  ConditionalDistribution d;
  d.step = step;
  d.logprobs.resize(probs.size());
  for (std::size_t i = 0; i < probs.size(); ++i) {
    d.logprobs[i] = probs[i] > 0.0 ? std::log(probs[i])
                                   : -std::numeric_limits<double>::infinity();
  }
  return d;
}

double total_mass(const ConditionalDistribution& dist) {
  double s = 0.0;
  for (double lp : dist.logprobs) s += std::exp(lp);
  return s;
}

void check_normalized(const ConditionalDistribution& dist) {
  if (dist.logprobs.empty()) {
    throw Error(ErrorCode::kInvalidDistribution, "empty distribution");
  }
  for (double lp : dist.logprobs) {
    if (std::isnan(lp) || lp > 1e-12) {
      throw Error(ErrorCode::kInvalidDistribution,
                  "log-probability outside (-inf, 0]");
    }
  }
  double mass = total_mass(dist);
  if (std::abs(mass - 1.0) > kNormalizationTolerance) {
    throw Error(ErrorCode::kInvalidDistribution,
                "distribution mass " + std::to_string(mass) + " is not 1");
  }
}

double entropy_nats(const ConditionalDistribution& dist) {
  check_normalized(dist);
  double h = 0.0;
  for (double lp : dist.logprobs) {
    if (std::isinf(lp)) continue;
    h -= std::exp(lp) * lp;
  }
  return std::max(h, 0.0);
}

double surprisal_nats(const ConditionalDistribution& dist, TokenId token) {
  if (token < 0 || static_cast<std::size_t>(token) >= dist.logprobs.size()) {
    throw Error(ErrorCode::kInvalidId,
                "token id " + std::to_string(token) + " outside distribution");
  }
  return -dist.logprobs[static_cast<std::size_t>(token)];
}

TokenId argmax(const ConditionalDistribution& dist) {
  if (dist.logprobs.empty()) {
    throw Error(ErrorCode::kInvalidDistribution, "empty distribution");
  }
  // max_element keeps the first maximum, i.e. the lowest id.
  auto it = std::max_element(dist.logprobs.begin(), dist.logprobs.end());
  return static_cast<TokenId>(it - dist.logprobs.begin());
}

std::vector<TokenId> rank_tokens(const ConditionalDistribution& dist) {
  std::vector<TokenId> order(dist.logprobs.size());
  std::iota(order.begin(), order.end(), 0);
  const auto& lp = dist.logprobs;
  std::stable_sort(order.begin(), order.end(), [&](TokenId a, TokenId b) {
    return lp[static_cast<std::size_t>(a)] > lp[static_cast<std::size_t>(b)];
  });
  return order;
}

std::vector<double> smooth_trace(std::span<const double> values, int window) {
  if (window < 1) {
    throw Error(ErrorCode::kInvalidParameter, "smoothing window must be >= 1");
  }
  const auto u = static_cast<std::size_t>(window);
  std::vector<double> out(values.size());
  // O(T * U); windows are a handful of steps.
  for (std::size_t t = 0; t < values.size(); ++t) {
    std::size_t lo = t >= u ? t - u : 0;
    double s = 0.0;
    for (std::size_t j = lo; j <= t; ++j) s += values[j];
    out[t] = s / static_cast<double>(t - lo + 1);
  }
  return out;
}

}  // namespace entcal
