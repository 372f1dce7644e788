// Copyright 2026 The entcal Authors
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <cmath>
#include <random>
#include <set>

#include <gtest/gtest.h>

#include "entcal/decoding.hpp"
#include "support.hpp"

namespace entcal {
namespace {

using namespace entcal::oracles;

using testing::random_probs;

void expect_renormalized(const ConditionalDistribution& out, const std::vector<double>& p,
                         const std::set<TokenId>& set) {
  double mass = 0.0;
  for (TokenId w : set) mass += p[static_cast<std::size_t>(w)];
  for (TokenId w : set) {
    ASSERT_NEAR(out.prob(w), p[static_cast<std::size_t>(w)] / mass, 1e-12);
  }
}

TEST(Truncation, KeptSetsMatchBruteForceReferences) {
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> uni(0.01, 1.0);
  for (int trial = 0; trial < 1000; ++trial) {
    // Recompute p from the logprobs so both sides see identical values.
    const auto d = ConditionalDistribution::from_probs(random_probs(rng, 20));
    const auto p = d.probs();
    const std::size_t k = 1 + rng() % 20;
    const double top_p = uni(rng);
    const double tau = uni(rng);

    const auto tk = truncate_top_k(d, k);
    ASSERT_EQ(kept(tk), ref_top_k(p, k)) << "trial " << trial;
    expect_renormalized(tk, p, kept(tk));

    const auto nu = truncate_nucleus(d, top_p);
    ASSERT_EQ(kept(nu), ref_nucleus(p, top_p)) << "trial " << trial;
    expect_renormalized(nu, p, kept(nu));

    const auto ty = truncate_typical(d, tau);
    ASSERT_EQ(kept(ty), ref_typical(p, tau)) << "trial " << trial;
    expect_renormalized(ty, p, kept(ty));
  }
}

TEST(Truncation, Boundaries) {
  const auto d = ConditionalDistribution::from_probs(std::vector<double>{0.5, 0.3, 0.2});
  EXPECT_EQ(kept(truncate_top_k(d, 1)), (std::set<TokenId>{0}));
  EXPECT_EQ(kept(truncate_top_k(d, 3)).size(), 3u);
  EXPECT_EQ(kept(truncate_nucleus(d, 0.5)), (std::set<TokenId>{0}));
  EXPECT_EQ(kept(truncate_nucleus(d, 0.8)), (std::set<TokenId>{0, 1}));
  EXPECT_EQ(kept(truncate_nucleus(d, 1.0)).size(), 3u);
  EXPECT_ENTCAL_ERROR(truncate_top_k(d, 0), kInvalidParameter);
  EXPECT_ENTCAL_ERROR(truncate_top_k(d, 4), kInvalidParameter);
  EXPECT_ENTCAL_ERROR(truncate_nucleus(d, 0.0), kInvalidParameter);
  EXPECT_ENTCAL_ERROR(truncate_typical(d, 1.5), kInvalidParameter);
}

TEST(Truncation, TypicalOnUniformIsIdentity) {
  const auto u = ConditionalDistribution::from_probs(std::vector<double>(10, 0.1));
  for (double tau : {0.05, 0.2, 0.95}) EXPECT_EQ(kept(truncate_typical(u, tau)).size(), 10u);
}

TEST(Temperature, ScalesAndRenormalizes) {
  const auto d = ConditionalDistribution::from_probs(std::vector<double>{0.6, 0.3, 0.1});
  EXPECT_EQ(apply_temperature(d, 1.0).logprobs, d.logprobs);
  const auto sharp = apply_temperature(d, 0.5);
  const double z = 0.36 + 0.09 + 0.01;
  EXPECT_NEAR(sharp.prob(0), 0.36 / z, 1e-12);
  EXPECT_NEAR(sharp.prob(2), 0.01 / z, 1e-12);
  const auto cold = apply_temperature(d, 1e-3);
  EXPECT_NEAR(cold.prob(0), 1.0, 1e-12);
  EXPECT_NEAR(total_mass(apply_temperature(d, 3.0)), 1.0, 1e-12);
  EXPECT_ENTCAL_ERROR(apply_temperature(d, 0.0), kInvalidParameter);
}

TEST(Policy, TemperatureThenTruncation) {
  const auto d = ConditionalDistribution::from_probs(std::vector<double>{0.4, 0.35, 0.25});
  const auto out = apply_policy(d, TruncationPolicy::top_k(2, 2.0));
  EXPECT_EQ(kept(out), (std::set<TokenId>{0, 1}));
  const double a = std::sqrt(0.4);
  const double b = std::sqrt(0.35);
  EXPECT_NEAR(out.prob(0), a / (a + b), 1e-12);
}

TEST(Sampling, InverseCdfMatchesProbabilities) {
  const std::vector<double> p = {0.05, 0.0, 0.5, 0.25, 0.2};
  const auto d = ConditionalDistribution::from_probs(p);
  Rng rng(17);
  std::vector<int> hits(p.size(), 0);
  const int n = 200000;
  for (int i = 0; i < n; ++i) hits[static_cast<std::size_t>(sample_from(d, rng))]++;
  EXPECT_EQ(hits[1], 0);
  for (std::size_t w = 0; w < p.size(); ++w) {
    const double se = std::sqrt(p[w] * (1 - p[w]) / n);
    EXPECT_NEAR(hits[w] / static_cast<double>(n), p[w], 5 * se + 1e-12) << w;
  }
}

TEST(Sampling, SameSeedSameDraws) {
  const auto d = ConditionalDistribution::from_probs(std::vector<double>(7, 1.0 / 7));
  Rng a(5);
  Rng b(5);
  for (int i = 0; i < 100; ++i) EXPECT_EQ(sample_from(d, a), sample_from(d, b));
  Rng c(5);
  const double u = c.uniform();
  EXPECT_GE(u, 0.0);
  EXPECT_LT(u, 1.0);
  const auto bad = ConditionalDistribution::from_probs(std::vector<double>{0.2, 0.2});
  EXPECT_ENTCAL_ERROR(sample_from(bad, c), kInvalidDistribution);
}

}  // namespace
}  // namespace entcal
