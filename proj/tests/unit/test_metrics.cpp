// Copyright 2026 The entcal Authors
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <random>

#include <gtest/gtest.h>

#include "entcal/metrics.hpp"
#include "support.hpp"

namespace entcal {
namespace {

using namespace entcal::oracles;

using Ids = std::vector<TokenId>;

TEST(F1Overlap, Examples) {
  EXPECT_DOUBLE_EQ(f1_overlap(Ids{4, 5, 6}, Ids{4, 5, 6}), 1.0);
  EXPECT_DOUBLE_EQ(f1_overlap(Ids{4, 5}, Ids{6, 7}), 0.0);
  // gen {b,c,d}, target {a,b,c}
  EXPECT_NEAR(f1_overlap(Ids{5, 6, 7}, Ids{4, 5, 6}), 2.0 / 3.0, 1e-15);
  EXPECT_DOUBLE_EQ(f1_overlap(Ids{}, Ids{4}), 0.0);
  // duplicates collapse
  EXPECT_DOUBLE_EQ(f1_overlap(Ids{4, 4, 4, 5}, Ids{5, 4}), 1.0);
}

TEST(F1Overlap, SymmetricAndBounded) {
  std::mt19937_64 rng(3);
  std::uniform_int_distribution<TokenId> tok(4, 15);
  for (int i = 0; i < 300; ++i) {
    Ids a(1 + rng() % 10), b(1 + rng() % 10);
    for (auto& x : a) x = tok(rng);
    for (auto& x : b) x = tok(rng);
    const double f = f1_overlap(a, b);
    EXPECT_DOUBLE_EQ(f, f1_overlap(b, a));
    EXPECT_GE(f, 0.0);
    EXPECT_LE(f, 1.0);
  }
}

TEST(F1Overlap, StopWordFilter) {
  const auto vocab = build_vocabulary(std::vector<std::string>{"the cat sat on the mat"}, 1);
  const TokenFilter text(vocab, true);
  const TokenFilter dialog(vocab, false);
  const auto id = [&](const char* w) { return vocab.id_of(w); };
  const Ids gen{id("the"), id("cat")};
  const Ids tgt{id("the"), id("mat")};
  EXPECT_DOUBLE_EQ(f1_overlap(gen, tgt, &text), 0.0);
  EXPECT_DOUBLE_EQ(f1_overlap(gen, tgt, &dialog), 0.5);
  EXPECT_TRUE(text.excluded(vocab.specials().eos));
  EXPECT_TRUE(dialog.excluded(vocab.specials().unk));
}

TEST(RepeatScore, AllSameTokens) {
  const Ids t(5, 4);
  const auto rep = repeated_ngram_counts(t);
  EXPECT_EQ(rep, (std::array<std::size_t, 5>{4, 3, 2, 1, 0}));
  EXPECT_NEAR(repeat_score_at_5(t), std::log2(52.0 / 10.0) * 4.0 / 5.0, 1e-12);
  EXPECT_NEAR(repeat_score_at_5(t), 1.903, 5e-4);
}

TEST(RepeatScore, MatchesBruteForceOn500Sequences) {
  std::mt19937_64 rng(500);
  for (int i = 0; i < 500; ++i) {
    const std::size_t len = 1 + rng() % 60;
    const TokenId alphabet = static_cast<TokenId>(2 + rng() % 12);
    Ids t(len);
    for (auto& x : t) x = static_cast<TokenId>(4 + rng() % alphabet);
    ASSERT_NEAR(repeat_score_at_5(t), brute_repeat_score(t), 1e-12) << "sequence " << i;
  }
}

TEST(RepeatScore, InjectiveIsZero) {
  std::mt19937_64 rng(1);
  for (int i = 0; i < 50; ++i) {
    Ids t(1 + rng() % 40);
    std::iota(t.begin(), t.end(), 4);
    std::shuffle(t.begin(), t.end(), rng);
    EXPECT_EQ(repeat_score_at_5(t), 0.0);
  }
  EXPECT_ENTCAL_ERROR(repeat_score_at_5(Ids{}), kZeroLength);
}

TEST(NgramRepeats, Examples) {
  const Ids abab{4, 5, 4, 5, 4, 5};
  EXPECT_EQ(ngram_repeat_count(abab, 3), 2.0);
  EXPECT_EQ(ngram_repeat_count(Ids{4, 5, 6, 7}, 2), 0.0);
  EXPECT_EQ(ngram_repeat_count(Ids{4, 4}, 3), 0.0);
  EXPECT_ENTCAL_ERROR(ngram_repeat_count(abab, 0), kInvalidParameter);
  std::mt19937_64 rng(7);
  for (int i = 0; i < 200; ++i) {
    Ids t(rng() % 30);
    for (auto& x : t) x = static_cast<TokenId>(4 + rng() % 3);
    for (std::size_t n = 1; n <= 6; ++n) {
      EXPECT_EQ(ngram_repeat_count(t, n), static_cast<double>(brute_repeats(t, n)));
    }
  }
}

TEST(Pearson, Examples) {
  const std::vector<double> xs{1, 2, 3, 5, 8};
  std::vector<double> lin, neg;
  for (double x : xs) {
    lin.push_back(2 * x + 1);
    neg.push_back(-x);
  }
  EXPECT_NEAR(pearson_correlation(xs, lin), 1.0, 1e-15);
  EXPECT_NEAR(pearson_correlation(xs, neg), -1.0, 1e-15);
}

TEST(Pearson, DirectFormulaAndAffineInvariance) {
  std::mt19937_64 rng(50);
  std::normal_distribution<double> g(0.0, 1.0);
  std::vector<double> xs(50), ys(50);
  for (std::size_t i = 0; i < 50; ++i) {
    xs[i] = g(rng);
    ys[i] = 0.4 * xs[i] + g(rng);
  }
  long double mx = 0, my = 0;
  for (std::size_t i = 0; i < 50; ++i) {
    mx += xs[i];
    my += ys[i];
  }
  mx /= 50;
  my /= 50;
  long double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < 50; ++i) {
    sxy += (xs[i] - mx) * (ys[i] - my);
    sxx += (xs[i] - mx) * (xs[i] - mx);
    syy += (ys[i] - my) * (ys[i] - my);
  }
  const double expected = static_cast<double>(sxy / std::sqrt(sxx * syy));
  const double rho = pearson_correlation(xs, ys);
  EXPECT_NEAR(rho, expected, 1e-12);

  std::vector<double> scaled(50), flipped(50);
  for (std::size_t i = 0; i < 50; ++i) {
    scaled[i] = 3.5 * ys[i] - 7.0;
    flipped[i] = -0.25 * xs[i] + 2.0;
  }
  EXPECT_NEAR(pearson_correlation(xs, scaled), rho, 1e-12);
  EXPECT_NEAR(pearson_correlation(flipped, ys), -rho, 1e-12);
}

TEST(Pearson, Errors) {
  const std::vector<double> two{1, 2};
  EXPECT_ENTCAL_ERROR(pearson_correlation(two, two), kInvalidParameter);
  const std::vector<double> a{1, 2, 3}, b{1, 2, 3, 4}, flat{2, 2, 2};
  EXPECT_ENTCAL_ERROR(pearson_correlation(a, b), kInvalidParameter);
  EXPECT_ENTCAL_ERROR(pearson_correlation(a, flat), kUndefinedCorrelation);
}

TEST(DetPct, ReportingConvention) {
  GenerationRecord r;
  r.det_fraction = 0.4;
  r.kind = DecoderKind::kGreedy;
  EXPECT_EQ(reported_det_pct(r), 100.0);
  r.kind = DecoderKind::kBeam;
  EXPECT_EQ(reported_det_pct(r), 100.0);
  r.kind = DecoderKind::kSample;
  EXPECT_EQ(reported_det_pct(r), 0.0);
  r.kind = DecoderKind::kEntropyAware;
  EXPECT_DOUBLE_EQ(reported_det_pct(r), 40.0);
}

class Aggregate : public ::testing::Test {
 protected:
  void SetUp() override {
    vocab = build_vocabulary(std::vector<std::string>{"the cat sat on a mat", "dog ran"}, 1);
    profile.mu = {1.0, 1.2, 1.4, 1.6};
    profile.sigma = {0.1, 0.2, 0.1, 0.3};
    profile.count = {1, 1, 1, 1};
    profile.window = 2;
    profile.horizon = 3;
  }

  TokenSequence seq(const std::string& text) const {
    TokenSequence s{{}, Origin::kCorpusTarget};
    for (const auto& w : tokenize(text)) s.ids.push_back(vocab.id_of(w));
    return s;
  }

  GenerationRecord rec(DecoderKind kind, const std::string& text, std::vector<double> ent,
                       std::size_t backoffs = 0, double det = 0.0) const {
    GenerationRecord r;
    r.kind = kind;
    r.tokens = seq(text);
    r.tokens.origin = Origin::kGenerated;
    r.entropies = std::move(ent);
    r.surprisals.assign(r.entropies.size(), 0.0);
    r.greedy_flags.assign(r.entropies.size(), true);
    r.backoff_count = backoffs;
    r.det_fraction = det;
    return r;
  }

  Vocabulary vocab;
  StableEntropyProfile profile;
};

TEST_F(Aggregate, ScriptedFixtureMatchesOracle) {
  const std::vector<GenerationRecord> records{
      rec(DecoderKind::kGreedy, "the cat sat on the mat", {1.0, 0.5, 0.4, 2.0, 2.5, 1.5}),
      rec(DecoderKind::kSample, "cat cat cat cat", {1.1, 1.2, 1.3, 1.4}),
      rec(DecoderKind::kEntropyAware, "dog ran on the mat", {0.2, 0.3, 3.0, 3.0, 1.6}, 2, 0.75),
      rec(DecoderKind::kBeam, "", {}),
      rec(DecoderKind::kSample, "a dog a dog a dog", std::vector<double>(6, 1.0)),
  };
  const std::vector<TokenSequence> targets{seq("a cat sat on a mat"), seq("the dog ran"),
                                           seq("the dog ran on a mat"), seq("cat"),
                                           seq("a dog")};
  const auto row =
      aggregate_records(records, targets, profile, 1.5, F1Mode::kText, vocab, "fixture");
  EXPECT_EQ(row.config_id, "fixture");
  EXPECT_NEAR(row.f1, 0.6, 1e-12);
  EXPECT_NEAR(row.repeat_score5, 0.63163858412125184, 1e-12);
  EXPECT_NEAR(row.ngram3_repeats, 0.6, 1e-12);
  EXPECT_NEAR(row.evr, 0.48333333333333328, 1e-12);
  EXPECT_NEAR(row.elvr, 0.40333333333333332, 1e-12);
  EXPECT_NEAR(row.euvr, 0.08, 1e-12);
  EXPECT_NEAR(row.det_pct, 55.0, 1e-12);
  EXPECT_NEAR(row.backoffs_mean, 0.4, 1e-12);
  EXPECT_EQ(metric_row_csv(row),
            "fixture,0.600000,0.631639,0.600000,0.483333,0.403333,0.080000,55.000000,0.400000");
}

TEST_F(Aggregate, IdenticalRecordScoresOne) {
  const std::vector<GenerationRecord> r{rec(DecoderKind::kGreedy, "cat sat mat", {1, 1, 1})};
  const std::vector<TokenSequence> t{seq("cat sat mat")};
  EXPECT_DOUBLE_EQ(aggregate_records(r, t, profile, 1.5, F1Mode::kText, vocab).f1, 1.0);
}

TEST_F(Aggregate, MeanOfSingletonsAndPermutationInvariance) {
  std::vector<GenerationRecord> r{
      rec(DecoderKind::kGreedy, "cat cat sat cat cat sat", {1.0, 1.1, 0.2, 0.1, 3.0, 1.0}),
      rec(DecoderKind::kEntropyAware, "dog ran the mat", {1.2, 2.2, 0.9, 1.0}, 3, 0.5),
      rec(DecoderKind::kSample, "on a mat", {0.1, 0.1, 2.0})};
  std::vector<TokenSequence> t{seq("cat sat"), seq("the dog"), seq("a mat on")};
  const auto all = aggregate_records(r, t, profile, 1.5, F1Mode::kDialog, vocab);
  MetricRow sum;
  for (std::size_t i = 0; i < r.size(); ++i) {
    const auto one = aggregate_records(std::span(r).subspan(i, 1), std::span(t).subspan(i, 1),
                                       profile, 1.5, F1Mode::kDialog, vocab);
    sum.f1 += one.f1 / 3;
    sum.repeat_score5 += one.repeat_score5 / 3;
    sum.evr += one.evr / 3;
    sum.det_pct += one.det_pct / 3;
    sum.backoffs_mean += one.backoffs_mean / 3;
  }
  EXPECT_NEAR(all.f1, sum.f1, 1e-12);
  EXPECT_NEAR(all.repeat_score5, sum.repeat_score5, 1e-12);
  EXPECT_NEAR(all.evr, sum.evr, 1e-12);
  EXPECT_NEAR(all.det_pct, sum.det_pct, 1e-12);
  EXPECT_NEAR(all.backoffs_mean, 1.0, 1e-12);

  std::swap(r[0], r[2]);
  std::swap(t[0], t[2]);
  const auto swapped = aggregate_records(r, t, profile, 1.5, F1Mode::kDialog, vocab);
  EXPECT_NEAR(swapped.f1, all.f1, 1e-12);
  EXPECT_NEAR(swapped.elvr, all.elvr, 1e-12);
  EXPECT_NEAR(swapped.euvr, all.euvr, 1e-12);
}

TEST_F(Aggregate, Errors) {
  const std::vector<GenerationRecord> r{rec(DecoderKind::kGreedy, "cat", {1.0})};
  const std::vector<TokenSequence> none;
  EXPECT_ENTCAL_ERROR(aggregate_records(r, none, profile, 1.5, F1Mode::kText, vocab), kAlignment);
  EXPECT_ENTCAL_ERROR(
      aggregate_records(std::span<const GenerationRecord>{}, none, profile, 1.5, F1Mode::kText,
                        vocab),
      kEmptyDataset);
}

}  // namespace
}  // namespace entcal
