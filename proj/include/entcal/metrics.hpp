// Copyright 2026 The entcal Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstddef>
#include <ostream>
#include <span>
#include <string>
#include <unordered_set>
#include <vector>

#include "entcal/decoding.hpp"
#include "entcal/profile.hpp"
#include "entcal/vocabulary.hpp"

namespace entcal {

// Bundled English stop-word list (version tag kStopwordsVersion).
inline constexpr std::string_view kStopwordsVersion = "entcal-stopwords-v1";
const std::vector<std::string>& bundled_stopwords();

// Ids excluded from F1 overlap: reserved tokens always, stop words when built
// with filter_stopwords.
class TokenFilter {
 public:
  TokenFilter(const Vocabulary& vocab, bool filter_stopwords);
  bool excluded(TokenId id) const { return excluded_.count(id) != 0; }

 private:
  std::unordered_set<TokenId> excluded_;
};

// Unigram-set F1 between generation and target. 0 when either side is empty
// after filtering.
double f1_overlap(std::span<const TokenId> generated, std::span<const TokenId> target,
                  const TokenFilter* filter = nullptr);

// Repeated-occurrence counts rep_i = (#i-gram occurrences - #distinct i-grams)
// for i = 1..5.
std::array<std::size_t, 5> repeated_ngram_counts(std::span<const TokenId> tokens);

// log2(sum_i 2^i rep_i / sum_i rep_i) * rep_1 / #tokens; 0 when nothing
// repeats. Throws kZeroLength on empty input.
double repeat_score_at_5(std::span<const TokenId> tokens);

// Occurrences of n-grams beyond the first of each distinct n-gram.
double ngram_repeat_count(std::span<const TokenId> tokens, std::size_t n);

// Sample Pearson correlation. Throws kInvalidParameter for fewer than 3
// points or unequal lengths and kUndefinedCorrelation for zero variance.
double pearson_correlation(std::span<const double> xs, std::span<const double> ys);

enum class F1Mode { kText, kDialog };

struct MetricRow {
  std::string config_id;
  double f1 = 0.0;
  double repeat_score5 = 0.0;
  double ngram3_repeats = 0.0;
  double evr = 0.0;
  double elvr = 0.0;
  double euvr = 0.0;
  double det_pct = 0.0;
  double backoffs_mean = 0.0;
};

// Det% as reported in tables: 100 for greedy and beam, 0 for samplers, the
// intervention-aware fraction for entropy-aware decoding.
double reported_det_pct(const GenerationRecord& record);

// Per-record metrics macro-averaged over records. Violation ratios score the
// record's smoothed entropy trace (profile window) against the zone of the
// given width. Empty generations score 0 on every per-token metric.
MetricRow aggregate_records(std::span<const GenerationRecord> records,
                            std::span<const TokenSequence> targets,
                            const StableEntropyProfile& profile, double width, F1Mode mode,
                            const Vocabulary& vocab, std::string config_id = {});

// CSV with the fixed column order below, 6 decimal places.
inline constexpr std::string_view kMetricColumns =
    "config_id,f1,repeat_score5,ngram3_repeats,evr,elvr,euvr,det_pct,backoffs_mean";
std::string metric_row_csv(const MetricRow& row);

}  // namespace entcal
