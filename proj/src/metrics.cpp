// Copyright 2026 The entcal Authors
// SPDX-License-Identifier: Apache-2.0

#include "entcal/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include "entcal/error.hpp"
#include "entcal/util.hpp"

namespace entcal {

const std::vector<std::string>& bundled_stopwords() {
  static const std::vector<std::string> words = {
      "a", "about", "above", "after", "again", "against", "all", "am", "an", "and", "any",
      "are", "as", "at", "be", "because", "been", "before", "being", "below", "between",
      "both", "but", "by", "can", "could", "did", "do", "does", "doing", "down", "during",
      "each", "few", "for", "from", "further", "had", "has", "have", "having", "he", "her",
      "here", "hers", "herself", "him", "himself", "his", "how", "i", "if", "in", "into",
      "is", "it", "its", "itself", "just", "me", "more", "most", "my", "myself", "no", "nor",
      "not", "now", "of", "off", "on", "once", "only", "or", "other", "our", "ours",
      "ourselves", "out", "over", "own", "same", "she", "should", "so", "some", "such",
      "than", "that", "the", "their", "theirs", "them", "themselves", "then", "there",
      "these", "they", "this", "those", "through", "to", "too", "under", "until", "up",
      "very", "was", "we", "were", "what", "when", "where", "which", "while", "who", "whom",
      "why", "will", "with", "would", "you", "your", "yours", "yourself", "yourselves",
      ".", ",", ";", ":", "!", "?", "'", "\"", "(", ")", "-", "'s"};
  return words;
}

TokenFilter::TokenFilter(const Vocabulary& vocab, bool filter_stopwords) {
  for (std::size_t i = 0; i < kNumSpecials; ++i) excluded_.insert(static_cast<TokenId>(i));
  if (!filter_stopwords) return;
  for (const auto& w : bundled_stopwords()) {
    if (vocab.contains(w)) excluded_.insert(vocab.id_of(w));
  }
}

double f1_overlap(std::span<const TokenId> generated, std::span<const TokenId> target,
                  const TokenFilter* filter) {
  auto to_set = [filter](std::span<const TokenId> ids) {
    std::set<TokenId> s;
    for (TokenId id : ids) {
      if (filter == nullptr || !filter->excluded(id)) s.insert(id);
    }
    return s;
  };
  const auto gen = to_set(generated);
  const auto ref = to_set(target);
  if (gen.empty() || ref.empty()) return 0.0;
  std::size_t common = 0;
  for (TokenId id : gen) common += ref.count(id);
  if (common == 0) return 0.0;
  const double precision = static_cast<double>(common) / static_cast<double>(gen.size());
  const double recall = static_cast<double>(common) / static_cast<double>(ref.size());
  return 2.0 * precision * recall / (precision + recall);
}

std::array<std::size_t, 5> repeated_ngram_counts(std::span<const TokenId> tokens) {
  std::array<std::size_t, 5> rep{};
  for (std::size_t n = 1; n <= 5; ++n) {
    rep[n - 1] = static_cast<std::size_t>(ngram_repeat_count(tokens, n));
  }
  return rep;
}

double ngram_repeat_count(std::span<const TokenId> tokens, std::size_t n) {
  if (n < 1) throw Error(ErrorCode::kInvalidParameter, "n-gram size must be >= 1");
  if (tokens.size() < n) return 0.0;
  std::set<std::vector<TokenId>> seen;
  std::size_t occurrences = 0;
  for (std::size_t i = 0; i + n <= tokens.size(); ++i) {
    seen.emplace(tokens.begin() + static_cast<std::ptrdiff_t>(i),
                 tokens.begin() + static_cast<std::ptrdiff_t>(i + n));
    ++occurrences;
  }
  return static_cast<double>(occurrences - seen.size());
}

double repeat_score_at_5(std::span<const TokenId> tokens) {
  if (tokens.empty()) throw Error(ErrorCode::kZeroLength, "repeat score of empty sequence");
  const auto rep = repeated_ngram_counts(tokens);
  double weighted = 0.0;
  double cumulative = 0.0;
  for (std::size_t i = 0; i < rep.size(); ++i) {
    weighted += std::ldexp(static_cast<double>(rep[i]), static_cast<int>(i + 1));
    cumulative += static_cast<double>(rep[i]);
  }
  if (cumulative == 0.0) return 0.0;
  return std::log2(weighted / cumulative) * static_cast<double>(rep[0]) /
         static_cast<double>(tokens.size());
}

double pearson_correlation(std::span<const double> xs, std::span<const double> ys) {
  if (xs.size() != ys.size()) throw Error(ErrorCode::kInvalidParameter, "unequal lengths");
  if (xs.size() < 3) throw Error(ErrorCode::kInvalidParameter, "need at least 3 points");
  const double n = static_cast<double>(xs.size());
  double mx = 0.0;
  double my = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    mx += xs[i];
    my += ys[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0;
  double syy = 0.0;
  double sxy = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double dx = xs[i] - mx;
    const double dy = ys[i] - my;
    sxx += dx * dx;
    syy += dy * dy;
    sxy += dx * dy;
  }
  if (sxx == 0.0 || syy == 0.0) {
    throw Error(ErrorCode::kUndefinedCorrelation, "correlation undefined for zero variance");
  }
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

double reported_det_pct(const GenerationRecord& record) {
  switch (record.kind) {
    case DecoderKind::kGreedy:
    case DecoderKind::kBeam: return 100.0;
    case DecoderKind::kSample: return 0.0;
    case DecoderKind::kEntropyAware: return 100.0 * record.det_fraction;
  }
  return 0.0;
}

MetricRow aggregate_records(std::span<const GenerationRecord> records,
                            std::span<const TokenSequence> targets,
                            const StableEntropyProfile& profile, double width, F1Mode mode,
                            const Vocabulary& vocab, std::string config_id) {
  if (records.size() != targets.size()) {
    throw Error(ErrorCode::kAlignment, std::to_string(records.size()) + " records vs " +
                                           std::to_string(targets.size()) + " targets");
  }
  if (records.empty()) throw Error(ErrorCode::kEmptyDataset, "no records to aggregate");
  const TokenFilter filter(vocab, mode == F1Mode::kText);
  MetricRow row;
  row.config_id = std::move(config_id);
  for (std::size_t i = 0; i < records.size(); ++i) {
    const auto& rec = records[i];
    const auto& toks = rec.tokens.ids;
    row.f1 += f1_overlap(toks, targets[i].ids, &filter);
    row.det_pct += reported_det_pct(rec);
    row.backoffs_mean += static_cast<double>(rec.backoff_count);
    if (toks.empty()) continue;
    row.repeat_score5 += repeat_score_at_5(toks);
    row.ngram3_repeats += ngram_repeat_count(toks, 3);
    const auto smoothed = smooth_trace(rec.entropies, profile.window);
    const auto v = detect_violations(smoothed, profile, width);
    row.evr += v.evr;
    row.elvr += v.elvr;
    row.euvr += v.euvr;
  }
  const double n = static_cast<double>(records.size());
  for (double* x : {&row.f1, &row.repeat_score5, &row.ngram3_repeats, &row.evr, &row.elvr,
                    &row.euvr, &row.det_pct, &row.backoffs_mean}) {
    *x /= n;
  }
  return row;
}

std::string metric_row_csv(const MetricRow& row) {
  std::string out = row.config_id;
  for (double x : {row.f1, row.repeat_score5, row.ngram3_repeats, row.evr, row.elvr, row.euvr,
                   row.det_pct, row.backoffs_mean}) {
    out.push_back(',');
    out += format_fixed(x, 6);
  }
  return out;
}

}  // namespace entcal
