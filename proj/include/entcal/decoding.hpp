// Copyright 2026 The entcal Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "entcal/distribution.hpp"
#include "entcal/profile.hpp"
#include "entcal/provider.hpp"

namespace entcal {

// ---------------------------------------------------------------------------
// Truncation and sampling

enum class TruncationKind { kNone, kTopK, kNucleus, kTypical };

struct TruncationPolicy {
  TruncationKind kind = TruncationKind::kNone;
  std::size_t k = 0;         // top-k
  double p = 1.0;            // nucleus
  double tau = 1.0;          // typical
  double temperature = 1.0;  // applied before truncation

  static TruncationPolicy none(double temperature = 1.0);
  static TruncationPolicy top_k(std::size_t k, double temperature = 1.0);
  static TruncationPolicy nucleus(double p, double temperature = 1.0);
  static TruncationPolicy typical(double tau, double temperature = 1.0);
};

// Logprobs scaled by 1/temperature and renormalized. Throws kInvalidParameter
// for temperature <= 0.
ConditionalDistribution apply_temperature(const ConditionalDistribution& dist, double temperature);

// Keeps the k most probable tokens (ties to the lower id) and renormalizes.
ConditionalDistribution truncate_top_k(const ConditionalDistribution& dist, std::size_t k);

// Keeps the shortest probability-sorted prefix whose mass reaches p.
ConditionalDistribution truncate_nucleus(const ConditionalDistribution& dist, double p);

// Ranks tokens by |surprisal - entropy| (ties: higher probability, then lower
// id) and keeps the shortest prefix whose mass reaches tau.
ConditionalDistribution truncate_typical(const ConditionalDistribution& dist, double tau);

// Temperature followed by the policy's truncation.
ConditionalDistribution apply_policy(const ConditionalDistribution& dist,
                                     const TruncationPolicy& policy);

// Deterministic PRNG: mt19937_64 with a portable 53-bit uniform draw.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

 private:
  std::mt19937_64 engine_;
};

// Inverse-CDF draw in token-id order. Throws kInvalidDistribution.
TokenId sample_from(const ConditionalDistribution& dist, Rng& rng);

// ---------------------------------------------------------------------------
// Generation

enum class DecoderKind { kGreedy, kBeam, kSample, kEntropyAware };

std::string decoder_kind_name(DecoderKind kind);

struct GenerationRecord {
  DecoderKind kind = DecoderKind::kGreedy;
  TokenSequence tokens{{}, Origin::kGenerated};  // generated tokens, EOS excluded
  std::vector<double> entropies;   // model entropy at each step, nats
  std::vector<double> surprisals;  // -log p(chosen token), nats
  std::vector<bool> greedy_flags;  // chosen token was the argmax (and no EUI)
  std::size_t eui_count = 0;
  std::size_t backoff_count = 0;
  double det_fraction = 0.0;
  std::uint64_t seed = 0;
  bool truncated = false;  // blocked beam or exhausted backoff budget

  std::size_t size() const { return tokens.ids.size(); }
  void finalize_det_fraction();

  // One JSON object per line; traces carry 9 decimal places.
  std::string to_json_line() const;
  static GenerationRecord from_json_line(const std::string& line);
};

struct DecodeRequest {
  const ModelProvider* provider = nullptr;
  TokenSequence prefix;
  std::size_t max_len = 64;
  std::uint64_t seed = 0;
  bool stop_at_eos = true;
};

struct EADConfig {
  TruncationPolicy sampler = TruncationPolicy::typical(0.2);
  std::size_t patience = 5;      // N
  double margin = 0.5;           // alpha, in sigma units; +inf disables both interventions
  std::size_t ngreedy = 10;      // g
  std::size_t max_backoffs = 50;
  bool enable_eui = true;
  bool enable_eli = true;
  const StableEntropyProfile* profile = nullptr;
};

GenerationRecord greedy_decode(const DecodeRequest& req);

// Beam search over summed logprobs with no length normalization. A candidate
// ending in EOS that ranks among the top `beam` expansions is moved to the
// finished pool; live hypotheses are the best `beam` non-EOS expansions.
// block_ngram = b forbids any expansion that repeats a b-gram already present
// in prefix + hypothesis.
GenerationRecord beam_search(const DecodeRequest& req, std::size_t beam,
                             std::optional<std::size_t> block_ngram = std::nullopt);

GenerationRecord stochastic_decode(const DecodeRequest& req, const TruncationPolicy& policy);

// Entropy-aware decoding. Steps 0..g-1 are greedy. Afterwards an entropy
// above mu + alpha*sigma replaces the argmax with a sample from the fallback
// sampler (EUI), and more than N consecutive steps below mu - alpha*sigma
// rewind to step t - N (never below g) and take the best untried token there
// (ELI).
GenerationRecord entropy_aware_decode(const DecodeRequest& req, const EADConfig& cfg);

}  // namespace entcal
