// Copyright 2026 The entcal Authors
// SPDX-License-Identifier: Apache-2.0

// Brute-force reference implementations shared by the unit tests and the
// acceptance checks.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <random>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "entcal/distribution.hpp"
#include "entcal/provider.hpp"
#include "entcal/util.hpp"

namespace entcal::oracles {

// Provider whose distribution is computed by a callback on the context.
class ScriptedProvider final : public ModelProvider {
 public:
  using Fn = std::function<std::vector<double>(std::span<const TokenId>)>;

  ScriptedProvider(std::size_t vocab_size, Fn fn, std::string name = "scripted")
      : v_(vocab_size), fn_(std::move(fn)), name_(std::move(name)) {}

  VocabInfo vocab_info() const override { return {v_, 2, 3, 1}; }
  ConditionalDistribution next_distribution(std::span<const TokenId> context) const override {
    ++calls;
    auto d = ConditionalDistribution::from_probs(fn_(context), context.size());
    return d;
  }
  TokenSequence encode(std::string_view) const override { return {{2}, Origin::kCorpusTarget}; }
  std::string decode(std::span<const TokenId> ids) const override {
    std::string out;
    for (TokenId id : ids) {
      if (!out.empty()) out.push_back(' ');
      out += "t" + std::to_string(id);
    }
    return out;
  }
  std::string fingerprint() const override { return name_; }

  mutable std::size_t calls = 0;

 private:
  std::size_t v_;
  Fn fn_;
  std::string name_;
};

// Probabilities over V ids from sparse weights; ids without a weight get
// `eps` each and the result is normalized.
inline std::vector<double> weights(std::size_t v, const std::map<TokenId, double>& w,
                                   double eps = 1e-9) {
  std::vector<double> p(v, eps);
  for (auto [id, x] : w) p[static_cast<std::size_t>(id)] = x;
  double s = 0.0;
  for (double x : p) s += x;
  for (double& x : p) x /= s;
  return p;
}

inline std::vector<double> random_probs(std::mt19937_64& rng, std::size_t v) {
  std::exponential_distribution<double> ex(1.0);
  std::vector<double> p(v);
  double s = 0.0;
  for (double& x : p) {
    x = ex(rng);
    s += x;
  }
  for (double& x : p) x /= s;
  return p;
}

// Deterministic pseudo-random distribution keyed by context.
inline std::vector<double> hashed_probs(std::span<const TokenId> context, std::size_t v,
                                        std::uint64_t salt) {
  std::uint64_t h = salt;
  for (TokenId id : context) h = splitmix64(h ^ static_cast<std::uint64_t>(id + 1));
  std::mt19937_64 rng(h);
  return random_probs(rng, v);
}

inline std::set<TokenId> kept(const ConditionalDistribution& d) {
  std::set<TokenId> s;
  for (std::size_t i = 0; i < d.size(); ++i) {
    if (!std::isinf(d.logprobs[i])) s.insert(static_cast<TokenId>(i));
  }
  return s;
}

// Token w precedes u when it is more probable, or equally probable with a
// lower id.
inline bool precedes(const std::vector<double>& p, std::size_t w, std::size_t u) {
  return p[w] > p[u] || (p[w] == p[u] && w < u);
}

inline std::set<TokenId> ref_top_k(const std::vector<double>& p, std::size_t k) {
  std::set<TokenId> s;
  for (std::size_t w = 0; w < p.size(); ++w) {
    std::size_t ahead = 0;
    for (std::size_t u = 0; u < p.size(); ++u) ahead += precedes(p, u, w);
    if (ahead < k) s.insert(static_cast<TokenId>(w));
  }
  return s;
}

inline std::set<TokenId> ref_nucleus(const std::vector<double>& p, double top_p) {
  std::set<TokenId> s;
  for (std::size_t w = 0; w < p.size(); ++w) {
    double ahead = 0.0;
    for (std::size_t u = 0; u < p.size(); ++u) {
      if (precedes(p, u, w)) ahead += p[u];
    }
    if (ahead < top_p) s.insert(static_cast<TokenId>(w));
  }
  return s;
}

// Smallest typicality cutoff c whose set {w : score(w) <= c} holds mass tau.
inline std::set<TokenId> ref_typical(const std::vector<double>& p, double tau) {
  double h = 0.0;
  for (double x : p) h -= x * std::log(x);
  std::vector<double> score(p.size());
  for (std::size_t w = 0; w < p.size(); ++w) score[w] = std::abs(-std::log(p[w]) - h);
  std::vector<double> cutoffs = score;
  std::sort(cutoffs.begin(), cutoffs.end());
  for (double c : cutoffs) {
    double mass = 0.0;
    for (std::size_t w = 0; w < p.size(); ++w) {
      if (score[w] <= c) mass += p[w];
    }
    if (mass >= tau) {
      std::set<TokenId> s;
      for (std::size_t w = 0; w < p.size(); ++w) {
        if (score[w] <= c) s.insert(static_cast<TokenId>(w));
      }
      return s;
    }
  }
  std::set<TokenId> all;
  for (std::size_t w = 0; w < p.size(); ++w) all.insert(static_cast<TokenId>(w));
  return all;
}

inline std::vector<double> brute_smooth(const std::vector<double>& x, int u) {
  std::vector<double> out(x.size());
  for (std::size_t t = 0; t < x.size(); ++t) {
    const std::size_t lo = t >= static_cast<std::size_t>(u) ? t - static_cast<std::size_t>(u) : 0;
    double s = 0.0;
    for (std::size_t j = lo; j <= t; ++j) s += x[j];
    out[t] = s / static_cast<double>(t - lo + 1);
  }
  return out;
}

inline double sequence_score(const ModelProvider& p, const std::vector<TokenId>& prefix,
                      const std::vector<TokenId>& seq) {
  std::vector<TokenId> ctx = prefix;
  double s = 0.0;
  for (TokenId w : seq) {
    s += p.next_distribution(ctx).logprobs[static_cast<std::size_t>(w)];
    ctx.push_back(w);
  }
  return s;
}

// Every sequence over V tokens of length exactly T (or, with EOS stopping,
// any EOS-free body of length < T followed by EOS, or EOS-free of length T).
inline std::vector<TokenId> exhaustive_best(const ModelProvider& p, std::size_t v, std::size_t t,
                                     bool stop_at_eos) {
  const TokenId eos = p.vocab_info().eos;
  std::vector<TokenId> best;
  double best_score = -std::numeric_limits<double>::infinity();
  for (std::size_t len = stop_at_eos ? 0 : t; len <= t; ++len) {
    std::size_t total = 1;
    for (std::size_t i = 0; i < len; ++i) total *= v;
    for (std::size_t code = 0; code < total; ++code) {
      std::vector<TokenId> body;
      std::size_t c = code;
      bool ok = true;
      for (std::size_t i = 0; i < len; ++i) {
        body.push_back(static_cast<TokenId>(c % v));
        c /= v;
        if (stop_at_eos && body.back() == eos) ok = false;
      }
      if (!ok) continue;
      auto scored = body;
      if (stop_at_eos && len < t) scored.push_back(eos);
      const double s = sequence_score(p, {2}, scored);
      if (s > best_score) {
        best_score = s;
        best = body;
      }
    }
  }
  return best;
}

// Independent counting: every window compared against every earlier window.
inline std::size_t brute_repeats(const std::vector<TokenId>& t, std::size_t n) {
  if (t.size() < n) return 0;
  std::size_t r = 0;
  for (std::size_t i = 0; i + n <= t.size(); ++i) {
    for (std::size_t j = 0; j < i; ++j) {
      if (std::equal(t.begin() + i, t.begin() + i + n, t.begin() + j)) {
        ++r;
        break;
      }
    }
  }
  return r;
}

inline double brute_repeat_score(const std::vector<TokenId>& t) {
  double num = 0.0, den = 0.0;
  for (std::size_t i = 1; i <= 5; ++i) {
    const double r = static_cast<double>(brute_repeats(t, i));
    num += std::pow(2.0, static_cast<double>(i)) * r;
    den += r;
  }
  if (den == 0.0) return 0.0;
  return std::log2(num / den) * static_cast<double>(brute_repeats(t, 1)) /
         static_cast<double>(t.size());
}

// Scripted contexts for entropy-aware decoding over V = 8, scored against a
// flat zone mu = 1.0, sigma = 0.1, alpha = 1, i.e. [0.9, 1.1].
inline constexpr std::size_t kScriptV = 8;
inline const std::vector<double>& script_mid() {  // H ~ 0.950
  static const auto p = weights(kScriptV, {{4, 0.6}, {5, 0.2}, {6, 0.2}});
  return p;
}
inline const std::vector<double>& script_high() {  // H ~ 1.280
  static const auto p = weights(kScriptV, {{4, 0.4}, {5, 0.3}, {6, 0.2}, {7, 0.1}});
  return p;
}
inline const std::vector<double>& script_low() {  // H ~ 0.056
  static const auto p = weights(kScriptV, {{4, 0.97}, {5, 0.02}, {6, 0.01}});
  return p;
}

// High entropy at generated steps 0 and 2, mid elsewhere.
inline std::vector<double> eui_script(std::span<const TokenId> ctx) {
  const std::size_t step = ctx.size() - 1;
  return step == 0 || step == 2 ? script_high() : script_mid();
}

// Low entropy until a 5 has been generated; step 0 is mid.
inline std::vector<double> eli_script(std::span<const TokenId> ctx) {
  const auto gen = ctx.subspan(1);
  if (gen.empty()) return script_mid();
  return std::find(gen.begin(), gen.end(), 5) != gen.end() ? script_mid() : script_low();
}

// Smallest seed whose first uniform draw from a generator of type G
// satisfies `pred`.
template <typename G, typename Pred>
std::uint64_t first_seed_where(Pred pred) {
  for (std::uint64_t s = 1;; ++s) {
    G rng(s);
    if (pred(rng.uniform())) return s;
  }
}

}  // namespace entcal::oracles
