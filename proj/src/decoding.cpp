// Copyright 2026 The entcal Authors
// SPDX-License-Identifier: Apache-2.0

#include "entcal/decoding.hpp"

#include <algorithm>
#include <cmath>
#include <json.hpp>
#include <numeric>

#include "entcal/error.hpp"
#include "entcal/util.hpp"

namespace entcal {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

[[noreturn]] void invalid(const std::string& what) {
  throw Error(ErrorCode::kInvalidParameter, what);
}

// Renormalizes `dist` over `keep` (ids); everything else becomes -inf.
ConditionalDistribution keep_only(const ConditionalDistribution& dist,
                                  std::span<const TokenId> keep) {
  double mass = 0.0;
  for (TokenId id : keep) mass += std::exp(dist.logprobs[static_cast<std::size_t>(id)]);
  const double shift = std::log(mass);
  ConditionalDistribution out;
  out.step = dist.step;
  out.logprobs.assign(dist.size(), kNegInf);
  for (TokenId id : keep) {
    const auto i = static_cast<std::size_t>(id);
    out.logprobs[i] = dist.logprobs[i] - shift;
  }
  return out;
}

// Shortest prefix of `order` whose probability mass reaches `threshold`;
// the whole order when rounding keeps the running sum below it.
std::size_t mass_prefix(const ConditionalDistribution& dist, std::span<const TokenId> order,
                        double threshold) {
  double cum = 0.0;
  for (std::size_t i = 0; i < order.size(); ++i) {
    cum += std::exp(dist.logprobs[static_cast<std::size_t>(order[i])]);
    if (cum >= threshold) return i + 1;
  }
  return order.size();
}

std::vector<TokenId> concat(const std::vector<TokenId>& a, const std::vector<TokenId>& b) {
  std::vector<TokenId> out;
  out.reserve(a.size() + b.size() + 1);
  out.insert(out.end(), a.begin(), a.end());
  out.insert(out.end(), b.begin(), b.end());
  return out;
}

void require_provider(const DecodeRequest& req) {
  if (req.provider == nullptr) invalid("decode request without provider");
  if (req.max_len < 1) invalid("max_len must be >= 1");
}

}  // namespace

TruncationPolicy TruncationPolicy::none(double temperature) {
  TruncationPolicy p;
  p.temperature = temperature;
  return p;
}

TruncationPolicy TruncationPolicy::top_k(std::size_t k, double temperature) {
  TruncationPolicy p;
  p.kind = TruncationKind::kTopK;
  p.k = k;
  p.temperature = temperature;
  return p;
}

TruncationPolicy TruncationPolicy::nucleus(double top_p, double temperature) {
  TruncationPolicy p;
  p.kind = TruncationKind::kNucleus;
  p.p = top_p;
  p.temperature = temperature;
  return p;
}

TruncationPolicy TruncationPolicy::typical(double tau, double temperature) {
  TruncationPolicy p;
  p.kind = TruncationKind::kTypical;
  p.tau = tau;
  p.temperature = temperature;
  return p;
}

ConditionalDistribution apply_temperature(const ConditionalDistribution& dist,
                                          double temperature) {
  if (!(temperature > 0.0) || !std::isfinite(temperature)) {
    invalid("temperature must be a finite value > 0");
  }
  if (temperature == 1.0) return dist;
  ConditionalDistribution out;
  out.step = dist.step;
  out.logprobs.resize(dist.size());
  double top = kNegInf;
  for (std::size_t i = 0; i < dist.size(); ++i) {
    out.logprobs[i] = dist.logprobs[i] / temperature;
    top = std::max(top, out.logprobs[i]);
  }
  double mass = 0.0;
  for (double lp : out.logprobs) mass += std::exp(lp - top);
  const double shift = top + std::log(mass);
  for (double& lp : out.logprobs) lp -= shift;
  return out;
}

ConditionalDistribution truncate_top_k(const ConditionalDistribution& dist, std::size_t k) {
  if (k < 1 || k > dist.size()) invalid("top-k k must be in [1, V]");
  auto order = rank_tokens(dist);
  return keep_only(dist, std::span<const TokenId>(order).first(k));
}

ConditionalDistribution truncate_nucleus(const ConditionalDistribution& dist, double p) {
  if (!(p > 0.0 && p <= 1.0)) invalid("nucleus p must be in (0, 1]");
  auto order = rank_tokens(dist);
  const std::size_t m = mass_prefix(dist, order, p);
  return keep_only(dist, std::span<const TokenId>(order).first(m));
}

ConditionalDistribution truncate_typical(const ConditionalDistribution& dist, double tau) {
  if (!(tau > 0.0 && tau <= 1.0)) invalid("typical tau must be in (0, 1]");
  const double h = entropy_nats(dist);
  const std::size_t v = dist.size();
  std::vector<double> score(v);
  for (std::size_t i = 0; i < v; ++i) {
    const double lp = dist.logprobs[i];
    score[i] = std::isinf(lp) ? std::numeric_limits<double>::infinity() : std::abs(-lp - h);
  }
  std::vector<TokenId> order(v);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](TokenId a, TokenId b) {
    const auto ia = static_cast<std::size_t>(a);
    const auto ib = static_cast<std::size_t>(b);
    if (score[ia] != score[ib]) return score[ia] < score[ib];
    if (dist.logprobs[ia] != dist.logprobs[ib]) return dist.logprobs[ia] > dist.logprobs[ib];
    return a < b;
  });
  std::size_t m = mass_prefix(dist, order, tau);
  // Tokens tied with the last kept one on typicality are kept with it.
  const double cutoff = score[static_cast<std::size_t>(order[m - 1])];
  while (m < v && score[static_cast<std::size_t>(order[m])] == cutoff) ++m;
  return keep_only(dist, std::span<const TokenId>(order).first(m));
}

ConditionalDistribution apply_policy(const ConditionalDistribution& dist,
                                     const TruncationPolicy& policy) {
  ConditionalDistribution d = apply_temperature(dist, policy.temperature);
  switch (policy.kind) {
    case TruncationKind::kNone: return d;
    case TruncationKind::kTopK: return truncate_top_k(d, std::min(policy.k, d.size()));
    case TruncationKind::kNucleus: return truncate_nucleus(d, policy.p);
    case TruncationKind::kTypical: return truncate_typical(d, policy.tau);
  }
  return d;
}

TokenId sample_from(const ConditionalDistribution& dist, Rng& rng) {
  check_normalized(dist);
  const double u = rng.uniform();
  double cum = 0.0;
  TokenId last_positive = 0;
  for (std::size_t i = 0; i < dist.size(); ++i) {
    if (std::isinf(dist.logprobs[i])) continue;
    cum += std::exp(dist.logprobs[i]);
    last_positive = static_cast<TokenId>(i);
    if (u < cum) return static_cast<TokenId>(i);
  }
  return last_positive;
}

std::string decoder_kind_name(DecoderKind kind) {
  switch (kind) {
    case DecoderKind::kGreedy: return "greedy";
    case DecoderKind::kBeam: return "beam";
    case DecoderKind::kSample: return "sample";
    case DecoderKind::kEntropyAware: return "ead";
  }
  return "unknown";
}

void GenerationRecord::finalize_det_fraction() {
  if (greedy_flags.empty()) {
    det_fraction = kind == DecoderKind::kGreedy || kind == DecoderKind::kBeam ? 1.0 : 0.0;
    return;
  }
  std::size_t n = 0;
  for (bool f : greedy_flags) n += f ? 1 : 0;
  det_fraction = static_cast<double>(n) / static_cast<double>(greedy_flags.size());
}

std::string GenerationRecord::to_json_line() const {
  std::string out = "{\"kind\":\"" + decoder_kind_name(kind) + "\",\"seed\":" +
                    std::to_string(seed) + ",\"eui\":" + std::to_string(eui_count) +
                    ",\"backoffs\":" + std::to_string(backoff_count) +
                    ",\"det\":" + format_fixed(det_fraction, 9) +
                    ",\"truncated\":" + (truncated ? "true" : "false") + ",\"tokens\":[";
  for (std::size_t i = 0; i < tokens.ids.size(); ++i) {
    if (i) out.push_back(',');
    out += std::to_string(tokens.ids[i]);
  }
  auto reals = [&out](const char* key, const std::vector<double>& xs) {
    out += "],\"";
    out += key;
    out += "\":[";
    for (std::size_t i = 0; i < xs.size(); ++i) {
      if (i) out.push_back(',');
      out += format_fixed(xs[i], 9);
    }
  };
  reals("entropies", entropies);
  reals("surprisals", surprisals);
  out += "],\"greedy\":[";
  for (std::size_t i = 0; i < greedy_flags.size(); ++i) {
    if (i) out.push_back(',');
    out.push_back(greedy_flags[i] ? '1' : '0');
  }
  out += "]}";
  return out;
}

GenerationRecord GenerationRecord::from_json_line(const std::string& line) {
  using nlohmann::json;
  json j = json::parse(line, nullptr, false);
  if (j.is_discarded() || !j.is_object()) throw Error(ErrorCode::kFormat, "bad record line");
  GenerationRecord r;
  try {
    const std::string kind = j.at("kind").get<std::string>();
    if (kind == "greedy") r.kind = DecoderKind::kGreedy;
    else if (kind == "beam") r.kind = DecoderKind::kBeam;
    else if (kind == "sample") r.kind = DecoderKind::kSample;
    else if (kind == "ead") r.kind = DecoderKind::kEntropyAware;
    else throw Error(ErrorCode::kFormat, "unknown record kind '" + kind + "'");
    r.seed = j.at("seed").get<std::uint64_t>();
    r.eui_count = j.at("eui").get<std::size_t>();
    r.backoff_count = j.at("backoffs").get<std::size_t>();
    r.det_fraction = j.at("det").get<double>();
    r.truncated = j.at("truncated").get<bool>();
    r.tokens.ids = j.at("tokens").get<std::vector<TokenId>>();
    r.entropies = j.at("entropies").get<std::vector<double>>();
    r.surprisals = j.at("surprisals").get<std::vector<double>>();
    for (int f : j.at("greedy").get<std::vector<int>>()) r.greedy_flags.push_back(f != 0);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kFormat, std::string("bad record line: ") + e.what());
  }
  const std::size_t n = r.tokens.ids.size();
  if (r.entropies.size() != n || r.surprisals.size() != n || r.greedy_flags.size() != n) {
    throw Error(ErrorCode::kFormat, "record traces do not match token count");
  }
  return r;
}

GenerationRecord greedy_decode(const DecodeRequest& req) {
  require_provider(req);
  const TokenId eos = req.provider->vocab_info().eos;
  GenerationRecord rec;
  rec.kind = DecoderKind::kGreedy;
  rec.seed = req.seed;
  std::vector<TokenId> context = req.prefix.ids;
  for (std::size_t step = 0; step < req.max_len; ++step) {
    auto dist = req.provider->next_distribution(context);
    const TokenId w = argmax(dist);
    if (req.stop_at_eos && w == eos) break;
    rec.tokens.ids.push_back(w);
    rec.entropies.push_back(entropy_nats(dist));
    rec.surprisals.push_back(surprisal_nats(dist, w));
    rec.greedy_flags.push_back(true);
    context.push_back(w);
  }
  rec.finalize_det_fraction();
  return rec;
}

namespace {

struct Hypothesis {
  std::vector<TokenId> tokens;
  std::vector<double> entropies;
  std::vector<double> surprisals;
  std::vector<bool> greedy;
  double score = 0.0;
};

struct Candidate {
  double score;
  std::size_t parent;
  TokenId token;
};

// Tokens that would recreate an n-gram already present in `seq` when
// appended to it.
std::vector<TokenId> banned_continuations(const std::vector<TokenId>& seq, std::size_t n) {
  std::vector<TokenId> banned;
  if (n == 0 || seq.size() + 1 < n) return banned;
  if (n == 1) return seq;
  const std::size_t tail = seq.size() - (n - 1);  // start of the trailing (n-1)-gram
  for (std::size_t start = 0; start + n <= seq.size(); ++start) {
    bool same = true;
    for (std::size_t i = 0; same && i + 1 < n; ++i) same = seq[start + i] == seq[tail + i];
    if (same) banned.push_back(seq[start + n - 1]);
  }
  return banned;
}

GenerationRecord to_record(const Hypothesis& h, std::uint64_t seed) {
  GenerationRecord rec;
  rec.kind = DecoderKind::kBeam;
  rec.seed = seed;
  rec.tokens.ids = h.tokens;
  rec.entropies = h.entropies;
  rec.surprisals = h.surprisals;
  rec.greedy_flags = h.greedy;
  rec.finalize_det_fraction();
  return rec;
}

}  // namespace

GenerationRecord beam_search(const DecodeRequest& req, std::size_t beam,
                             std::optional<std::size_t> block_ngram) {
  require_provider(req);
  if (beam < 1) invalid("beam size must be >= 1");
  if (block_ngram && *block_ngram < 1) invalid("n-gram block size must be >= 1");
  const TokenId eos = req.provider->vocab_info().eos;

  std::vector<Hypothesis> live(1);
  std::vector<Hypothesis> finished;
  bool blocked = false;

  // Only the regular part of the prefix participates in n-gram blocking.
  std::vector<TokenId> prefix_body;
  for (TokenId id : req.prefix.ids) {
    if (id != req.provider->vocab_info().bos) prefix_body.push_back(id);
  }

  for (std::size_t step = 0; step < req.max_len && !live.empty(); ++step) {
    std::vector<ConditionalDistribution> dists;
    std::vector<double> entropies;
    std::vector<TokenId> argmaxes;
    std::vector<Candidate> cands;
    for (std::size_t i = 0; i < live.size(); ++i) {
      dists.push_back(req.provider->next_distribution(concat(req.prefix.ids, live[i].tokens)));
      entropies.push_back(entropy_nats(dists.back()));
      argmaxes.push_back(argmax(dists.back()));
      const auto& lp = dists.back().logprobs;
      std::vector<char> is_banned(lp.size(), 0);
      if (block_ngram) {
        for (TokenId b : banned_continuations(concat(prefix_body, live[i].tokens), *block_ngram)) {
          if (!(req.stop_at_eos && b == eos)) is_banned[static_cast<std::size_t>(b)] = 1;
        }
      }
      for (std::size_t w = 0; w < lp.size(); ++w) {
        if (is_banned[w]) continue;
        cands.push_back({live[i].score + lp[w], i, static_cast<TokenId>(w)});
      }
    }
    if (cands.empty()) {
      blocked = true;
      break;
    }
    auto better = [](const Candidate& a, const Candidate& b) {
      if (a.score != b.score) return a.score > b.score;
      if (a.parent != b.parent) return a.parent < b.parent;
      return a.token < b.token;
    };
    const std::size_t take = std::min(cands.size(), 2 * beam);
    std::partial_sort(cands.begin(), cands.begin() + static_cast<std::ptrdiff_t>(take),
                      cands.end(), better);

    std::vector<Hypothesis> next;
    for (std::size_t rank = 0; rank < take && next.size() < beam; ++rank) {
      const Candidate& c = cands[rank];
      const Hypothesis& parent = live[c.parent];
      if (req.stop_at_eos && c.token == eos) {
        if (rank < beam) {
          Hypothesis done = parent;
          done.score = c.score;
          finished.push_back(std::move(done));
        }
        continue;
      }
      Hypothesis h = parent;
      h.tokens.push_back(c.token);
      h.entropies.push_back(entropies[c.parent]);
      h.surprisals.push_back(-dists[c.parent].logprobs[static_cast<std::size_t>(c.token)]);
      h.greedy.push_back(c.token == argmaxes[c.parent]);
      h.score = c.score;
      next.push_back(std::move(h));
    }
    if (next.empty() && finished.empty()) {
      blocked = true;
      break;
    }
    live = std::move(next);
    // Scores only decrease, so no live hypothesis can overtake the best
    // finished one.
    if (!finished.empty() && !live.empty()) {
      double best_finished = finished.front().score;
      for (const auto& f : finished) best_finished = std::max(best_finished, f.score);
      if (best_finished >= live.front().score) break;
    }
  }

  const Hypothesis* best = nullptr;
  for (const auto& f : finished) {
    if (best == nullptr || f.score > best->score) best = &f;
  }
  if (!blocked) {
    for (const auto& h : live) {
      if (best == nullptr || h.score > best->score) best = &h;
    }
  }
  if (best == nullptr) {
    // Every expansion was blocked before anything finished.
    GenerationRecord rec = to_record(live.front(), req.seed);
    rec.truncated = true;
    return rec;
  }
  GenerationRecord rec = to_record(*best, req.seed);
  rec.truncated = blocked;
  return rec;
}

GenerationRecord stochastic_decode(const DecodeRequest& req, const TruncationPolicy& policy) {
  require_provider(req);
  const TokenId eos = req.provider->vocab_info().eos;
  Rng rng(req.seed);
  GenerationRecord rec;
  rec.kind = DecoderKind::kSample;
  rec.seed = req.seed;
  std::vector<TokenId> context = req.prefix.ids;
  for (std::size_t step = 0; step < req.max_len; ++step) {
    auto dist = req.provider->next_distribution(context);
    const TokenId w = sample_from(apply_policy(dist, policy), rng);
    if (req.stop_at_eos && w == eos) break;
    rec.tokens.ids.push_back(w);
    rec.entropies.push_back(entropy_nats(dist));
    rec.surprisals.push_back(surprisal_nats(dist, w));
    rec.greedy_flags.push_back(w == argmax(dist));
    context.push_back(w);
  }
  rec.finalize_det_fraction();
  return rec;
}

GenerationRecord entropy_aware_decode(const DecodeRequest& req, const EADConfig& cfg) {
  require_provider(req);
  if (cfg.profile == nullptr) invalid("entropy-aware decoding needs a profile");
  if (cfg.profile->model_hash != req.provider->fingerprint()) {
    throw Error(ErrorCode::kProfileMismatch,
                "profile was estimated for model " + cfg.profile->model_hash +
                    ", provider is " + req.provider->fingerprint());
  }
  if (cfg.patience < 1) invalid("patience N must be >= 1");
  if (!(cfg.margin > 0.0)) invalid("margin alpha must be > 0");
  if (cfg.max_backoffs < 1) invalid("max_backoffs must be >= 1");

  const TokenId eos = req.provider->vocab_info().eos;
  const bool bounded = std::isfinite(cfg.margin);
  Rng rng(req.seed);

  GenerationRecord rec;
  rec.kind = DecoderKind::kEntropyAware;
  rec.seed = req.seed;
  std::vector<TokenId> context = req.prefix.ids;
  const std::size_t base = context.size();
  std::vector<ConditionalDistribution> dists;  // distribution at each kept step
  std::vector<std::vector<TokenId>> tried;     // tokens already taken per step
  std::size_t below_run = 0;

  auto truncate_to = [&](std::size_t len) {
    context.resize(base + len);
    rec.tokens.ids.resize(len);
    rec.entropies.resize(len);
    rec.surprisals.resize(len);
    rec.greedy_flags.resize(len);
    dists.resize(len + 1);
    tried.resize(len + 1);
  };

  while (rec.size() < req.max_len) {
    const std::size_t step = rec.size();
    ConditionalDistribution dist = req.provider->next_distribution(context);
    const double h = entropy_nats(dist);
    const TokenId top = argmax(dist);
    TokenId w = top;
    bool eui = false;

    if (step >= cfg.ngreedy && bounded) {
      const ZoneBounds z = zone_bounds(*cfg.profile, cfg.margin, step);
      if (cfg.enable_eui && h > z.upper) {
        w = sample_from(apply_policy(dist, cfg.sampler), rng);
        eui = true;
        ++rec.eui_count;
      }
      below_run = h < z.lower ? below_run + 1 : 0;

      if (cfg.enable_eli && below_run > cfg.patience) {
        if (rec.backoff_count < cfg.max_backoffs) {
          const std::size_t target =
              std::max(step >= cfg.patience ? step - cfg.patience : 0, cfg.ngreedy);
          truncate_to(target);
          const ConditionalDistribution& at = dists[target];
          auto& seen = tried[target];
          TokenId alt = -1;
          for (TokenId cand : rank_tokens(at)) {
            if (std::find(seen.begin(), seen.end(), cand) == seen.end()) {
              alt = cand;
              break;
            }
          }
          if (alt < 0) {
            alt = argmax(at);
            rec.truncated = true;
          }
          seen.push_back(alt);
          ++rec.backoff_count;
          below_run = 0;
          if (req.stop_at_eos && alt == eos) break;
          rec.tokens.ids.push_back(alt);
          rec.entropies.push_back(entropy_nats(at));
          rec.surprisals.push_back(surprisal_nats(at, alt));
          rec.greedy_flags.push_back(alt == argmax(at));
          context.push_back(alt);
          continue;
        }
        rec.truncated = true;
        below_run = 0;
      }
    }

    if (req.stop_at_eos && w == eos) break;
    dists.resize(step + 1);
    tried.resize(step + 1);
    dists[step] = std::move(dist);
    tried[step] = {w};
    rec.tokens.ids.push_back(w);
    rec.entropies.push_back(h);
    rec.surprisals.push_back(surprisal_nats(dists[step], w));
    rec.greedy_flags.push_back(!eui && w == top);
    context.push_back(w);
  }
  rec.finalize_det_fraction();
  return rec;
}

}  // namespace entcal
