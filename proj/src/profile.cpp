// Copyright 2026 The entcal Authors
// SPDX-License-Identifier: Apache-2.0

#include "entcal/profile.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "entcal/distribution.hpp"
#include "entcal/error.hpp"
#include "entcal/util.hpp"

namespace entcal {

namespace {

constexpr std::string_view kProfileMagic = "ECPROF1";

[[noreturn]] void format_error(const std::string& what) {
  throw Error(ErrorCode::kFormat, "profile file: " + what);
}

void check_width(double width) {
  if (!(width > 0.0)) throw Error(ErrorCode::kInvalidParameter, "zone width must be > 0");
}

}  // namespace

EntropyTrace EntropyTrace::from_raw(std::vector<double> raw, int window) {
  EntropyTrace t;
  t.window = window;
  t.smoothed = smooth_trace(raw, window);
  t.raw = std::move(raw);
  return t;
}

void MomentAccumulator::add(double x) {
  ++n;
  const double delta = x - mean;
  mean += delta / static_cast<double>(n);
  m2 += delta * (x - mean);
}

void MomentAccumulator::merge(const MomentAccumulator& other) {
  if (other.n == 0) return;
  if (n == 0) {
    *this = other;
    return;
  }
  const double na = static_cast<double>(n);
  const double nb = static_cast<double>(other.n);
  const double delta = other.mean - mean;
  const double total = na + nb;
  mean += delta * nb / total;
  m2 += other.m2 + delta * delta * na * nb / total;
  n += other.n;
}

double MomentAccumulator::population_stddev() const {
  if (n == 0) return 0.0;
  return std::sqrt(std::max(0.0, m2 / static_cast<double>(n)));
}

EntropyTrace trace_under_targets(const ModelProvider& provider, const TokenSequence& prefix,
                                 const TokenSequence& target, int window) {
  if (target.ids.empty()) throw Error(ErrorCode::kZeroLength, "target is empty");
  std::vector<TokenId> context = prefix.ids;
  context.reserve(prefix.ids.size() + target.ids.size());
  std::vector<double> raw;
  std::vector<double> surprisal;
  raw.reserve(target.ids.size());
  surprisal.reserve(target.ids.size());
  for (TokenId next : target.ids) {
    auto dist = provider.next_distribution(context);
    raw.push_back(entropy_nats(dist));
    surprisal.push_back(surprisal_nats(dist, next));
    context.push_back(next);
  }
  EntropyTrace trace = EntropyTrace::from_raw(std::move(raw), window);
  trace.surprisal_smoothed = smooth_trace(surprisal, window);
  return trace;
}

StableEntropyProfile profile_from_traces(std::span<const EntropyTrace> traces, int window,
                                         std::size_t horizon) {
  if (traces.empty()) throw Error(ErrorCode::kEmptyDataset, "profiling dataset is empty");
  if (horizon < 1) throw Error(ErrorCode::kInvalidParameter, "horizon must be >= 1");
  std::size_t longest = 0;
  for (const auto& tr : traces) longest = std::max(longest, tr.smoothed.size());
  if (longest == 0) throw Error(ErrorCode::kEmptyDataset, "all targets are empty");
  const std::size_t h = std::min(horizon, longest - 1);

  std::vector<MomentAccumulator> acc(h + 1);
  for (const auto& tr : traces) {
    const std::size_t n = std::min(tr.smoothed.size(), h + 1);
    for (std::size_t t = 0; t < n; ++t) acc[t].add(tr.smoothed[t]);
  }
  StableEntropyProfile profile;
  profile.window = window;
  profile.horizon = h;
  profile.mu.resize(h + 1);
  profile.sigma.resize(h + 1);
  profile.count.resize(h + 1);
  for (std::size_t t = 0; t <= h; ++t) {
    profile.mu[t] = acc[t].mean;
    profile.sigma[t] = acc[t].population_stddev();
    profile.count[t] = acc[t].n;
  }
  return profile;
}

StableEntropyProfile estimate_profile(const ModelProvider& provider,
                                      std::span<const ProfileItem> dataset, int window,
                                      std::size_t horizon, std::size_t workers) {
  if (dataset.empty()) throw Error(ErrorCode::kEmptyDataset, "profiling dataset is empty");
  if (horizon < 1) throw Error(ErrorCode::kInvalidParameter, "horizon must be >= 1");
  std::vector<EntropyTrace> traces(dataset.size());
  parallel_for(dataset.size(), workers, [&](std::size_t i) {
    const auto& item = dataset[i];
    // Only the first horizon+1 steps are profiled.
    TokenSequence target = item.target;
    if (target.ids.size() > horizon + 1) target.ids.resize(horizon + 1);
    traces[i] = trace_under_targets(provider, item.prefix, target, window);
  });
  // Reduction runs in dataset order, so the result is bit-identical for any
  // worker count.
  StableEntropyProfile profile = profile_from_traces(traces, window, horizon);
  profile.model_hash = provider.fingerprint();
  return profile;
}

ZoneBounds zone_bounds(const StableEntropyProfile& profile, double width, std::size_t t) {
  check_width(width);
  if (profile.mu.empty()) throw Error(ErrorCode::kEmptyDataset, "profile is empty");
  const std::size_t i = profile.clamp(t);
  const double half = width * profile.sigma[i];
  return ZoneBounds{profile.mu[i] - half, profile.mu[i] + half};
}

LineFit fit_line(const StableEntropyProfile& profile, std::size_t t_min) {
  if (profile.mu.size() != profile.horizon + 1 || t_min > profile.horizon ||
      profile.horizon - t_min < 2) {
    throw Error(ErrorCode::kInsufficientData,
                "line fit needs at least 3 profiled steps from t_min=" + std::to_string(t_min));
  }
  const std::size_t n = profile.horizon - t_min + 1;
  double mean_t = 0.0;
  double mean_y = 0.0;
  for (std::size_t t = t_min; t <= profile.horizon; ++t) {
    mean_t += static_cast<double>(t);
    mean_y += profile.mu[t];
  }
  mean_t /= static_cast<double>(n);
  mean_y /= static_cast<double>(n);
  double sxx = 0.0;
  double sxy = 0.0;
  for (std::size_t t = t_min; t <= profile.horizon; ++t) {
    const double dt = static_cast<double>(t) - mean_t;
    sxx += dt * dt;
    sxy += dt * (profile.mu[t] - mean_y);
  }
  LineFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = mean_y - fit.slope * mean_t;
  double sse = 0.0;
  for (std::size_t t = t_min; t <= profile.horizon; ++t) {
    const double r = profile.mu[t] - (fit.intercept + fit.slope * static_cast<double>(t));
    sse += r * r;
  }
  fit.mse = sse / static_cast<double>(n);
  return fit;
}

ViolationStats detect_violations(std::span<const double> smoothed,
                                 const StableEntropyProfile& profile, double width) {
  check_width(width);
  if (smoothed.empty()) throw Error(ErrorCode::kZeroLength, "trace is empty");
  ViolationStats s;
  s.n_steps = smoothed.size();
  for (std::size_t t = 0; t < smoothed.size(); ++t) {
    ZoneBounds z = zone_bounds(profile, width, t);
    if (smoothed[t] < z.lower) {
      ++s.n_lower;
    } else if (smoothed[t] > z.upper) {
      ++s.n_upper;
    }
  }
  const double n = static_cast<double>(s.n_steps);
  s.elvr = static_cast<double>(s.n_lower) / n;
  s.euvr = static_cast<double>(s.n_upper) / n;
  s.evr = static_cast<double>(s.n_lower + s.n_upper) / n;
  return s;
}

ViolationStats detect_violations(const EntropyTrace& trace, const StableEntropyProfile& profile,
                                 double width) {
  return detect_violations(trace.smoothed, profile, width);
}

// ECPROF1
// window <U>
// horizon <H>
// model-hash <hex>
// vocab-hash <hex>
// corpus-id <id>
// t mu sigma count
// <H+1 rows>
void StableEntropyProfile::save(std::ostream& out) const {
  out << kProfileMagic << '\n';
  out << "window " << window << '\n';
  out << "horizon " << horizon << '\n';
  out << "model-hash " << (model_hash.empty() ? "-" : model_hash) << '\n';
  out << "vocab-hash " << (vocab_hash.empty() ? "-" : vocab_hash) << '\n';
  out << "corpus-id " << (corpus_id.empty() ? "-" : corpus_id) << '\n';
  out << "t mu sigma count\n";
  for (std::size_t t = 0; t < mu.size(); ++t) {
    out << t << ' ' << format_roundtrip(mu[t]) << ' ' << format_roundtrip(sigma[t]) << ' '
        << count[t] << '\n';
  }
}

StableEntropyProfile StableEntropyProfile::load(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != kProfileMagic) format_error("missing ECPROF1 header");
  StableEntropyProfile p;
  auto field = [&](const std::string& name) {
    std::string key;
    std::string value;
    if (!(in >> key >> value) || key != name) format_error("expected field " + name);
    return value == "-" ? std::string{} : value;
  };
  try {
    p.window = std::stoi(field("window"));
    p.horizon = std::stoul(field("horizon"));
  } catch (const std::logic_error&) {
    format_error("bad numeric header field");
  }
  p.model_hash = field("model-hash");
  p.vocab_hash = field("vocab-hash");
  p.corpus_id = field("corpus-id");
  std::getline(in, line);
  if (!std::getline(in, line) || line != "t mu sigma count") format_error("missing column header");
  for (std::size_t t = 0; t <= p.horizon; ++t) {
    std::size_t tt = 0;
    std::string mu_s;
    std::string sigma_s;
    std::size_t count = 0;
    if (!(in >> tt >> mu_s >> sigma_s >> count) || tt != t) format_error("bad row " + std::to_string(t));
    p.mu.push_back(std::strtod(mu_s.c_str(), nullptr));
    p.sigma.push_back(std::strtod(sigma_s.c_str(), nullptr));
    p.count.push_back(count);
  }
  if (p.window < 1) format_error("window must be >= 1");
  return p;
}

void StableEntropyProfile::save_file(const std::string& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path);
  save(out);
}

StableEntropyProfile StableEntropyProfile::load_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot read " + path);
  return load(in);
}

}  // namespace entcal
