// Copyright 2026 The entcal Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <istream>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "entcal/provider.hpp"
#include "entcal/vocabulary.hpp"

namespace entcal {

// Teacher-forced entropy of one target completion.
struct EntropyTrace {
  std::vector<double> raw;                 // H at each step, nats
  std::vector<double> smoothed;            // smooth_trace(raw, window)
  std::vector<double> surprisal_smoothed;  // smoothed -log p(target[t]); may be empty
  int window = 5;

  std::size_t length() const { return raw.size(); }

  // Builds raw/smoothed from a raw entropy sequence.
  static EntropyTrace from_raw(std::vector<double> raw, int window);
};

// Per-step mean and population standard deviation of smoothed entropy under
// the target context distribution. Index t runs over 0..horizon.
struct StableEntropyProfile {
  std::vector<double> mu;
  std::vector<double> sigma;
  std::vector<std::size_t> count;
  int window = 5;
  std::size_t horizon = 0;
  std::string model_hash;
  std::string vocab_hash;
  std::string corpus_id;

  std::size_t clamp(std::size_t t) const { return t < horizon ? t : horizon; }

  // Versioned plain-text table "ECPROF1".
  void save(std::ostream& out) const;
  static StableEntropyProfile load(std::istream& in);
  void save_file(const std::string& path) const;
  static StableEntropyProfile load_file(const std::string& path);
};

struct ZoneBounds {
  double lower = 0.0;
  double upper = 0.0;
};

struct ViolationStats {
  double evr = 0.0;
  double elvr = 0.0;
  double euvr = 0.0;
  std::size_t n_steps = 0;
  std::size_t n_lower = 0;
  std::size_t n_upper = 0;

  double in_zone_fraction() const { return 1.0 - evr; }
};

struct LineFit {
  double slope = 0.0;
  double intercept = 0.0;
  double mse = 0.0;
};

struct ProfileItem {
  TokenSequence prefix;
  TokenSequence target;
};

// Streaming mean/M2 accumulator; merge() is associative so per-worker
// partials can be combined in any grouping.
struct MomentAccumulator {
  std::size_t n = 0;
  double mean = 0.0;
  double m2 = 0.0;

  void add(double x);
  void merge(const MomentAccumulator& other);
  double population_stddev() const;
};

EntropyTrace trace_under_targets(const ModelProvider& provider, const TokenSequence& prefix,
                                 const TokenSequence& target, int window);

// horizon is capped at (longest target length - 1) so every profiled step
// has at least one sample. workers = 0 uses every hardware thread; the
// result does not depend on the worker count.
StableEntropyProfile estimate_profile(const ModelProvider& provider,
                                      std::span<const ProfileItem> dataset, int window,
                                      std::size_t horizon, std::size_t workers = 0);

// Same estimate from precomputed traces.
StableEntropyProfile profile_from_traces(std::span<const EntropyTrace> traces, int window,
                                         std::size_t horizon);

// mu[t] -/+ width * sigma[t], t clamped to the profiled horizon.
ZoneBounds zone_bounds(const StableEntropyProfile& profile, double width, std::size_t t);

// OLS of mu[t] on t over t in [t_min, horizon].
LineFit fit_line(const StableEntropyProfile& profile, std::size_t t_min);

// Scores trace.smoothed against the zone of the given width.
ViolationStats detect_violations(const EntropyTrace& trace, const StableEntropyProfile& profile,
                                 double width);
ViolationStats detect_violations(std::span<const double> smoothed,
                                 const StableEntropyProfile& profile, double width);

}  // namespace entcal
