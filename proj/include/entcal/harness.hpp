// Copyright 2026 The entcal Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "entcal/decoding.hpp"
#include "entcal/metrics.hpp"
#include "entcal/ngram_model.hpp"
#include "entcal/profile.hpp"
#include "entcal/provider.hpp"

namespace entcal {

// Decoder description parsed from "kind[:key=value,...]":
//
//   greedy
//   beam:n=5[,block=3]
//   topk:k=30[,t=1.0]      nucleus:p=0.9[,t=..]    typical:tau=0.2[,t=..]
//   temp:t=0.8
//   ead:N=5,alpha=0.8,g=5,sampler=topk,k=30[,max_backoffs=50,eui=1,eli=1]
//
// alpha=inf disables both interventions.
struct DecoderSpec {
  std::string id;
  DecoderKind kind = DecoderKind::kGreedy;
  std::size_t beam = 5;
  std::optional<std::size_t> block_ngram;
  TruncationPolicy policy;
  EADConfig ead;  // profile filled in at run time
};

DecoderSpec parse_decoder_spec(const std::string& text);

// Default sweep grid: top-k, nucleus, temperature and typical settings, plus
// greedy and beam (n=5).
std::vector<std::string> standard_decoder_grid();

GenerationRecord run_decoder(const DecoderSpec& spec, const DecodeRequest& req,
                             const StableEntropyProfile* profile);

struct ExperimentConfig {
  std::string corpus_path = "data/fixture_corpus.txt";
  std::string model_path = "entcal.model";
  std::string profile_path = "entcal.profile";
  std::string out_dir = "entcal-out";
  int min_count = 2;
  int order = 4;
  int window = 5;
  std::size_t horizon = 64;
  std::size_t prefix_len = 32;
  std::size_t gen_len = 64;
  std::size_t profile_size = 200;
  std::size_t eval_size = 200;
  std::size_t heldout_every = 6;
  std::vector<std::string> decoders = standard_decoder_grid();
  std::vector<std::uint64_t> seeds = {1, 2, 3};
  double zone_width = 1.5;
  std::string provider = "local";
  std::size_t copy_match = 0;  // in-context copy cache match length; 0 disables
  double copy_prior = 1.0;
  std::size_t threads = 0;
  F1Mode f1_mode = F1Mode::kText;

  void validate() const;
};

// Applies one key=value setting. Unknown keys and malformed values throw
// kConfig.
void set_config_value(ExperimentConfig& cfg, const std::string& key, const std::string& value);

// Flat "key = value" document; '#' starts a comment.
ExperimentConfig load_config_file(const std::string& path, ExperimentConfig base = {});

std::vector<std::string> read_lines(const std::string& path);

struct CorpusSplit {
  std::vector<std::string> train;
  std::vector<std::string> heldout;
};

// Line i is held out when i % every == every - 1.
CorpusSplit split_corpus(const std::vector<std::string>& lines, std::size_t every);

// Identifier of a corpus file: basename plus content hash.
std::string corpus_id(const std::string& path);

// Held-out documents cut into (prefix of prefix_len tokens after BOS, target
// of up to target_len tokens). Documents too short for a prefix and one
// target token are skipped; `skip` eligible ones are passed over first.
std::vector<ProfileItem> make_items(const ModelProvider& provider,
                                    const std::vector<std::string>& docs, std::size_t prefix_len,
                                    std::size_t target_len, std::size_t skip, std::size_t count);

// Profiling and evaluation sets are disjoint slices of the held-out split.
struct EvalSets {
  std::vector<ProfileItem> profile_items;
  std::vector<ProfileItem> eval_items;
};
EvalSets make_eval_sets(const ModelProvider& provider, const ExperimentConfig& cfg);

std::unique_ptr<ModelProvider> make_provider(const ExperimentConfig& cfg);

// ---------------------------------------------------------------------------
// Commands. Each prints a human-readable summary to `log`.

struct TrainResult {
  std::size_t vocab_size = 0;
  double heldout_perplexity = 0.0;
};
TrainResult cmd_train(const ExperimentConfig& cfg, std::ostream& log);

struct ProfileResult {
  StableEntropyProfile profile;
  LineFit fit;
  double coverage = 0.0;  // mean in-zone fraction of the profiling set
  std::size_t items = 0;
};
ProfileResult cmd_profile(const ExperimentConfig& cfg, std::ostream& log);

struct DecodeResult {
  GenerationRecord record;
  std::string text;
  std::string trace_csv;
};
// Writes <out_prefix>.record.jsonl and <out_prefix>.trace.csv when
// out_prefix is non-empty.
DecodeResult cmd_decode(const ExperimentConfig& cfg, const std::string& decoder,
                        const std::string& prompt, std::uint64_t seed,
                        const std::string& out_prefix, std::ostream& log);

// Per-step table: t,token,entropy,smoothed,lower,upper,below,above,greedy.
std::string trace_table_csv(const GenerationRecord& record, const StableEntropyProfile& profile,
                            double width, const ModelProvider& provider);

struct SweepRow {
  MetricRow metrics;
  std::string decoder;
  std::optional<std::uint64_t> seed;  // empty for per-config aggregate rows
};

struct CorrelationResult {
  std::string x;
  std::string y;
  std::size_t n = 0;
  std::optional<double> rho;  // empty when undefined
};

struct SweepResult {
  std::vector<SweepRow> rows;        // one per (config, seed), sorted
  std::vector<SweepRow> aggregates;  // one per config, mean over seeds
  std::vector<CorrelationResult> correlations;
};

// Runs every decoder config x seed over the evaluation prefixes. Writes
// results.csv, correlations.csv, records.jsonl and targets.jsonl into
// cfg.out_dir when write_files is set.
SweepResult cmd_sweep(const ExperimentConfig& cfg, std::ostream& log, bool write_files = true);

// Same sweep over in-memory inputs.
SweepResult run_sweep(const ModelProvider& provider, const StableEntropyProfile& profile,
                      const std::vector<ProfileItem>& eval_items, const ExperimentConfig& cfg,
                      std::vector<std::string>* record_lines = nullptr);

// Tidy plot tables from a sweep directory: zone_trace.csv, entropy_by_decoder.csv,
// violation_correlation.csv, surprisal.csv, mean_entropy.csv.
std::vector<std::string> cmd_emit_plots(const std::string& results_dir,
                                        const std::string& profile_path,
                                        const std::string& out_dir, double width);

struct ProbeResult {
  std::string name;
  bool pass = false;
  std::string detail;
};
// Handshake, normalization, determinism and latency probes against a
// protocol server.
std::vector<ProbeResult> cmd_serve_check(const std::string& endpoint, std::size_t n_probes,
                                         std::ostream& log);

}  // namespace entcal
