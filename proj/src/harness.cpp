// Copyright 2026 The entcal Authors
// SPDX-License-Identifier: Apache-2.0

#include "entcal/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <cstring>
#include <fstream>
#include <map>
#include <sstream>

#include <json.hpp>

#include "entcal/error.hpp"
#include "entcal/remote_provider.hpp"
#include "entcal/util.hpp"
#include "entcal/wire.hpp"

namespace entcal {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split(std::string_view s, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = s.find(sep, start);
    out.push_back(trim(s.substr(start, pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

double parse_double(const std::string& key, const std::string& v) {
  std::size_t used = 0;
  double x = 0.0;
  try {
    x = std::stod(v, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != v.size() || std::isnan(x)) {
    throw Error(ErrorCode::kConfig, key + ": not a number: '" + v + "'");
  }
  return x;
}

std::uint64_t parse_uint(const std::string& key, const std::string& v) {
  if (v.empty() || v.find_first_not_of("0123456789") != std::string::npos) {
    throw Error(ErrorCode::kConfig, key + ": not a non-negative integer: '" + v + "'");
  }
  try {
    return std::stoull(v);
  } catch (const std::exception&) {
    throw Error(ErrorCode::kConfig, key + ": out of range: '" + v + "'");
  }
}

bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "1" || v == "true" || v == "on") return true;
  if (v == "0" || v == "false" || v == "off") return false;
  throw Error(ErrorCode::kConfig, key + ": not a boolean: '" + v + "'");
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

void write_file(const fs::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path.string());
  out << content;
  if (!out) throw Error(ErrorCode::kIo, "write failed: " + path.string());
}

std::string join_reals(const std::vector<double>& xs, int decimals) {
  std::string out;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (i) out.push_back(',');
    out += format_fixed(xs[i], decimals);
  }
  return out;
}

std::string vocab_hash_of(const ModelProvider& provider) {
  const auto* vocab = provider.vocabulary();
  return vocab != nullptr ? vocab->hash() : std::string();
}

const Vocabulary& local_vocab(const ModelProvider& provider) {
  static const Vocabulary kSpecialsOnly;
  const auto* vocab = provider.vocabulary();
  return vocab != nullptr ? *vocab : kSpecialsOnly;
}

bool deterministic(const DecoderSpec& spec) {
  if (spec.kind == DecoderKind::kGreedy || spec.kind == DecoderKind::kBeam) return true;
  return spec.kind == DecoderKind::kEntropyAware && std::isinf(spec.ead.margin) &&
         spec.ead.margin > 0;
}

MetricRow mean_rows(const std::vector<const MetricRow*>& rows) {
  MetricRow out;
  out.config_id = rows.front()->config_id;
  for (const auto* r : rows) {
    out.f1 += r->f1;
    out.repeat_score5 += r->repeat_score5;
    out.ngram3_repeats += r->ngram3_repeats;
    out.evr += r->evr;
    out.elvr += r->elvr;
    out.euvr += r->euvr;
    out.det_pct += r->det_pct;
    out.backoffs_mean += r->backoffs_mean;
  }
  const double n = static_cast<double>(rows.size());
  for (double* x : {&out.f1, &out.repeat_score5, &out.ngram3_repeats, &out.evr, &out.elvr,
                    &out.euvr, &out.det_pct, &out.backoffs_mean}) {
    *x /= n;
  }
  return out;
}

CorrelationResult correlate(const std::vector<SweepRow>& rows, const std::string& xname,
                            double MetricRow::*x, const std::string& yname,
                            double MetricRow::*y) {
  CorrelationResult r;
  r.x = xname;
  r.y = yname;
  r.n = rows.size();
  std::vector<double> xs;
  std::vector<double> ys;
  for (const auto& row : rows) {
    xs.push_back(row.metrics.*x);
    ys.push_back(row.metrics.*y);
  }
  try {
    r.rho = pearson_correlation(xs, ys);
  } catch (const Error&) {
    r.rho.reset();
  }
  return r;
}

std::string results_csv(const SweepResult& res) {
  std::string out = "row_type,seed,";
  out += kMetricColumns;
  out += ",decoder\n";
  auto emit = [&out](const SweepRow& row, const char* type) {
    out += type;
    out.push_back(',');
    out += row.seed ? std::to_string(*row.seed) : std::string("-");
    out.push_back(',');
    auto m = row.metrics;
    m.config_id = csv_field(m.config_id);
    out += metric_row_csv(m);
    out.push_back(',');
    out += row.decoder;
    out.push_back('\n');
  };
  for (const auto& row : res.rows) emit(row, "seed");
  for (const auto& row : res.aggregates) emit(row, "aggregate");
  return out;
}

std::string correlations_csv(const SweepResult& res) {
  std::string out = "x,y,n,rho\n";
  for (const auto& c : res.correlations) {
    out += c.x + "," + c.y + "," + std::to_string(c.n) + "," +
           (c.rho ? format_fixed(*c.rho, 6) : std::string("nan")) + "\n";
  }
  return out;
}

// Minimal CSV reader for files this module writes.
std::vector<std::vector<std::string>> read_csv(const fs::path& path) {
  const auto lines = read_lines(path.string());
  std::vector<std::vector<std::string>> rows;
  for (const auto& line : lines) {
    if (line.empty()) continue;
    std::vector<std::string> fields;
    std::string cur;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
      const char c = line[i];
      if (quoted) {
        if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
          cur.push_back('"');
          ++i;
        } else if (c == '"') {
          quoted = false;
        } else {
          cur.push_back(c);
        }
      } else if (c == '"') {
        quoted = true;
      } else if (c == ',') {
        fields.push_back(cur);
        cur.clear();
      } else {
        cur.push_back(c);
      }
    }
    fields.push_back(cur);
    rows.push_back(std::move(fields));
  }
  return rows;
}

std::vector<double> json_reals(const json& j) {
  std::vector<double> out;
  for (const auto& v : j) out.push_back(v.get<double>());
  return out;
}

}  // namespace

// ---------------------------------------------------------------------------
// Decoder specs

DecoderSpec parse_decoder_spec(const std::string& text) {
  DecoderSpec spec;
  spec.id = trim(text);
  const auto colon = spec.id.find(':');
  const std::string kind = spec.id.substr(0, colon);
  std::map<std::string, std::string> params;
  if (colon != std::string::npos) {
    for (const auto& kv : split(std::string_view(spec.id).substr(colon + 1), ',')) {
      const auto eq = kv.find('=');
      if (eq == std::string::npos || eq == 0) {
        throw Error(ErrorCode::kConfig, "decoder '" + spec.id + "': expected key=value, got '" +
                                            kv + "'");
      }
      params[trim(kv.substr(0, eq))] = trim(kv.substr(eq + 1));
    }
  }
  auto take = [&params](const std::string& key) -> std::optional<std::string> {
    auto it = params.find(key);
    if (it == params.end()) return std::nullopt;
    std::string v = it->second;
    params.erase(it);
    return v;
  };
  auto take_double = [&](const std::string& key, double fallback) {
    auto v = take(key);
    return v ? parse_double(key, *v) : fallback;
  };
  auto take_uint = [&](const std::string& key, std::uint64_t fallback) {
    auto v = take(key);
    return v ? parse_uint(key, *v) : fallback;
  };

  if (kind == "greedy") {
    spec.kind = DecoderKind::kGreedy;
  } else if (kind == "beam") {
    spec.kind = DecoderKind::kBeam;
    spec.beam = take_uint("n", 5);
    if (auto b = take("block")) spec.block_ngram = parse_uint("block", *b);
  } else if (kind == "topk") {
    spec.kind = DecoderKind::kSample;
    spec.policy = TruncationPolicy::top_k(take_uint("k", 30), take_double("t", 1.0));
  } else if (kind == "nucleus") {
    spec.kind = DecoderKind::kSample;
    spec.policy = TruncationPolicy::nucleus(take_double("p", 0.9), take_double("t", 1.0));
  } else if (kind == "typical") {
    spec.kind = DecoderKind::kSample;
    spec.policy = TruncationPolicy::typical(take_double("tau", 0.2), take_double("t", 1.0));
  } else if (kind == "temp") {
    spec.kind = DecoderKind::kSample;
    spec.policy = TruncationPolicy::none(take_double("t", 1.0));
  } else if (kind == "ead") {
    spec.kind = DecoderKind::kEntropyAware;
    auto& e = spec.ead;
    e.patience = take_uint("N", e.patience);
    e.margin = take_double("alpha", e.margin);
    e.ngreedy = take_uint("g", e.ngreedy);
    e.max_backoffs = take_uint("max_backoffs", e.max_backoffs);
    if (auto v = take("eui")) e.enable_eui = parse_bool("eui", *v);
    if (auto v = take("eli")) e.enable_eli = parse_bool("eli", *v);
    const std::string sampler = take("sampler").value_or("typical");
    const double t = take_double("t", 1.0);
    if (sampler == "topk") {
      e.sampler = TruncationPolicy::top_k(take_uint("k", 30), t);
    } else if (sampler == "nucleus") {
      e.sampler = TruncationPolicy::nucleus(take_double("p", 0.9), t);
    } else if (sampler == "typical") {
      e.sampler = TruncationPolicy::typical(take_double("tau", 0.2), t);
    } else if (sampler == "temp") {
      e.sampler = TruncationPolicy::none(t);
    } else {
      throw Error(ErrorCode::kConfig, "decoder '" + spec.id + "': unknown sampler '" + sampler +
                                          "'");
    }
  } else {
    throw Error(ErrorCode::kConfig, "unknown decoder kind '" + kind + "'");
  }
  if (!params.empty()) {
    throw Error(ErrorCode::kConfig,
                "decoder '" + spec.id + "': unknown parameter '" + params.begin()->first + "'");
  }
  if (spec.kind == DecoderKind::kBeam && spec.beam < 1) {
    throw Error(ErrorCode::kConfig, "decoder '" + spec.id + "': beam width must be >= 1");
  }
  return spec;
}

std::vector<std::string> standard_decoder_grid() {
  std::vector<std::string> grid = {"greedy", "beam:n=5"};
  for (const char* k : {"5", "10", "30", "50", "100"}) grid.push_back(std::string("topk:k=") + k);
  for (const char* p : {"0.15", "0.25", "0.4", "0.5", "0.75", "0.9", "0.95"}) {
    grid.push_back(std::string("nucleus:p=") + p);
  }
  for (const char* t : {"0.001", "0.01", "0.1", "0.2", "0.5", "0.8", "1.0", "1.2", "1.5", "3.0"}) {
    grid.push_back(std::string("temp:t=") + t);
  }
  for (const char* tau : {"0.2", "0.25", "0.5", "0.75", "0.9", "0.95"}) {
    grid.push_back(std::string("typical:tau=") + tau);
  }
  return grid;
}

GenerationRecord run_decoder(const DecoderSpec& spec, const DecodeRequest& req,
                             const StableEntropyProfile* profile) {
  switch (spec.kind) {
    case DecoderKind::kGreedy: return greedy_decode(req);
    case DecoderKind::kBeam: return beam_search(req, spec.beam, spec.block_ngram);
    case DecoderKind::kSample: return stochastic_decode(req, spec.policy);
    case DecoderKind::kEntropyAware: {
      EADConfig cfg = spec.ead;
      cfg.profile = profile;
      return entropy_aware_decode(req, cfg);
    }
  }
  throw Error(ErrorCode::kConfig, "unhandled decoder kind");
}

// ---------------------------------------------------------------------------
// Config

void ExperimentConfig::validate() const {
  auto fail = [](const std::string& msg) { throw Error(ErrorCode::kConfig, msg); };
  if (seeds.empty()) fail("seeds must be non-empty");
  if (prefix_len < 1) fail("prefix_len must be >= 1");
  if (gen_len < 1) fail("gen_len must be >= 1");
  if (window < 1) fail("window must be >= 1");
  if (horizon < 1) fail("horizon must be >= 1");
  if (min_count < 1) fail("min_count must be >= 1");
  if (order < 1 || order > kMaxOrder) fail("order must be in [1, 6]");
  if (heldout_every < 2) fail("heldout_every must be >= 2");
  if (!(zone_width > 0)) fail("zone_width must be > 0");
  if (!(copy_prior > 0)) fail("copy_prior must be > 0");
  if (decoders.empty()) fail("decoders must be non-empty");
  for (const auto& d : decoders) parse_decoder_spec(d);
}

void set_config_value(ExperimentConfig& cfg, const std::string& key, const std::string& raw) {
  const std::string v = trim(raw);
  auto as_size = [&] { return static_cast<std::size_t>(parse_uint(key, v)); };
  auto as_int = [&] { return static_cast<int>(parse_uint(key, v)); };
  if (key == "corpus") {
    cfg.corpus_path = v;
  } else if (key == "model") {
    cfg.model_path = v;
  } else if (key == "profile") {
    cfg.profile_path = v;
  } else if (key == "out_dir") {
    cfg.out_dir = v;
  } else if (key == "min_count") {
    cfg.min_count = as_int();
  } else if (key == "order") {
    cfg.order = as_int();
  } else if (key == "window") {
    cfg.window = as_int();
  } else if (key == "horizon") {
    cfg.horizon = as_size();
  } else if (key == "prefix_len") {
    cfg.prefix_len = as_size();
  } else if (key == "gen_len") {
    cfg.gen_len = as_size();
  } else if (key == "profile_size") {
    cfg.profile_size = as_size();
  } else if (key == "eval_size") {
    cfg.eval_size = as_size();
  } else if (key == "heldout_every") {
    cfg.heldout_every = as_size();
  } else if (key == "decoders") {
    if (v == "standard") {
      cfg.decoders = standard_decoder_grid();
    } else {
      cfg.decoders.clear();
      for (auto& d : split(v, ';')) {
        if (!d.empty()) cfg.decoders.push_back(d);
      }
    }
    for (const auto& d : cfg.decoders) parse_decoder_spec(d);
  } else if (key == "seeds") {
    cfg.seeds.clear();
    for (const auto& s : split(v, ',')) {
      if (!s.empty()) cfg.seeds.push_back(parse_uint(key, s));
    }
  } else if (key == "zone_width") {
    cfg.zone_width = parse_double(key, v);
  } else if (key == "provider") {
    cfg.provider = v;
  } else if (key == "copy_match") {
    cfg.copy_match = as_size();
  } else if (key == "copy_prior") {
    cfg.copy_prior = parse_double(key, v);
  } else if (key == "threads") {
    cfg.threads = as_size();
  } else if (key == "f1_mode") {
    if (v == "text") {
      cfg.f1_mode = F1Mode::kText;
    } else if (v == "dialog") {
      cfg.f1_mode = F1Mode::kDialog;
    } else {
      throw Error(ErrorCode::kConfig, "f1_mode must be text or dialog");
    }
  } else {
    throw Error(ErrorCode::kConfig, "unknown config key '" + key + "'");
  }
}

ExperimentConfig load_config_file(const std::string& path, ExperimentConfig base) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kConfig, "cannot read config " + path);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    const std::string body = trim(line.substr(0, hash));
    if (body.empty()) continue;
    const auto eq = body.find('=');
    if (eq == std::string::npos) {
      throw Error(ErrorCode::kConfig,
                  path + ":" + std::to_string(lineno) + ": expected key = value");
    }
    try {
      set_config_value(base, trim(body.substr(0, eq)), body.substr(eq + 1));
    } catch (const Error& e) {
      throw Error(ErrorCode::kConfig, path + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  return base;
}

std::vector<std::string> read_lines(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot read " + path);
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(std::move(line));
  }
  return lines;
}

CorpusSplit split_corpus(const std::vector<std::string>& lines, std::size_t every) {
  if (every < 2) throw Error(ErrorCode::kInvalidParameter, "heldout_every must be >= 2");
  CorpusSplit out;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    (i % every == every - 1 ? out.heldout : out.train).push_back(lines[i]);
  }
  return out;
}

std::string corpus_id(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot read " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return fs::path(path).filename().string() + "@" + hash_hex(fnv1a(buf.str()));
}

std::vector<ProfileItem> make_items(const ModelProvider& provider,
                                    const std::vector<std::string>& docs, std::size_t prefix_len,
                                    std::size_t target_len, std::size_t skip, std::size_t count) {
  std::vector<ProfileItem> items;
  std::size_t seen = 0;
  for (const auto& doc : docs) {
    if (items.size() >= count) break;
    const auto ids = provider.encode(doc).ids;
    // ids[0] is BOS
    if (ids.size() < 1 + prefix_len + 1) continue;
    if (seen++ < skip) continue;
    ProfileItem item;
    const auto cut = ids.begin() + static_cast<std::ptrdiff_t>(1 + prefix_len);
    item.prefix = TokenSequence{{ids.begin(), cut}, Origin::kCorpusTarget};
    const auto end = std::min(ids.size(), 1 + prefix_len + target_len);
    item.target =
        TokenSequence{{cut, ids.begin() + static_cast<std::ptrdiff_t>(end)}, Origin::kCorpusTarget};
    items.push_back(std::move(item));
  }
  return items;
}

EvalSets make_eval_sets(const ModelProvider& provider, const ExperimentConfig& cfg) {
  const auto lines = read_lines(cfg.corpus_path);
  const auto split_lines = split_corpus(lines, cfg.heldout_every);
  EvalSets sets;
  const std::size_t profile_target = std::max(cfg.gen_len, cfg.horizon + 1);
  sets.profile_items = make_items(provider, split_lines.heldout, cfg.prefix_len, profile_target,
                                  0, cfg.profile_size);
  sets.eval_items = make_items(provider, split_lines.heldout, cfg.prefix_len, cfg.gen_len,
                               sets.profile_items.size(), cfg.eval_size);
  if (sets.profile_items.size() < cfg.profile_size || sets.eval_items.size() < cfg.eval_size) {
    throw Error(ErrorCode::kInsufficientData,
                "held-out split has " + std::to_string(sets.profile_items.size()) + "+" +
                    std::to_string(sets.eval_items.size()) + " eligible documents, need " +
                    std::to_string(cfg.profile_size) + "+" + std::to_string(cfg.eval_size));
  }
  return sets;
}

std::unique_ptr<ModelProvider> make_provider(const ExperimentConfig& cfg) {
  std::unique_ptr<ModelProvider> base;
  if (cfg.provider == "local") {
    auto model = std::make_shared<const NGramModel>(NGramModel::load_file(cfg.model_path));
    base = std::make_unique<NGramProvider>(std::move(model));
  } else {
    std::string endpoint = cfg.provider;
    if (endpoint.rfind("remote:", 0) == 0) endpoint = endpoint.substr(7);
    base = connect_remote_provider(endpoint);
  }
  if (cfg.copy_match == 0) return base;
  return std::make_unique<CopyCacheProvider>(std::shared_ptr<const ModelProvider>(std::move(base)),
                                             CopyCacheOptions{cfg.copy_match, cfg.copy_prior});
}

// ---------------------------------------------------------------------------
// Commands

TrainResult cmd_train(const ExperimentConfig& cfg, std::ostream& log) {
  cfg.validate();
  const auto lines = read_lines(cfg.corpus_path);
  const auto parts = split_corpus(lines, cfg.heldout_every);
  const auto vocab = build_vocabulary(parts.train, cfg.min_count);
  const auto model = train_ngram(parts.train, vocab, cfg.order);
  model.save_file(cfg.model_path);
  TrainResult res;
  res.vocab_size = vocab.size();
  res.heldout_perplexity = perplexity(model, parts.heldout);
  log << "model " << cfg.model_path << "\n";
  log << "vocab_size " << res.vocab_size << "\n";
  log << "train_lines " << parts.train.size() << "\n";
  log << "heldout_lines " << parts.heldout.size() << "\n";
  log << "heldout_perplexity " << format_fixed(res.heldout_perplexity, 6) << "\n";
  return res;
}

ProfileResult cmd_profile(const ExperimentConfig& cfg, std::ostream& log) {
  cfg.validate();
  const auto provider = make_provider(cfg);
  const auto sets = make_eval_sets(*provider, cfg);
  const auto& items = sets.profile_items;
  std::vector<EntropyTrace> traces(items.size());
  parallel_for(items.size(), cfg.threads, [&](std::size_t i) {
    traces[i] = trace_under_targets(*provider, items[i].prefix, items[i].target, cfg.window);
  });
  ProfileResult res;
  res.profile = profile_from_traces(traces, cfg.window, cfg.horizon);
  res.profile.model_hash = provider->fingerprint();
  res.profile.vocab_hash = vocab_hash_of(*provider);
  res.profile.corpus_id = corpus_id(cfg.corpus_path);
  res.profile.save_file(cfg.profile_path);
  res.items = items.size();
  const std::size_t t_min = std::min<std::size_t>(static_cast<std::size_t>(cfg.window),
                                                  res.profile.horizon > 2 ? res.profile.horizon - 2 : 0);
  res.fit = fit_line(res.profile, t_min);
  double covered = 0.0;
  for (const auto& tr : traces) {
    covered += detect_violations(tr, res.profile, cfg.zone_width).in_zone_fraction();
  }
  res.coverage = covered / static_cast<double>(traces.size());
  log << "profile " << cfg.profile_path << "\n";
  log << "items " << res.items << "\n";
  log << "horizon " << res.profile.horizon << "\n";
  log << "fit_range " << t_min << " " << res.profile.horizon << "\n";
  log << "slope " << format_fixed(res.fit.slope, 6) << "\n";
  log << "intercept " << format_fixed(res.fit.intercept, 6) << "\n";
  log << "mse " << format_fixed(res.fit.mse, 6) << "\n";
  log << "coverage " << format_fixed(res.coverage, 6) << "\n";
  return res;
}

std::string trace_table_csv(const GenerationRecord& record, const StableEntropyProfile& profile,
                            double width, const ModelProvider& provider) {
  const auto smoothed = smooth_trace(record.entropies, profile.window);
  std::string out = "t,token,entropy,smoothed,lower,upper,below,above,greedy\n";
  for (std::size_t t = 0; t < record.size(); ++t) {
    const auto zone = zone_bounds(profile, width, t);
    const TokenId id = record.tokens.ids[t];
    out += std::to_string(t) + "," + csv_field(provider.decode(std::span(&id, 1))) + "," +
           format_fixed(record.entropies[t], 9) + "," + format_fixed(smoothed[t], 9) + "," +
           format_fixed(zone.lower, 9) + "," + format_fixed(zone.upper, 9) + "," +
           (smoothed[t] < zone.lower ? "1" : "0") + "," + (smoothed[t] > zone.upper ? "1" : "0") +
           "," + (record.greedy_flags[t] ? "1" : "0") + "\n";
  }
  return out;
}

DecodeResult cmd_decode(const ExperimentConfig& cfg, const std::string& decoder,
                        const std::string& prompt, std::uint64_t seed,
                        const std::string& out_prefix, std::ostream& log) {
  const auto spec = parse_decoder_spec(decoder);
  const auto provider = make_provider(cfg);
  const auto profile = StableEntropyProfile::load_file(cfg.profile_path);
  DecodeRequest req;
  req.provider = provider.get();
  req.prefix = provider->encode(prompt);
  req.max_len = cfg.gen_len;
  req.seed = seed;
  DecodeResult res;
  res.record = run_decoder(spec, req, &profile);
  res.text = provider->decode(res.record.tokens.ids);
  res.trace_csv = trace_table_csv(res.record, profile, cfg.zone_width, *provider);
  if (!out_prefix.empty()) {
    write_file(out_prefix + ".record.jsonl", res.record.to_json_line() + "\n");
    write_file(out_prefix + ".trace.csv", res.trace_csv);
  }
  log << res.text << "\n";
  log << "tokens " << res.record.size() << " eui " << res.record.eui_count << " backoffs "
      << res.record.backoff_count << " det " << format_fixed(res.record.det_fraction, 6) << "\n";
  return res;
}

SweepResult run_sweep(const ModelProvider& provider, const StableEntropyProfile& profile,
                      const std::vector<ProfileItem>& eval_items, const ExperimentConfig& cfg,
                      std::vector<std::string>* record_lines) {
  if (eval_items.empty()) throw Error(ErrorCode::kEmptyDataset, "no evaluation prefixes");
  if (cfg.seeds.empty()) throw Error(ErrorCode::kConfig, "seeds must be non-empty");
  std::vector<DecoderSpec> specs;
  for (const auto& d : cfg.decoders) specs.push_back(parse_decoder_spec(d));
  std::sort(specs.begin(), specs.end(),
            [](const DecoderSpec& a, const DecoderSpec& b) { return a.id < b.id; });
  for (std::size_t i = 1; i < specs.size(); ++i) {
    if (specs[i].id == specs[i - 1].id) {
      throw Error(ErrorCode::kConfig, "duplicate decoder '" + specs[i].id + "'");
    }
  }
  std::vector<std::uint64_t> seeds = cfg.seeds;
  std::sort(seeds.begin(), seeds.end());
  seeds.erase(std::unique(seeds.begin(), seeds.end()), seeds.end());

  // Deterministic decoders run once per item and are shared across seeds.
  struct Job {
    std::size_t spec;
    std::size_t seed_index;
    std::size_t item;
  };
  std::vector<Job> jobs;
  std::vector<std::vector<std::size_t>> job_of(specs.size() * seeds.size());
  for (std::size_t c = 0; c < specs.size(); ++c) {
    const bool det = deterministic(specs[c]);
    for (std::size_t s = 0; s < seeds.size(); ++s) {
      auto& slot = job_of[c * seeds.size() + s];
      if (det && s > 0) {
        slot = job_of[c * seeds.size()];
        continue;
      }
      for (std::size_t i = 0; i < eval_items.size(); ++i) {
        slot.push_back(jobs.size());
        jobs.push_back({c, s, i});
      }
    }
  }
  std::vector<GenerationRecord> records(jobs.size());
  parallel_for(jobs.size(), cfg.threads, [&](std::size_t j) {
    const auto& job = jobs[j];
    DecodeRequest req;
    req.provider = &provider;
    req.prefix = eval_items[job.item].prefix;
    req.max_len = cfg.gen_len;
    req.seed = derive_seed(seeds[job.seed_index], job.item);
    records[j] = run_decoder(specs[job.spec], req, &profile);
  });

  std::vector<TokenSequence> targets;
  for (const auto& item : eval_items) targets.push_back(item.target);
  const Vocabulary& vocab = local_vocab(provider);

  SweepResult res;
  for (std::size_t c = 0; c < specs.size(); ++c) {
    std::vector<const MetricRow*> per_seed;
    const std::size_t first = res.rows.size();
    for (std::size_t s = 0; s < seeds.size(); ++s) {
      std::vector<GenerationRecord> recs;
      for (std::size_t j : job_of[c * seeds.size() + s]) recs.push_back(records[j]);
      SweepRow row;
      row.metrics = aggregate_records(recs, targets, profile, cfg.zone_width, cfg.f1_mode, vocab,
                                      specs[c].id);
      row.decoder = decoder_kind_name(specs[c].kind);
      row.seed = seeds[s];
      res.rows.push_back(std::move(row));
      if (record_lines != nullptr) {
        for (std::size_t i = 0; i < recs.size(); ++i) {
          record_lines->push_back("{\"config\":" + json(specs[c].id).dump() +
                                  ",\"seed\":" + std::to_string(seeds[s]) +
                                  ",\"item\":" + std::to_string(i) +
                                  ",\"record\":" + recs[i].to_json_line() + "}");
        }
      }
    }
    for (std::size_t r = first; r < res.rows.size(); ++r) per_seed.push_back(&res.rows[r].metrics);
    SweepRow agg;
    agg.metrics = mean_rows(per_seed);
    agg.decoder = res.rows[first].decoder;
    res.aggregates.push_back(std::move(agg));
  }
  res.correlations = {
      correlate(res.aggregates, "evr", &MetricRow::evr, "f1_quality_proxy", &MetricRow::f1),
      correlate(res.aggregates, "elvr", &MetricRow::elvr, "repeat_score5",
                &MetricRow::repeat_score5),
      correlate(res.aggregates, "euvr", &MetricRow::euvr, "f1", &MetricRow::f1),
  };
  return res;
}

SweepResult cmd_sweep(const ExperimentConfig& cfg, std::ostream& log, bool write_files) {
  cfg.validate();
  const auto provider = make_provider(cfg);
  const auto profile = StableEntropyProfile::load_file(cfg.profile_path);
  const auto sets = make_eval_sets(*provider, cfg);
  std::vector<std::string> record_lines;
  auto res = run_sweep(*provider, profile, sets.eval_items, cfg,
                       write_files ? &record_lines : nullptr);
  if (write_files) {
    const fs::path dir(cfg.out_dir);
    fs::create_directories(dir);
    write_file(dir / "results.csv", results_csv(res));
    write_file(dir / "correlations.csv", correlations_csv(res));
    std::string recs;
    for (const auto& line : record_lines) recs += line + "\n";
    write_file(dir / "records.jsonl", recs);
    std::string targets;
    for (std::size_t i = 0; i < sets.eval_items.size(); ++i) {
      const auto& item = sets.eval_items[i];
      std::vector<TokenId> ctx = item.prefix.ids;
      std::vector<double> ent;
      std::vector<double> sur;
      for (TokenId tok : item.target.ids) {
        const auto dist = provider->next_distribution(ctx);
        ent.push_back(entropy_nats(dist));
        sur.push_back(surprisal_nats(dist, tok));
        ctx.push_back(tok);
      }
      targets += "{\"item\":" + std::to_string(i) + ",\"target\":" + json(item.target.ids).dump() +
                 ",\"entropies\":[" + join_reals(ent, 9) + "],\"surprisals\":[" +
                 join_reals(sur, 9) + "]}\n";
    }
    write_file(dir / "targets.jsonl", targets);
  }
  log << kMetricColumns << "\n";
  for (const auto& row : res.aggregates) log << metric_row_csv(row.metrics) << "\n";
  for (const auto& c : res.correlations) {
    log << "rho(" << c.x << "," << c.y << ") = "
        << (c.rho ? format_fixed(*c.rho, 6) : std::string("undefined")) << " over " << c.n
        << " configs\n";
  }
  return res;
}

std::vector<std::string> cmd_emit_plots(const std::string& results_dir,
                                        const std::string& profile_path,
                                        const std::string& out_dir, double width) {
  const fs::path in(results_dir);
  for (const char* name : {"results.csv", "records.jsonl", "targets.jsonl"}) {
    if (!fs::exists(in / name)) {
      throw Error(ErrorCode::kIo, "missing " + (in / name).string());
    }
  }
  const auto profile = StableEntropyProfile::load_file(profile_path);
  const fs::path out(out_dir);
  fs::create_directories(out);
  std::vector<std::string> written;
  auto emit = [&](const std::string& name, const std::string& body) {
    write_file(out / name, body);
    written.push_back((out / name).string());
  };

  struct Series {
    std::vector<double> entropies;
    std::vector<double> surprisals;
  };
  // Per-config traces of the smallest seed, keyed by item.
  std::map<std::string, std::map<std::size_t, Series>> gens;
  std::map<std::string, std::uint64_t> first_seed;
  for (const auto& line : read_lines((in / "records.jsonl").string())) {
    if (line.empty()) continue;
    const auto j = json::parse(line);
    const auto config = j.at("config").get<std::string>();
    const auto seed = j.at("seed").get<std::uint64_t>();
    auto it = first_seed.find(config);
    if (it == first_seed.end()) it = first_seed.emplace(config, seed).first;
    if (seed != it->second) continue;
    const auto& rec = j.at("record");
    gens[config][j.at("item").get<std::size_t>()] =
        Series{json_reals(rec.at("entropies")), json_reals(rec.at("surprisals"))};
  }
  std::map<std::size_t, Series> targets;
  for (const auto& line : read_lines((in / "targets.jsonl").string())) {
    if (line.empty()) continue;
    const auto j = json::parse(line);
    targets[j.at("item").get<std::size_t>()] =
        Series{json_reals(j.at("entropies")), json_reals(j.at("surprisals"))};
  }
  if (targets.empty()) throw Error(ErrorCode::kEmptyDataset, "targets.jsonl is empty");
  const int window = profile.window;

  auto zone_rows = [&](const std::string& label, const std::vector<double>& ent) {
    std::string rows;
    const auto sm = smooth_trace(ent, window);
    for (std::size_t t = 0; t < ent.size(); ++t) {
      const auto z = zone_bounds(profile, width, t);
      const double mu = profile.mu[profile.clamp(t)];
      if (!label.empty()) rows += csv_field(label) + ",";
      rows += std::to_string(t) + "," + format_fixed(ent[t], 6) + "," + format_fixed(sm[t], 6) +
              "," + format_fixed(mu, 6) + "," + format_fixed(z.lower, 6) + "," +
              format_fixed(z.upper, 6) + "\n";
    }
    return rows;
  };

  const auto& first_target = targets.begin()->second;
  emit("zone_trace.csv",
       "t,entropy,smoothed,mu,lower,upper\n" + zone_rows("", first_target.entropies));

  std::string by_decoder = "config_id,t,entropy,smoothed,mu,lower,upper\n";
  by_decoder += zone_rows("target", first_target.entropies);
  for (const auto& [config, items] : gens) {
    if (!items.empty()) by_decoder += zone_rows(config, items.begin()->second.entropies);
  }
  emit("entropy_by_decoder.csv", by_decoder);

  std::string corr = "config_id,evr,elvr,euvr,f1,repeat_score5\n";
  const auto rows = read_csv(in / "results.csv");
  if (rows.empty()) throw Error(ErrorCode::kFormat, "results.csv is empty");
  std::map<std::string, std::size_t> col;
  for (std::size_t i = 0; i < rows[0].size(); ++i) col[rows[0][i]] = i;
  for (const char* name : {"row_type", "config_id", "evr", "elvr", "euvr", "f1", "repeat_score5"}) {
    if (!col.count(name)) throw Error(ErrorCode::kFormat, std::string("results.csv lacks ") + name);
  }
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const auto& f = rows[r];
    if (f.size() != rows[0].size()) throw Error(ErrorCode::kFormat, "ragged results.csv");
    if (f[col["row_type"]] != "aggregate") continue;
    corr += csv_field(f[col["config_id"]]) + "," + f[col["evr"]] + "," + f[col["elvr"]] + "," +
            f[col["euvr"]] + "," + f[col["f1"]] + "," + f[col["repeat_score5"]] + "\n";
  }
  emit("violation_correlation.csv", corr);

  constexpr int kSurprisalWindow = 5;
  std::string sur = "config_id,t,surprisal,smoothed_surprisal\n";
  auto sur_rows = [&](const std::string& label, const std::vector<double>& s) {
    const auto sm = smooth_trace(s, kSurprisalWindow);
    for (std::size_t t = 0; t < s.size(); ++t) {
      sur += csv_field(label) + "," + std::to_string(t) + "," + format_fixed(s[t], 6) + "," +
             format_fixed(sm[t], 6) + "\n";
    }
  };
  sur_rows("target", first_target.surprisals);
  for (const auto& [config, items] : gens) {
    if (!items.empty()) sur_rows(config, items.begin()->second.surprisals);
  }
  emit("surprisal.csv", sur);

  std::string mean = "config_id,t,mean_smoothed_entropy,n\n";
  auto mean_rows_of = [&](const std::string& label, const std::map<std::size_t, Series>& items) {
    std::vector<double> sum;
    std::vector<std::size_t> n;
    for (const auto& [idx, series] : items) {
      const auto sm = smooth_trace(series.entropies, window);
      if (sm.size() > sum.size()) {
        sum.resize(sm.size(), 0.0);
        n.resize(sm.size(), 0);
      }
      for (std::size_t t = 0; t < sm.size(); ++t) {
        sum[t] += sm[t];
        ++n[t];
      }
    }
    for (std::size_t t = 0; t < sum.size(); ++t) {
      mean += csv_field(label) + "," + std::to_string(t) + "," +
              format_fixed(sum[t] / static_cast<double>(n[t]), 6) + "," + std::to_string(n[t]) +
              "\n";
    }
  };
  mean_rows_of("target", targets);
  for (const auto& [config, items] : gens) mean_rows_of(config, items);
  emit("mean_entropy.csv", mean);
  return written;
}

std::vector<ProbeResult> cmd_serve_check(const std::string& endpoint, std::size_t n_probes,
                                         std::ostream& log) {
  std::vector<ProbeResult> out;
  auto report = [&](ProbeResult r) {
    log << "probe " << r.name << " " << (r.pass ? "pass" : "fail") << " " << r.detail << "\n";
    out.push_back(std::move(r));
  };
  using clock = std::chrono::steady_clock;
  std::unique_ptr<RemoteProvider> provider;
  const auto t0 = clock::now();
  try {
    provider = connect_remote_provider(endpoint);
  } catch (const Error& e) {
    report({"handshake", false, std::string(error_code_name(e.code())) + ": " + e.what()});
    return out;
  }
  const double hello_ms =
      std::chrono::duration<double, std::milli>(clock::now() - t0).count();
  const auto info = provider->vocab_info();
  report({"handshake", true,
          "proto " + std::to_string(wire::kProtocolVersion) + " vocab_size " +
              std::to_string(info.vocab_size) + " in " + format_fixed(hello_ms, 3) + " ms"});

  auto raw_values = [&] {
    return json_reals(json::parse(provider->last_reply()).at("values"));
  };
  auto probe_context = [&](std::size_t i) {
    std::vector<TokenId> ctx = {info.bos};
    const std::uint64_t h = derive_seed(0x5eedULL, i);
    for (std::size_t k = 0; k < i % 8; ++k) {
      ctx.push_back(static_cast<TokenId>(derive_seed(h, k) % info.vocab_size));
    }
    return ctx;
  };

  std::vector<double> latencies;
  {
    ProbeResult r{"normalization", true, ""};
    double worst = 0.0;
    for (std::size_t i = 0; i < n_probes && r.pass; ++i) {
      const auto ctx = probe_context(i);
      try {
        const auto start = clock::now();
        provider->next_distribution(ctx);
        latencies.push_back(
            std::chrono::duration<double, std::milli>(clock::now() - start).count());
        const auto values = raw_values();
        double mass = 0.0;
        for (double v : values) mass += std::exp(v);
        worst = std::max(worst, std::fabs(mass - 1.0));
        if (values.size() != info.vocab_size || std::fabs(mass - 1.0) > 1e-6) {
          r.pass = false;
          r.detail = "reply " + std::to_string(i) + ": length " + std::to_string(values.size()) +
                     " mass " + format_roundtrip(mass);
        }
      } catch (const std::exception& e) {
        r.pass = false;
        r.detail = "reply " + std::to_string(i) + ": " + e.what();
      }
    }
    if (r.pass) {
      r.detail = std::to_string(n_probes) + " replies, max |mass-1| " + format_roundtrip(worst);
    }
    report(std::move(r));
  }
  {
    ProbeResult r{"determinism", false, ""};
    try {
      const auto ctx = probe_context(3);
      provider->next_distribution(ctx);
      const auto a = raw_values();
      provider->next_distribution(ctx);
      const auto b = raw_values();
      r.pass = a.size() == b.size() &&
               std::equal(a.begin(), a.end(), b.begin(), [](double x, double y) {
                 return std::memcmp(&x, &y, sizeof x) == 0;
               });
      r.detail = r.pass ? "identical vectors" : "vectors differ for the same context";
    } catch (const std::exception& e) {
      r.detail = e.what();
    }
    report(std::move(r));
  }
  {
    ProbeResult r{"latency", !latencies.empty(), "no successful requests"};
    if (!latencies.empty()) {
      double sum = 0.0;
      for (double x : latencies) sum += x;
      const double worst = *std::max_element(latencies.begin(), latencies.end());
      r.detail = "mean " + format_fixed(sum / static_cast<double>(latencies.size()), 3) +
                 " ms max " + format_fixed(worst, 3) + " ms over " +
                 std::to_string(latencies.size()) + " requests";
    }
    report(std::move(r));
  }
  return out;
}

}  // namespace entcal
