// Copyright 2026 The entcal Authors
// SPDX-License-Identifier: Apache-2.0

#include "entcal/ngram_model.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include "entcal/error.hpp"
#include "entcal/util.hpp"

namespace entcal {

namespace {

constexpr std::string_view kMagic = "ECLM1";

NGramModel::History make_history(std::span<const TokenId> ids) {
  NGramModel::History h;
  h.len = static_cast<std::uint8_t>(ids.size());
  std::copy(ids.begin(), ids.end(), h.ids.begin());
  return h;
}

void check_order(int order) {
  if (order < 1 || order > kMaxOrder) {
    throw Error(ErrorCode::kInvalidParameter,
                "n-gram order must be in [1, " + std::to_string(kMaxOrder) +
                    "], got " + std::to_string(order));
  }
}

[[noreturn]] void format_error(const std::string& what) {
  throw Error(ErrorCode::kFormat, "model file: " + what);
}

}  // namespace

bool NGramModel::History::operator==(const History& o) const {
  return len == o.len && std::equal(ids.begin(), ids.begin() + len, o.ids.begin());
}

std::size_t NGramModel::HistoryHash::operator()(const History& h) const {
  std::uint64_t x = h.len;
  for (std::size_t i = 0; i < h.len; ++i) {
    x = splitmix64(x ^ static_cast<std::uint32_t>(h.ids[i]));
  }
  return static_cast<std::size_t>(x);
}

NGramModel::NGramModel(Vocabulary vocab, int order, std::vector<Table> tables)
    : vocab_(std::move(vocab)), order_(order), tables_(std::move(tables)) {
  check_order(order_);
  if (tables_.size() != static_cast<std::size_t>(order_)) {
    throw Error(ErrorCode::kInvalidParameter, "table count must equal order");
  }
  const std::size_t v = vocab_.size();
  base_.assign(v, 1.0 / static_cast<double>(v));
  auto it = tables_[0].find(History{});
  if (it != tables_[0].end()) {
    const Successors& s = it->second;
    const double types = static_cast<double>(s.counts.size());
    const double denom = static_cast<double>(s.total) + types;
    for (double& p : base_) p *= types / denom;
    for (auto [w, c] : s.counts) base_[static_cast<std::size_t>(w)] += static_cast<double>(c) / denom;
  }
  std::ostringstream canon;
  save(canon);
  fingerprint_ = hash_hex(fnv1a(canon.str()));
}

std::vector<double> NGramModel::next_probs(std::span<const TokenId> context) const {
  std::vector<double> p = base_;
  const std::size_t max_hist =
      std::min(context.size(), static_cast<std::size_t>(order_ - 1));
  for (std::size_t k = 1; k <= max_hist; ++k) {
    auto it = tables_[k].find(make_history(context.subspan(context.size() - k)));
    if (it == tables_[k].end()) break;
    const Successors& s = it->second;
    const double types = static_cast<double>(s.counts.size());
    const double denom = static_cast<double>(s.total) + types;
    const double keep = types / denom;
    for (double& x : p) x *= keep;
    for (auto [w, c] : s.counts) p[static_cast<std::size_t>(w)] += static_cast<double>(c) / denom;
  }
  return p;
}

ConditionalDistribution NGramModel::next_distribution(
    std::span<const TokenId> context) const {
  for (TokenId id : context) {
    if (id < 0 || static_cast<std::size_t>(id) >= vocab_.size()) {
      throw Error(ErrorCode::kInvalidId,
                  "context id " + std::to_string(id) + " outside vocabulary");
    }
  }
  std::vector<double> p = next_probs(context);
  ConditionalDistribution d;
  d.step = context.size();
  d.logprobs.resize(p.size());
  for (std::size_t i = 0; i < p.size(); ++i) d.logprobs[i] = std::log(p[i]);
  return d;
}

// Plain-text archive:
//   ECLM1
//   order <n>
//   smoothing witten-bell
//   vocab <V>
//   <token>            (V lines, id order)
//   table <k> <entries>
//   <h_1 .. h_k> <total> <n> <w:c> ...   (sorted by history)
//   end
void NGramModel::save(std::ostream& out) const {
  out << kMagic << '\n';
  out << "order " << order_ << '\n';
  out << "smoothing witten-bell\n";
  out << "vocab " << vocab_.size() << '\n';
  for (const auto& t : vocab_.tokens()) out << t << '\n';
  for (int k = 0; k < order_; ++k) {
    const Table& table = tables_[static_cast<std::size_t>(k)];
    std::vector<const Table::value_type*> entries;
    entries.reserve(table.size());
    for (const auto& e : table) entries.push_back(&e);
    std::sort(entries.begin(), entries.end(), [](auto* a, auto* b) {
      return std::lexicographical_compare(
          a->first.ids.begin(), a->first.ids.begin() + a->first.len,
          b->first.ids.begin(), b->first.ids.begin() + b->first.len);
    });
    out << "table " << k << ' ' << entries.size() << '\n';
    for (const auto* e : entries) {
      for (std::size_t i = 0; i < e->first.len; ++i) out << e->first.ids[i] << ' ';
      out << e->second.total << ' ' << e->second.counts.size();
      for (auto [w, c] : e->second.counts) out << ' ' << w << ':' << c;
      out << '\n';
    }
  }
  out << "end\n";
}

NGramModel NGramModel::load(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != kMagic) format_error("missing ECLM1 header");
  std::string key;
  int order = 0;
  if (!(in >> key >> order) || key != "order") format_error("expected order");
  check_order(order);
  std::string smoothing;
  if (!(in >> key >> smoothing) || key != "smoothing" || smoothing != "witten-bell") {
    format_error("unsupported smoothing");
  }
  std::size_t v = 0;
  if (!(in >> key >> v) || key != "vocab" || v < kNumSpecials) format_error("bad vocab header");
  std::getline(in, line);
  std::vector<std::string> tokens;
  for (std::size_t i = 0; i < v; ++i) {
    if (!std::getline(in, line)) format_error("truncated vocabulary");
    if (i >= kNumSpecials) tokens.push_back(line);
  }
  Vocabulary vocab(tokens);
  std::vector<Table> tables(static_cast<std::size_t>(order));
  for (int k = 0; k < order; ++k) {
    int kk = -1;
    std::size_t entries = 0;
    if (!(in >> key >> kk >> entries) || key != "table" || kk != k) format_error("bad table header");
    Table& table = tables[static_cast<std::size_t>(k)];
    table.reserve(entries);
    for (std::size_t e = 0; e < entries; ++e) {
      History h;
      h.len = static_cast<std::uint8_t>(k);
      for (int i = 0; i < k; ++i) {
        if (!(in >> h.ids[static_cast<std::size_t>(i)])) format_error("truncated history");
      }
      Successors s;
      std::size_t n = 0;
      if (!(in >> s.total >> n)) format_error("truncated successor header");
      s.counts.reserve(n);
      for (std::size_t j = 0; j < n; ++j) {
        std::string pair;
        if (!(in >> pair)) format_error("truncated successor list");
        auto colon = pair.find(':');
        if (colon == std::string::npos) format_error("bad successor '" + pair + "'");
        TokenId w = std::stoi(pair.substr(0, colon));
        std::uint64_t c = std::stoull(pair.substr(colon + 1));
        if (w < 0 || static_cast<std::size_t>(w) >= v) format_error("successor id out of range");
        s.counts.emplace_back(w, c);
      }
      table.emplace(h, std::move(s));
    }
  }
  if (!(in >> key) || key != "end") format_error("missing end marker");
  return NGramModel(std::move(vocab), order, std::move(tables));
}

void NGramModel::save_file(const std::string& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path);
  save(out);
  if (!out) throw Error(ErrorCode::kIo, "write failed for " + path);
}

NGramModel NGramModel::load_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot read " + path);
  return load(in);
}

NGramModel train_ngram(const std::vector<std::string>& lines,
                       const Vocabulary& vocab, int order) {
  check_order(order);
  if (vocab.size() <= kNumSpecials) {
    throw Error(ErrorCode::kDegenerateVocab,
                "vocabulary holds only reserved tokens; lower min_count");
  }
  std::vector<std::unordered_map<NGramModel::History, std::map<TokenId, std::uint64_t>,
                                 NGramModel::HistoryHash>>
      raw(static_cast<std::size_t>(order));
  const auto& sp = vocab.specials();
  std::size_t n_events = 0;
  std::vector<TokenId> seq;
  for (const auto& line : lines) {
    seq = encode_text(vocab, line).ids;
    if (seq.size() == 1) continue;  // blank line
    seq.push_back(sp.eos);
    for (std::size_t i = 1; i < seq.size(); ++i) {
      for (std::size_t k = 0; k < static_cast<std::size_t>(order) && k <= i; ++k) {
        auto h = make_history(std::span<const TokenId>(seq).subspan(i - k, k));
        ++raw[k][h][seq[i]];
      }
      ++n_events;
    }
  }
  if (n_events == 0) throw Error(ErrorCode::kCorpusEmpty, "corpus is empty");

  std::vector<NGramModel::Table> tables(static_cast<std::size_t>(order));
  for (std::size_t k = 0; k < raw.size(); ++k) {
    tables[k].reserve(raw[k].size());
    for (auto& [h, succ] : raw[k]) {
      NGramModel::Successors s;
      s.counts.reserve(succ.size());
      for (auto [w, c] : succ) {
        s.counts.emplace_back(w, c);
        s.total += c;
      }
      tables[k].emplace(h, std::move(s));
    }
  }
  return NGramModel(vocab, order, std::move(tables));
}

NGramModel train_ngram(std::istream& corpus, const Vocabulary& vocab, int order) {
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(corpus, line)) lines.push_back(line);
  return train_ngram(lines, vocab, order);
}

double perplexity(const NGramModel& model, const std::vector<std::string>& lines) {
  const auto& sp = model.vocab().specials();
  double nll = 0.0;
  std::size_t n = 0;
  for (const auto& line : lines) {
    auto seq = encode_text(model.vocab(), line).ids;
    if (seq.size() == 1) continue;
    seq.push_back(sp.eos);
    for (std::size_t i = 1; i < seq.size(); ++i) {
      auto p = model.next_probs(std::span<const TokenId>(seq).first(i));
      nll -= std::log(p[static_cast<std::size_t>(seq[i])]);
      ++n;
    }
  }
  if (n == 0) throw Error(ErrorCode::kCorpusEmpty, "no held-out tokens");
  return std::exp(nll / static_cast<double>(n));
}

}  // namespace entcal
