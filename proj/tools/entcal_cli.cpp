// Copyright 2026 The entcal Authors
// SPDX-License-Identifier: Apache-2.0

#include <cstdlib>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "entcal/error.hpp"
#include "entcal/harness.hpp"
#include "entcal/wire.hpp"

namespace {

// Config keys exposed as --flags (underscores become dashes).
const std::vector<std::string> kConfigKeys = {
    "corpus",     "model",        "profile",  "out_dir",       "min_count", "order",
    "window",     "horizon",      "prefix_len", "gen_len",     "profile_size", "eval_size",
    "heldout_every", "decoders",  "seeds",    "zone_width",    "provider",  "threads",
    "f1_mode",    "copy_match",   "copy_prior"};

struct ConfigFlags {
  std::string config_file;
  std::map<std::string, std::string> values;
  std::vector<std::string> sets;
};

void add_config_flags(CLI::App* cmd, ConfigFlags& flags) {
  cmd->add_option("-c,--config", flags.config_file, "key = value config file");
  for (const auto& key : kConfigKeys) {
    std::string flag = "--" + key;
    for (auto& ch : flag) {
      if (ch == '_') ch = '-';
    }
    cmd->add_option_function<std::string>(
        flag, [&flags, key](const std::string& v) { flags.values[key] = v; },
        "config key " + key);
  }
  cmd->add_option("--set", flags.sets, "extra key=value override (repeatable)");
}

entcal::ExperimentConfig resolve(const ConfigFlags& flags) {
  entcal::ExperimentConfig cfg;
  if (!flags.config_file.empty()) cfg = entcal::load_config_file(flags.config_file);
  for (const auto& [k, v] : flags.values) entcal::set_config_value(cfg, k, v);
  for (const auto& kv : flags.sets) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) {
      throw entcal::Error(entcal::ErrorCode::kConfig, "--set expects key=value, got '" + kv + "'");
    }
    entcal::set_config_value(cfg, kv.substr(0, eq), kv.substr(eq + 1));
  }
  cfg.validate();
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"entcal: entropy profiling and entropy-aware decoding"};
  app.require_subcommand(1);

  ConfigFlags train_flags;
  auto* train = app.add_subcommand("train", "build vocabulary and n-gram model");
  add_config_flags(train, train_flags);

  ConfigFlags profile_flags;
  auto* profile = app.add_subcommand("profile", "estimate the stable entropy profile");
  add_config_flags(profile, profile_flags);

  ConfigFlags decode_flags;
  std::string decoder = "greedy";
  std::string prompt;
  std::uint64_t seed = 1;
  std::string out_prefix;
  auto* decode = app.add_subcommand("decode", "decode one prompt and write its trace table");
  add_config_flags(decode, decode_flags);
  decode->add_option("--decoder", decoder, "decoder spec, e.g. topk:k=30");
  decode->add_option("--prompt", prompt, "prompt text")->required();
  decode->add_option("--seed", seed, "sampling seed");
  decode->add_option("--out", out_prefix, "write <out>.record.jsonl and <out>.trace.csv");

  ConfigFlags sweep_flags;
  auto* sweep = app.add_subcommand("sweep", "run the decoder grid and correlation analysis");
  add_config_flags(sweep, sweep_flags);

  std::string results_dir;
  std::string plots_profile = "entcal.profile";
  std::string plots_out;
  double plots_width = 1.5;
  auto* plots = app.add_subcommand("emit-plots", "write tidy plot tables from a sweep");
  plots->add_option("--results", results_dir, "sweep output directory")->required();
  plots->add_option("--profile", plots_profile, "profile file");
  plots->add_option("--out", plots_out, "output directory (default: <results>/plots)");
  plots->add_option("--zone-width", plots_width, "zone width in sigma units");

  std::string endpoint;
  std::size_t probes = 100;
  auto* check = app.add_subcommand("serve-check", "probe a logits protocol server");
  check->add_option("--endpoint", endpoint, "tcp:HOST:PORT or cmd:COMMAND")->required();
  check->add_option("--probes", probes, "number of normalization probes");

  std::string serve_model = "entcal.model";
  auto* serve = app.add_subcommand("serve", "serve a local model over stdin/stdout");
  serve->add_option("--model", serve_model, "model file");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*train) {
      entcal::cmd_train(resolve(train_flags), std::cout);
    } else if (*profile) {
      entcal::cmd_profile(resolve(profile_flags), std::cout);
    } else if (*decode) {
      entcal::cmd_decode(resolve(decode_flags), decoder, prompt, seed, out_prefix, std::cout);
    } else if (*sweep) {
      entcal::cmd_sweep(resolve(sweep_flags), std::cout);
    } else if (*plots) {
      if (plots_out.empty()) plots_out = results_dir + "/plots";
      for (const auto& path :
           entcal::cmd_emit_plots(results_dir, plots_profile, plots_out, plots_width)) {
        std::cout << path << "\n";
      }
    } else if (*check) {
      const auto results = entcal::cmd_serve_check(endpoint, probes, std::cout);
      for (const auto& r : results) {
        if (!r.pass) return 1;
      }
    } else if (*serve) {
      entcal::ExperimentConfig cfg;
      cfg.model_path = serve_model;
      const auto provider = entcal::make_provider(cfg);
      std::ios::sync_with_stdio(false);
      entcal::wire::serve_stream(*provider, std::cin, std::cout);
    }
  } catch (const entcal::Error& e) {
    std::cerr << "error: " << entcal::error_code_name(e.code()) << ": " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: internal: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
