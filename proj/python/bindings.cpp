// Copyright 2026 The entcal Authors
// SPDX-License-Identifier: Apache-2.0

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <limits>
#include <memory>
#include <sstream>

#include "entcal/decoding.hpp"
#include "entcal/error.hpp"
#include "entcal/harness.hpp"
#include "entcal/metrics.hpp"
#include "entcal/ngram_model.hpp"
#include "entcal/profile.hpp"
#include "entcal/provider.hpp"

namespace py = pybind11;
using namespace entcal;

namespace {

ConditionalDistribution dist_of(const std::vector<double>& probs) {
  return ConditionalDistribution::from_probs(probs);
}

py::dict record_dict(const GenerationRecord& r) {
  py::dict d;
  d["decoder"] = decoder_kind_name(r.kind);
  d["tokens"] = r.tokens.ids;
  d["entropies"] = r.entropies;
  d["surprisals"] = r.surprisals;
  d["greedy_flags"] = r.greedy_flags;
  d["eui_count"] = r.eui_count;
  d["backoff_count"] = r.backoff_count;
  d["det_fraction"] = r.det_fraction;
  d["truncated"] = r.truncated;
  d["seed"] = r.seed;
  return d;
}

// Model plus the provider view used by decoders.
struct PyModel {
  std::shared_ptr<const NGramModel> model;
  std::shared_ptr<const ModelProvider> provider;

  explicit PyModel(NGramModel m, std::size_t copy_match = 0, double copy_prior = 1.0)
      : model(std::make_shared<const NGramModel>(std::move(m))) {
    provider = std::make_shared<NGramProvider>(model);
    if (copy_match > 0) {
      provider = std::make_shared<CopyCacheProvider>(provider,
                                                     CopyCacheOptions{copy_match, copy_prior});
    }
  }
};

ExperimentConfig config_from(const py::dict& settings) {
  ExperimentConfig cfg;
  for (const auto& [k, v] : settings) {
    set_config_value(cfg, py::str(k), py::str(v));
  }
  cfg.validate();
  return cfg;
}

}  // namespace

PYBIND11_MODULE(_entcal, m) {
  m.doc() = "Entropy-profile analysis and entropy-aware decoding";

  PYBIND11_CONSTINIT static py::gil_safe_call_once_and_store<py::object> exc;
  exc.call_once_and_store_result(
      [&] { return py::exception<Error>(m, "EntcalError", PyExc_RuntimeError); });
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error& e) {
      py::set_error(exc.get_stored(),
                    (std::string(error_code_name(e.code())) + ": " + e.what()).c_str());
    }
  });

  m.def("entropy", [](const std::vector<double>& p) { return entropy_nats(dist_of(p)); },
        py::arg("probs"));
  m.def("smooth", [](const std::vector<double>& v, int window) { return smooth_trace(v, window); },
        py::arg("values"), py::arg("window"));
  m.def("top_k", [](const std::vector<double>& p, std::size_t k) {
    return truncate_top_k(dist_of(p), k).probs();
  }, py::arg("probs"), py::arg("k"));
  m.def("nucleus", [](const std::vector<double>& p, double top_p) {
    return truncate_nucleus(dist_of(p), top_p).probs();
  }, py::arg("probs"), py::arg("p"));
  m.def("typical", [](const std::vector<double>& p, double tau) {
    return truncate_typical(dist_of(p), tau).probs();
  }, py::arg("probs"), py::arg("tau"));

  m.def("repeat_score5", [](const std::vector<TokenId>& t) { return repeat_score_at_5(t); },
        py::arg("tokens"));
  m.def("ngram_repeats", [](const std::vector<TokenId>& t, std::size_t n) {
    return ngram_repeat_count(t, n);
  }, py::arg("tokens"), py::arg("n"));
  m.def("f1", [](const std::vector<TokenId>& g, const std::vector<TokenId>& t) {
    return f1_overlap(g, t);
  }, py::arg("generated"), py::arg("target"));
  m.def("pearson", [](const std::vector<double>& x, const std::vector<double>& y) {
    return pearson_correlation(x, y);
  }, py::arg("xs"), py::arg("ys"));

  py::class_<PyModel>(m, "Model")
      .def_static("train", [](const std::vector<std::string>& lines, int order, int min_count) {
        return PyModel(train_ngram(lines, build_vocabulary(lines, min_count), order));
      }, py::arg("lines"), py::arg("order") = 4, py::arg("min_count") = 2)
      .def_static("load", [](const std::string& path, std::size_t copy_match, double copy_prior) {
        return PyModel(NGramModel::load_file(path), copy_match, copy_prior);
      }, py::arg("path"), py::arg("copy_match") = 0, py::arg("copy_prior") = 1.0)
      .def("save", [](const PyModel& self, const std::string& path) {
        self.model->save_file(path);
      })
      .def_property_readonly("order", [](const PyModel& self) { return self.model->order(); })
      .def_property_readonly("vocab_size", [](const PyModel& self) {
        return self.provider->vocab_info().vocab_size;
      })
      .def_property_readonly("fingerprint", [](const PyModel& self) {
        return self.provider->fingerprint();
      })
      .def("encode", [](const PyModel& self, const std::string& text) {
        return self.provider->encode(text).ids;
      })
      .def("decode", [](const PyModel& self, const std::vector<TokenId>& ids) {
        return self.provider->decode(ids);
      })
      .def("next_probs", [](const PyModel& self, const std::vector<TokenId>& ctx) {
        return self.provider->next_distribution(ctx).probs();
      })
      .def("perplexity", [](const PyModel& self, const std::vector<std::string>& lines) {
        return perplexity(*self.model, lines);
      })
      .def("entropy_trace", [](const PyModel& self, const std::vector<TokenId>& prefix,
                               const std::vector<TokenId>& target, int window) {
        const auto tr = trace_under_targets(*self.provider, {prefix, Origin::kCorpusTarget},
                                            {target, Origin::kCorpusTarget}, window);
        return py::make_tuple(tr.raw, tr.smoothed);
      }, py::arg("prefix"), py::arg("target"), py::arg("window") = 5)
      .def("generate", [](const PyModel& self, const std::vector<TokenId>& prefix,
                          const std::string& decoder, std::size_t max_len, std::uint64_t seed,
                          const StableEntropyProfile* profile) {
        DecodeRequest req;
        req.provider = self.provider.get();
        req.prefix = {prefix, Origin::kCorpusTarget};
        req.max_len = max_len;
        req.seed = seed;
        GenerationRecord rec;
        {
          py::gil_scoped_release release;
          rec = run_decoder(parse_decoder_spec(decoder), req, profile);
        }
        return record_dict(rec);
      }, py::arg("prefix"), py::arg("decoder") = "greedy", py::arg("max_len") = 64,
         py::arg("seed") = 0, py::arg("profile") = nullptr);

  py::class_<StableEntropyProfile>(m, "Profile")
      .def_static("load", &StableEntropyProfile::load_file)
      .def_static("estimate", [](const PyModel& model,
                                 const std::vector<std::pair<std::vector<TokenId>,
                                                             std::vector<TokenId>>>& items,
                                 int window, std::size_t horizon) {
        std::vector<ProfileItem> data;
        for (const auto& [p, t] : items) {
          data.push_back({{p, Origin::kCorpusTarget}, {t, Origin::kCorpusTarget}});
        }
        auto prof = estimate_profile(*model.provider, data, window, horizon);
        prof.model_hash = model.provider->fingerprint();
        return prof;
      }, py::arg("model"), py::arg("items"), py::arg("window") = 5, py::arg("horizon") = 64)
      .def("save", &StableEntropyProfile::save_file)
      .def_readonly("mu", &StableEntropyProfile::mu)
      .def_readonly("sigma", &StableEntropyProfile::sigma)
      .def_readonly("count", &StableEntropyProfile::count)
      .def_readonly("window", &StableEntropyProfile::window)
      .def_readonly("horizon", &StableEntropyProfile::horizon)
      .def_readonly("model_hash", &StableEntropyProfile::model_hash)
      .def("zone", [](const StableEntropyProfile& p, std::size_t t, double width) {
        const auto z = zone_bounds(p, width, t);
        return py::make_tuple(z.lower, z.upper);
      }, py::arg("t"), py::arg("width") = 1.5)
      .def("violations", [](const StableEntropyProfile& p, const std::vector<double>& entropies,
                            double width) {
        const auto v = detect_violations(smooth_trace(entropies, p.window), p, width);
        py::dict d;
        d["evr"] = v.evr;
        d["elvr"] = v.elvr;
        d["euvr"] = v.euvr;
        return d;
      }, py::arg("entropies"), py::arg("width") = 1.5)
      .def("fit_line", [](const StableEntropyProfile& p, std::size_t t_min) {
        const auto f = fit_line(p, t_min);
        return py::make_tuple(f.slope, f.intercept, f.mse);
      }, py::arg("t_min") = 5);

  m.def("train", [](const py::dict& settings) {
    std::ostringstream log;
    const auto res = cmd_train(config_from(settings), log);
    return py::make_tuple(res.vocab_size, res.heldout_perplexity);
  }, py::arg("settings"), "Train and save a model; settings use config-file keys.");
  m.def("profile", [](const py::dict& settings) {
    std::ostringstream log;
    ProfileResult res;
    const auto cfg = config_from(settings);
    {
      py::gil_scoped_release release;
      res = cmd_profile(cfg, log);
    }
    py::dict d;
    d["slope"] = res.fit.slope;
    d["intercept"] = res.fit.intercept;
    d["mse"] = res.fit.mse;
    d["coverage"] = res.coverage;
    d["items"] = res.items;
    return d;
  }, py::arg("settings"));
  m.def("sweep", [](const py::dict& settings) {
    std::ostringstream log;
    SweepResult res;
    const auto cfg = config_from(settings);
    {
      py::gil_scoped_release release;
      res = cmd_sweep(cfg, log);
    }
    py::list rows;
    for (const auto& r : res.aggregates) {
      py::dict d;
      d["config_id"] = r.metrics.config_id;
      d["f1"] = r.metrics.f1;
      d["repeat_score5"] = r.metrics.repeat_score5;
      d["ngram3_repeats"] = r.metrics.ngram3_repeats;
      d["evr"] = r.metrics.evr;
      d["elvr"] = r.metrics.elvr;
      d["euvr"] = r.metrics.euvr;
      d["det_pct"] = r.metrics.det_pct;
      d["backoffs_mean"] = r.metrics.backoffs_mean;
      rows.append(d);
    }
    py::dict corr;
    for (const auto& c : res.correlations) {
      corr[py::str(c.x + "~" + c.y)] = c.rho ? py::cast(*c.rho) : py::none();
    }
    return py::make_tuple(rows, corr);
  }, py::arg("settings"));
}
