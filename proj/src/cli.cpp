#include "geodetect/cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include "geodetect/charfun.hpp"
#include "geodetect/detect.hpp"
#include "geodetect/ensembles.hpp"
#include "geodetect/entropy.hpp"
#include "geodetect/error.hpp"
#include "geodetect/graphs.hpp"
#include "geodetect/io.hpp"
#include "geodetect/selftest.hpp"
#include "geodetect/spectrum.hpp"
#include "geodetect/threshold.hpp"

namespace geodetect {

namespace {

using nlohmann::json;

std::uint64_t default_seed() {
  if (const char* env = std::getenv("GEODETECT_SEED")) {
    char* end = nullptr;
    const unsigned long long v = std::strtoull(env, &end, 10);
    if (end != env && *end == '\0') return v;
    throw UsageError(std::string("GEODETECT_SEED is not an unsigned integer: ") + env);
  }
  return 0;
}

std::string read_file(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw UsageError("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream os(path);
  if (!os) throw UsageError("cannot write '" + path + "'");
  os << content;
  if (!os) throw UsageError("write to '" + path + "' failed");
}

json estimate_json(const ProbabilityEstimate& e) {
  json j;
  j["value"] = json_number(e.value);
  j["error_bound"] = json_number(e.error_bound);
  j["method"] = to_string(e.method);
  if (e.method == ProbMethod::mc) {
    j["std_error"] = json_number(e.std_error);
  } else {
    j["quadrature_error"] = json_number(e.quadrature_error);
    j["truncation_error"] = json_number(e.truncation_error);
    j["truncation_radius"] = json_number(e.truncation_radius);
    j["tail"] = to_string(e.tail);
  }
  return j;
}

json threshold_json(const ThresholdEstimate& t) {
  json j;
  j["t"] = json_number(t.t);
  j["method"] = to_string(t.method);
  j["std_error"] = json_number(t.std_error);
  j["error_bound"] = json_number(t.error_bound);
  j["prob_error_bound"] = json_number(t.prob_error_bound);
  return j;
}

json tv_report_json(std::size_t n, double p, const TvBoundReport& r) {
  json j;
  j["n"] = n;
  j["p"] = json_number(p);
  j["method"] = to_string(r.method);
  j["ent_gram"] = json_number(r.ent_gram);
  j["ent_gram_estimate"] = json_number(r.ent_gram_estimate);
  j["ent_gram_std_error"] = json_number(r.ent_gram_std_error);
  if (r.method == EntropyMethod::analytic) {
    j["ent_gram_remainder"] = json_number(r.ent_gram_remainder);
    j["envelope_note"] = "analytic envelope with chosen constants; not authoritative";
  }
  j["ent_bernoulli"] = json_number(r.ent_bernoulli);
  j["p_prime"] = json_number(r.p_prime);
  j["threshold"] = json_number(r.threshold);
  j["tv_gram"] = json_number(r.tv_gram);
  j["tv_bernoulli"] = json_number(r.tv_bernoulli);
  j["tv_upper"] = json_number(r.tv_upper);
  json steps = json::array();
  for (std::size_t k = 0; k < r.steps.size(); ++k) {
    steps.push_back({{"k", k + 1},
                     {"half_neg_logdet", json_number(r.steps[k])},
                     {"std_error", json_number(r.step_std_errors[k])}});
  }
  j["steps"] = std::move(steps);
  return j;
}

json detection_json(const DetectionReport& r) {
  json j;
  j["n"] = r.n;
  j["p"] = json_number(r.p);
  j["t_count"] = r.t_count;
  j["tau_observed"] = json_number(r.tau_observed);
  j["tau_threshold"] = json_number(r.tau_threshold);
  j["decision"] = to_string(r.decision);
  auto prop = [](const std::optional<Proportion>& p) -> json {
    if (!p) return nullptr;
    return {{"value", json_number(p->value)}, {"std_error", json_number(p->std_error)}};
  };
  j["power_estimate"] = prop(r.power_estimate);
  j["type1_estimate"] = prop(r.type1_estimate);
  return j;
}

json row_json(const SweepRow& r) {
  json j;
  j["n"] = r.n;
  j["p"] = json_number(r.p);
  j["family"] = r.family;
  j["d"] = r.d;
  j["eff3"] = json_number(r.eff3);
  j["eff4"] = json_number(r.eff4);
  j["mean_tau_h0"] = json_number(r.mean_tau_h0);
  j["mean_tau_h0_se"] = json_number(r.mean_tau_h0_se);
  j["mean_tau_h1"] = json_number(r.mean_tau_h1);
  j["mean_tau_h1_se"] = json_number(r.mean_tau_h1_se);
  j["tv_statistic_estimate"] = json_number(r.tv_statistic_estimate);
  j["tv_statistic_se"] = json_number(r.tv_statistic_se);
  j["tv_upper_bound"] = json_number(r.tv_upper_bound);
  j["power"] = json_number(r.power);
  j["power_se"] = json_number(r.power_se);
  j["type1"] = json_number(r.type1);
  j["type1_se"] = json_number(r.type1_se);
  j["power_oracle"] = json_number(r.power_oracle);
  j["power_oracle_se"] = json_number(r.power_oracle_se);
  j["runtime"] = json_number(r.runtime);
  j["error"] = r.error;
  return j;
}

struct Globals {
  unsigned threads = 0;
  std::string manifest;
};

}  // namespace

int dispatch(const std::vector<std::string>& args, std::ostream& out,
             std::ostream& err) {
  CLI::App app{"Latent anisotropic geometry in random graphs", "geodetect"};
  app.set_version_flag("--version", GEODETECT_VERSION);
  app.require_subcommand(1);
  app.fallthrough();
  Globals g;
  app.add_option("--threads", g.threads, "worker threads (default: hardware)")
      ->check(CLI::NonNegativeNumber);
  app.add_option("--manifest", g.manifest, "write the run manifest (JSON) here");

  std::uint64_t seed = 0;
  std::string alpha_spec, in_path, out_path, method, model, config_path;
  std::size_t n = 0, samples = 0, replicas = 0;
  double p = 0.5, tol = 0.0;
  std::optional<double> threshold_opt, level_opt;

  auto add_seed = [&](CLI::App* s) {
    s->add_option("--seed", seed, "seed (default: GEODETECT_SEED or 0)");
  };
  auto add_p = [&](CLI::App* s, bool required) {
    auto* o = s->add_option("--p", p, "edge probability")->check(CLI::Range(0.0, 1.0));
    if (required) o->required();
  };

  auto* c_sample = app.add_subcommand("sample-graph", "draw one graph (adjacency text format)");
  c_sample->add_option("--model", model, "er or geo")->required()->check(CLI::IsMember({"er", "geo"}));
  c_sample->add_option("--n", n, "vertices")->required();
  add_p(c_sample, true);
  c_sample->add_option("--alpha", alpha_spec, "spectrum descriptor or file (geo)");
  c_sample->add_option("--out", out_path, "output file (default: standard output)");
  add_seed(c_sample);

  auto* c_tau = app.add_subcommand("tau", "triangle count and signed-triangle statistic");
  c_tau->add_option("--in", in_path, "adjacency file")->required();
  add_p(c_tau, true);

  auto* c_thr = app.add_subcommand("threshold", "connection threshold t_{p,alpha}");
  c_thr->add_option("--alpha", alpha_spec)->required();
  add_p(c_thr, true);
  method = "charfun";
  c_thr->add_option("--method", method, "mc, normal or charfun")
      ->check(CLI::IsMember({"mc", "normal", "charfun"}));
  samples = 1'000'000;
  c_thr->add_option("--samples", samples, "Monte Carlo samples");
  c_thr->add_option("--tol", tol, "inversion tolerance on P");
  add_seed(c_thr);

  auto* c_tri = app.add_subcommand("tri-prob", "triangle probability P(E_p)");
  c_tri->add_option("--alpha", alpha_spec)->required();
  add_p(c_tri, true);
  c_tri->add_option("--method", method, "charfun or mc")->check(CLI::IsMember({"charfun", "mc"}));
  c_tri->add_option("--tol", tol, "relative quadrature tolerance");
  c_tri->add_option("--samples", samples, "Monte Carlo samples");
  add_seed(c_tri);

  auto* c_eff = app.add_subcommand("effective-dim", "effective dimensions eff3, eff4");
  c_eff->add_option("--alpha", alpha_spec)->required();

  auto* c_ent = app.add_subcommand("entropy-bound", "total-variation upper bound");
  c_ent->add_option("--n", n)->required();
  c_ent->add_option("--alpha", alpha_spec)->required();
  add_p(c_ent, true);
  std::string ent_method = "mc";
  c_ent->add_option("--method", ent_method)->check(CLI::IsMember({"mc", "analytic"}));
  std::size_t ent_replicas = 20000;
  c_ent->add_option("--replicas", ent_replicas);
  add_seed(c_ent);

  auto* c_det = app.add_subcommand("detect", "signed-triangle test on one graph");
  c_det->add_option("--in", in_path, "adjacency file")->required();
  add_p(c_det, true);
  auto* o_thr = c_det->add_option("--threshold", threshold_opt, "explicit tau threshold");
  auto* o_lvl = c_det->add_option("--level", level_opt, "nominal level of the calibrated test")
                    ->check(CLI::Range(0.0, 1.0));
  o_thr->excludes(o_lvl);
  c_det->add_option("--replicas", replicas, "replicas for type-I / power estimates");
  c_det->add_option("--alpha", alpha_spec, "alternative spectrum for the power estimate");
  add_seed(c_det);

  auto* c_sweep = app.add_subcommand("phase-sweep", "phase diagram sweep");
  c_sweep->add_option("--config", config_path)->required();

  auto* c_self = app.add_subcommand("selftest", "closed-form sanity checks");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  if (!reversed.empty()) reversed.pop_back();  // program name
  try {
    seed = default_seed();
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForVersion&) {
    out << GEODETECT_VERSION << '\n';
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n" << app.help();
    return 1;
  } catch (const UsageError& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }

  const ExecContext exec =
      g.threads == 0 ? ExecContext::hardware() : ExecContext{g.threads};
  RunManifest manifest(args, seed);
  manifest.set_threads(exec.threads);
  const SeededStream stream{seed, 0};

  // Writes `content` to `path` with a manifest beside it, or to `out`.
  auto emit = [&](const std::string& path, const std::string& content) {
    if (path.empty()) {
      out << content;
    } else {
      write_file(path, content);
      manifest.write(path + ".manifest.json");
    }
  };

  try {
    if (*c_sample) {
      if (n < 1) throw InvalidParameter("n must be >= 1");
      if (!(p > 0.0 && p < 1.0)) throw InvalidParameter("p must be in (0,1)");
      AdjacencyMatrix a;
      if (model == "er") {
        a = er_graph(goe_ensemble(n, stream), normal_upper_quantile(p));
      } else {
        if (alpha_spec.empty()) throw UsageError("--alpha is required for --model geo");
        const AlphaSpectrum alpha = load_spectrum(alpha_spec);
        a = geometric_graph(gram_ensemble_budgeted(n, alpha, stream),
                            scaled_threshold(alpha, p));
      }
      manifest.mark_stage("sample");
      std::ostringstream os;
      write_adjacency(os, a);
      emit(out_path, os.str());
    } else if (*c_tau) {
      std::istringstream is(read_file(in_path));
      const AdjacencyMatrix a = read_adjacency(is);
      if (!(p > 0.0 && p < 1.0)) throw InvalidParameter("p must be in (0,1)");
      const TriangleReport r = triangle_report(a, p);
      json j;
      j["n"] = r.n;
      j["p"] = json_number(r.p);
      j["t_count"] = r.t_count;
      j["tau"] = json_number(r.tau);
      out << j.dump() << '\n';
    } else if (*c_thr) {
      const AlphaSpectrum alpha = load_spectrum(alpha_spec);
      ThresholdEstimate t;
      if (method == "mc") {
        t = threshold_mc(alpha, p, samples, stream, exec);
      } else if (method == "normal") {
        t = threshold_normal(alpha, p);
      } else {
        t = tol > 0.0 ? threshold_charfun(alpha, p, tol) : threshold_charfun(alpha, p);
      }
      out << threshold_json(t).dump() << '\n';
    } else if (*c_tri) {
      const AlphaSpectrum alpha = load_spectrum(alpha_spec);
      if (!(p > 0.0 && p < 1.0)) throw InvalidParameter("p must be in (0,1)");
      const double t = p == 0.5 ? 0.0 : threshold_charfun(alpha, p).t;
      ProbabilityEstimate e;
      if (method == "mc") {
        e = triangle_prob_mc(alpha, p, t, samples == 0 ? 1'000'000 : samples, stream, exec);
      } else {
        QuadratureParams q;
        if (tol > 0.0) q.rel_tol = tol;
        e = p == 0.5 ? triangle_prob_half(alpha, q, exec)
                     : triangle_prob_general(alpha, p, t, q, exec);
      }
      json j = estimate_json(e);
      j["p"] = json_number(p);
      j["t"] = json_number(t);
      out << j.dump() << '\n';
    } else if (*c_eff) {
      const AlphaSpectrum alpha = load_spectrum(alpha_spec);
      json j;
      j["eff3"] = json_number(effective_dim_3(alpha));
      j["eff4"] = json_number(effective_dim_4(alpha));
      out << j.dump() << '\n';
    } else if (*c_ent) {
      const AlphaSpectrum alpha = load_spectrum(alpha_spec);
      EntropyParams ep;
      ep.method = ent_method == "analytic" ? EntropyMethod::analytic : EntropyMethod::mc;
      ep.replicas = ent_replicas;
      ep.stream = stream;
      const TvBoundReport r = tv_upper_bound(n, alpha, p, ep, exec);
      out << tv_report_json(n, p, r).dump() << '\n';
    } else if (*c_det) {
      std::istringstream is(read_file(in_path));
      const AdjacencyMatrix a = read_adjacency(is);
      if (!(p > 0.0 && p < 1.0)) throw InvalidParameter("p must be in (0,1)");
      double thr = 0.0;
      if (threshold_opt) {
        thr = *threshold_opt;
      } else {
        const double level = level_opt.value_or(0.01);
        if (!(level > 0.0 && level < 1.0)) throw InvalidParameter("level must be in (0,1)");
        thr = calibrated_threshold(a.n(), p, normal_upper_quantile(level));
      }
      DetectionReport r = tau_test(a, p, thr);
      if (replicas > 0) {
        r.type1_estimate =
            rejection_rate(GraphSource::er(a.n(), p), thr, replicas, stream.derive(0), exec);
        if (!alpha_spec.empty()) {
          const AlphaSpectrum alpha = load_spectrum(alpha_spec);
          r.power_estimate = rejection_rate(
              GraphSource::geometric(a.n(), p, alpha, scaled_threshold(alpha, p)), thr,
              replicas, stream.derive(1), exec);
        }
      }
      out << detection_json(r).dump() << '\n';
    } else if (*c_sweep) {
      const std::string text = read_file(config_path);
      std::istringstream is(text);
      const SweepConfig cfg = parse_sweep_config(is);
      manifest.set_config_digest(digest_hex(text));
      manifest.mark_stage("config");
      const auto rows = phase_sweep(cfg, exec);
      manifest.mark_stage("sweep");
      std::string csv = sweep_csv_header() + '\n';
      std::string jsonl;
      for (const auto& r : rows) {
        csv += sweep_csv_line(r) + '\n';
        jsonl += row_json(r).dump() + '\n';
        if (!r.error.empty()) {
          err << "cell n=" << r.n << " family=" << r.family << " d=" << r.d
              << ": " << r.error << '\n';
        }
      }
      emit(cfg.out, csv);
      if (!cfg.jsonl.empty()) emit(cfg.jsonl, jsonl);
    } else if (*c_self) {
      const auto results = run_selftest(exec);
      bool ok = true;
      for (const auto& r : results) {
        json j{{"check", r.name}, {"passed", r.passed}};
        if (!r.passed) j["detail"] = r.detail;
        out << j.dump() << '\n';
        ok = ok && r.passed;
      }
      if (!ok) {
        err << "selftest: failures above\n";
        return 2;
      }
    }
    if (!g.manifest.empty()) manifest.write(g.manifest);
  } catch (const NumericError& e) {
    err << "numeric error: " << e.what() << '\n';
    if (e.partial_value() != 0.0 || e.achieved_error() != 0.0) {
      err << "  partial value " << format_number(e.partial_value())
          << ", achieved error " << format_number(e.achieved_error()) << '\n';
    }
    return 2;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}

int dispatch(int argc, char** argv, std::ostream& out, std::ostream& err) {
  return dispatch(std::vector<std::string>(argv, argv + argc), out, err);
}

}  // namespace geodetect
