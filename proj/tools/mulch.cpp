// mulch: command-line front end tying the pipeline together
// (simulate -> cluster/fit -> evaluate / motifs / motif-compare / select-k).
// Every subcommand writes its declared artifacts and prints a one-line JSON
// summary (command, seed, wall-clock seconds, output paths) on stdout.
// Exit codes: 0 success, 1 runtime error (message on stderr), 2 usage error.

#include <array>
#include <chrono>
#include <cstdint>
#include <cstdlib>
#include <iostream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "mulch/eval.hpp"
#include "mulch/events.hpp"
#include "mulch/fit.hpp"
#include "mulch/model.hpp"
#include "mulch/motifs.hpp"
#include "mulch/rng.hpp"
#include "mulch/serialize.hpp"
#include "mulch/simulate.hpp"
#include "mulch/spectral.hpp"

namespace {

using nlohmann::json;

// Stream index used for the clustering RNG; matches the fit pipeline so
// `cluster` reproduces the spectral stage of `fit` for the same seed.
constexpr std::uint64_t kSpectralStream = 500;

struct Summary {
  json seed = nullptr;
  json outputs = json::object();
  json metrics = json::object();
};

struct StreamFlags {
  std::string events_path;
  bool drop_self_loops = false;
  double horizon = -1.0;
  double rescale = -1.0;
};

void add_stream_flags(CLI::App& sub, StreamFlags& f) {
  sub.add_option("--events", f.events_path, "input events CSV (sender,receiver,time)")
      ->required();
  sub.add_flag("--drop-self-loops", f.drop_self_loops,
               "skip self-loop rows instead of failing on them");
  sub.add_option("--horizon", f.horizon,
                 "observation end in stream time units; default is the last timestamp");
  sub.add_option("--rescale", f.rescale, "affinely map the event time span onto [0, VALUE]");
}

[[nodiscard]] mulch::LoadedEvents load_stream(const StreamFlags& f) {
  mulch::LoadOptions opts;
  opts.drop_self_loops = f.drop_self_loops;
  if (f.horizon > 0) opts.duration = f.horizon;
  auto loaded = mulch::load_events(f.events_path, opts);
  if (f.rescale > 0) loaded.stream = mulch::rescale_timestamps(loaded.stream, f.rescale);
  return loaded;
}

struct SplitFlags {
  std::int64_t n_train = -1;
  double train_frac = -1.0;
};

void add_split_flags(CLI::App& sub, SplitFlags& f) {
  auto* a = sub.add_option("--n-train", f.n_train, "number of leading events used for training");
  auto* b = sub.add_option("--train-frac", f.train_frac,
                           "fraction of events used for training, in [0, 1]");
  a->excludes(b);
  b->excludes(a);
}

[[nodiscard]] std::size_t resolve_n_train(const SplitFlags& f, std::size_t n_events,
                                          std::size_t fallback) {
  if (f.n_train >= 0) {
    if (static_cast<std::size_t>(f.n_train) > n_events) {
      throw std::invalid_argument("--n-train exceeds the number of events");
    }
    return static_cast<std::size_t>(f.n_train);
  }
  if (f.train_frac >= 0) {
    if (f.train_frac > 1.0) throw std::invalid_argument("--train-frac must lie in [0, 1]");
    return static_cast<std::size_t>(f.train_frac * static_cast<double>(n_events));
  }
  return fallback;
}

[[nodiscard]] int resolve_workers(int flag_value) {
  if (flag_value > 0) return flag_value;
  if (const char* env = std::getenv("MULCH_WORKERS")) {
    const int v = std::atoi(env);
    if (v > 0) return v;
  }
  const unsigned hc = std::thread::hardware_concurrency();
  return hc == 0 ? 1 : static_cast<int>(hc);
}

[[nodiscard]] std::array<bool, mulch::kNumExcitationTypes> parse_alpha_mask(
    const std::string& csv) {
  std::array<bool, mulch::kNumExcitationTypes> mask{};
  std::stringstream ss(csv);
  std::string token;
  bool any = false;
  while (std::getline(ss, token, ',')) {
    const auto first = token.find_first_not_of(" \t");
    const auto last = token.find_last_not_of(" \t");
    if (first == std::string::npos) continue;
    token = token.substr(first, last - first + 1);
    bool known = false;
    for (std::size_t t = 0; t < mulch::kNumExcitationTypes; ++t) {
      if (token == mulch::excitation_name(static_cast<mulch::ExcitationType>(t))) {
        mask[t] = true;
        known = true;
        any = true;
        break;
      }
    }
    if (!known) {
      throw std::invalid_argument(
          "--alpha-mask: unknown excitation '" + token +
          "' (expected self, recip, turn, gen_recip, allied_cont, allied_recip)");
    }
  }
  if (!any) throw std::invalid_argument("--alpha-mask: no excitations listed");
  return mask;
}

struct FitFlags {
  int k = 1;
  std::string betas;
  std::string beta_unit = "s";
  std::string alpha_mask;
  std::uint64_t seed = 0;
  int workers = 0;
  int refine_iters = 15;
};

void add_fit_flags(CLI::App& sub, FitFlags& f) {
  sub.add_option("--k", f.k, "number of blocks")->required()->check(CLI::PositiveNumber);
  sub.add_option("--betas", f.betas,
                 "comma-separated kernel decays: bare numbers are rates, values with a "
                 "duration suffix (s,m,h,d,w,mo,y) are converted via --beta-unit")
      ->required();
  sub.add_option("--beta-unit", f.beta_unit,
                 "time unit of the stream's timestamps, used only for duration suffixes");
  sub.add_option("--alpha-mask", f.alpha_mask,
                 "comma-separated excitations to fit (others pinned to 0); default all six");
  sub.add_option("--seed", f.seed, "RNG seed");
  sub.add_option("--workers", f.workers,
                 "parallel block-pair fits; 0 = $MULCH_WORKERS or hardware concurrency");
  sub.add_option("--refine-iters", f.refine_iters,
                 "maximum membership refinement rounds; 0 disables refinement");
}

[[nodiscard]] mulch::FitConfig make_fit_config(const FitFlags& f) {
  mulch::FitConfig cfg;
  cfg.k = f.k;
  cfg.betas = mulch::parse_beta_rates(f.betas, f.beta_unit);
  cfg.seed = f.seed;
  cfg.workers = resolve_workers(f.workers);
  cfg.max_refinement_iters = f.refine_iters;
  if (!f.alpha_mask.empty()) cfg.alpha_mask = parse_alpha_mask(f.alpha_mask);
  return cfg;
}

void write_id_map(const std::string& artifact_path, const std::vector<std::string>& node_ids,
                  json& outputs) {
  const std::string path = artifact_path + ".idmap.json";
  mulch::write_text_file(path, mulch::id_map_to_json(node_ids));
  outputs["idmap"] = path;
}

// ---------------------------------------------------------------------------
// simulate

struct SimulateOpts {
  std::string config_path;
  std::string out_path;
  std::string membership_out;
  std::uint64_t seed = 0;
  double duration = -1.0;
  int n_nodes = -1;
  bool allow_unstable = false;
};

[[nodiscard]] Summary run_simulate(const CLI::App& sub, const SimulateOpts& o) {
  auto cfg = mulch::load_sim_config(o.config_path);
  if (sub.count("--seed") > 0) cfg.seed = o.seed;
  if (o.duration > 0) cfg.duration = o.duration;
  if (o.n_nodes > 0) cfg.n_nodes = o.n_nodes;
  if (o.allow_unstable) cfg.allow_unstable = true;

  const auto res = mulch::generate_network(cfg);
  mulch::save_events(res.stream, o.out_path);
  const std::string zpath =
      o.membership_out.empty() ? o.out_path + ".membership.json" : o.membership_out;
  mulch::save_membership(res.membership, zpath);

  Summary s;
  s.seed = cfg.seed;
  s.outputs = {{"events", o.out_path}, {"membership", zpath}};
  s.metrics = {{"n_events", res.stream.events.size()},
               {"n_nodes", res.stream.n_nodes},
               {"spectral_radius", res.spectral_radius},
               {"truncated", res.truncated}};
  return s;
}

// ---------------------------------------------------------------------------
// cluster

struct ClusterOpts {
  StreamFlags stream;
  int k = 1;
  std::uint64_t seed = 0;
  std::string truth_path;
  std::string out_path;
};

[[nodiscard]] Summary run_cluster(const ClusterOpts& o) {
  const auto loaded = load_stream(o.stream);
  const auto counts = mulch::count_matrix(loaded.stream);
  auto rng = mulch::make_rng(o.seed, kSpectralStream);
  const auto z = mulch::spectral_cluster(counts, o.k, rng);
  mulch::save_membership(z, o.out_path);

  Summary s;
  s.seed = o.seed;
  s.outputs = {{"membership", o.out_path}};
  write_id_map(o.out_path, loaded.node_ids, s.outputs);
  s.metrics = {{"n_events", loaded.stream.events.size()}, {"n_nodes", loaded.stream.n_nodes}};
  if (!o.truth_path.empty()) {
    // Loaded events are densified by first appearance, so the truth labels
    // (indexed by original node id) must be lined up through the id map.
    const auto truth = mulch::load_membership(o.truth_path);
    mulch::Membership aligned;
    aligned.num_blocks = truth.num_blocks;
    aligned.labels.reserve(loaded.node_ids.size());
    for (const auto& id : loaded.node_ids) {
      std::size_t orig = 0;
      try {
        orig = std::stoul(id);
      } catch (const std::exception&) {
        throw std::runtime_error("cluster: --truth requires integer node ids, got '" + id +
                                 "'");
      }
      if (orig >= truth.labels.size()) {
        throw std::runtime_error("cluster: truth membership has no entry for node id '" + id +
                                 "'");
      }
      aligned.labels.push_back(truth.labels[orig]);
    }
    s.metrics["ari"] = mulch::adjusted_rand_index(aligned, z);
  }
  return s;
}

// ---------------------------------------------------------------------------
// fit

struct FitOpts {
  StreamFlags stream;
  SplitFlags split;
  FitFlags fit;
  std::string out_path;
  std::string trace_path;
};

[[nodiscard]] Summary run_fit(const FitOpts& o) {
  const auto loaded = load_stream(o.stream);
  const std::size_t m = loaded.stream.events.size();
  const std::size_t n_train = resolve_n_train(o.split, m, m);
  const mulch::EventStream train =
      n_train == m ? loaded.stream : mulch::split_train_test(loaded.stream, n_train).train;

  const auto cfg = make_fit_config(o.fit);
  const auto fr = mulch::fit_mulch(train, cfg);
  mulch::save_model(fr.model, o.out_path);

  Summary s;
  s.seed = cfg.seed;
  s.outputs = {{"model", o.out_path}};
  write_id_map(o.out_path, loaded.node_ids, s.outputs);

  if (!o.trace_path.empty()) {
    json steps = json::array();
    for (const auto& st : fr.trajectory) {
      steps.push_back({{"changes", st.changes}, {"log_likelihood", st.log_likelihood}});
    }
    const json trace{{"trajectory", steps},
                     {"train_log_likelihood", fr.train_log_likelihood},
                     {"pair_log_likelihood", fr.pair_log_likelihood},
                     {"pair_converged", fr.pair_converged},
                     {"pair_empty", fr.pair_empty},
                     {"spectral_membership", fr.spectral_membership.labels}};
    mulch::write_text_file(o.trace_path, trace.dump(2) + "\n");
    s.outputs["trace"] = o.trace_path;
  }

  s.metrics = {{"train_log_likelihood", fr.train_log_likelihood},
               {"n_train", n_train},
               {"refinement_rounds", fr.trajectory.empty() ? 0 : fr.trajectory.size() - 1},
               {"spectral_seconds", fr.timings.spectral_seconds},
               {"fit_seconds", fr.timings.fit_seconds},
               {"refinement_seconds", fr.timings.refinement_seconds}};
  return s;
}

// ---------------------------------------------------------------------------
// evaluate

struct EvaluateOpts {
  StreamFlags stream;
  SplitFlags split;
  std::string model_path;
  std::string out_path;
  std::uint64_t seed = 0;
  int auc_windows = 100;
  double window_len = 0.0;
};

[[nodiscard]] Summary run_evaluate(const EvaluateOpts& o) {
  const auto loaded = load_stream(o.stream);
  const auto model = mulch::load_model(o.model_path);
  const std::size_t m = loaded.stream.events.size();
  const std::size_t n_train = resolve_n_train(o.split, m, 0);

  const double test_ll = mulch::test_log_likelihood_per_event(model, loaded.stream, n_train);
  mulch::AucConfig acfg;
  acfg.n_windows = o.auc_windows;
  acfg.window_len = o.window_len;
  acfg.seed = o.seed;
  const auto auc = mulch::dynamic_link_prediction_auc(model, loaded.stream, n_train, acfg);

  const json result{{"test_log_likelihood_per_event", test_ll},
                    {"auc_mean", auc.mean},
                    {"auc_stddev", auc.stddev},
                    {"auc_windows_used", auc.windows_used},
                    {"auc_windows_skipped", auc.windows_skipped},
                    {"n_train", n_train},
                    {"n_test", m - n_train}};
  mulch::write_text_file(o.out_path, result.dump(2) + "\n");

  Summary s;
  s.seed = o.seed;
  s.outputs = {{"eval", o.out_path}};
  s.metrics = {{"test_log_likelihood_per_event", test_ll}, {"auc_mean", auc.mean}};
  return s;
}

// ---------------------------------------------------------------------------
// motifs

struct MotifsOpts {
  StreamFlags stream;
  double delta = 0.0;
  std::string out_path;
};

[[nodiscard]] Summary run_motifs(const MotifsOpts& o) {
  const auto loaded = load_stream(o.stream);
  const auto counts = mulch::count_temporal_motifs(loaded.stream, o.delta);
  mulch::save_motif_matrix(counts, o.out_path);

  Summary s;
  s.outputs = {{"motifs", o.out_path}};
  s.metrics = {{"total_instances", counts.total()}};
  return s;
}

// ---------------------------------------------------------------------------
// motif-compare

struct MotifCompareOpts {
  std::string actual_path;
  std::vector<std::string> sim_paths;
  std::string out_path;
};

[[nodiscard]] Summary run_motif_compare(const MotifCompareOpts& o) {
  const auto actual = mulch::load_motif_matrix(o.actual_path);
  std::vector<mulch::MotifMatrix> sims;
  sims.reserve(o.sim_paths.size());
  for (const auto& p : o.sim_paths) sims.push_back(mulch::load_motif_matrix(p));
  const auto r = mulch::motif_mape(actual, sims);

  const json result{{"mape", r.mape},
                    {"excluded_cells", r.excluded_cells},
                    {"n_sims", sims.size()},
                    {"delta", actual.delta}};
  mulch::write_text_file(o.out_path, result.dump(2) + "\n");

  Summary s;
  s.outputs = {{"mape", o.out_path}};
  s.metrics = {{"mape", r.mape}, {"excluded_cells", r.excluded_cells}};
  return s;
}

// ---------------------------------------------------------------------------
// select-k

struct SelectKOpts {
  StreamFlags stream;
  SplitFlags split;
  FitFlags fit;
  std::vector<int> candidates;
  std::string metric = "ll";
  std::string out_path;
};

[[nodiscard]] Summary run_select_k(const SelectKOpts& o) {
  const auto loaded = load_stream(o.stream);
  const std::size_t m = loaded.stream.events.size();
  const auto fallback = static_cast<std::size_t>(0.8 * static_cast<double>(m));
  const std::size_t n_train = resolve_n_train(o.split, m, fallback);

  mulch::SelectMetric metric;
  if (o.metric == "ll") {
    metric = mulch::SelectMetric::test_log_likelihood;
  } else if (o.metric == "auc") {
    metric = mulch::SelectMetric::auc;
  } else {
    throw std::invalid_argument("--metric must be 'll' or 'auc'");
  }

  const auto cfg = make_fit_config(o.fit);
  const auto r = mulch::select_K(loaded.stream, o.candidates, metric,
                                 static_cast<int>(n_train), cfg);

  const json result{{"k", r.k},
                    {"candidates", o.candidates},
                    {"scores", r.scores},
                    {"metric", o.metric},
                    {"n_train", n_train}};
  mulch::write_text_file(o.out_path, result.dump(2) + "\n");

  Summary s;
  s.seed = cfg.seed;
  s.outputs = {{"selection", o.out_path}};
  s.metrics = {{"k", r.k}};
  return s;
}

}  // namespace

int main(int argc, char** argv) {
  const auto t0 = std::chrono::steady_clock::now();

  CLI::App app{"Block-structured multivariate Hawkes toolkit"};
  app.require_subcommand(1);

  Summary summary;
  std::string command;

  SimulateOpts sim_opts;
  auto* sim = app.add_subcommand("simulate", "draw a network from a generator config");
  sim->add_option("--config", sim_opts.config_path, "generator config JSON")->required();
  sim->add_option("--out", sim_opts.out_path, "output events CSV")->required();
  sim->add_option("--membership-out", sim_opts.membership_out,
                  "membership JSON path; default <out>.membership.json");
  sim->add_option("--seed", sim_opts.seed, "override the config seed");
  sim->add_option("--duration", sim_opts.duration, "override the config duration");
  sim->add_option("--n-nodes", sim_opts.n_nodes, "override the config node count");
  sim->add_flag("--allow-unstable", sim_opts.allow_unstable,
                "cap instead of refusing when the process is non-stationary");
  sim->callback([&] {
    command = "simulate";
    summary = run_simulate(*sim, sim_opts);
  });

  ClusterOpts cl_opts;
  auto* cl = app.add_subcommand("cluster", "spectral block clustering of the count matrix");
  add_stream_flags(*cl, cl_opts.stream);
  cl->add_option("--k", cl_opts.k, "number of blocks")->required()->check(CLI::PositiveNumber);
  cl->add_option("--seed", cl_opts.seed, "RNG seed");
  cl->add_option("--truth", cl_opts.truth_path,
                 "reference membership JSON; adds its adjusted Rand index to the summary");
  cl->add_option("--out", cl_opts.out_path, "output membership JSON")->required();
  cl->callback([&] {
    command = "cluster";
    summary = run_cluster(cl_opts);
  });

  FitOpts fit_opts;
  auto* fit = app.add_subcommand("fit", "cluster and fit the full model");
  add_stream_flags(*fit, fit_opts.stream);
  add_split_flags(*fit, fit_opts.split);
  add_fit_flags(*fit, fit_opts.fit);
  fit->add_option("--out", fit_opts.out_path, "output model JSON")->required();
  fit->add_option("--trace", fit_opts.trace_path, "refinement trajectory JSON");
  fit->callback([&] {
    command = "fit";
    summary = run_fit(fit_opts);
  });

  EvaluateOpts ev_opts;
  auto* ev = app.add_subcommand("evaluate", "held-out likelihood and link-prediction AUC");
  add_stream_flags(*ev, ev_opts.stream);
  add_split_flags(*ev, ev_opts.split);
  ev->add_option("--model", ev_opts.model_path, "model JSON")->required();
  ev->add_option("--out", ev_opts.out_path, "output metrics JSON")->required();
  ev->add_option("--seed", ev_opts.seed, "RNG seed for the AUC windows");
  ev->add_option("--auc-windows", ev_opts.auc_windows, "number of link-prediction windows");
  ev->add_option("--window-len", ev_opts.window_len,
                 "window length; 0 selects (test span)/100");
  ev->callback([&] {
    command = "evaluate";
    summary = run_evaluate(ev_opts);
  });

  MotifsOpts mo_opts;
  auto* mo = app.add_subcommand("motifs", "count 3-edge temporal motifs in a window");
  add_stream_flags(*mo, mo_opts.stream);
  mo->add_option("--delta", mo_opts.delta, "window length in stream time units")->required();
  mo->add_option("--out", mo_opts.out_path, "output motif matrix JSON")->required();
  mo->callback([&] {
    command = "motifs";
    summary = run_motifs(mo_opts);
  });

  MotifCompareOpts mc_opts;
  auto* mc = app.add_subcommand("motif-compare",
                                "MAPE of simulated motif matrices against an observed one");
  mc->add_option("--actual", mc_opts.actual_path, "observed motif matrix JSON")->required();
  mc->add_option("--sims", mc_opts.sim_paths, "simulated motif matrix JSONs")
      ->required()
      ->delimiter(',');
  mc->add_option("--out", mc_opts.out_path, "output MAPE JSON")->required();
  mc->callback([&] {
    command = "motif-compare";
    summary = run_motif_compare(mc_opts);
  });

  SelectKOpts sk_opts;
  auto* sk = app.add_subcommand("select-k", "pick K by held-out predictive score");
  add_stream_flags(*sk, sk_opts.stream);
  add_split_flags(*sk, sk_opts.split);
  add_fit_flags(*sk, sk_opts.fit);
  sk->get_option("--k")->required(false);  // per-candidate K replaces the fixed one
  sk->add_option("--k-candidates", sk_opts.candidates, "candidate block counts")
      ->required()
      ->delimiter(',');
  sk->add_option("--metric", sk_opts.metric, "selection score: 'll' or 'auc'");
  sk->add_option("--out", sk_opts.out_path, "output selection JSON")->required();
  sk->callback([&] {
    command = "select-k";
    summary = run_select_k(sk_opts);
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help and friends
    app.exit(e);
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }

  const std::chrono::duration<double> elapsed = std::chrono::steady_clock::now() - t0;
  json line{{"command", command},
            {"seed", summary.seed},
            {"wall_clock_seconds", elapsed.count()},
            {"outputs", summary.outputs}};
  if (!summary.metrics.empty()) line["metrics"] = summary.metrics;
  std::cout << line.dump() << "\n";
  return 0;
}
