#include <cstdlib>
#include <filesystem>
#include <string>
#include <sys/wait.h>

#include "doctest.h"
#include "json.hpp"
#include "mulch/events.hpp"
#include "mulch/serialize.hpp"

namespace {

struct RunResult {
  int code = -1;
  std::string out;
  std::string err;
};

std::string cli_path() {
  const char* p = std::getenv("MULCH_CLI_PATH");
  REQUIRE_MESSAGE(p != nullptr, "MULCH_CLI_PATH must point at the mulch binary");
  return p;
}

RunResult run_cli(const std::string& args, const std::string& dir) {
  const std::string out_file = dir + "/cli_stdout.txt";
  const std::string err_file = dir + "/cli_stderr.txt";
  const std::string cmd = cli_path() + " " + args + " >" + out_file + " 2>" + err_file;
  const int raw = std::system(cmd.c_str());
  RunResult r;
  r.code = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
  r.out = mulch::read_text_file(out_file);
  r.err = mulch::read_text_file(err_file);
  return r;
}

// The stdout contract: exactly one line of JSON with the standard keys.
nlohmann::json parse_summary(const RunResult& r, const std::string& command) {
  REQUIRE(!r.out.empty());
  REQUIRE(r.out.back() == '\n');
  CHECK(r.out.find('\n') == r.out.size() - 1);
  const auto doc = nlohmann::json::parse(r.out);
  CHECK(doc.at("command").get<std::string>() == command);
  CHECK(doc.contains("seed"));
  CHECK(doc.at("wall_clock_seconds").is_number());
  // One entry per written artifact, keyed by kind, value = path.
  CHECK(doc.at("outputs").is_object());
  for (const auto& [kind, path] : doc.at("outputs").items()) {
    CHECK(!kind.empty());
    CHECK(path.is_string());
  }
  return doc;
}

}  // namespace

TEST_SUITE_BEGIN("cli");

TEST_CASE("help and argument errors use the documented exit codes") {
  namespace fs = std::filesystem;
  const std::string dir = "cli_exitcodes_tmp";
  fs::create_directory(dir);

  const auto help = run_cli("--help", dir);
  CHECK(help.code == 0);
  CHECK(help.out.find("simulate") != std::string::npos);

  CHECK(run_cli("", dir).code == 2);                    // a subcommand is required
  CHECK(run_cli("fit --bogus-flag", dir).code == 2);    // unknown option
  CHECK(run_cli("motifs --delta 1", dir).code == 2);    // missing required option

  const auto missing =
      run_cli("motifs --events no_such_events.csv --delta 1 --out " + dir + "/m.json", dir);
  CHECK(missing.code == 1);
  CHECK(missing.err.find("error:") != std::string::npos);
  CHECK(missing.err.find("no_such_events.csv") != std::string::npos);

  fs::remove_all(dir);
}

TEST_CASE("simulate, cluster, fit, evaluate, motifs, compare, select-k pipeline") {
  namespace fs = std::filesystem;
  const std::string dir = "cli_pipeline_tmp";
  fs::remove_all(dir);
  fs::create_directory(dir);

  // generator config: two well-separated blocks with light self excitation
  mulch::SimConfig cfg;
  cfg.pi = {0.5, 0.5};
  cfg.betas = {1.0};
  cfg.params.assign(4, mulch::BlockPairParams{});
  for (int a = 0; a < 2; ++a)
    for (int b = 0; b < 2; ++b) {
      auto& p = cfg.params[static_cast<std::size_t>(a) * 2 + b];
      p.mu = a == b ? 0.3 : 0.02;
      p.alpha[static_cast<std::size_t>(mulch::ExcitationType::self)] = 0.2;
      p.c = {1.0};
    }
  cfg.duration = 30.0;
  cfg.n_nodes = 12;
  cfg.seed = 7;
  mulch::save_sim_config(cfg, dir + "/config.json");

  const std::string events = dir + "/events.csv";
  const std::string membership = dir + "/truth.json";

  const auto sim = run_cli("simulate --config " + dir + "/config.json --out " + events +
                               " --membership-out " + membership,
                           dir);
  REQUIRE(sim.code == 0);
  const auto sim_doc = parse_summary(sim, "simulate");
  CHECK(sim_doc.at("seed").get<std::uint64_t>() == 7);
  CHECK(sim_doc.at("metrics").at("n_events").get<int>() > 50);
  const auto loaded = mulch::load_events(events);
  CHECK(loaded.stream.n_nodes == 12);
  const auto truth = mulch::load_membership(membership);
  CHECK(truth.labels.size() == 12);

  const auto cl = run_cli("cluster --events " + events + " --k 2 --seed 7 --truth " +
                              membership + " --out " + dir + "/clusters.json",
                          dir);
  REQUIRE(cl.code == 0);
  const auto cl_doc = parse_summary(cl, "cluster");
  CHECK(cl_doc.at("metrics").at("ari").get<double>() == doctest::Approx(1.0));
  CHECK(mulch::load_membership(dir + "/clusters.json").labels.size() == 12);

  const auto fit = run_cli("fit --events " + events +
                               " --k 2 --betas 1 --seed 3 --refine-iters 3 --out " + dir +
                               "/model.json --trace " + dir + "/trace.json",
                           dir);
  REQUIRE(fit.code == 0);
  const auto fit_doc = parse_summary(fit, "fit");
  CHECK(fit_doc.at("metrics").at("train_log_likelihood").is_number());
  const auto model = mulch::load_model(dir + "/model.json");
  CHECK(model.k == 2);
  const auto trace = nlohmann::json::parse(mulch::read_text_file(dir + "/trace.json"));
  CHECK(trace.at("trajectory").is_array());
  CHECK(!trace.contains("wall_clock_seconds"));  // timings stay out of artifacts

  const auto ev = run_cli("evaluate --events " + events + " --model " + dir +
                              "/model.json --train-frac 0.8 --seed 11 --auc-windows 20 --out " +
                              dir + "/metrics.json",
                          dir);
  REQUIRE(ev.code == 0);
  static_cast<void>(parse_summary(ev, "evaluate"));
  const auto metrics = nlohmann::json::parse(mulch::read_text_file(dir + "/metrics.json"));
  CHECK(metrics.at("test_log_likelihood_per_event").is_number());
  CHECK(metrics.at("auc_mean").is_number());
  CHECK(metrics.at("n_train").get<int>() > 0);

  const auto mo = run_cli("motifs --events " + events + " --delta 2 --out " + dir +
                              "/motifs.json",
                          dir);
  REQUIRE(mo.code == 0);
  static_cast<void>(parse_summary(mo, "motifs"));
  const auto grid = mulch::load_motif_matrix(dir + "/motifs.json");
  CHECK(grid.delta == doctest::Approx(2.0));
  CHECK(grid.total() >= 0);

  const auto mc = run_cli("motif-compare --actual " + dir + "/motifs.json --sims " + dir +
                              "/motifs.json " + dir + "/motifs.json --out " + dir +
                              "/mape.json",
                          dir);
  REQUIRE(mc.code == 0);
  static_cast<void>(parse_summary(mc, "motif-compare"));
  const auto mape = nlohmann::json::parse(mulch::read_text_file(dir + "/mape.json"));
  CHECK(mape.at("mape").get<double>() == doctest::Approx(0.0));
  CHECK(mape.at("n_sims").get<int>() == 2);

  const auto sk = run_cli("select-k --events " + events +
                              " --k-candidates 1,2 --betas 1 --refine-iters 2 --out " + dir +
                              "/selection.json",
                          dir);
  REQUIRE(sk.code == 0);
  static_cast<void>(parse_summary(sk, "select-k"));
  const auto sel = nlohmann::json::parse(mulch::read_text_file(dir + "/selection.json"));
  const int chosen = sel.at("k").get<int>();
  CHECK((chosen == 1 || chosen == 2));
  CHECK(sel.at("scores").size() == 2);

  fs::remove_all(dir);
}

TEST_CASE("simulate honors flag overrides over the config") {
  namespace fs = std::filesystem;
  const std::string dir = "cli_override_tmp";
  fs::remove_all(dir);
  fs::create_directory(dir);

  mulch::SimConfig cfg;
  cfg.pi = {1.0};
  cfg.betas = {1.0};
  cfg.params.assign(1, mulch::BlockPairParams{});
  cfg.params[0].mu = 0.2;
  cfg.params[0].c = {1.0};
  cfg.duration = 10.0;
  cfg.n_nodes = 4;
  cfg.seed = 1;
  mulch::save_sim_config(cfg, dir + "/config.json");

  const auto r1 = run_cli("simulate --config " + dir + "/config.json --out " + dir +
                              "/a.csv --seed 5 --n-nodes 6",
                          dir);
  REQUIRE(r1.code == 0);
  const auto doc = parse_summary(r1, "simulate");
  CHECK(doc.at("seed").get<std::uint64_t>() == 5);
  CHECK(mulch::load_events(dir + "/a.csv").stream.n_nodes == 6);

  // same config, same overrides: identical bytes out
  const auto r2 = run_cli("simulate --config " + dir + "/config.json --out " + dir +
                              "/b.csv --seed 5 --n-nodes 6",
                          dir);
  REQUIRE(r2.code == 0);
  CHECK(mulch::read_text_file(dir + "/a.csv") == mulch::read_text_file(dir + "/b.csv"));

  fs::remove_all(dir);
}

TEST_SUITE_END();
