// ccb: run, sweep and check constrained contextual bandit experiments.
//
// Exit codes: 0 success, 1 invalid input or configuration, 2 runtime failure.

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <thread>

#include "ccb/ccb.hpp"

namespace fs = std::filesystem;

namespace {

struct Globals {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
  unsigned threads = 1;
  std::optional<std::size_t> horizon;
};

ccb::ExperimentConfig load(const Globals& g) {
  if (g.config.empty()) throw ccb::ConfigError("--config is required for this command");
  auto c = ccb::load_config(g.config);
  try {
    ccb::certify_config(c);
  } catch (const ccb::InfeasibleError& e) {
    throw ccb::ConfigError(std::string("config: ") + e.what());
  }
  return c;
}

std::ofstream open_out(const fs::path& p) {
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  std::ofstream os(p, std::ios::binary);
  if (!os) throw std::runtime_error("cannot write '" + p.string() + "'");
  return os;
}

unsigned resolve_threads(unsigned t) {
  if (t == 0) return std::max(1u, std::thread::hardware_concurrency());
  return t;
}

int cmd_run(const Globals& g) {
  const auto c = load(g);
  const std::size_t t = g.horizon.value_or(c.horizons.front());
  const std::uint64_t seed = g.seed.value_or(c.seeds.front());
  const fs::path dir = g.out.empty() ? fs::path(".") : fs::path(g.out);
  auto csv = open_out(dir / "rounds.csv");
  const auto s = ccb::run_single(c, t, seed, &csv);
  const auto j = ccb::to_json(s);
  open_out(dir / "summary.json") << j.dump(2) << '\n';
  std::cout << j.dump(2) << '\n';
  return 0;
}

int cmd_sweep(const Globals& g) {
  auto c = load(g);
  if (g.seed) c.seeds = {*g.seed};
  const fs::path dir = g.out.empty() ? fs::path(".") : fs::path(g.out);
  auto write_run = [&](const ccb::RunSummary& r, const std::string& csv) {
    if (!c.write_round_logs) return;
    open_out(dir / ("run_T" + std::to_string(r.horizon) + "_seed" + std::to_string(r.seed) + ".csv")) << csv;
  };
  const auto s = ccb::run_sweep(c, resolve_threads(g.threads), write_run);
  auto csv = open_out(dir / "sweep.csv");
  ccb::write_sweep_csv(csv, s);
  const auto j = ccb::to_json(s);
  open_out(dir / "sweep.json") << j.dump(2) << '\n';
  std::cout << j.dump(2) << '\n';
  return 0;
}

int cmd_check_lemma1(const Globals& g, std::size_t trials) {
  const auto r = ccb::fuzz_lemma1(trials, ccb::Seed{g.seed.value_or(0)});
  std::cout << "trials " << r.trials << " min_slack " << ccb::format_double(r.min_slack) << '\n';
  return r.min_slack >= -1e-9 ? 0 : 2;
}

int cmd_check_surrogate(const Globals& g, std::size_t trials) {
  const auto r = ccb::fuzz_surrogate(trials, ccb::Seed{g.seed.value_or(0)});
  std::cout << "trials " << r.trials << " min_slack " << ccb::format_double(r.min_slack) << '\n';
  return r.min_slack >= -1e-9 ? 0 : 2;
}

int cmd_verify_oracle(const Globals& g) {
  auto c = load(g);
  const std::size_t t = g.horizon.value_or(c.horizons.front());
  if (g.seed) c.seeds = {*g.seed};
  nlohmann::json reports = nlohmann::json::array();
  bool ok = true;
  for (std::uint64_t seed : c.seeds) {
    const auto r = ccb::verify_oracle(c, t, seed);
    if (r.aggregation_regret && *r.aggregation_regret > *r.aggregation_bound) ok = false;
    reports.push_back(ccb::to_json(r));
  }
  const nlohmann::json j = {{"schema_version", ccb::kSchemaVersion}, {"reports", reports}};
  if (!g.out.empty()) open_out(fs::path(g.out) / "verify_oracle.json") << j.dump(2) << '\n';
  std::cout << j.dump(2) << '\n';
  return ok ? 0 : 2;
}

int cmd_solve_benchmark(const Globals& g) {
  const auto c = load(g);
  const std::size_t t = g.horizon.value_or(c.horizons.back());
  const auto w = ccb::nominal_context_weights(c.spec);
  const auto b = ccb::regime_benchmark(c, w, std::max<std::size_t>(t, 1));
  nlohmann::json policy = nlohmann::json::array();
  for (std::size_t x = 0; x < c.spec.n_contexts; ++x) {
    policy.push_back({{"context", x},
                      {"probs", b.policy.per_context[x].probs()},
                      {"value", b.policy.value_per_context[x]}});
  }
  const nlohmann::json j = {{"schema_version", ccb::kSchemaVersion},
                            {"regime", std::string(ccb::to_string(c.regime))},
                            {"policy", policy},
                            {"certificate", ccb::to_json(b.certificate)}};
  if (!g.out.empty()) open_out(fs::path(g.out) / "benchmark.json") << j.dump(2) << '\n';
  std::cout << j.dump(2) << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Constrained contextual bandits via regression oracles"};
  app.fallthrough();
  app.require_subcommand(1);

  Globals g;
  app.add_option("--config", g.config, "Experiment config (JSON)");
  app.add_option("--seed", g.seed, "Override the seed list with a single seed");
  app.add_option("--out", g.out, "Output directory");
  app.add_option("--threads", g.threads, "Worker threads for sweeps (0 = all cores)");
  app.add_option("--horizon", g.horizon, "Horizon T for run, verify-oracle and solve-benchmark");

  std::size_t lemma_trials = 100000;
  std::size_t surrogate_trials = 100000;
  auto* run = app.add_subcommand("run", "Single run: round CSV and JSON summary");
  auto* sweep = app.add_subcommand("sweep", "All (horizon, seed) pairs: CSV matrix and slope fits");
  auto* lemma = app.add_subcommand("check-lemma1", "Randomized IGW slack check");
  lemma->add_option("--trials", lemma_trials);
  auto* surrogate = app.add_subcommand("check-surrogate", "Randomized per-round surrogate bound check");
  surrogate->add_option("--trials", surrogate_trials);
  auto* oracle = app.add_subcommand("verify-oracle", "Standalone oracle error against its budget");
  auto* bench = app.add_subcommand("solve-benchmark", "Benchmark policy and feasibility certificate");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 1;
  }

  try {
    if (*run) return cmd_run(g);
    if (*sweep) return cmd_sweep(g);
    if (*lemma) return cmd_check_lemma1(g, lemma_trials);
    if (*surrogate) return cmd_check_surrogate(g, surrogate_trials);
    if (*oracle) return cmd_verify_oracle(g);
    if (*bench) return cmd_solve_benchmark(g);
  } catch (const std::invalid_argument& e) {  // ValidationError, ConfigError
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "failure: " << e.what() << '\n';
    return 2;
  }
  return 1;
}
