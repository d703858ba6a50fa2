#pragma once
// Experiment runner: single runs, seed/horizon sweeps, metrics, round logs
// and log-log slope fits.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <functional>
#include <limits>
#include <mutex>
#include <numeric>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <thread>
#include <variant>
#include <vector>

#include <json.hpp>

#include "ccb/config.hpp"
#include "ccb/core.hpp"
#include "ccb/env.hpp"
#include "ccb/lyapunov.hpp"
#include "ccb/oracle.hpp"
#include "ccb/policy.hpp"

namespace ccb {

// ---------------------------------------------------------------------------
// Round logs
// ---------------------------------------------------------------------------

struct RoundLog {
  std::size_t t = 0;
  std::size_t context = 0;
  std::size_t action = 0;
  double reward = 0.0;
  std::vector<double> costs;   ///< raw realized costs
  std::vector<double> queues;  ///< Q_i(t) after the update
  double z = 1.0;
  double gamma = 0.0;
  double sqerr_f = 0.0;
  std::vector<double> sqerr_g;
  std::optional<double> surrogate_slack;
};

inline std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline void write_csv_header(std::ostream& os, std::size_t m) {
  os << "t,context,action,reward";
  for (std::size_t i = 1; i <= m; ++i) os << ",cost_" << i;
  for (std::size_t i = 1; i <= m; ++i) os << ",Q_" << i;
  os << ",z_t,gamma_t,sqerr_f";
  for (std::size_t i = 1; i <= m; ++i) os << ",sqerr_g_" << i;
  os << ",surrogate_slack\n";
}

inline void write_csv_row(std::ostream& os, const RoundLog& r) {
  os << r.t << ',' << r.context << ',' << r.action << ',' << format_double(r.reward);
  for (double c : r.costs) os << ',' << format_double(c);
  for (double q : r.queues) os << ',' << format_double(q);
  os << ',' << format_double(r.z) << ',' << format_double(r.gamma) << ',' << format_double(r.sqerr_f);
  for (double e : r.sqerr_g) os << ',' << format_double(e);
  os << ',';
  if (r.surrogate_slack) os << format_double(*r.surrogate_slack);
  os << '\n';
}

// ---------------------------------------------------------------------------
// Benchmarks per regime
// ---------------------------------------------------------------------------

/// Nominal context weights of a process: IID probabilities, cyclic
/// frequencies, uniform for the adaptive adversary.
inline std::vector<double> nominal_context_weights(const ProblemSpec& spec) {
  std::vector<double> w(spec.n_contexts, 0.0);
  if (const auto* iid = std::get_if<IidContexts>(&spec.contexts)) {
    w = iid->probs;
  } else if (const auto* cyc = std::get_if<CyclicContexts>(&spec.contexts)) {
    for (std::size_t x : cyc->sequence) w[x] += 1.0 / static_cast<double>(cyc->sequence.size());
  } else {
    std::fill(w.begin(), w.end(), 1.0 / static_cast<double>(spec.n_contexts));
  }
  return w;
}

struct CertifiedBenchmark {
  BenchmarkPolicy policy;
  FeasibilityCertificate certificate;
};

/// Benchmark policy and certificate for the configured regime.
/// `weights` and `horizon` matter only for the budget regimes; the
/// per-round budget is B_T / T.
inline CertifiedBenchmark regime_benchmark(const ExperimentConfig& c, std::span<const double> weights,
                                           std::size_t horizon) {
  CertifiedBenchmark out;
  const ProblemSpec& spec = c.spec;
  switch (c.regime) {
    case Regime::FeasibleExpectation:
    case Regime::NonNegRegret:
      out.policy = benchmark_in_expectation(spec, 0.0);
      out.certificate = feasibility_check(spec, out.policy, FeasibilityDefinition::in_expectation());
      break;
    case Regime::Slater:
      out.policy = benchmark_in_expectation(spec, -*c.epsilon);
      out.certificate = feasibility_check(spec, out.policy, FeasibilityDefinition::slater(*c.epsilon));
      break;
    case Regime::AlmostSure:
      out.policy = benchmark_almost_sure(spec);
      out.certificate = feasibility_check(spec, out.policy, FeasibilityDefinition::almost_sure());
      break;
    case Regime::CBwK:
    case Regime::CBwLC: {
      const double b = *c.budget_at(horizon) / static_cast<double>(std::max<std::size_t>(horizon, 1));
      std::vector<double> w(weights.begin(), weights.end());
      out.policy = benchmark_budget(spec, w, b);
      out.certificate = feasibility_check(spec, out.policy, FeasibilityDefinition::budget_feasible(w, b));
      break;
    }
  }
  if (!out.certificate.verified) {
    throw InfeasibleError("benchmark certificate failed for regime " + std::string(to_string(c.regime)));
  }
  return out;
}

/// Fails fast when the configured regime has no certified benchmark at
/// any configured horizon under the nominal context weights.
inline void certify_config(const ExperimentConfig& c) {
  const auto w = nominal_context_weights(c.spec);
  for (std::size_t t : c.horizons) {
    if (t > 0) regime_benchmark(c, w, t);
  }
}

// ---------------------------------------------------------------------------
// Single run
// ---------------------------------------------------------------------------

struct RunSummary {
  std::size_t horizon = 0;
  std::uint64_t seed = 0;
  double opt = 0.0;
  double total_reward = 0.0;
  double regret = 0.0;           ///< OPT - sum of realized rewards
  double expected_regret = 0.0;  ///< sum_t <f*(x_t), pi*(x_t) - pi_t(x_t)>
  std::vector<double> ccv_raw;   ///< sum_t g_{t,i}, per resource
  double ccv = 0.0;              ///< max_i ccv_raw[i]
  double ccv_positive = 0.0;     ///< max(0, ccv)
  std::vector<double> queue_final;
  double avg_queue = 0.0;  ///< (1/T) sum_t max_i Q_i(t)
  double queue_p50 = 0.0;
  double queue_p90 = 0.0;
  double queue_p99 = 0.0;
  double r_empirical = 0.0;  ///< sqrt(sum_t max_i Q_i(t)^2)
  double sqerr_f = 0.0;
  std::vector<double> sqerr_g;
  double error_budget = 0.0;  ///< U_T
  bool within_budget = true;
  std::optional<double> min_surrogate_slack;
  // Realized terms of the regret decomposition inequality, logged only:
  //   Phi(Q(T)) - Phi(0) + expected_regret
  //     <= 4 sqrt(K U T) + sum_t Phi''(Q(t)) + 4 sqrt(K U) sqrt(sum_{t<T} Phi'(Q(t))^2)
  double rdi_lhs = 0.0;
  double rdi_rhs = 0.0;
  std::string lyapunov_kind;
  double lyapunov_parameter = 0.0;
  std::optional<double> budget;
  FeasibilityCertificate certificate;
};

/// Nearest-rank quantile of an unsorted sample.
inline double nearest_rank_quantile(std::vector<double> v, double q) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  const auto rank = static_cast<std::size_t>(std::ceil(q * static_cast<double>(v.size())));
  return v[std::clamp<std::size_t>(rank, 1, v.size()) - 1];
}

/// Runs select -> outcome -> update for T rounds. Round records go to
/// `csv` (when non-null) and to `logs` (when non-null).
inline RunSummary run_single(const ExperimentConfig& c, std::size_t horizon, std::uint64_t seed,
                             std::ostream* csv = nullptr, std::vector<RoundLog>* logs = nullptr) {
  const ProblemSpec& spec = c.spec;
  const std::size_t m = spec.num_resources;
  const std::size_t k = spec.num_actions;

  RunSummary s;
  s.horizon = horizon;
  s.seed = seed;
  s.ccv_raw.assign(m, 0.0);
  s.queue_final.assign(m, 0.0);
  s.sqerr_g.assign(m, 0.0);
  s.budget = c.budget_at(horizon);
  if (csv) write_csv_header(*csv, m);

  s.error_budget = c.error_budget_at(horizon);
  if (horizon == 0) {
    s.certificate.verified = true;
    return s;
  }

  const RegimeParams params = c.regime_params(horizon);
  const LyapunovFunction phi = build_lyapunov(params);
  s.lyapunov_kind = phi.is_exponential() ? "exponential" : "quadratic";
  s.lyapunov_parameter = phi.parameter();

  const bool pp = c.positive_part();
  std::vector<MeanTable> cost_truth;
  std::vector<std::unique_ptr<RegressionOracle>> cost_oracles;
  for (std::size_t i = 0; i < m; ++i) {
    cost_truth.push_back(spec.effective_cost_mean(i, pp));
    cost_oracles.push_back(c.make_oracle(cost_truth.back(), Seed{seed}, 1 + i));
  }
  CCBPolicy policy(c.make_oracle(spec.reward_mean, Seed{seed}, 0), std::move(cost_oracles), phi, params, pp);
  Environment env(spec, Seed{seed});
  RandomStream rng = RandomStream::derive(Seed{seed}, "policy");

  // In-expectation style benchmarks do not depend on the realized contexts
  // and are needed each round for the expected-regret diagnostic. The
  // budget benchmarks are solved after the run on realized frequencies.
  const bool budget_regime = c.regime == Regime::CBwK || c.regime == Regime::CBwLC;
  std::optional<CertifiedBenchmark> bench;
  std::vector<double> weights = nominal_context_weights(spec);
  if (!budget_regime || c.regime == Regime::CBwLC) bench = regime_benchmark(c, weights, horizon);

  std::vector<ContextId> realized;
  realized.reserve(horizon);
  std::vector<double> queue_series;
  queue_series.reserve(horizon);
  std::vector<double> played_value(spec.n_contexts, 0.0);  // sum of <f*(x), pi_t(x)> per context
  double phi2_sum = 0.0;                                   // sum_{t<T} Phi'(Q(t))^2, t >= 1
  double phi_second_sum = 0.0;
  double sq_queue_sum = 0.0;
  double queue_sum = 0.0;
  RoundLog row;

  for (std::size_t t = 1; t <= horizon; ++t) {
    const ContextId x = env.next_context();
    RoundDecision d = policy.select(x, rng);
    const Outcome out = env.sample(x, d.action);

    const auto f_row = spec.reward_mean.row(x);
    std::vector<std::span<const double>> g_rows;
    for (const auto& g : cost_truth) g_rows.push_back(g.row(x));

    row.t = t;
    row.context = x.index;
    row.action = d.action.index;
    row.reward = out.reward;
    row.costs = out.costs;
    row.z = d.z;
    row.gamma = d.gamma;
    const double ef = d.reward_hat[d.action.index] - f_row[d.action.index];
    row.sqerr_f = ef * ef;
    row.sqerr_g.assign(m, 0.0);
    for (std::size_t i = 0; i < m; ++i) {
      const double eg = d.cost_hat[i][d.action.index] - g_rows[i][d.action.index];
      row.sqerr_g[i] = eg * eg;
    }
    row.surrogate_slack.reset();
    if (c.record_per_round_checks) {
      const auto target = surrogate_target(d, f_row, g_rows);
      const double slack = per_round_surrogate_check(d, worst_case_comparator(target), f_row, g_rows);
      row.surrogate_slack = slack;
      s.min_surrogate_slack = std::min(s.min_surrogate_slack.value_or(slack), slack);
    }
    played_value[x.index] += dot(f_row, d.igw.dist.probs());

    policy.update(x, d, out);
    env.record(x, d.action);
    realized.push_back(x);

    row.queues.assign(policy.queues().begin(), policy.queues().end());
    s.total_reward += out.reward;
    for (std::size_t i = 0; i < m; ++i) {
      s.ccv_raw[i] += out.costs[i];
      s.sqerr_g[i] += row.sqerr_g[i];
    }
    s.sqerr_f += row.sqerr_f;
    const double qmax = *std::max_element(row.queues.begin(), row.queues.end());
    queue_series.push_back(qmax);
    queue_sum += qmax;
    sq_queue_sum += qmax * qmax;
    for (double q : row.queues) {
      phi_second_sum += phi.second_derivative(q);
      if (t < horizon) phi2_sum += phi.derivative(q) * phi.derivative(q);
    }

    if (csv) write_csv_row(*csv, row);
    if (logs) logs->push_back(row);
  }

  if (budget_regime && c.regime == Regime::CBwK) {
    for (std::size_t x = 0; x < spec.n_contexts; ++x) {
      std::size_t n = 0;
      for (std::size_t cnt : env.counts()[x]) n += cnt;
      weights[x] = static_cast<double>(n) / static_cast<double>(horizon);
    }
    bench = regime_benchmark(c, weights, horizon);
  }
  s.certificate = bench->certificate;
  s.opt = opt_value(bench->policy, realized);
  s.regret = s.opt - s.total_reward;
  for (std::size_t x = 0; x < spec.n_contexts; ++x) {
    std::size_t n = 0;
    for (std::size_t cnt : env.counts()[x]) n += cnt;
    s.expected_regret += static_cast<double>(n) * bench->policy.value_per_context[x] - played_value[x];
  }

  s.ccv = *std::max_element(s.ccv_raw.begin(), s.ccv_raw.end());
  s.ccv_positive = std::max(0.0, s.ccv);
  s.queue_final.assign(policy.queues().begin(), policy.queues().end());
  s.avg_queue = queue_sum / static_cast<double>(horizon);
  s.queue_p50 = nearest_rank_quantile(queue_series, 0.50);
  s.queue_p90 = nearest_rank_quantile(queue_series, 0.90);
  s.queue_p99 = nearest_rank_quantile(queue_series, 0.99);
  s.r_empirical = std::sqrt(sq_queue_sum);
  s.within_budget = s.sqerr_f <= s.error_budget;
  for (double e : s.sqerr_g) s.within_budget = s.within_budget && e <= s.error_budget;

  const double ku = static_cast<double>(k) * s.error_budget;
  double drift = 0.0;
  for (double q : s.queue_final) drift += phi.value(q) - phi.value(0.0);
  s.rdi_lhs = drift + s.expected_regret;
  s.rdi_rhs = 4.0 * std::sqrt(ku * static_cast<double>(horizon)) + phi_second_sum + 4.0 * std::sqrt(ku) * std::sqrt(phi2_sum);
  return s;
}

// ---------------------------------------------------------------------------
// Slope fits
// ---------------------------------------------------------------------------

struct SlopeFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r2 = 1.0;
};

/// OLS of ln max(value, 1) on ln T. R^2 is reported as 1 when the response
/// has no variance.
inline SlopeFit fit_slope(const std::vector<std::pair<double, double>>& points) {
  std::vector<double> xs, ys;
  for (const auto& [t, v] : points) {
    if (!(t > 0.0)) throw ValidationError("fit_slope: horizons must be positive");
    xs.push_back(std::log(t));
    ys.push_back(std::log(std::max(v, 1.0)));
  }
  const double n = static_cast<double>(xs.size());
  const double mx = std::accumulate(xs.begin(), xs.end(), 0.0) / std::max(n, 1.0);
  const double my = std::accumulate(ys.begin(), ys.end(), 0.0) / std::max(n, 1.0);
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxx += (xs[i] - mx) * (xs[i] - mx);
    sxy += (xs[i] - mx) * (ys[i] - my);
    syy += (ys[i] - my) * (ys[i] - my);
  }
  if (xs.size() < 2 || !(sxx > 0.0)) throw ValidationError("fit_slope: need at least 2 distinct horizons");
  SlopeFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  if (syy > 0.0) {
    double sse = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
      const double r = ys[i] - (fit.intercept + fit.slope * xs[i]);
      sse += r * r;
    }
    fit.r2 = 1.0 - sse / syy;
  }
  return fit;
}

/// x^2 <= a x + b with a, b >= 0 implies x <= a + sqrt(b). The comparison
/// allows a few ulps so that inputs meeting the premise only after
/// rounding are not rejected.
inline bool check_quadratic_lemma(double a, double b, double x) {
  const double bound = a + std::sqrt(b);
  return x <= bound + 4.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, std::abs(bound));
}

// ---------------------------------------------------------------------------
// Sweeps
// ---------------------------------------------------------------------------

struct MeanStd {
  double mean = 0.0;
  double std = 0.0;  ///< sample standard deviation
};

inline MeanStd mean_std(const std::vector<double>& v) {
  MeanStd r;
  if (v.empty()) return r;
  for (double x : v) r.mean += x;
  r.mean /= static_cast<double>(v.size());
  if (v.size() > 1) {
    double ss = 0.0;
    for (double x : v) ss += (x - r.mean) * (x - r.mean);
    r.std = std::sqrt(ss / static_cast<double>(v.size() - 1));
  }
  return r;
}

struct HorizonStats {
  std::size_t horizon = 0;
  MeanStd regret;
  MeanStd ccv;
  MeanStd ccv_positive;
  MeanStd avg_queue;
  MeanStd queue_p99;
  double within_budget_fraction = 0.0;
  double min_surrogate_slack = std::numeric_limits<double>::infinity();
};

struct SweepSummary {
  std::vector<HorizonStats> per_horizon;
  std::vector<RunSummary> runs;  ///< canonical (T, seed) order
  SlopeFit regret_fit;
  SlopeFit ccv_fit;
};

/// Runs every (T, seed) pair on `threads` workers. Each run is sequential
/// and owns its random streams, so results do not depend on scheduling.
/// `on_run` (optional) receives each finished run's CSV text in canonical
/// order after all runs complete.
inline SweepSummary run_sweep(const ExperimentConfig& c, unsigned threads = 1,
                              const std::function<void(const RunSummary&, const std::string&)>& on_run = {}) {
  if (c.horizons.size() < 3) throw ConfigError("sweep: at least 3 horizons are required");
  if (c.seeds.size() < 5) throw ConfigError("sweep: at least 5 seeds are required");
  const std::size_t nh = c.horizons.size();
  const std::size_t ns = c.seeds.size();
  const std::size_t total = nh * ns;
  const bool keep_csv = static_cast<bool>(on_run) && c.write_round_logs;

  std::vector<RunSummary> runs(total);
  std::vector<std::string> csv_text(keep_csv ? total : 0);
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mu;

  auto worker = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= total) return;
      try {
        const std::size_t t = c.horizons[i / ns];
        const std::uint64_t seed = c.seeds[i % ns];
        if (keep_csv) {
          std::ostringstream os;
          runs[i] = run_single(c, t, seed, &os);
          csv_text[i] = os.str();
        } else {
          runs[i] = run_single(c, t, seed);
        }
      } catch (...) {
        std::lock_guard lock(failure_mu);
        if (!failure) failure = std::current_exception();
        next.store(total);
      }
    }
  };
  const unsigned n_threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(total)));
  if (n_threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < n_threads; ++w) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  if (failure) std::rethrow_exception(failure);

  SweepSummary out;
  std::vector<std::pair<double, double>> regret_pts, ccv_pts;
  for (std::size_t h = 0; h < nh; ++h) {
    HorizonStats hs;
    hs.horizon = c.horizons[h];
    std::vector<double> reg, ccv, ccvp, avgq, p99;
    std::size_t ok = 0;
    for (std::size_t s = 0; s < ns; ++s) {
      const RunSummary& r = runs[h * ns + s];
      reg.push_back(r.regret);
      ccv.push_back(r.ccv);
      ccvp.push_back(r.ccv_positive);
      avgq.push_back(r.avg_queue);
      p99.push_back(r.queue_p99);
      ok += r.within_budget ? 1 : 0;
      if (r.min_surrogate_slack) hs.min_surrogate_slack = std::min(hs.min_surrogate_slack, *r.min_surrogate_slack);
    }
    hs.regret = mean_std(reg);
    hs.ccv = mean_std(ccv);
    hs.ccv_positive = mean_std(ccvp);
    hs.avg_queue = mean_std(avgq);
    hs.queue_p99 = mean_std(p99);
    hs.within_budget_fraction = static_cast<double>(ok) / static_cast<double>(ns);
    regret_pts.emplace_back(static_cast<double>(hs.horizon), hs.regret.mean);
    ccv_pts.emplace_back(static_cast<double>(hs.horizon), hs.ccv.mean);
    out.per_horizon.push_back(hs);
  }
  out.regret_fit = fit_slope(regret_pts);
  out.ccv_fit = fit_slope(ccv_pts);
  if (on_run) {
    for (std::size_t i = 0; i < total; ++i) on_run(runs[i], keep_csv ? csv_text[i] : std::string());
  }
  out.runs = std::move(runs);
  return out;
}

// ---------------------------------------------------------------------------
// Standalone oracle verification
// ---------------------------------------------------------------------------

struct OracleReport {
  std::size_t horizon = 0;
  std::uint64_t seed = 0;
  double sqerr_truth = 0.0;  ///< sum_t (prediction - f*)^2 at the logged action
  std::optional<double> aggregation_regret;  ///< finite class: loss vs best candidate
  std::optional<double> aggregation_bound;   ///< ln|F| / eta
  double default_budget = 0.0;               ///< U_T
  std::optional<double> fitted_constant;     ///< linear: sqerr_truth / (d ln T)
};

/// Feeds the reward oracle contexts from the configured process and
/// uniformly random actions, with outcomes from the reward channel.
inline OracleReport verify_oracle(const ExperimentConfig& c, std::size_t horizon, std::uint64_t seed) {
  const ProblemSpec& spec = c.spec;
  auto oracle = c.make_oracle(spec.reward_mean, Seed{seed}, 0);
  Environment env(spec, Seed{seed});
  RandomStream logging = RandomStream::derive(Seed{seed}, "logging_policy");

  const auto* finite = dynamic_cast<const FiniteClassOracle*>(oracle.get());
  std::vector<double> candidate_loss(finite ? finite->candidates().size() : 0, 0.0);
  double oracle_loss = 0.0;

  OracleReport rep;
  rep.horizon = horizon;
  rep.seed = seed;
  rep.default_budget = c.error_budget_at(horizon);
  for (std::size_t t = 0; t < horizon; ++t) {
    const ContextId x = env.next_context();
    const ActionIndex a{logging.index(spec.num_actions)};
    const double y = env.sample(x, a).reward;
    const double pred = oracle->predict(x)[a.index];
    const double e = pred - spec.reward_mean.at(x, a);
    rep.sqerr_truth += e * e;
    oracle_loss += (pred - y) * (pred - y);
    if (finite) {
      for (std::size_t j = 0; j < candidate_loss.size(); ++j) {
        const double r = finite->candidates()[j].at(x, a) - y;
        candidate_loss[j] += r * r;
      }
    }
    oracle->update(x, a, y);
    env.record(x, a);
  }
  if (finite) {
    rep.aggregation_regret = oracle_loss - *std::min_element(candidate_loss.begin(), candidate_loss.end());
    rep.aggregation_bound = std::log(static_cast<double>(candidate_loss.size())) / finite->eta();
  } else if (const auto* lin = dynamic_cast<const LinearOracle*>(oracle.get()); lin && horizon > 1) {
    rep.fitted_constant = rep.sqerr_truth / (static_cast<double>(lin->dimension()) * std::log(static_cast<double>(horizon)));
  }
  return rep;
}

// ---------------------------------------------------------------------------
// JSON output
// ---------------------------------------------------------------------------

inline nlohmann::json to_json(const FeasibilityCertificate& cert) {
  return {{"definition", std::string(to_string(cert.definition))},
          {"verified", cert.verified},
          {"worst_slack", cert.worst_slack}};
}

inline nlohmann::json to_json(const RunSummary& s) {
  nlohmann::json j = {{"schema_version", kSchemaVersion},
                      {"horizon", s.horizon},
                      {"seed", s.seed},
                      {"opt", s.opt},
                      {"total_reward", s.total_reward},
                      {"regret", s.regret},
                      {"expected_regret", s.expected_regret},
                      {"ccv_raw", s.ccv_raw},
                      {"ccv", s.ccv},
                      {"ccv_positive", s.ccv_positive},
                      {"queue_final", s.queue_final},
                      {"avg_queue", s.avg_queue},
                      {"queue_quantiles", {{"p50", s.queue_p50}, {"p90", s.queue_p90}, {"p99", s.queue_p99}}},
                      {"r_empirical", s.r_empirical},
                      {"sqerr_f", s.sqerr_f},
                      {"sqerr_g", s.sqerr_g},
                      {"error_budget", s.error_budget},
                      {"within_budget", s.within_budget},
                      {"rdi_lhs", s.rdi_lhs},
                      {"rdi_rhs", s.rdi_rhs},
                      {"lyapunov", {{"kind", s.lyapunov_kind}, {"parameter", s.lyapunov_parameter}}},
                      {"certificate", to_json(s.certificate)}};
  j["min_surrogate_slack"] = s.min_surrogate_slack ? nlohmann::json(*s.min_surrogate_slack) : nlohmann::json();
  j["budget"] = s.budget ? nlohmann::json(*s.budget) : nlohmann::json();
  return j;
}

inline nlohmann::json to_json(const SlopeFit& f) {
  return {{"slope", f.slope}, {"intercept", f.intercept}, {"r2", f.r2}};
}

inline nlohmann::json to_json(const SweepSummary& s) {
  nlohmann::json hs = nlohmann::json::array();
  auto ms = [](const MeanStd& v) { return nlohmann::json{{"mean", v.mean}, {"std", v.std}}; };
  for (const auto& h : s.per_horizon) {
    hs.push_back({{"horizon", h.horizon},
                  {"regret", ms(h.regret)},
                  {"ccv", ms(h.ccv)},
                  {"ccv_positive", ms(h.ccv_positive)},
                  {"avg_queue", ms(h.avg_queue)},
                  {"queue_p99", ms(h.queue_p99)},
                  {"within_budget_fraction", h.within_budget_fraction},
                  {"min_surrogate_slack", std::isfinite(h.min_surrogate_slack) ? nlohmann::json(h.min_surrogate_slack)
                                                                                : nlohmann::json()}});
  }
  return {{"schema_version", kSchemaVersion},
          {"per_horizon", hs},
          {"regret_fit", to_json(s.regret_fit)},
          {"ccv_fit", to_json(s.ccv_fit)}};
}

inline nlohmann::json to_json(const OracleReport& r) {
  nlohmann::json j = {{"schema_version", kSchemaVersion},
                      {"horizon", r.horizon},
                      {"seed", r.seed},
                      {"sqerr_truth", r.sqerr_truth},
                      {"default_budget", r.default_budget}};
  j["aggregation_regret"] = r.aggregation_regret ? nlohmann::json(*r.aggregation_regret) : nlohmann::json();
  j["aggregation_bound"] = r.aggregation_bound ? nlohmann::json(*r.aggregation_bound) : nlohmann::json();
  j["fitted_constant"] = r.fitted_constant ? nlohmann::json(*r.fitted_constant) : nlohmann::json();
  return j;
}

/// One row per run of a sweep, in canonical order.
inline void write_sweep_csv(std::ostream& os, const SweepSummary& s) {
  os << "horizon,seed,opt,total_reward,regret,expected_regret,ccv,ccv_positive,avg_queue,queue_p99,r_empirical,"
        "sqerr_f,error_budget,min_surrogate_slack\n";
  for (const auto& r : s.runs) {
    os << r.horizon << ',' << r.seed << ',' << format_double(r.opt) << ',' << format_double(r.total_reward) << ','
       << format_double(r.regret) << ',' << format_double(r.expected_regret) << ',' << format_double(r.ccv) << ','
       << format_double(r.ccv_positive) << ',' << format_double(r.avg_queue) << ',' << format_double(r.queue_p99)
       << ',' << format_double(r.r_empirical) << ',' << format_double(r.sqerr_f) << ','
       << format_double(r.error_budget) << ',';
    if (r.min_surrogate_slack) os << format_double(*r.min_surrogate_slack);
    os << '\n';
  }
}

}  // namespace ccb
