#pragma once
// Randomized checks of the deterministic inequalities: the slack bound for
// IGW and the per-round surrogate bound of the constrained policy.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <vector>

#include "ccb/core.hpp"
#include "ccb/igw.hpp"
#include "ccb/policy.hpp"

namespace ccb {

struct FuzzResult {
  std::size_t trials = 0;
  double min_slack = std::numeric_limits<double>::infinity();
};

inline std::vector<double> random_simplex_probs(std::size_t k, RandomStream& rng) {
  std::vector<double> w(k);
  double s = 0.0;
  for (double& v : w) {
    v = -std::log(1.0 - rng.uniform());  // Exp(1): normalized gives a uniform simplex draw
    s += v;
  }
  for (double& v : w) v /= s;
  return w;
}

/// v_hat, v in [-3,3]^K, mu a random simplex point, gamma in (0, 100],
/// K uniform in {1..8}.
inline FuzzResult fuzz_lemma1(std::size_t trials, Seed seed) {
  RandomStream rng = RandomStream::derive(seed, "fuzz_lemma1");
  FuzzResult r;
  r.trials = trials;
  for (std::size_t n = 0; n < trials; ++n) {
    const std::size_t k = 1 + rng.index(8);
    std::vector<double> vhat(k), v(k);
    for (auto& e : vhat) e = rng.uniform(-3.0, 3.0);
    for (auto& e : v) e = rng.uniform(-3.0, 3.0);
    const auto mu = validate_simplex(random_simplex_probs(k, rng));
    const double gamma = 100.0 * (1.0 - rng.uniform());
    r.min_slack = std::min(r.min_slack, lemma1_slack(vhat, v, mu, gamma));
  }
  return r;
}

/// Random decisions (K in {1..8}, m in {1,2}, predictions and truths in
/// [-1,1], signed multipliers, gamma in (0,100]) checked against the
/// worst-case comparator and a random one.
inline FuzzResult fuzz_surrogate(std::size_t trials, Seed seed) {
  RandomStream rng = RandomStream::derive(seed, "fuzz_surrogate");
  RandomStream sampler = RandomStream::derive(seed, "fuzz_surrogate_sampler");
  FuzzResult r;
  r.trials = trials;
  for (std::size_t n = 0; n < trials; ++n) {
    const std::size_t k = 1 + rng.index(8);
    const std::size_t m = 1 + rng.index(2);
    RoundDecision d;
    d.reward_hat.resize(k);
    for (auto& e : d.reward_hat) e = rng.uniform(-1.0, 1.0);
    d.cost_hat.assign(m, std::vector<double>(k));
    for (auto& row : d.cost_hat) {
      for (auto& e : row) e = rng.uniform(-1.0, 1.0);
    }
    d.multipliers.resize(m);
    double sq = 0.0;
    for (auto& e : d.multipliers) {
      e = rng.uniform(-3.0, 3.0);
      sq += e * e;
    }
    d.z = std::max(1.0, sq);
    d.gamma = 100.0 * (1.0 - rng.uniform());
    choose_action(d, sampler);

    std::vector<double> f(k);
    for (auto& e : f) e = rng.uniform(-1.0, 1.0);
    std::vector<std::vector<double>> g(m, std::vector<double>(k));
    for (auto& row : g) {
      for (auto& e : row) e = rng.uniform(-1.0, 1.0);
    }
    std::vector<std::span<const double>> g_rows(g.begin(), g.end());

    const auto target = surrogate_target(d, f, g_rows);
    r.min_slack = std::min(r.min_slack, per_round_surrogate_check(d, worst_case_comparator(target), f, g_rows));
    const auto other = validate_simplex(random_simplex_probs(k, rng));
    r.min_slack = std::min(r.min_slack, per_round_surrogate_check(d, other, f, g_rows));
  }
  return r;
}

}  // namespace ccb
