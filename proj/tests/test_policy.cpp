#include <catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <memory>
#include <vector>

#include "ccb/checks.hpp"
#include "ccb/policy.hpp"

using namespace ccb;
using Catch::Approx;

namespace {

std::unique_ptr<RegressionOracle> fixed(const MeanTable& t) {
  return std::make_unique<FiniteClassOracle>(std::vector<MeanTable>{t});
}

RegimeParams quad_params(std::size_t k, double u, std::size_t horizon = 1000) {
  RegimeParams p;
  p.regime = Regime::FeasibleExpectation;
  p.num_actions = k;
  p.horizon = horizon;
  p.error_budget = u;
  return p;
}

CCBPolicy make_policy(const MeanTable& f, const std::vector<MeanTable>& g, const RegimeParams& p, bool pp = false) {
  std::vector<std::unique_ptr<RegressionOracle>> costs;
  for (const auto& t : g) costs.push_back(fixed(t));
  return CCBPolicy(fixed(f), std::move(costs), build_lyapunov(p), p, pp);
}

}  // namespace

TEST_CASE("squarecb: equal losses explore uniformly") {
  SquareCB cb(fixed(MeanTable::from_rows({{0.2, 0.2, 0.2, 0.2}})), 3.0);
  auto rng = RandomStream::derive(Seed{1}, "policy");
  const auto d = cb.step(ContextId{0}, rng);
  for (double p : d.dist.probs()) CHECK(p == Approx(0.25));
}

TEST_CASE("squarecb: large gamma concentrates on the greedy action") {
  const double gamma = 1e6;
  SquareCB cb(fixed(MeanTable::from_rows({{0.3, -0.1, 0.5}})), gamma);
  auto rng = RandomStream::derive(Seed{1}, "policy");
  const auto d = cb.step(ContextId{0}, rng);
  const double min_gap = 0.4;
  CHECK(d.dist[1] >= 1.0 - 2.0 / (2.0 * gamma * min_gap));
}

TEST_CASE("squarecb: determinism and sequencing") {
  SquareCB cb(fixed(MeanTable::from_rows({{0.3, -0.1, 0.5}, {0.0, 0.1, 0.2}})), 2.0);
  auto rng = RandomStream::derive(Seed{4}, "policy");
  auto copy = rng;
  const auto a1 = cb.step(ContextId{1}, rng).action;
  const auto a2 = cb.step(ContextId{1}, copy).action;
  CHECK(a1 == a2);
  CHECK_THROWS_AS(cb.feedback(ContextId{0}, a1, 0.1), SequencingError);
  cb.feedback(ContextId{1}, a1, 0.1);
  CHECK(cb.round() == 1);
  CHECK_THROWS_AS(cb.feedback(ContextId{1}, a1, 0.1), SequencingError);
  CHECK_THROWS_AS(SquareCB(fixed(MeanTable::zeros(1, 2)), 0.0), ConfigError);
}

TEST_CASE("ccb: first round with an empty queue") {
  const auto f = MeanTable::from_rows({{0.1, 0.7, -0.3, 0.2}});
  const auto g = MeanTable::from_rows({{0.5, 0.5, -0.5, 0.0}});
  const double u = 9.0;
  auto pol = make_policy(f, {g}, quad_params(4, u));
  auto rng = RandomStream::derive(Seed{0}, "policy");
  const auto d = pol.select(ContextId{0}, rng);
  CHECK(d.multipliers[0] == 0.0);
  CHECK(d.surrogate_hat == std::vector<double>{0.1, 0.7, -0.3, 0.2});
  CHECK(d.z == 1.0);
  CHECK(d.gamma == Approx(0.5 * std::sqrt(4.0 / u)));
  CHECK(d.igw.greedy.index == 1);
}

TEST_CASE("ccb: gamma after four unit z rounds") {
  const auto f = MeanTable::from_rows({{0.1, 0.7, -0.3, 0.2}});
  const auto g = MeanTable::zeros(1, 4);
  auto pol = make_policy(f, {g}, quad_params(4, 1.0));
  auto rng = RandomStream::derive(Seed{0}, "policy");
  RoundDecision d;
  for (int t = 1; t <= 4; ++t) {
    d = pol.select(ContextId{0}, rng);
    pol.update(ContextId{0}, d, Outcome{0.0, {0.0}});
  }
  CHECK(d.round == 4);
  CHECK(d.gamma == Approx(2.0));
  CHECK(pol.gamma_for(1.0, 4.0) == Approx(2.0));
}

TEST_CASE("ccb: gamma is non-increasing in z for a fixed history") {
  const auto pol = make_policy(MeanTable::zeros(1, 3), {MeanTable::zeros(1, 3)}, quad_params(3, 2.0));
  for (double prev_sum : {0.0, 1.0, 10.0, 1000.0}) {
    double last = INFINITY;
    for (double z = 1.0; z < 100.0; z *= 1.3) {
      const double g = pol.gamma_for(z, prev_sum + z);
      REQUIRE(g <= last);
      last = g;
    }
  }
}

TEST_CASE("ccb: a large multiplier suppresses the costly action") {
  RoundDecision d;
  d.reward_hat = {0.5, 0.4, 0.1};
  d.cost_hat = {{1.0, 0.0, 0.0}};
  d.multipliers = {10.0};
  d.z = 100.0;
  d.gamma = 5.0;
  auto rng = RandomStream::derive(Seed{0}, "policy");
  choose_action(d, rng);
  CHECK(d.surrogate_hat[0] == Approx(0.5 - 10.0));
  CHECK(d.igw.greedy.index == 1);
  CHECK(d.igw.dist[0] < d.igw.dist[2]);
  CHECK(d.igw.dist[0] < d.igw.dist[1]);
}

TEST_CASE("ccb: queue recursion in signed and positive-part modes") {
  const auto f = MeanTable::zeros(1, 2);
  const auto g = MeanTable::zeros(1, 2);
  for (bool pp : {false, true}) {
    auto pol = make_policy(f, {g}, quad_params(2, 1.0), pp);
    auto rng = RandomStream::derive(Seed{0}, "policy");
    auto d = pol.select(ContextId{0}, rng);
    pol.update(ContextId{0}, d, Outcome{0.0, {0.5}});
    d = pol.select(ContextId{0}, rng);
    pol.update(ContextId{0}, d, Outcome{0.0, {-0.2}});
    CHECK(pol.queues()[0] == (pp ? 0.5 : 0.5 + -0.2));
  }
}

TEST_CASE("ccb: sequencing errors") {
  auto pol = make_policy(MeanTable::zeros(2, 2), {MeanTable::zeros(2, 2)}, quad_params(2, 1.0));
  auto rng = RandomStream::derive(Seed{0}, "policy");
  RoundDecision stale;
  CHECK_THROWS_AS(pol.update(ContextId{0}, stale, Outcome{0.0, {0.0}}), SequencingError);
  const auto d = pol.select(ContextId{0}, rng);
  CHECK_THROWS_AS(pol.select(ContextId{0}, rng), SequencingError);
  CHECK_THROWS_AS(pol.update(ContextId{1}, d, Outcome{0.0, {0.0}}), SequencingError);
  CHECK_THROWS_AS(pol.update(ContextId{0}, d, Outcome{0.0, {0.0, 0.0}}), ValidationError);
  pol.update(ContextId{0}, d, Outcome{0.0, {0.0}});
  CHECK(pol.round() == 1);
}

TEST_CASE("ccb: exponential potential rejects negative effective costs") {
  RegimeParams p = quad_params(2, 1.0);
  p.regime = Regime::AlmostSure;
  std::vector<std::unique_ptr<RegressionOracle>> costs;
  costs.push_back(fixed(MeanTable::zeros(1, 2)));
  CCBPolicy pol(fixed(MeanTable::zeros(1, 2)), std::move(costs), build_lyapunov(p), p, false);
  auto rng = RandomStream::derive(Seed{0}, "policy");
  const auto d = pol.select(ContextId{0}, rng);
  CHECK_THROWS_AS(pol.update(ContextId{0}, d, Outcome{0.0, {-0.5}}), InvariantViolation);
}

TEST_CASE("ccb: queue exactness, gamma audit and sign convention") {
  auto rng_env = RandomStream::derive(Seed{3}, "env");
  const auto f = MeanTable::from_rows({{0.2, -0.4, 0.9}, {0.5, 0.1, -0.3}});
  const auto g1 = MeanTable::from_rows({{0.3, -0.6, 0.8}, {-0.2, 0.1, 0.4}});
  const auto g2 = MeanTable::from_rows({{-0.1, 0.2, 0.3}, {0.6, -0.4, 0.0}});
  const double u = 4.0;
  auto pol = make_policy(f, {g1, g2}, quad_params(3, u, 50));
  auto rng = RandomStream::derive(Seed{3}, "policy");
  std::vector<double> q(2, 0.0);
  double zsum = 0.0;
  for (int t = 0; t < 2000; ++t) {
    const ContextId x{rng_env.index(2)};
    const auto d = pol.select(x, rng);
    zsum += d.z;
    REQUIRE(d.gamma == Approx(std::sqrt(3.0 / u * zsum) / (2.0 * d.z)).epsilon(1e-12));
    std::size_t argmax = 0;
    for (std::size_t a = 1; a < 3; ++a) {
      if (d.surrogate_hat[a] > d.surrogate_hat[argmax]) argmax = a;
    }
    REQUIRE(d.igw.greedy.index == argmax);
    const Outcome o{rng_env.uniform(-1.0, 1.0), {rng_env.uniform(-1.0, 1.0), rng_env.uniform(-1.0, 1.0)}};
    pol.update(x, d, o);
    q[0] += o.costs[0];
    q[1] += o.costs[1];
    REQUIRE(pol.queues()[0] == q[0]);
    REQUIRE(pol.queues()[1] == q[1]);
  }
  CHECK(pol.z_running_sum() == zsum);
}

TEST_CASE("surrogate check: perfect oracles") {
  const auto f = MeanTable::from_rows({{0.2, -0.4, 0.9}});
  const auto g = MeanTable::from_rows({{0.3, -0.6, 0.8}});
  auto pol = make_policy(f, {g}, quad_params(3, 1.0, 20));
  auto rng = RandomStream::derive(Seed{0}, "policy");
  for (int t = 0; t < 200; ++t) {
    const auto d = pol.select(ContextId{0}, rng);
    std::vector<std::span<const double>> gr{g.row(ContextId{0})};
    const auto target = surrogate_target(d, f.row(ContextId{0}), gr);
    const auto star = worst_case_comparator(target);
    const double slack = per_round_surrogate_check(d, star, f.row(ContextId{0}), gr);
    const double regret = dot(target, star.probs()) - dot(target, d.igw.dist.probs());
    REQUIRE(slack == Approx(3.0 / (2.0 * d.gamma) - regret).margin(1e-12));
    REQUIRE(slack >= 0.0);
    pol.update(ContextId{0}, d, Outcome{0.0, {0.5}});
  }
}

TEST_CASE("surrogate check: zero multiplier collapses to the IGW slack on f") {
  auto rng = RandomStream::derive(Seed{7}, "collapse");
  for (int n = 0; n < 2000; ++n) {
    const std::size_t k = 1 + rng.index(6);
    RoundDecision d;
    d.reward_hat.resize(k);
    for (auto& e : d.reward_hat) e = rng.uniform(-1.0, 1.0);
    d.cost_hat = {std::vector<double>(k)};
    for (auto& e : d.cost_hat[0]) e = rng.uniform(-1.0, 1.0);
    d.multipliers = {0.0};
    d.z = 1.0;
    d.gamma = rng.uniform(0.01, 50.0);
    choose_action(d, rng);
    std::vector<double> f(k), g(k);
    for (auto& e : f) e = rng.uniform(-1.0, 1.0);
    for (auto& e : g) e = rng.uniform(-1.0, 1.0);
    const auto mu = SimplexDistribution::point_mass(k, ActionIndex{rng.index(k)});
    const double slack = per_round_surrogate_check(d, mu, f, {std::span<const double>(g)});

    // Loss form of the same round: vhat = max fhat - fhat, v = max fhat - f.
    const double top = *std::max_element(d.reward_hat.begin(), d.reward_hat.end());
    std::vector<double> vhat(k), v(k);
    double err_f = 0.0, err_g = 0.0;
    for (std::size_t a = 0; a < k; ++a) {
      vhat[a] = top - d.reward_hat[a];
      v[a] = top - f[a];
      err_f += d.igw.dist[a] * (f[a] - d.reward_hat[a]) * (f[a] - d.reward_hat[a]);
      err_g += d.igw.dist[a] * (g[a] - d.cost_hat[0][a]) * (g[a] - d.cost_hat[0][a]);
    }
    const double expect = lemma1_slack(vhat, v, mu, d.gamma) + d.gamma * err_f + 2.0 * d.gamma * err_g;
    REQUIRE(slack == Approx(expect).margin(1e-9));
  }
}

TEST_CASE("surrogate check: random rounds") {
  CHECK(fuzz_surrogate(10000, Seed{1}).min_slack >= -1e-9);
  CHECK(fuzz_lemma1(10000, Seed{1}).min_slack >= -1e-9);
}
