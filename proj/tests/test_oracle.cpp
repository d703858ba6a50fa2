#include <catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "ccb/oracle.hpp"

using namespace ccb;
using Catch::Approx;

namespace {

MeanTable constant_table(std::size_t n, std::size_t k, double c) {
  return MeanTable(n, k, std::vector<double>(n * k, c));
}

}  // namespace

TEST_CASE("finite class: single candidate predicts itself") {
  const auto t = MeanTable::from_rows({{0.1, -0.7}, {0.4, 0.9}});
  FiniteClassOracle o({t});
  CHECK(o.predict(ContextId{1}) == std::vector<double>{0.4, 0.9});
  o.update(ContextId{1}, ActionIndex{0}, 1.0);
  CHECK(o.predict(ContextId{0}) == std::vector<double>{0.1, -0.7});
  CHECK(o.default_budget(1000) == 1.0);
}

TEST_CASE("finite class: symmetric candidates average to zero") {
  FiniteClassOracle o({constant_table(1, 2, -1.0), constant_table(1, 2, 1.0)});
  for (double p : o.predict(ContextId{0})) CHECK(p == 0.0);
}

TEST_CASE("finite class: update rule") {
  FiniteClassOracle o({constant_table(1, 1, 0.3), constant_table(1, 1, -0.7), constant_table(1, 1, 0.3)});
  const auto before = std::vector<double>(o.log_weights().begin(), o.log_weights().end());
  o.update(ContextId{0}, ActionIndex{0}, 0.3);
  CHECK(o.log_weights()[0] == before[0]);
  CHECK(o.log_weights()[2] == before[2]);
  // candidates predicting y and y - 1: gap grows by eta * 1
  CHECK(o.log_weights()[0] - o.log_weights()[1] == Approx(o.eta() * 1.0));

  FiniteClassOracle q({constant_table(1, 1, -1.0), constant_table(1, 1, 1.0)});
  q.update(ContextId{0}, ActionIndex{0}, -1.0);  // candidates at y and y + 2
  CHECK(q.log_weights()[0] - q.log_weights()[1] == Approx(q.eta() * 4.0));

  CHECK_THROWS_AS(q.update(ContextId{0}, ActionIndex{0}, 1.5), ValidationError);
}

TEST_CASE("finite class: weights normalized and predict is pure") {
  auto rng = RandomStream::derive(Seed{2}, "fc");
  const auto truth = MeanTable::from_rows({{0.2, -0.5, 0.9}, {0.0, 0.3, -0.8}});
  FiniteClassOracle o(make_perturbed_class(truth, 16, 0.5, rng));
  for (int t = 0; t < 500; ++t) {
    const ContextId x{rng.index(2)};
    const ActionIndex a{rng.index(3)};
    o.update(x, a, rng.uniform() < 0.5 * (1 + truth.at(x, a)) ? 1.0 : -1.0);
    double s = 0.0;
    for (double w : o.weights()) s += w;
    REQUIRE(std::abs(s - 1.0) <= 1e-10);
    REQUIRE(o.predict(x) == o.predict(x));
  }
}

TEST_CASE("finite class: identifies the generating candidate") {
  auto rng = RandomStream::derive(Seed{3}, "fc_id");
  const auto truth = MeanTable::from_rows({{0.2, -0.5, 0.9}, {0.0, 0.3, -0.8}});
  const auto cls = make_perturbed_class(truth, 16, 0.5, rng);
  for (std::size_t j : {0u, 5u, 15u}) {
    FiniteClassOracle o(cls);
    for (int t = 0; t < 1000; ++t) {
      const ContextId x{rng.index(2)};
      const ActionIndex a{rng.index(3)};
      const double m = cls[j].at(x, a);
      o.update(x, a, rng.uniform() < 0.5 * (1 + m) ? 1.0 : -1.0);
    }
    const auto w = o.weights();
    CHECK(static_cast<std::size_t>(std::max_element(w.begin(), w.end()) - w.begin()) == j);
  }
}

TEST_CASE("finite class: perturbed class holds the truth exactly once") {
  auto rng = RandomStream::derive(Seed{4}, "cls");
  const auto truth = MeanTable::from_rows({{0.95, -0.95}});
  const auto cls = make_perturbed_class(truth, 8, 0.5, rng);
  int exact = 0;
  for (const auto& c : cls) {
    exact += c.values()[0] == truth.values()[0] && c.values()[1] == truth.values()[1];
    for (double v : c.values()) CHECK(std::abs(v) <= 1.0);
  }
  CHECK(exact == 1);
}

TEST_CASE("finite class: aggregation bound on arbitrary sequences") {
  // Outcomes are adversarial (not generated by any candidate), so this
  // exercises the deterministic ln|F| / eta bound.
  auto rng = RandomStream::derive(Seed{6}, "agg");
  for (int rep = 0; rep < 50; ++rep) {
    const std::size_t n = 1 + rng.index(3), k = 1 + rng.index(4), size = 1 + rng.index(20);
    std::vector<MeanTable> cls;
    for (std::size_t i = 0; i < size; ++i) {
      std::vector<double> v(n * k);
      for (auto& e : v) e = rng.uniform(-1.0, 1.0);
      cls.emplace_back(n, k, v);
    }
    FiniteClassOracle o(cls);
    std::vector<double> cand(size, 0.0);
    double own = 0.0;
    for (int t = 0; t < 2000; ++t) {
      const ContextId x{rng.index(n)};
      const ActionIndex a{rng.index(k)};
      const double y = rep % 2 ? rng.uniform(-1.0, 1.0) : (rng.uniform() < 0.5 ? 1.0 : -1.0);
      const double p = o.predict(x)[a.index];
      own += (p - y) * (p - y);
      for (std::size_t i = 0; i < size; ++i) cand[i] += (cls[i].at(x, a) - y) * (cls[i].at(x, a) - y);
      o.update(x, a, y);
    }
    REQUIRE(own - *std::min_element(cand.begin(), cand.end()) <= std::log(double(size)) / o.eta() + 1e-9);
  }
}

TEST_CASE("linear: zero features predict zero") {
  std::vector<Eigen::VectorXd> f(2 * 3, Eigen::VectorXd::Zero(4));
  LinearOracle o(2, 3, f, 1.0);
  o.update(ContextId{0}, ActionIndex{1}, 0.7);
  for (double p : o.predict(ContextId{1})) CHECK(p == 0.0);
}

TEST_CASE("linear: d = 1 closed forms") {
  const double c = 0.6, reg = 2.0;
  std::vector<Eigen::VectorXd> f(1, Eigen::VectorXd::Ones(1));
  LinearOracle vaw(1, 1, f, reg, true);
  LinearOracle ridge(1, 1, f, reg, false);
  for (int t = 1; t <= 200; ++t) {
    vaw.update(ContextId{0}, ActionIndex{0}, c);
    ridge.update(ContextId{0}, ActionIndex{0}, c);
    // ridge: c t / (t + reg); VAW also counts the query feature: c t / (t + reg + 1)
    REQUIRE(ridge.predict(ContextId{0})[0] == Approx(c * t / (t + reg)).margin(1e-12));
    REQUIRE(vaw.predict(ContextId{0})[0] == Approx(c * t / (t + reg + 1.0)).margin(1e-12));
  }
}

TEST_CASE("linear: Sherman-Morrison statistics match a direct solve") {
  auto rng = RandomStream::derive(Seed{8}, "lin");
  const std::size_t n = 3, k = 2, d = 4;
  std::vector<Eigen::VectorXd> f(n * k, Eigen::VectorXd(d));
  for (auto& v : f) {
    for (std::size_t i = 0; i < d; ++i) v(i) = rng.uniform(-0.5, 0.5);
  }
  LinearOracle o(n, k, f, 1.5, false);
  Eigen::MatrixXd a = 1.5 * Eigen::MatrixXd::Identity(d, d);
  Eigen::VectorXd b = Eigen::VectorXd::Zero(d);
  for (int t = 0; t < 300; ++t) {
    const ContextId x{rng.index(n)};
    const ActionIndex act{rng.index(k)};
    const double y = rng.uniform(-1.0, 1.0);
    o.update(x, act, y);
    a += f[x.index * k + act.index] * f[x.index * k + act.index].transpose();
    b += y * f[x.index * k + act.index];
  }
  const Eigen::VectorXd theta = a.ldlt().solve(b);
  CHECK((o.solution() - theta).norm() < 1e-9);
}

TEST_CASE("linear: realizable d = 4 error against d ln T") {
  auto rng = RandomStream::derive(Seed{10}, "lin_real");
  const std::size_t n = 5, k = 4, d = 4;
  const std::size_t horizon = 10000;
  Eigen::VectorXd theta(d);
  theta << 0.8, -0.6, 0.4, 0.2;
  std::vector<Eigen::VectorXd> f(n * k, Eigen::VectorXd(d));
  for (auto& v : f) {
    for (std::size_t i = 0; i < d; ++i) v(i) = rng.uniform(-0.5, 0.5);
  }
  LinearOracle o(n, k, f, 1.0, true);
  double err = 0.0;
  for (std::size_t t = 0; t < horizon; ++t) {
    const ContextId x{rng.index(n)};
    const ActionIndex a{rng.index(k)};
    const double mean = f[x.index * k + a.index].dot(theta);
    const double y = rng.uniform() < 0.5 * (1.0 + mean) ? 1.0 : -1.0;
    const double e = o.predict(x)[a.index] - mean;
    err += e * e;
    o.update(x, a, y);
  }
  const double dlnT = d * std::log(double(horizon));
  const double constant = err / dlnT;
  INFO("cumulative squared error " << err << ", fitted C = " << constant);
  CHECK(err <= o.default_budget(horizon));
}

TEST_CASE("error ledger") {
  ErrorLedger l;
  l.budget = 3.0;
  l.record(0.2, 0.2);
  CHECK(l.cumulative_sq_error == 0.0);
  l.record(1.0, -1.0);
  CHECK(l.cumulative_sq_error == 4.0);
  CHECK_FALSE(l.within_budget());
}

TEST_CASE("default budgets") {
  FiniteClassOracle o(std::vector<MeanTable>(16, constant_table(1, 2, 0.0)));
  CHECK(o.default_budget(10) == Approx(8.0 * std::log(16.0)));
  auto lin = LinearOracle::one_hot(2, 2, 1.0);
  CHECK(lin.default_budget(1000) == Approx(4.0 * std::log(1000.0) + 4.0));
}
