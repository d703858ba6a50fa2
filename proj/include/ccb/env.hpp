#pragma once
// Simulated environments (context processes and mean-exact noise), the
// benchmark policy solvers used for regret accounting, and feasibility
// certificates for the benchmark classes.

#include <Eigen/Dense>

#include <cmath>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "ccb/core.hpp"

namespace ccb {

// ---------------------------------------------------------------------------
// Noise models
// ---------------------------------------------------------------------------

enum class NoiseModel {
  Deterministic,        ///< value = mean
  TwoPointSymmetric,    ///< +1 w.p. (1+mean)/2, else -1
  TwoPointNonPositive,  ///< -1 w.p. -mean, else 0 (mean <= 0)
  TwoPointNonNegative,  ///< +1 w.p. mean, else 0 (mean >= 0)
};

inline std::string_view to_string(NoiseModel n) {
  switch (n) {
    case NoiseModel::Deterministic: return "deterministic";
    case NoiseModel::TwoPointSymmetric: return "two_point_symmetric";
    case NoiseModel::TwoPointNonPositive: return "two_point_nonpositive";
    case NoiseModel::TwoPointNonNegative: return "two_point_nonnegative";
  }
  return "unknown";
}

inline NoiseModel noise_from_string(std::string_view s) {
  for (NoiseModel n : {NoiseModel::Deterministic, NoiseModel::TwoPointSymmetric, NoiseModel::TwoPointNonPositive,
                       NoiseModel::TwoPointNonNegative}) {
    if (to_string(n) == s) return n;
  }
  throw ConfigError("unknown noise model '" + std::string(s) + "'");
}

/// Draws one realization with conditional mean exactly `mean`.
/// Deterministic channels consume no randomness.
inline double sample_channel(NoiseModel noise, double mean, RandomStream& rng) {
  switch (noise) {
    case NoiseModel::Deterministic:
      return mean;
    case NoiseModel::TwoPointSymmetric:
      return rng.uniform() < 0.5 * (1.0 + mean) ? 1.0 : -1.0;
    case NoiseModel::TwoPointNonPositive:
      if (mean > 0.0) throw ConfigError("two_point_nonpositive noise requires mean <= 0");
      return rng.uniform() < -mean ? -1.0 : 0.0;
    case NoiseModel::TwoPointNonNegative:
      if (mean < 0.0) throw ConfigError("two_point_nonnegative noise requires mean >= 0");
      return rng.uniform() < mean ? 1.0 : 0.0;
  }
  return mean;
}

/// Largest value in the support of a channel with the given mean.
inline double support_max(NoiseModel noise, double mean) {
  switch (noise) {
    case NoiseModel::Deterministic: return mean;
    case NoiseModel::TwoPointSymmetric: return mean > -1.0 ? 1.0 : -1.0;
    case NoiseModel::TwoPointNonPositive: return mean > -1.0 ? 0.0 : -1.0;
    case NoiseModel::TwoPointNonNegative: return mean > 0.0 ? 1.0 : 0.0;
  }
  return mean;
}

/// Smallest value in the support of a channel with the given mean.
inline double support_min(NoiseModel noise, double mean) {
  switch (noise) {
    case NoiseModel::Deterministic: return mean;
    case NoiseModel::TwoPointSymmetric: return mean < 1.0 ? -1.0 : 1.0;
    case NoiseModel::TwoPointNonPositive: return mean < 0.0 ? -1.0 : 0.0;
    case NoiseModel::TwoPointNonNegative: return mean < 1.0 ? 0.0 : 1.0;
  }
  return mean;
}

/// E[max(0, c)] for a channel with the given mean.
inline double positive_part_mean(NoiseModel noise, double mean) {
  switch (noise) {
    case NoiseModel::Deterministic: return std::max(0.0, mean);
    case NoiseModel::TwoPointSymmetric: return 0.5 * (1.0 + mean);
    case NoiseModel::TwoPointNonPositive: return 0.0;
    case NoiseModel::TwoPointNonNegative: return mean;
  }
  return mean;
}

// ---------------------------------------------------------------------------
// Problem specification
// ---------------------------------------------------------------------------

struct IidContexts {
  std::vector<double> probs;
};

struct CyclicContexts {
  std::vector<std::size_t> sequence;
};

/// Picks the context where the learner's empirical play lags the per-context
/// feasible optimum the most. A stress generator for adaptive contexts.
struct AdaptiveAdversary {
  std::string strategy = "max_gap";
};

using ContextProcess = std::variant<IidContexts, CyclicContexts, AdaptiveAdversary>;

struct ProblemSpec {
  std::size_t n_contexts = 1;
  std::size_t num_actions = 1;
  std::size_t num_resources = 1;
  MeanTable reward_mean;
  std::vector<MeanTable> cost_mean;
  ContextProcess contexts = CyclicContexts{{0}};
  NoiseModel reward_noise = NoiseModel::Deterministic;
  std::vector<NoiseModel> cost_noise;  ///< one per resource

  void validate() const {
    if (n_contexts == 0 || num_actions == 0 || num_resources == 0) {
      throw ConfigError("spec: n_contexts, K and m must be >= 1");
    }
    auto check_shape = [&](const MeanTable& t, std::string_view what) {
      if (t.n_contexts() != n_contexts || t.num_actions() != num_actions) {
        throw ConfigError("spec: " + std::string(what) + " table has the wrong shape");
      }
    };
    check_shape(reward_mean, "reward");
    if (cost_mean.size() != num_resources) throw ConfigError("spec: need one cost table per resource");
    if (cost_noise.size() != num_resources) throw ConfigError("spec: need one cost noise model per resource");
    for (std::size_t i = 0; i < num_resources; ++i) {
      check_shape(cost_mean[i], "cost");
      check_channel(cost_noise[i], cost_mean[i]);
    }
    check_channel(reward_noise, reward_mean);

    std::visit(
        [&](const auto& p) {
          using P = std::decay_t<decltype(p)>;
          if constexpr (std::is_same_v<P, IidContexts>) {
            if (p.probs.size() != n_contexts) throw ConfigError("spec: iid context distribution has wrong size");
            (void)validate_simplex(p.probs);
          } else if constexpr (std::is_same_v<P, CyclicContexts>) {
            if (p.sequence.empty()) throw ConfigError("spec: empty cyclic context sequence");
            for (std::size_t x : p.sequence) {
              if (x >= n_contexts) throw ConfigError("spec: cyclic sequence references unknown context");
            }
          } else {
            if (p.strategy != "max_gap") throw ConfigError("spec: unknown adversary strategy '" + p.strategy + "'");
          }
        },
        contexts);
  }

  std::vector<std::span<const double>> cost_rows(ContextId x) const {
    std::vector<std::span<const double>> rows;
    rows.reserve(cost_mean.size());
    for (const auto& t : cost_mean) rows.push_back(t.row(x));
    return rows;
  }

  /// Mean table of the costs the learner observes: max(0, c) under the
  /// positive-part transform, the raw means otherwise.
  MeanTable effective_cost_mean(std::size_t i, bool positive_part) const {
    if (!positive_part) return cost_mean.at(i);
    const auto& t = cost_mean.at(i);
    std::vector<double> v(t.values().begin(), t.values().end());
    for (double& e : v) e = positive_part_mean(cost_noise.at(i), e);
    return MeanTable(n_contexts, num_actions, std::move(v));
  }

  bool costs_nonnegative() const {
    for (std::size_t i = 0; i < num_resources; ++i) {
      for (double g : cost_mean[i].values()) {
        if (support_min(cost_noise[i], g) < 0.0) return false;
      }
    }
    return true;
  }

 private:
  static void check_channel(NoiseModel noise, const MeanTable& t) {
    if (noise == NoiseModel::TwoPointNonPositive && t.max() > 0.0) {
      throw ConfigError("spec: two_point_nonpositive noise on a channel with positive means");
    }
    if (noise == NoiseModel::TwoPointNonNegative && t.min() < 0.0) {
      throw ConfigError("spec: two_point_nonnegative noise on a channel with negative means");
    }
  }
};

// ---------------------------------------------------------------------------
// Benchmarks
// ---------------------------------------------------------------------------

struct PerContextSolution {
  SimplexDistribution dist;
  double value = 0.0;
};

struct BenchmarkPolicy {
  std::vector<SimplexDistribution> per_context;
  std::vector<double> value_per_context;
};

namespace detail {

inline bool next_combination(std::vector<std::size_t>& idx, std::size_t n) {
  const std::size_t r = idx.size();
  for (std::size_t i = r; i-- > 0;) {
    if (idx[i] < n - r + i) {
      ++idx[i];
      for (std::size_t j = i + 1; j < r; ++j) idx[j] = idx[j - 1] + 1;
      return true;
    }
  }
  return false;
}

inline std::vector<std::size_t> first_combination(std::size_t r) {
  std::vector<std::size_t> idx(r);
  for (std::size_t i = 0; i < r; ++i) idx[i] = i;
  return idx;
}

inline constexpr double kFeasTol = 1e-12;
inline constexpr double kImproveTol = 1e-12;

}  // namespace detail

/// Maximizes <f, pi> over the simplex subject to <g_i, pi> <= c0 for every
/// cost row by enumerating the vertices of the feasible polytope: each is
/// supported on s <= m+1 actions with s-1 tight constraints. For m = 1 this
/// is the single actions plus every two-action mixture with a tight
/// constraint. Ties keep the earliest vertex (single actions first, lowest
/// index first).
inline PerContextSolution benchmark_per_context(std::span<const double> f_row,
                                                const std::vector<std::span<const double>>& g_rows,
                                                double c0) {
  const std::size_t k = f_row.size();
  const std::size_t m = g_rows.size();
  if (k == 0) throw ValidationError("benchmark: empty action set");
  for (const auto& g : g_rows) {
    if (g.size() != k) throw ValidationError("benchmark: cost row size mismatch");
  }

  std::optional<PerContextSolution> best;
  auto consider = [&](std::vector<double> pi) {
    for (double& p : pi) {
      if (p < -1e-12) return;
      p = std::max(0.0, p);
    }
    for (const auto& g : g_rows) {
      if (dot(g, pi) > c0 + detail::kFeasTol) return;
    }
    const double v = dot(f_row, pi);
    if (!best || v > best->value + detail::kImproveTol) {
      best = PerContextSolution{validate_simplex(std::move(pi)), v};
    }
  };

  const std::size_t max_support = std::min(k, m + 1);
  for (std::size_t s = 1; s <= max_support; ++s) {
    auto support = detail::first_combination(s);
    do {
      if (s == 1) {
        std::vector<double> pi(k, 0.0);
        pi[support[0]] = 1.0;
        consider(std::move(pi));
        continue;
      }
      auto tight = detail::first_combination(s - 1);
      do {
        Eigen::MatrixXd lhs(s, s);
        Eigen::VectorXd rhs(s);
        for (std::size_t j = 0; j < s; ++j) lhs(0, j) = 1.0;
        rhs(0) = 1.0;
        for (std::size_t r = 0; r + 1 < s; ++r) {
          for (std::size_t j = 0; j < s; ++j) lhs(r + 1, j) = g_rows[tight[r]][support[j]];
          rhs(r + 1) = c0;
        }
        Eigen::FullPivLU<Eigen::MatrixXd> lu(lhs);
        if (!lu.isInvertible()) continue;
        const Eigen::VectorXd sol = lu.solve(rhs);
        std::vector<double> pi(k, 0.0);
        for (std::size_t j = 0; j < s; ++j) pi[support[j]] = sol(j);
        consider(std::move(pi));
      } while (detail::next_combination(tight, m));
    } while (detail::next_combination(support, k));
  }

  if (!best) throw InfeasibleError("benchmark: no policy satisfies the per-context constraint");
  return *best;
}

/// Per-context benchmark for the in-expectation definitions (c0 = 0) and
/// Slater (c0 = -epsilon).
inline BenchmarkPolicy benchmark_in_expectation(const ProblemSpec& spec, double c0) {
  BenchmarkPolicy out;
  for (std::size_t x = 0; x < spec.n_contexts; ++x) {
    const ContextId cx{x};
    auto sol = benchmark_per_context(spec.reward_mean.row(cx), spec.cost_rows(cx), c0);
    out.per_context.push_back(std::move(sol.dist));
    out.value_per_context.push_back(sol.value);
  }
  return out;
}

/// Best action per context among those whose realized cost is non-positive
/// with probability one on every resource.
inline BenchmarkPolicy benchmark_almost_sure(const ProblemSpec& spec) {
  BenchmarkPolicy out;
  for (std::size_t x = 0; x < spec.n_contexts; ++x) {
    const ContextId cx{x};
    std::optional<std::size_t> best;
    for (std::size_t a = 0; a < spec.num_actions; ++a) {
      bool safe = true;
      for (std::size_t i = 0; i < spec.num_resources; ++i) {
        safe = safe && support_max(spec.cost_noise[i], spec.cost_mean[i].at(cx, ActionIndex{a})) <= 0.0;
      }
      if (safe && (!best || spec.reward_mean.at(cx, ActionIndex{a}) > spec.reward_mean.at(cx, ActionIndex{*best}))) {
        best = a;
      }
    }
    if (!best) throw InfeasibleError("benchmark: context " + std::to_string(x) + " has no almost-surely safe action");
    out.per_context.push_back(SimplexDistribution::point_mass(spec.num_actions, ActionIndex{*best}));
    out.value_per_context.push_back(spec.reward_mean.at(cx, ActionIndex{*best}));
  }
  return out;
}

/// Long-term budget benchmark for a single resource:
///
///   max sum_x w(x) <f(x), pi(x)>  s.t.  sum_x w(x) <g(x), pi(x)> <= b.
///
/// Bisection on the dual multiplier theta over the Lagrangian-greedy
/// policies argmax_a f - theta g, followed by an exact tight mixture in a
/// single context at the crossing.
inline BenchmarkPolicy benchmark_budget(const ProblemSpec& spec, std::span<const double> weights, double b) {
  if (spec.num_resources != 1) throw ConfigError("budget benchmark supports a single resource");
  if (weights.size() != spec.n_contexts) throw ValidationError("budget benchmark: weight vector size mismatch");
  for (double w : weights) {
    if (!(w >= 0.0) || !std::isfinite(w)) throw ValidationError("budget benchmark: weights must be >= 0");
  }
  const std::size_t n = spec.n_contexts;
  const std::size_t k = spec.num_actions;
  const MeanTable& f = spec.reward_mean;
  const MeanTable& g = spec.cost_mean.front();

  auto greedy = [&](double theta) {
    std::vector<std::size_t> act(n);
    for (std::size_t x = 0; x < n; ++x) {
      std::size_t best = 0;
      double best_v = f.at(ContextId{x}, ActionIndex{0}) - theta * g.at(ContextId{x}, ActionIndex{0});
      for (std::size_t a = 1; a < k; ++a) {
        const double v = f.at(ContextId{x}, ActionIndex{a}) - theta * g.at(ContextId{x}, ActionIndex{a});
        if (v > best_v) {
          best_v = v;
          best = a;
        }
      }
      act[x] = best;
    }
    return act;
  };
  auto consumption = [&](const std::vector<std::size_t>& act) {
    double c = 0.0;
    for (std::size_t x = 0; x < n; ++x) c += weights[x] * g.at(ContextId{x}, ActionIndex{act[x]});
    return c;
  };
  auto finish = [&](std::vector<SimplexDistribution> pol) {
    BenchmarkPolicy out;
    for (std::size_t x = 0; x < n; ++x) out.value_per_context.push_back(dot(f.row(ContextId{x}), pol[x].probs()));
    out.per_context = std::move(pol);
    return out;
  };
  auto point_masses = [&](const std::vector<std::size_t>& act) {
    std::vector<SimplexDistribution> pol;
    for (std::size_t a : act) pol.push_back(SimplexDistribution::point_mass(k, ActionIndex{a}));
    return pol;
  };

  const auto unconstrained = greedy(0.0);
  if (consumption(unconstrained) <= b + detail::kFeasTol) return finish(point_masses(unconstrained));

  // Beyond the largest pairwise breakpoint the greedy policy is the
  // minimum-consumption policy.
  double theta_hi = 1.0;
  for (std::size_t x = 0; x < n; ++x) {
    for (std::size_t a = 0; a < k; ++a) {
      for (std::size_t c = a + 1; c < k; ++c) {
        const double dg = std::abs(g.at(ContextId{x}, ActionIndex{a}) - g.at(ContextId{x}, ActionIndex{c}));
        if (dg > 0.0) {
          const double df = std::abs(f.at(ContextId{x}, ActionIndex{a}) - f.at(ContextId{x}, ActionIndex{c}));
          theta_hi = std::max(theta_hi, 1.0 + df / dg);
        }
      }
    }
  }
  if (consumption(greedy(theta_hi)) > b + detail::kFeasTol) {
    throw InfeasibleError("budget benchmark: no policy meets the budget");
  }

  double lo = 0.0;
  double hi = theta_hi;
  for (int step = 0; step < 200 && hi - lo > 1e-10; ++step) {
    const double mid = 0.5 * (lo + hi);
    if (consumption(greedy(mid)) > b) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  const auto act_lo = greedy(lo);
  const auto act_hi = greedy(hi);

  // Switch differing contexts from the low-theta action to the high-theta
  // action in index order until the budget binds; mix in that context.
  auto pol = point_masses(act_lo);
  double cons = consumption(act_lo);
  for (std::size_t x = 0; x < n && cons > b; ++x) {
    if (act_lo[x] == act_hi[x]) continue;
    const double g_lo = g.at(ContextId{x}, ActionIndex{act_lo[x]});
    const double g_hi = g.at(ContextId{x}, ActionIndex{act_hi[x]});
    const double drop = weights[x] * (g_lo - g_hi);
    if (cons - drop > b && drop >= 0.0) {
      pol[x] = SimplexDistribution::point_mass(k, ActionIndex{act_hi[x]});
      cons -= drop;
      continue;
    }
    if (drop <= 0.0) continue;
    const double alpha = std::clamp((cons - b) / drop, 0.0, 1.0);
    std::vector<double> p(k, 0.0);
    p[act_lo[x]] += 1.0 - alpha;
    p[act_hi[x]] += alpha;
    pol[x] = validate_simplex(std::move(p));
    cons = b;
  }
  return finish(std::move(pol));
}

/// Sum over the realized context sequence of the benchmark's expected
/// per-context reward.
inline double opt_value(const BenchmarkPolicy& benchmark, std::span<const ContextId> realized) {
  double s = 0.0;
  for (ContextId x : realized) s += benchmark.value_per_context.at(x.index);
  return s;
}

// ---------------------------------------------------------------------------
// Feasibility certificates
// ---------------------------------------------------------------------------

struct FeasibilityDefinition {
  enum class Kind { InExpectation, Slater, AlmostSure, BudgetFeasible };
  Kind kind = Kind::InExpectation;
  double epsilon = 0.0;         ///< Slater margin
  std::vector<double> weights;  ///< context weights, BudgetFeasible only
  double budget = 0.0;          ///< per-round budget b, BudgetFeasible only

  static FeasibilityDefinition in_expectation() { return {Kind::InExpectation, 0.0, {}, 0.0}; }
  static FeasibilityDefinition slater(double eps) { return {Kind::Slater, eps, {}, 0.0}; }
  static FeasibilityDefinition almost_sure() { return {Kind::AlmostSure, 0.0, {}, 0.0}; }
  static FeasibilityDefinition budget_feasible(std::vector<double> w, double b) {
    return {Kind::BudgetFeasible, 0.0, std::move(w), b};
  }
};

inline std::string_view to_string(FeasibilityDefinition::Kind k) {
  switch (k) {
    case FeasibilityDefinition::Kind::InExpectation: return "in_expectation";
    case FeasibilityDefinition::Kind::Slater: return "slater";
    case FeasibilityDefinition::Kind::AlmostSure: return "almost_sure";
    case FeasibilityDefinition::Kind::BudgetFeasible: return "budget_feasible";
  }
  return "unknown";
}

struct FeasibilityCertificate {
  FeasibilityDefinition::Kind definition = FeasibilityDefinition::Kind::InExpectation;
  bool verified = false;
  double worst_slack = 0.0;  ///< most violated (smallest) constraint slack
};

inline FeasibilityCertificate feasibility_check(const ProblemSpec& spec, const BenchmarkPolicy& benchmark,
                                                const FeasibilityDefinition& def) {
  using Kind = FeasibilityDefinition::Kind;
  FeasibilityCertificate cert;
  cert.definition = def.kind;
  if (benchmark.per_context.size() != spec.n_contexts) throw ValidationError("feasibility: benchmark size mismatch");
  double worst = std::numeric_limits<double>::infinity();

  switch (def.kind) {
    case Kind::InExpectation:
    case Kind::Slater: {
      const double target = def.kind == Kind::Slater ? -def.epsilon : 0.0;
      for (std::size_t x = 0; x < spec.n_contexts; ++x) {
        for (const auto& row : spec.cost_rows(ContextId{x})) {
          worst = std::min(worst, target - dot(row, benchmark.per_context[x].probs()));
        }
      }
      cert.worst_slack = worst;
      cert.verified = worst >= -1e-12;
      break;
    }
    case Kind::AlmostSure: {
      for (std::size_t x = 0; x < spec.n_contexts; ++x) {
        for (std::size_t a = 0; a < spec.num_actions; ++a) {
          if (!(benchmark.per_context[x][a] > 0.0)) continue;
          for (std::size_t i = 0; i < spec.num_resources; ++i) {
            worst = std::min(worst, -support_max(spec.cost_noise[i], spec.cost_mean[i].at(ContextId{x}, ActionIndex{a})));
          }
        }
      }
      cert.worst_slack = worst;
      cert.verified = worst >= 0.0;
      break;
    }
    case Kind::BudgetFeasible: {
      if (def.weights.size() != spec.n_contexts) throw ValidationError("feasibility: weight vector size mismatch");
      for (std::size_t i = 0; i < spec.num_resources; ++i) {
        double agg = 0.0;
        for (std::size_t x = 0; x < spec.n_contexts; ++x) {
          agg += def.weights[x] * dot(spec.cost_mean[i].row(ContextId{x}), benchmark.per_context[x].probs());
        }
        worst = std::min(worst, def.budget - agg);
      }
      cert.worst_slack = worst;
      cert.verified = worst >= -1e-9;
      break;
    }
  }
  return cert;
}

// ---------------------------------------------------------------------------
// Context processes and outcome sampling
// ---------------------------------------------------------------------------

inline ContextId cyclic_context(const CyclicContexts& c, std::size_t t) {
  return ContextId{c.sequence[t % c.sequence.size()]};
}

/// Adversary choice from the learner's per-context action counts:
/// argmax_x reference[x] - <f(x), empirical action frequencies in x>, with
/// unvisited contexts scored against uniform play. Lowest index wins ties.
inline ContextId adversary_context(const ProblemSpec& spec, std::span<const double> reference,
                                   const std::vector<std::vector<std::size_t>>& counts) {
  std::size_t best = 0;
  double best_gap = -std::numeric_limits<double>::infinity();
  for (std::size_t x = 0; x < spec.n_contexts; ++x) {
    std::size_t total = 0;
    for (std::size_t c : counts[x]) total += c;
    double played = 0.0;
    const auto f = spec.reward_mean.row(ContextId{x});
    for (std::size_t a = 0; a < spec.num_actions; ++a) {
      const double freq = total == 0 ? 1.0 / static_cast<double>(spec.num_actions)
                                     : static_cast<double>(counts[x][a]) / static_cast<double>(total);
      played += freq * f[a];
    }
    const double gap = reference[x] - played;
    if (gap > best_gap) {
      best_gap = gap;
      best = x;
    }
  }
  return ContextId{best};
}

/// Draws an outcome with exact conditional means. Each channel reads its
/// own stream: streams[0] for the reward, streams[1 + i] for resource i.
inline Outcome sample_outcome(const ProblemSpec& spec, ContextId x, ActionIndex a, std::span<RandomStream> streams) {
  if (streams.size() != spec.num_resources + 1) throw ValidationError("sample_outcome: need m + 1 streams");
  Outcome o;
  o.reward = sample_channel(spec.reward_noise, spec.reward_mean.at(x, a), streams[0]);
  o.costs.resize(spec.num_resources);
  for (std::size_t i = 0; i < spec.num_resources; ++i) {
    o.costs[i] = sample_channel(spec.cost_noise[i], spec.cost_mean[i].at(x, a), streams[1 + i]);
  }
  return o;
}

/// One run's environment: owns the context stream, the per-channel noise
/// streams and the action history the adaptive adversary reads.
class Environment {
 public:
  Environment(const ProblemSpec& spec, Seed seed) : spec_(&spec) {
    spec.validate();
    context_rng_.emplace(RandomStream::derive(seed, "context"));
    noise_.push_back(RandomStream::derive(seed, "reward_noise"));
    for (std::size_t i = 0; i < spec.num_resources; ++i) noise_.push_back(RandomStream::derive(seed, "cost_noise", i));
    counts_.assign(spec.n_contexts, std::vector<std::size_t>(spec.num_actions, 0));
    if (std::holds_alternative<AdaptiveAdversary>(spec.contexts)) reference_ = adversary_reference(spec);
  }

  ContextId next_context() {
    const std::size_t t = rounds_;
    return std::visit(
        [&](const auto& p) -> ContextId {
          using P = std::decay_t<decltype(p)>;
          if constexpr (std::is_same_v<P, IidContexts>) {
            const auto dist = validate_simplex(p.probs);
            return ContextId{sample_action(dist, *context_rng_).index};
          } else if constexpr (std::is_same_v<P, CyclicContexts>) {
            return cyclic_context(p, t);
          } else {
            return adversary_context(*spec_, reference_, counts_);
          }
        },
        spec_->contexts);
  }

  Outcome sample(ContextId x, ActionIndex a) { return sample_outcome(*spec_, x, a, noise_); }

  void record(ContextId x, ActionIndex a) {
    ++counts_[x.index][a.index];
    ++rounds_;
  }

  const std::vector<std::vector<std::size_t>>& counts() const noexcept { return counts_; }

  /// Per-context values the adversary compares against: the in-expectation
  /// benchmark where it exists, the unconstrained optimum otherwise.
  static std::vector<double> adversary_reference(const ProblemSpec& spec) {
    std::vector<double> ref(spec.n_contexts);
    for (std::size_t x = 0; x < spec.n_contexts; ++x) {
      const ContextId cx{x};
      try {
        ref[x] = benchmark_per_context(spec.reward_mean.row(cx), spec.cost_rows(cx), 0.0).value;
      } catch (const InfeasibleError&) {
        const auto row = spec.reward_mean.row(cx);
        ref[x] = *std::max_element(row.begin(), row.end());
      }
    }
    return ref;
  }

 private:
  const ProblemSpec* spec_;
  std::optional<RandomStream> context_rng_;
  std::vector<RandomStream> noise_;
  std::vector<std::vector<std::size_t>> counts_;
  std::vector<double> reference_;
  std::size_t rounds_ = 0;
};

}  // namespace ccb
