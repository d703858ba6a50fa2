#pragma once
// SquareCB with a fixed exploration parameter, and the constrained policy
// that runs it on a Lyapunov-weighted surrogate reward with an adaptive
// exploration parameter.

#include <cmath>
#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "ccb/core.hpp"
#include "ccb/igw.hpp"
#include "ccb/lyapunov.hpp"
#include "ccb/oracle.hpp"

namespace ccb {

// ---------------------------------------------------------------------------
// SquareCB (loss version, fixed gamma)
// ---------------------------------------------------------------------------

struct SquareCBDecision {
  ActionIndex action;
  SimplexDistribution dist;
};

class SquareCB {
 public:
  SquareCB(std::unique_ptr<RegressionOracle> loss_oracle, double gamma)
      : oracle_(std::move(loss_oracle)), gamma_(gamma) {
    if (!oracle_) throw ConfigError("squarecb: null oracle");
    if (!(gamma_ > 0.0) || !std::isfinite(gamma_)) throw ConfigError("squarecb: gamma must be > 0");
  }

  /// Predicts losses, forms the IGW distribution and samples an action.
  /// Repeating step without feedback replaces the pending decision.
  SquareCBDecision step(ContextId x, RandomStream& rng) {
    const auto loss = oracle_->predict(x);
    IGWResult r = igw(loss, gamma_);
    const ActionIndex a = sample_action(r.dist, rng);
    pending_ = Pending{x, a};
    return SquareCBDecision{a, std::move(r.dist)};
  }

  void feedback(ContextId x, ActionIndex a, double loss) {
    if (!pending_ || pending_->context != x || pending_->action != a) {
      throw SequencingError("squarecb: feedback does not match the last decision");
    }
    oracle_->update(x, a, loss);
    pending_.reset();
    ++round_;
  }

  double gamma() const noexcept { return gamma_; }
  std::size_t round() const noexcept { return round_; }
  const RegressionOracle& oracle() const noexcept { return *oracle_; }

 private:
  struct Pending {
    ContextId context;
    ActionIndex action;
  };
  std::unique_ptr<RegressionOracle> oracle_;
  double gamma_;
  std::size_t round_ = 0;
  std::optional<Pending> pending_;
};

// ---------------------------------------------------------------------------
// Constrained contextual bandit policy
// ---------------------------------------------------------------------------

struct RoundDecision {
  std::size_t round = 0;  ///< t, 1-based
  ContextId context;
  std::vector<double> reward_hat;              ///< f_hat(x, .)
  std::vector<std::vector<double>> cost_hat;   ///< g_hat_i(x, .), one per resource
  std::vector<double> multipliers;             ///< Phi'(Q_i(t-1))
  std::vector<double> surrogate_hat;           ///< L_hat(a) = f_hat(a) - sum_i Phi'(Q_i) g_hat_i(a)
  double z = 1.0;
  double gamma = 0.0;
  IGWResult igw;
  ActionIndex action;
};

/// Completes a decision whose predictions, multipliers, z and gamma are
/// set: forms the surrogate, converts it to losses max L_hat - L_hat (IGW
/// consumes losses, the surrogate is a reward), and samples the action.
inline void choose_action(RoundDecision& d, RandomStream& rng) {
  const std::size_t k = d.reward_hat.size();
  d.surrogate_hat = d.reward_hat;
  for (std::size_t i = 0; i < d.cost_hat.size(); ++i) {
    for (std::size_t a = 0; a < k; ++a) d.surrogate_hat[a] -= d.multipliers[i] * d.cost_hat[i][a];
  }
  double best = d.surrogate_hat.front();
  for (double v : d.surrogate_hat) best = std::max(best, v);
  std::vector<double> loss(k);
  for (std::size_t a = 0; a < k; ++a) loss[a] = best - d.surrogate_hat[a];
  d.igw = igw(loss, d.gamma);
  d.action = sample_action(d.igw.dist, rng);
}

class CCBPolicy {
 public:
  CCBPolicy(std::unique_ptr<RegressionOracle> reward_oracle,
            std::vector<std::unique_ptr<RegressionOracle>> cost_oracles, LyapunovFunction phi,
            const RegimeParams& regime, bool positive_part_costs)
      : reward_oracle_(std::move(reward_oracle)),
        cost_oracles_(std::move(cost_oracles)),
        phi_(phi),
        regime_(regime),
        positive_part_(positive_part_costs),
        queues_(cost_oracles_.size(), 0.0) {
    regime_.validate();
    if (!reward_oracle_) throw ConfigError("ccb: null reward oracle");
    if (cost_oracles_.empty()) throw ConfigError("ccb: at least one cost oracle is required");
    const std::size_t k = regime_.num_actions;
    if (reward_oracle_->num_actions() != k) throw ConfigError("ccb: reward oracle action count mismatch");
    for (const auto& o : cost_oracles_) {
      if (!o) throw ConfigError("ccb: null cost oracle");
      if (o->num_actions() != k) throw ConfigError("ccb: cost oracle action count mismatch");
    }
  }

  /// Runs one selection step at round t = round() + 1.
  RoundDecision select(ContextId x, RandomStream& rng) {
    if (pending_) throw SequencingError("ccb: select called twice without update");
    const std::size_t m = queues_.size();

    RoundDecision d;
    d.round = round_ + 1;
    d.context = x;
    d.reward_hat = reward_oracle_->predict(x);
    d.cost_hat.reserve(m);
    for (const auto& o : cost_oracles_) d.cost_hat.push_back(o->predict(x));

    d.z = z_of(phi_, queues_);  // throws on negative queue under exponential Phi
    d.multipliers.resize(m);
    for (std::size_t i = 0; i < m; ++i) d.multipliers[i] = phi_.derivative(queues_[i]);

    // The running sum includes the current z before gamma is formed.
    z_running_sum_ += d.z;
    d.gamma = gamma_for(d.z, z_running_sum_);
    choose_action(d, rng);
    pending_ = Pending{d.round, x, d.action};
    return d;
  }

  /// Queue recursion and oracle feedback for the decision just made.
  void update(ContextId x, const RoundDecision& decision, const Outcome& outcome) {
    if (!pending_ || pending_->round != decision.round || pending_->context != x ||
        pending_->action != decision.action) {
      throw SequencingError("ccb: update does not match the preceding select");
    }
    if (outcome.costs.size() != queues_.size()) throw ValidationError("ccb: outcome has wrong number of costs");
    outcome.validate();

    const ActionIndex a = decision.action;
    for (std::size_t i = 0; i < queues_.size(); ++i) {
      const double c = effective_cost(outcome.costs[i]);
      if (phi_.is_exponential() && c < 0.0) {
        throw InvariantViolation("ccb: negative effective cost under an exponential Lyapunov function");
      }
      queues_[i] += c;
      cost_oracles_[i]->update(x, a, c);
    }
    reward_oracle_->update(x, a, outcome.reward);
    pending_.reset();
    ++round_;
  }

  double effective_cost(double raw) const noexcept { return positive_part_ ? std::max(0.0, raw) : raw; }

  /// gamma_t = (1 / (2 z_t)) sqrt((K / U) * sum_{tau<=t} z_tau).
  double gamma_for(double z, double z_sum) const {
    return std::sqrt(static_cast<double>(regime_.num_actions) / regime_.error_budget * z_sum) / (2.0 * z);
  }

  std::span<const double> queues() const noexcept { return queues_; }
  double z_running_sum() const noexcept { return z_running_sum_; }
  std::size_t round() const noexcept { return round_; }
  std::size_t num_resources() const noexcept { return queues_.size(); }
  const LyapunovFunction& lyapunov() const noexcept { return phi_; }
  const RegimeParams& regime() const noexcept { return regime_; }
  bool positive_part_costs() const noexcept { return positive_part_; }
  const RegressionOracle& reward_oracle() const noexcept { return *reward_oracle_; }
  const RegressionOracle& cost_oracle(std::size_t i) const { return *cost_oracles_.at(i); }

 private:
  struct Pending {
    std::size_t round;
    ContextId context;
    ActionIndex action;
  };

  std::unique_ptr<RegressionOracle> reward_oracle_;
  std::vector<std::unique_ptr<RegressionOracle>> cost_oracles_;
  LyapunovFunction phi_;
  RegimeParams regime_;
  bool positive_part_;
  std::vector<double> queues_;
  double z_running_sum_ = 0.0;
  std::size_t round_ = 0;
  std::optional<Pending> pending_;
};

/// Target surrogate L*(a) = f*(x,a) - sum_i Phi'(Q_i(t-1)) g_i*(x,a), using
/// the multipliers recorded in the decision.
inline std::vector<double> surrogate_target(const RoundDecision& d, std::span<const double> truth_f,
                                            const std::vector<std::span<const double>>& truth_g) {
  std::vector<double> l(truth_f.begin(), truth_f.end());
  for (std::size_t i = 0; i < truth_g.size(); ++i) {
    for (std::size_t a = 0; a < l.size(); ++a) l[a] -= d.multipliers[i] * truth_g[i][a];
  }
  return l;
}

/// Slack of the per-round surrogate regret bound
///
///   <L*, pi*> - <L*, pi_t>  <=  K/(2 gamma_t)
///       + 2 gamma_t ( E_{a~pi_t}(f* - f_hat)^2 + z_t sum_i E_{a~pi_t}(g_i* - g_hat_i)^2 ).
///
/// The bound holds deterministically for every comparator pi*, so the
/// slack must be non-negative up to rounding.
inline double per_round_surrogate_check(const RoundDecision& d, const SimplexDistribution& pi_star,
                                        std::span<const double> truth_f,
                                        const std::vector<std::span<const double>>& truth_g) {
  const std::size_t k = d.surrogate_hat.size();
  if (truth_f.size() != k || pi_star.size() != k || truth_g.size() != d.cost_hat.size()) {
    throw ValidationError("surrogate check: dimension mismatch");
  }
  const auto p = d.igw.dist.probs();
  const auto target = surrogate_target(d, truth_f, truth_g);

  double err_f = 0.0;
  for (std::size_t a = 0; a < k; ++a) {
    const double e = truth_f[a] - d.reward_hat[a];
    err_f += p[a] * e * e;
  }
  double err_g = 0.0;
  for (std::size_t i = 0; i < truth_g.size(); ++i) {
    for (std::size_t a = 0; a < k; ++a) {
      const double e = truth_g[i][a] - d.cost_hat[i][a];
      err_g += p[a] * e * e;
    }
  }
  const double lhs = dot(target, pi_star.probs()) - dot(target, p);
  const double rhs = static_cast<double>(k) / (2.0 * d.gamma) + 2.0 * d.gamma * (err_f + d.z * err_g);
  return rhs - lhs;
}

/// The comparator maximizing <L*, .>: the lowest-index argmax point mass.
/// It makes the per-round check as tight as possible.
inline SimplexDistribution worst_case_comparator(std::span<const double> target) {
  std::size_t best = 0;
  for (std::size_t a = 1; a < target.size(); ++a) {
    if (target[a] > target[best]) best = a;
  }
  return SimplexDistribution::point_mass(target.size(), ActionIndex{best});
}

}  // namespace ccb
