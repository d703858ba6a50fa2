#pragma once
// Online squared-loss regression oracles. Each oracle predicts a K-vector of
// conditional means for a context and is updated with the single observed
// (context, action, value) triple of the round.

#include <Eigen/Dense>

#include <cmath>
#include <memory>
#include <span>
#include <vector>

#include "ccb/core.hpp"

namespace ccb {

class RegressionOracle {
 public:
  virtual ~RegressionOracle() = default;

  /// Predictions for every action in context x, each in [-1, 1]. Pure:
  /// repeated calls without an update return identical vectors.
  virtual std::vector<double> predict(ContextId x) const = 0;

  /// Folds the observation y of action a in context x into the state.
  virtual void update(ContextId x, ActionIndex a, double y) = 0;

  virtual std::unique_ptr<RegressionOracle> clone() const = 0;

  virtual std::size_t num_actions() const = 0;

  /// Default cumulative squared-error budget for a run of length T.
  virtual double default_budget(std::size_t horizon) const = 0;
};

inline void check_observation(double y) {
  if (!std::isfinite(y) || y < -1.0 || y > 1.0) {
    throw ValidationError("oracle update: observation outside [-1,1]");
  }
}

// ---------------------------------------------------------------------------
// Exponential weights over a finite class
// ---------------------------------------------------------------------------

/// Exponentially weighted average of a finite list of candidate mean
/// tables. With squared loss on [-1,1] and eta = 1/8 the loss is
/// eta-exp-concave, so the cumulative loss of the mean prediction exceeds
/// that of the best candidate by at most ln|F| / eta on every sequence.
class FiniteClassOracle final : public RegressionOracle {
 public:
  static constexpr double kDefaultEta = 0.125;

  explicit FiniteClassOracle(std::vector<MeanTable> candidates, double eta = kDefaultEta)
      : candidates_(std::move(candidates)), log_weights_(candidates_.size(), 0.0), eta_(eta) {
    if (candidates_.empty()) throw ValidationError("finite class: no candidates");
    if (!(eta_ > 0.0) || !std::isfinite(eta_)) throw ValidationError("finite class: eta must be > 0");
    const auto& first = candidates_.front();
    for (const auto& c : candidates_) {
      if (c.n_contexts() != first.n_contexts() || c.num_actions() != first.num_actions()) {
        throw ValidationError("finite class: candidate shapes differ");
      }
    }
  }

  /// softmax(log_weights), computed with the max subtracted.
  std::vector<double> weights() const {
    double mx = log_weights_.front();
    for (double lw : log_weights_) mx = std::max(mx, lw);
    std::vector<double> w(log_weights_.size());
    double z = 0.0;
    for (std::size_t i = 0; i < w.size(); ++i) {
      w[i] = std::exp(log_weights_[i] - mx);
      z += w[i];
    }
    for (double& wi : w) wi /= z;
    return w;
  }

  std::vector<double> predict(ContextId x) const override {
    const std::size_t k = num_actions();
    const auto w = weights();
    std::vector<double> out(k, 0.0);
    for (std::size_t i = 0; i < candidates_.size(); ++i) {
      const auto row = candidates_[i].row(x);
      for (std::size_t a = 0; a < k; ++a) out[a] += w[i] * row[a];
    }
    for (double& v : out) v = clip_unit(v);
    return out;
  }

  void update(ContextId x, ActionIndex a, double y) override {
    check_observation(y);
    for (std::size_t i = 0; i < candidates_.size(); ++i) {
      const double r = candidates_[i].at(x, a) - y;
      log_weights_[i] -= eta_ * r * r;
    }
  }

  std::unique_ptr<RegressionOracle> clone() const override {
    return std::make_unique<FiniteClassOracle>(*this);
  }

  std::size_t num_actions() const override { return candidates_.front().num_actions(); }

  /// max(1, ln|F| / eta); the floor keeps the budget positive for |F| = 1.
  double default_budget(std::size_t /*horizon*/) const override {
    return std::max(1.0, std::log(static_cast<double>(candidates_.size())) / eta_);
  }

  std::span<const double> log_weights() const noexcept { return log_weights_; }
  const std::vector<MeanTable>& candidates() const noexcept { return candidates_; }
  double eta() const noexcept { return eta_; }

 private:
  std::vector<MeanTable> candidates_;
  std::vector<double> log_weights_;
  double eta_;
};

/// Builds a finite class of `size` candidates around `truth`: one slot
/// (chosen uniformly) holds the truth itself, the others are entrywise
/// perturbations by U(-perturbation, perturbation), clipped to [-1, 1].
inline std::vector<MeanTable> make_perturbed_class(const MeanTable& truth, std::size_t size,
                                                   double perturbation, RandomStream& rng) {
  if (size == 0) throw ValidationError("finite class: size must be >= 1");
  const std::size_t truth_slot = rng.index(size);
  std::vector<MeanTable> out;
  out.reserve(size);
  for (std::size_t i = 0; i < size; ++i) {
    if (i == truth_slot) {
      out.push_back(truth);
      continue;
    }
    std::vector<double> v(truth.values().begin(), truth.values().end());
    for (double& e : v) e = clip_unit(e + rng.uniform(-perturbation, perturbation));
    out.emplace_back(truth.n_contexts(), truth.num_actions(), std::move(v));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Linear forecaster
// ---------------------------------------------------------------------------

/// Online regularized least squares over features attached to each
/// (context, action) pair. The inverse of A = reg*I + sum phi phi^T is
/// maintained by Sherman-Morrison updates.
///
/// In Vovk-Azoury-Warmuth mode the prediction for action a also folds the
/// query feature into A, which has the closed form
///   phi^T (A + phi phi^T)^{-1} b = phi^T A^{-1} b / (1 + phi^T A^{-1} phi).
class LinearOracle final : public RegressionOracle {
 public:
  /// `features` is indexed [context * K + action], each of dimension d.
  LinearOracle(std::size_t n_contexts, std::size_t k, std::vector<Eigen::VectorXd> features,
               double regularizer, bool vaw = true)
      : n_(n_contexts), k_(k), features_(std::move(features)), reg_(regularizer), vaw_(vaw) {
    if (features_.size() != n_ * k_) throw ValidationError("linear oracle: feature table size mismatch");
    if (!(reg_ > 0.0)) throw ValidationError("linear oracle: regularizer must be > 0");
    d_ = static_cast<std::size_t>(features_.front().size());
    if (d_ == 0) throw ValidationError("linear oracle: zero-dimensional features");
    for (const auto& f : features_) {
      if (static_cast<std::size_t>(f.size()) != d_) throw ValidationError("linear oracle: ragged features");
    }
    a_inv_ = Eigen::MatrixXd::Identity(d_, d_) / reg_;
    b_ = Eigen::VectorXd::Zero(d_);
    theta_ = Eigen::VectorXd::Zero(d_);
  }

  /// One-hot features: the tabular class, d = n_contexts * K.
  static LinearOracle one_hot(std::size_t n_contexts, std::size_t k, double regularizer, bool vaw = true) {
    const std::size_t d = n_contexts * k;
    std::vector<Eigen::VectorXd> f(d, Eigen::VectorXd::Zero(d));
    for (std::size_t i = 0; i < d; ++i) f[i](i) = 1.0;
    return LinearOracle(n_contexts, k, std::move(f), regularizer, vaw);
  }

  std::vector<double> predict(ContextId x) const override {
    std::vector<double> out(k_);
    for (std::size_t a = 0; a < k_; ++a) {
      const auto& phi = feature(x, ActionIndex{a});
      double s = phi.dot(theta_);
      if (vaw_) s /= 1.0 + phi.dot(a_inv_ * phi);
      out[a] = clip_unit(s);
    }
    return out;
  }

  void update(ContextId x, ActionIndex a, double y) override {
    check_observation(y);
    const auto& phi = feature(x, a);
    const Eigen::VectorXd u = a_inv_ * phi;
    a_inv_ -= (u * u.transpose()) / (1.0 + phi.dot(u));
    b_ += y * phi;
    theta_ = a_inv_ * b_;
  }

  std::unique_ptr<RegressionOracle> clone() const override {
    return std::make_unique<LinearOracle>(*this);
  }

  std::size_t num_actions() const override { return k_; }

  /// d ln(T) + d.
  double default_budget(std::size_t horizon) const override {
    const double d = static_cast<double>(d_);
    return d * std::log(static_cast<double>(std::max<std::size_t>(horizon, 1))) + d;
  }

  std::size_t dimension() const noexcept { return d_; }
  const Eigen::VectorXd& feature(ContextId x, ActionIndex a) const { return features_[x.index * k_ + a.index]; }
  const Eigen::VectorXd& solution() const noexcept { return theta_; }

 private:
  std::size_t n_;
  std::size_t k_;
  std::size_t d_ = 0;
  std::vector<Eigen::VectorXd> features_;
  double reg_;
  bool vaw_;
  Eigen::MatrixXd a_inv_;
  Eigen::VectorXd b_;
  Eigen::VectorXd theta_;
};

// ---------------------------------------------------------------------------
// Realized error accounting
// ---------------------------------------------------------------------------

/// Cumulative squared error of an oracle's prediction at the played action
/// against the true mean. Only available in simulation.
struct ErrorLedger {
  double cumulative_sq_error = 0.0;
  double budget = 1.0;

  void record(double predicted, double truth) {
    const double d = predicted - truth;
    cumulative_sq_error += d * d;
  }

  bool within_budget() const noexcept { return cumulative_sq_error <= budget; }
};

}  // namespace ccb
