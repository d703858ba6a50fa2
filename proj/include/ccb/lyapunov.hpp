#pragma once
// Lyapunov functions of the cumulative-cost queue and the parameter
// builders for each benchmark regime.

#include <cmath>
#include <optional>
#include <span>
#include <string>
#include <string_view>

#include "ccb/core.hpp"

namespace ccb {

class LyapunovFunction {
 public:
  enum class Kind { Quadratic, Exponential };

  /// Phi(x) = x^2 / V on all reals.
  static LyapunovFunction quadratic(double v) {
    if (!(v > 0.0) || !std::isfinite(v)) throw ConfigError("quadratic Lyapunov: V must be > 0");
    return LyapunovFunction(Kind::Quadratic, v);
  }

  /// Phi(x) = exp(rate * x), used on x >= 0.
  static LyapunovFunction exponential(double rate) {
    if (!(rate > 0.0) || !std::isfinite(rate)) throw ConfigError("exponential Lyapunov: rate must be > 0");
    return LyapunovFunction(Kind::Exponential, rate);
  }

  Kind kind() const noexcept { return kind_; }
  bool is_exponential() const noexcept { return kind_ == Kind::Exponential; }
  /// V for the quadratic variant, the rate for the exponential one.
  double parameter() const noexcept { return param_; }

  double value(double x) const {
    return kind_ == Kind::Quadratic ? x * x / param_ : std::exp(param_ * x);
  }
  double derivative(double x) const {
    return kind_ == Kind::Quadratic ? 2.0 * x / param_ : param_ * std::exp(param_ * x);
  }
  double second_derivative(double x) const {
    return kind_ == Kind::Quadratic ? 2.0 / param_ : param_ * param_ * std::exp(param_ * x);
  }

 private:
  LyapunovFunction(Kind kind, double param) : kind_(kind), param_(param) {}
  Kind kind_;
  double param_;
};

enum class Regime { FeasibleExpectation, Slater, AlmostSure, CBwK, NonNegRegret, CBwLC };

inline std::string_view to_string(Regime r) {
  switch (r) {
    case Regime::FeasibleExpectation: return "feasible_expectation";
    case Regime::Slater: return "slater";
    case Regime::AlmostSure: return "almost_sure";
    case Regime::CBwK: return "cbwk";
    case Regime::NonNegRegret: return "nonneg_regret";
    case Regime::CBwLC: return "cbwlc";
  }
  return "unknown";
}

inline Regime regime_from_string(std::string_view s) {
  for (Regime r : {Regime::FeasibleExpectation, Regime::Slater, Regime::AlmostSure, Regime::CBwK,
                   Regime::NonNegRegret, Regime::CBwLC}) {
    if (to_string(r) == s) return r;
  }
  throw ConfigError("unknown regime '" + std::string(s) + "'");
}

inline bool uses_budget(Regime r) {
  return r == Regime::CBwK || r == Regime::NonNegRegret || r == Regime::CBwLC;
}

inline bool uses_exponential(Regime r) { return r == Regime::AlmostSure || r == Regime::CBwK; }

struct RegimeParams {
  Regime regime = Regime::FeasibleExpectation;
  std::size_t num_actions = 1;
  std::size_t horizon = 1;
  double error_budget = 1.0;          ///< U_T
  std::optional<double> budget;       ///< B_T, budget regimes only
  std::optional<double> epsilon;      ///< Slater margin; diagnostic metadata

  void validate() const {
    if (num_actions == 0) throw ConfigError("regime: K must be >= 1");
    if (horizon == 0) throw ConfigError("regime: T must be >= 1");
    if (!(error_budget > 0.0) || !std::isfinite(error_budget)) throw ConfigError("regime: U_T must be > 0");
    if (uses_budget(regime)) {
      if (!budget) throw ConfigError("regime " + std::string(to_string(regime)) + " requires a budget B_T");
      if (*budget < 0.0 || *budget > static_cast<double>(horizon)) {
        throw ConfigError("regime: B_T must lie in [0, T]");
      }
    }
    if (regime == Regime::Slater && (!epsilon || !(*epsilon > 0.0))) {
      throw ConfigError("regime slater: epsilon must be > 0");
    }
  }
};

/// Lyapunov function for a regime:
///   feasible_expectation, slater  -> x^2 / V,  V = sqrt(K T U)
///   almost_sure                   -> exp(l x), l = 1 / (8 sqrt(K U T))
///   cbwk                          -> exp(l x), l = 1 / (8 sqrt(K U T) + 2 B)
///   nonneg_regret, cbwlc          -> x^2 / V,  V = sqrt(K T U) + B
inline LyapunovFunction build_lyapunov(const RegimeParams& params) {
  params.validate();
  const double ktu = static_cast<double>(params.num_actions) * static_cast<double>(params.horizon) *
                     params.error_budget;
  const double root = std::sqrt(ktu);
  switch (params.regime) {
    case Regime::FeasibleExpectation:
    case Regime::Slater:
      return LyapunovFunction::quadratic(root);
    case Regime::AlmostSure:
      return LyapunovFunction::exponential(1.0 / (8.0 * root));
    case Regime::CBwK:
      return LyapunovFunction::exponential(1.0 / (8.0 * root + 2.0 * *params.budget));
    case Regime::NonNegRegret:
    case Regime::CBwLC:
      return LyapunovFunction::quadratic(root + *params.budget);
  }
  throw ConfigError("unhandled regime");
}

/// z = max(1, sum_i Phi'(q_i)^2). For a single queue this is
/// max(1, Phi'(q)^2).
inline double z_of(const LyapunovFunction& phi, std::span<const double> queues) {
  double s = 0.0;
  for (double q : queues) {
    if (phi.is_exponential() && q < 0.0) {
      throw InvariantViolation("exponential Lyapunov function evaluated on a negative queue");
    }
    const double d = phi.derivative(q);
    s += d * d;
  }
  return std::max(1.0, s);
}

inline double z_of(const LyapunovFunction& phi, double queue) {
  return z_of(phi, std::span<const double>(&queue, 1));
}

}  // namespace ccb
