#pragma once
// Inverse Gap Weighting over predicted losses, and the slack of the
// one-step IGW regret inequality used as a checker.

#include <cmath>
#include <span>
#include <vector>

#include "ccb/core.hpp"

namespace ccb {

struct IGWResult {
  SimplexDistribution dist;
  double lambda = 1.0;
  double gamma = 0.0;
  ActionIndex greedy;
};

namespace detail {

inline constexpr double kLambdaTolerance = 1e-12;
inline constexpr int kMaxBisectionSteps = 200;

inline double igw_mass(std::span<const double> gaps, double two_gamma, double lambda) {
  double s = 0.0;
  for (double g : gaps) s += 1.0 / (lambda + two_gamma * g);
  return s;
}

}  // namespace detail

/// IGW distribution for a vector of predicted LOSSES (smaller is better):
///
///   p(a) = 1 / (lambda + 2 * gamma * (loss[a] - loss[greedy]))
///
/// with lambda in [1, K] normalizing the distribution. lambda is the root of
/// the strictly decreasing h(lambda) = sum_a p(a) - 1, found by bisection on
/// [1, K]. The greedy action is the lowest-index argmin.
inline IGWResult igw(std::span<const double> loss, double gamma) {
  const std::size_t k = loss.size();
  if (k == 0) throw ValidationError("igw: empty loss vector");
  if (!std::isfinite(gamma) || gamma < 0.0) throw ValidationError("igw: gamma must be finite and >= 0");
  std::size_t greedy = 0;
  for (std::size_t a = 0; a < k; ++a) {
    if (!std::isfinite(loss[a])) throw ValidationError("igw: non-finite loss");
    if (loss[a] < loss[greedy]) greedy = a;
  }

  std::vector<double> gaps(k);
  bool all_zero = true;
  for (std::size_t a = 0; a < k; ++a) {
    gaps[a] = loss[a] - loss[greedy];
    all_zero = all_zero && (gaps[a] == 0.0);
  }

  const double two_gamma = 2.0 * gamma;
  double lambda = static_cast<double>(k);
  if (!(all_zero || gamma == 0.0 || k == 1)) {
    double lo = 1.0;
    double hi = static_cast<double>(k);
    for (int step = 0; step < detail::kMaxBisectionSteps && hi - lo > detail::kLambdaTolerance; ++step) {
      const double mid = 0.5 * (lo + hi);
      if (detail::igw_mass(gaps, two_gamma, mid) > 1.0) {
        lo = mid;
      } else {
        hi = mid;
      }
    }
    lambda = 0.5 * (lo + hi);
  }

  std::vector<double> p(k);
  for (std::size_t a = 0; a < k; ++a) p[a] = 1.0 / (lambda + two_gamma * gaps[a]);
  return IGWResult{validate_simplex(std::move(p)), lambda, gamma, ActionIndex{greedy}};
}

/// RHS - LHS of the IGW one-step inequality for p = igw(vhat, gamma):
///
///   <v, p> - <v, mu>  <=  K / (2 gamma) + gamma * sum_a p(a) (vhat(a) - v(a))^2
///
/// for any loss vector v and comparator mu. Non-negative whenever the
/// inequality holds.
inline double lemma1_slack(std::span<const double> vhat, std::span<const double> v,
                           const SimplexDistribution& mu, double gamma) {
  if (!(gamma > 0.0)) throw ValidationError("lemma1_slack: gamma must be > 0");
  if (v.size() != vhat.size() || mu.size() != vhat.size()) {
    throw ValidationError("lemma1_slack: dimension mismatch");
  }
  const IGWResult r = igw(vhat, gamma);
  const auto p = r.dist.probs();
  const double k = static_cast<double>(vhat.size());
  double est = 0.0;
  for (std::size_t a = 0; a < vhat.size(); ++a) {
    const double d = vhat[a] - v[a];
    est += p[a] * d * d;
  }
  const double lhs = dot(v, p) - dot(v, mu.probs());
  const double rhs = k / (2.0 * gamma) + gamma * est;
  return rhs - lhs;
}

}  // namespace ccb
