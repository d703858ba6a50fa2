#pragma once
// Shared domain types for the constrained contextual bandit library:
// strong index types, validated simplex distributions, mean tables,
// outcomes and seeded random streams.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <numeric>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace ccb {

// ---------------------------------------------------------------------------
// Errors
// ---------------------------------------------------------------------------

/// Malformed input to an operation (bad simplex, out-of-range observation).
struct ValidationError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

/// Inconsistent experiment or regime configuration.
struct ConfigError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

/// Calls made out of the select -> update protocol order.
struct SequencingError : std::logic_error {
  using std::logic_error::logic_error;
};

/// A benchmark optimization problem with an empty feasible set.
struct InfeasibleError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// A runtime state invariant that must never break (e.g. negative queue
/// under an exponential Lyapunov function).
struct InvariantViolation : std::logic_error {
  using std::logic_error::logic_error;
};

// ---------------------------------------------------------------------------
// Strong index types
// ---------------------------------------------------------------------------

struct ContextId {
  std::size_t index = 0;
  friend constexpr bool operator==(ContextId, ContextId) = default;
  friend constexpr auto operator<=>(ContextId, ContextId) = default;
};

struct ActionIndex {
  std::size_t index = 0;
  friend constexpr bool operator==(ActionIndex, ActionIndex) = default;
  friend constexpr auto operator<=>(ActionIndex, ActionIndex) = default;
};

struct Seed {
  std::uint64_t value = 0;
};

// ---------------------------------------------------------------------------
// Simplex distributions
// ---------------------------------------------------------------------------

inline constexpr double kSimplexTolerance = 1e-8;

class SimplexDistribution;
SimplexDistribution validate_simplex(std::vector<double> probs);

/// Probability vector over K actions. Only constructible through
/// validate_simplex (or the point_mass/uniform helpers), so every instance
/// has non-negative entries summing to one. A default-constructed
/// instance is an empty placeholder of size zero.
class SimplexDistribution {
 public:
  SimplexDistribution() = default;

  static SimplexDistribution point_mass(std::size_t k, ActionIndex a) {
    if (a.index >= k) throw ValidationError("point_mass: action out of range");
    std::vector<double> p(k, 0.0);
    p[a.index] = 1.0;
    return SimplexDistribution(std::move(p));
  }

  static SimplexDistribution uniform(std::size_t k) {
    if (k == 0) throw ValidationError("uniform: empty action set");
    return SimplexDistribution(std::vector<double>(k, 1.0 / static_cast<double>(k)));
  }

  std::size_t size() const noexcept { return probs_.size(); }
  double operator[](std::size_t a) const { return probs_[a]; }
  std::span<const double> probs() const noexcept { return probs_; }

  /// Number of strictly positive entries.
  std::size_t support_size() const noexcept {
    std::size_t n = 0;
    for (double p : probs_) n += (p > 0.0) ? 1 : 0;
    return n;
  }

 private:
  friend SimplexDistribution validate_simplex(std::vector<double> probs);
  explicit SimplexDistribution(std::vector<double> probs) : probs_(std::move(probs)) {}
  std::vector<double> probs_;
};

/// Accepts a probability vector, re-normalizing it when the sum is within
/// 1e-8 of one. Negative or non-finite entries are rejected.
inline SimplexDistribution validate_simplex(std::vector<double> probs) {
  if (probs.empty()) throw ValidationError("simplex: empty probability vector");
  double sum = 0.0;
  for (double p : probs) {
    if (!std::isfinite(p)) throw ValidationError("simplex: non-finite entry");
    if (p < 0.0) throw ValidationError("simplex: negative entry");
    sum += p;
  }
  if (std::abs(sum - 1.0) > kSimplexTolerance) {
    throw ValidationError("simplex: entries sum to " + std::to_string(sum));
  }
  if (sum != 1.0) {
    for (double& p : probs) p /= sum;
  }
  return SimplexDistribution(std::move(probs));
}

inline double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

inline double clip_unit(double v) { return v < -1.0 ? -1.0 : (v > 1.0 ? 1.0 : v); }

// ---------------------------------------------------------------------------
// Mean tables and outcomes
// ---------------------------------------------------------------------------

/// n_contexts x K table of conditional means, all entries in [-1, 1].
class MeanTable {
 public:
  MeanTable() = default;

  MeanTable(std::size_t n_contexts, std::size_t k, std::vector<double> row_major)
      : n_(n_contexts), k_(k), values_(std::move(row_major)) {
    if (values_.size() != n_ * k_) throw ValidationError("mean table: size mismatch");
    for (double v : values_) {
      if (!std::isfinite(v) || v < -1.0 || v > 1.0) {
        throw ValidationError("mean table: entry outside [-1,1]");
      }
    }
  }

  static MeanTable from_rows(const std::vector<std::vector<double>>& rows) {
    if (rows.empty()) throw ValidationError("mean table: no rows");
    std::vector<double> flat;
    const std::size_t k = rows.front().size();
    for (const auto& r : rows) {
      if (r.size() != k) throw ValidationError("mean table: ragged rows");
      flat.insert(flat.end(), r.begin(), r.end());
    }
    return MeanTable(rows.size(), k, std::move(flat));
  }

  static MeanTable zeros(std::size_t n_contexts, std::size_t k) {
    return MeanTable(n_contexts, k, std::vector<double>(n_contexts * k, 0.0));
  }

  std::size_t n_contexts() const noexcept { return n_; }
  std::size_t num_actions() const noexcept { return k_; }

  double at(ContextId x, ActionIndex a) const { return values_[x.index * k_ + a.index]; }
  std::span<const double> row(ContextId x) const {
    return std::span<const double>(values_).subspan(x.index * k_, k_);
  }
  std::span<const double> values() const noexcept { return values_; }

  double min() const { return *std::min_element(values_.begin(), values_.end()); }
  double max() const { return *std::max_element(values_.begin(), values_.end()); }

  /// Entrywise max(0, v); the mean table of positive-part transformed
  /// costs when the cost noise keeps realizability.
  MeanTable positive_part() const {
    std::vector<double> v = values_;
    for (double& e : v) e = std::max(0.0, e);
    return MeanTable(n_, k_, std::move(v));
  }

 private:
  std::size_t n_ = 0;
  std::size_t k_ = 0;
  std::vector<double> values_;
};

struct Outcome {
  double reward = 0.0;
  std::vector<double> costs;

  void validate() const {
    auto ok = [](double v) { return std::isfinite(v) && v >= -1.0 && v <= 1.0; };
    if (!ok(reward)) throw ValidationError("outcome: reward outside [-1,1]");
    for (double c : costs) {
      if (!ok(c)) throw ValidationError("outcome: cost outside [-1,1]");
    }
  }
};

// ---------------------------------------------------------------------------
// Randomness
// ---------------------------------------------------------------------------

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::uint64_t hash_label(std::string_view label) {
  std::uint64_t h = 0xcbf29ce484222325ULL;  // FNV-1a
  for (unsigned char c : label) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

/// Seeded 64-bit stream. Uniform draws use the top 53 bits so the sequence
/// of doubles is identical across standard library implementations.
class RandomStream {
 public:
  explicit RandomStream(std::uint64_t seed) : engine_(seed) {}

  /// Independent stream for (seed, component, index). Streams for
  /// different components never share state.
  static RandomStream derive(Seed seed, std::string_view component, std::uint64_t index = 0) {
    std::uint64_t s = splitmix64(seed.value);
    s = splitmix64(s ^ hash_label(component));
    s = splitmix64(s ^ index);
    return RandomStream(s);
  }

  /// Uniform in [0, 1).
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  /// Uniform in [lo, hi).
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Uniform integer in [0, n); n must be positive.
  std::size_t index(std::size_t n) {
    return static_cast<std::size_t>(uniform() * static_cast<double>(n)) % n;
  }

  std::uint64_t next_u64() { return engine_(); }

 private:
  std::mt19937_64 engine_;
};

/// Cumulative-sum inversion: the smallest a with sum_{b<=a} p[b] > u.
/// Rounding at the tail falls back to the last action with positive mass.
inline ActionIndex sample_action_with_draw(const SimplexDistribution& dist, double u) {
  double cum = 0.0;
  std::size_t last_positive = 0;
  for (std::size_t a = 0; a < dist.size(); ++a) {
    if (dist[a] > 0.0) last_positive = a;
    cum += dist[a];
    if (cum > u) return ActionIndex{a};
  }
  return ActionIndex{last_positive};
}

/// Samples a ~ dist consuming exactly one uniform draw.
inline ActionIndex sample_action(const SimplexDistribution& dist, RandomStream& rng) {
  return sample_action_with_draw(dist, rng.uniform());
}

/// Raw-vector overload; validates the simplex before drawing.
inline ActionIndex sample_action(std::span<const double> probs, RandomStream& rng) {
  return sample_action(validate_simplex(std::vector<double>(probs.begin(), probs.end())), rng);
}

}  // namespace ccb
