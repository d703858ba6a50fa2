#pragma once
// Experiment configuration: one JSON document describing the environment,
// the regime, the oracle family, horizons and seeds.
//
// {
//   "schema_version": 1,
//   "spec": {
//     "reward_mean": [[...K...], ...n...],
//     "cost_mean":   [ [[...K...], ...n...], ...m... ],
//     "contexts": {"process": "cyclic", "sequence": [0, 1, 2]}
//               | {"process": "iid", "probs": [...n...]}
//               | {"process": "adaptive_adversary", "strategy": "max_gap"},
//     "reward_noise": "two_point_symmetric",
//     "cost_noise": "deterministic" | ["deterministic", ...m...]
//   },
//   "regime": {"name": "feasible_expectation", "epsilon": 0.2,
//              "budget": 10.0 | {"scale": 1.0, "exponent": 0.5},
//              "positive_part_costs": false},
//   "oracle": {"type": "finite", "class_size": 16, "perturbation": 0.5,
//              "eta": 0.125, "class_seed": 7, "error_budget": null}
//           | {"type": "linear", "features": "one_hot" | [[[...d...]...K...]...n...],
//              "regularizer": 1.0, "vaw": true, "error_budget": null},
//   "horizons": [1024, 2048, 4096],
//   "seeds": [0, 1, 2] | "num_seeds": 20,
//   "record_per_round_checks": true,
//   "write_round_logs": false
// }

#include <cmath>
#include <cstdint>
#include <fstream>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "ccb/core.hpp"
#include "ccb/env.hpp"
#include "ccb/lyapunov.hpp"
#include "ccb/oracle.hpp"

namespace ccb {

inline constexpr int kSchemaVersion = 1;

struct BudgetRule {
  std::optional<double> fixed;  ///< B_T independent of T
  double scale = 1.0;           ///< otherwise B_T = scale * T^exponent
  double exponent = 0.0;

  double at(std::size_t horizon) const {
    if (fixed) return *fixed;
    return scale * std::pow(static_cast<double>(horizon), exponent);
  }
};

struct OracleConfig {
  enum class Kind { Finite, Linear };
  Kind kind = Kind::Finite;
  // finite class
  std::size_t class_size = 16;
  double perturbation = 0.5;
  double eta = FiniteClassOracle::kDefaultEta;
  std::optional<std::uint64_t> class_seed;  ///< fixed class across runs; per-run seed otherwise
  // linear
  bool one_hot = true;
  std::vector<std::vector<double>> features;  ///< [context * K + action] -> d-vector
  double regularizer = 1.0;
  bool vaw = true;
  // U_T override
  std::optional<double> error_budget;
};

struct ExperimentConfig {
  ProblemSpec spec;
  Regime regime = Regime::FeasibleExpectation;
  std::optional<double> epsilon;
  std::optional<BudgetRule> budget;
  std::optional<bool> positive_part_override;
  OracleConfig oracle;
  std::vector<std::size_t> horizons;
  std::vector<std::uint64_t> seeds;
  bool record_per_round_checks = true;
  bool write_round_logs = false;

  /// Positive-part cost transform: on by default in the almost-sure regime.
  bool positive_part() const { return positive_part_override.value_or(regime == Regime::AlmostSure); }

  std::optional<double> budget_at(std::size_t horizon) const {
    if (!budget) return std::nullopt;
    return budget->at(horizon);
  }

  std::unique_ptr<RegressionOracle> make_oracle(const MeanTable& truth, Seed seed, std::uint64_t channel) const {
    if (oracle.kind == OracleConfig::Kind::Finite) {
      auto rng = RandomStream::derive(Seed{oracle.class_seed.value_or(seed.value)}, "oracle_class", channel);
      return std::make_unique<FiniteClassOracle>(
          make_perturbed_class(truth, oracle.class_size, oracle.perturbation, rng), oracle.eta);
    }
    if (oracle.one_hot) {
      return std::make_unique<LinearOracle>(LinearOracle::one_hot(spec.n_contexts, spec.num_actions,
                                                                  oracle.regularizer, oracle.vaw));
    }
    std::vector<Eigen::VectorXd> f;
    f.reserve(oracle.features.size());
    for (const auto& v : oracle.features) f.push_back(Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size())));
    return std::make_unique<LinearOracle>(spec.n_contexts, spec.num_actions, std::move(f), oracle.regularizer,
                                          oracle.vaw);
  }

  /// U_T: the override when given, else the oracle family's default.
  double error_budget_at(std::size_t horizon) const {
    if (oracle.error_budget) return *oracle.error_budget;
    if (oracle.kind == OracleConfig::Kind::Finite) {
      return std::max(1.0, std::log(static_cast<double>(oracle.class_size)) / oracle.eta);
    }
    const double d = oracle.one_hot ? static_cast<double>(spec.n_contexts * spec.num_actions)
                                    : static_cast<double>(oracle.features.front().size());
    return d * std::log(static_cast<double>(std::max<std::size_t>(horizon, 1))) + d;
  }

  RegimeParams regime_params(std::size_t horizon) const {
    RegimeParams p;
    p.regime = regime;
    p.num_actions = spec.num_actions;
    p.horizon = std::max<std::size_t>(horizon, 1);
    p.error_budget = error_budget_at(horizon);
    p.budget = budget_at(horizon);
    p.epsilon = epsilon;
    return p;
  }

  /// Regime/environment compatibility checks that do not need a run.
  void validate() const {
    spec.validate();
    if (horizons.empty()) throw ConfigError("config: no horizons");
    if (seeds.empty()) throw ConfigError("config: no seeds");
    if (uses_budget(regime) && !budget) throw ConfigError("config: regime requires a budget");
    if (regime == Regime::Slater && !epsilon) throw ConfigError("config: slater regime requires epsilon");
    if (uses_exponential(regime) && !positive_part() && !spec.costs_nonnegative()) {
      throw ConfigError("config: exponential Lyapunov regimes need non-negative (or positive-part) costs");
    }
    if (regime == Regime::CBwK && !spec.costs_nonnegative()) {
      throw ConfigError("config: cbwk requires non-negative costs");
    }
    if ((regime == Regime::CBwK || regime == Regime::CBwLC) && spec.num_resources != 1) {
      throw ConfigError("config: budget regimes support a single resource");
    }
    if (regime == Regime::CBwLC && !std::holds_alternative<IidContexts>(spec.contexts)) {
      throw ConfigError("config: cbwlc requires iid contexts");
    }
    if (oracle.kind == OracleConfig::Kind::Finite) {
      if (oracle.class_size == 0) throw ConfigError("config: class_size must be >= 1");
      if (!(oracle.perturbation >= 0.0)) throw ConfigError("config: perturbation must be >= 0");
      if (!(oracle.eta > 0.0)) throw ConfigError("config: eta must be > 0");
    } else if (!oracle.one_hot) {
      if (oracle.features.size() != spec.n_contexts * spec.num_actions) {
        throw ConfigError("config: features must cover every (context, action)");
      }
    }
    if (oracle.error_budget && !(*oracle.error_budget > 0.0)) throw ConfigError("config: error_budget must be > 0");
    for (std::size_t t : horizons) regime_params(t).validate();
  }
};

namespace detail {

inline MeanTable table_from_json(const nlohmann::json& j, std::string_view what) {
  if (!j.is_array()) throw ConfigError("config: " + std::string(what) + " must be an array of rows");
  try {
    return MeanTable::from_rows(j.get<std::vector<std::vector<double>>>());
  } catch (const ValidationError& e) {
    throw ConfigError("config: " + std::string(what) + ": " + e.what());
  }
}

}  // namespace detail

inline ExperimentConfig parse_config(const nlohmann::json& j) {
  try {
    ExperimentConfig c;
    const int version = j.value("schema_version", kSchemaVersion);
    if (version != kSchemaVersion) throw ConfigError("config: unsupported schema_version " + std::to_string(version));

    const auto& s = j.at("spec");
    c.spec.reward_mean = detail::table_from_json(s.at("reward_mean"), "reward_mean");
    c.spec.n_contexts = c.spec.reward_mean.n_contexts();
    c.spec.num_actions = c.spec.reward_mean.num_actions();
    for (const auto& t : s.at("cost_mean")) c.spec.cost_mean.push_back(detail::table_from_json(t, "cost_mean"));
    c.spec.num_resources = c.spec.cost_mean.size();

    const auto& ctx = s.at("contexts");
    const std::string process = ctx.at("process").get<std::string>();
    if (process == "cyclic") {
      c.spec.contexts = CyclicContexts{ctx.at("sequence").get<std::vector<std::size_t>>()};
    } else if (process == "iid") {
      c.spec.contexts = IidContexts{ctx.at("probs").get<std::vector<double>>()};
    } else if (process == "adaptive_adversary") {
      c.spec.contexts = AdaptiveAdversary{ctx.value("strategy", std::string("max_gap"))};
    } else {
      throw ConfigError("config: unknown context process '" + process + "'");
    }

    c.spec.reward_noise = noise_from_string(s.value("reward_noise", std::string("deterministic")));
    const auto cn = s.value("cost_noise", nlohmann::json("deterministic"));
    if (cn.is_string()) {
      c.spec.cost_noise.assign(c.spec.num_resources, noise_from_string(cn.get<std::string>()));
    } else {
      for (const auto& n : cn) c.spec.cost_noise.push_back(noise_from_string(n.get<std::string>()));
    }

    const auto& r = j.at("regime");
    c.regime = regime_from_string(r.at("name").get<std::string>());
    if (r.contains("epsilon")) c.epsilon = r.at("epsilon").get<double>();
    if (r.contains("budget")) {
      const auto& b = r.at("budget");
      BudgetRule rule;
      if (b.is_number()) {
        rule.fixed = b.get<double>();
      } else {
        rule.scale = b.value("scale", 1.0);
        rule.exponent = b.value("exponent", 0.0);
      }
      c.budget = rule;
    }
    if (r.contains("positive_part_costs")) c.positive_part_override = r.at("positive_part_costs").get<bool>();

    const auto o = j.value("oracle", nlohmann::json::object());
    const std::string type = o.value("type", std::string("finite"));
    if (type == "finite") {
      c.oracle.kind = OracleConfig::Kind::Finite;
      c.oracle.class_size = o.value("class_size", std::size_t{16});
      c.oracle.perturbation = o.value("perturbation", 0.5);
      c.oracle.eta = o.value("eta", FiniteClassOracle::kDefaultEta);
      if (o.contains("class_seed") && !o.at("class_seed").is_null()) {
        c.oracle.class_seed = o.at("class_seed").get<std::uint64_t>();
      }
    } else if (type == "linear") {
      c.oracle.kind = OracleConfig::Kind::Linear;
      c.oracle.regularizer = o.value("regularizer", 1.0);
      c.oracle.vaw = o.value("vaw", true);
      const auto f = o.value("features", nlohmann::json("one_hot"));
      if (f.is_string()) {
        if (f.get<std::string>() != "one_hot") throw ConfigError("config: unknown feature map");
        c.oracle.one_hot = true;
      } else {
        c.oracle.one_hot = false;
        for (const auto& per_context : f) {
          for (const auto& per_action : per_context) c.oracle.features.push_back(per_action.get<std::vector<double>>());
        }
      }
    } else {
      throw ConfigError("config: unknown oracle type '" + type + "'");
    }
    if (o.contains("error_budget") && !o.at("error_budget").is_null()) {
      c.oracle.error_budget = o.at("error_budget").get<double>();
    }

    c.horizons = j.at("horizons").get<std::vector<std::size_t>>();
    if (j.contains("seeds")) {
      c.seeds = j.at("seeds").get<std::vector<std::uint64_t>>();
    } else {
      const auto n = j.value("num_seeds", std::size_t{20});
      for (std::size_t i = 0; i < n; ++i) c.seeds.push_back(i);
    }
    c.record_per_round_checks = j.value("record_per_round_checks", true);
    c.write_round_logs = j.value("write_round_logs", false);

    c.validate();
    return c;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
}

inline ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot open '" + path + "'");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("config: " + path + ": " + e.what());
  }
  return parse_config(j);
}

}  // namespace ccb
