#ifndef CPL_CLI_SCENARIO_HPP
#define CPL_CLI_SCENARIO_HPP

#include <yaml-cpp/yaml.h>

#include <cstdint>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "cpl/centralized.hpp"
#include "cpl/cli/results.hpp"
#include "cpl/distribution.hpp"
#include "cpl/error.hpp"
#include "cpl/hypothesis.hpp"
#include "cpl/personalized.hpp"

namespace cpl::cli {

/// A malformed or inconsistent scenario file.
class ConfigError : public InvalidArgument {
 public:
  using InvalidArgument::InvalidArgument;
};

enum class Mode { PaperFaithful, Desk };
enum class SweepAxis { None, K, Epsilon, Eta };
enum class Layout { Identical, Staggered, Explicit };

inline std::optional<Mode> parse_mode(const std::string& s) {
  if (s == "paper-faithful") return Mode::PaperFaithful;
  if (s == "desk") return Mode::Desk;
  return std::nullopt;
}

inline std::string to_string(Mode m) { return m == Mode::Desk ? "desk" : "paper-faithful"; }

inline std::string to_string(SweepAxis a) {
  switch (a) {
    case SweepAxis::K: return "k";
    case SweepAxis::Epsilon: return "epsilon";
    case SweepAxis::Eta: return "eta";
    case SweepAxis::None: break;
  }
  return "none";
}

/// One explicitly listed player distribution.
struct PlayerDist {
  std::vector<std::pair<double, double>> box;  // per-feature bounds, uniform
  std::vector<Point> points;                   // discrete support when nonempty
  std::vector<double> probs;
};

/// The constants a run may override, with their preset defaults.
inline std::map<std::string, double> default_constants(Mode mode) {
  return {{"c_pac", 4.0},
          {"c_cn", 4.0},
          {"c_test", 32.0},
          {"c_cntest", 32.0},
          {"round_cap_multiplier", 4.0},
          {"t_multiplier", mode == Mode::Desk ? 10.0 : 150.0},
          {"c_fasttest", 56.0},
          {"gamma", 0.25},
          {"max_rounds", 0.0},
          {"c_boost", 1.0},
          {"c_round", 10.0},
          {"c_cap", 4.0},
          {"c_ag", 8.0},
          {"c_vc", 1.0},
          {"beta", 0.1},
          {"sync_width_bits", 64.0}};
}

struct ScenarioConfig {
  std::vector<Algorithm> algorithms{Algorithm::PL};
  ClassKind class_kind = ClassKind::Threshold1D;
  std::size_t dimension = 1;
  std::size_t vc_dimension = 0;  // 0: the class default
  double target_threshold = 0.5;
  Polarity target_polarity = Polarity::Positive;
  double target_lo = 0.3;
  double target_hi = 0.7;
  std::size_t target_feature = 0;
  std::size_t k = 8;
  Layout layout = Layout::Identical;
  std::vector<PlayerDist> explicit_players;
  std::vector<double> eta{0.0};  // one rate for all players, or one per player
  double epsilon = 0.1;
  double delta = 0.1;
  std::optional<std::uint64_t> seed;
  std::size_t trials = 1;
  SweepAxis sweep_axis = SweepAxis::None;
  std::vector<double> sweep_values;
  Mode mode = Mode::Desk;
  std::map<std::string, std::string> overrides;  // verbatim text from the file
};

/// The effective constant set of a run plus its provenance text.
struct Constants {
  std::map<std::string, double> values;
  std::string provenance;

  double operator[](const std::string& key) const { return values.at(key); }
};

inline Constants resolve_constants(const ScenarioConfig& cfg) {
  Constants c{default_constants(cfg.mode), {}};
  std::map<std::string, std::string> text;
  for (const auto& [key, v] : c.values) text[key] = format_double(v);
  for (const auto& [key, raw] : cfg.overrides) {
    auto it = c.values.find(key);
    if (it == c.values.end()) throw ConfigError("unknown constant '" + key + "'");
    char* end = nullptr;
    const double v = std::strtod(raw.c_str(), &end);
    if (raw.empty() || *end != '\0' || !std::isfinite(v)) throw ConfigError("constant '" + key + "' must be a decimal number");
    it->second = v;
    text[key] = raw;
  }
  c.provenance = "mode=" + to_string(cfg.mode);
  for (const auto& [key, t] : text) c.provenance += ";" + key + "=" + t;
  return c;
}

inline BoostConfig boost_config(const Constants& c) {
  BoostConfig b;
  b.gamma = c["gamma"];
  b.max_rounds = static_cast<std::size_t>(c["max_rounds"]);
  b.c_boost = c["c_boost"];
  b.c_round = c["c_round"];
  b.c_cap = c["c_cap"];
  b.c_ag = c["c_ag"];
  b.c_vc = c["c_vc"];
  b.beta = c["beta"];
  b.sync_width_bits = static_cast<std::uint64_t>(c["sync_width_bits"]);
  return b;
}

inline PersonalizedConfig personalized_config(const Constants& c, Algorithm a, double epsilon, double delta) {
  PersonalizedConfig p;
  p.epsilon = epsilon;
  p.delta = delta;
  p.round_cap_multiplier = c["round_cap_multiplier"];
  p.c_pac = c["c_pac"];
  p.c_cn = c["c_cn"];
  p.c_test = c["c_test"];
  p.c_cntest = c["c_cntest"];
  p.variant = a;
  p.boost = boost_config(c);
  return p;
}

inline CentralizedConfig centralized_config(const Constants& c, Algorithm a, double epsilon, double delta) {
  CentralizedConfig p;
  p.epsilon = epsilon;
  p.delta = delta;
  p.t_multiplier = c["t_multiplier"];
  p.c_fasttest = c["c_fasttest"];
  p.c_pac = c["c_pac"];
  p.c_cn = c["c_cn"];
  p.variant = a;
  p.boost = boost_config(c);
  return p;
}

/// The concrete parameters of one sweep point.
struct RunPoint {
  Algorithm algorithm;
  std::size_t k;
  double epsilon;
  std::vector<double> eta;  // per player
};

namespace detail {

inline std::vector<double> per_player_eta(const std::vector<double>& eta, std::size_t k) {
  if (eta.size() == 1) return std::vector<double>(k, eta.front());
  if (eta.size() != k) throw ConfigError("players.eta lists " + std::to_string(eta.size()) + " rates for " +
                                         std::to_string(k) + " players");
  return eta;
}

}  // namespace detail

inline HypothesisClassSpec class_spec(const ScenarioConfig& cfg) {
  switch (cfg.class_kind) {
    case ClassKind::Threshold1D: {
      auto s = HypothesisClassSpec::threshold_1d();
      if (cfg.vc_dimension) s.vc_dimension = cfg.vc_dimension;
      return s;
    }
    case ClassKind::Interval1D: {
      auto s = HypothesisClassSpec::interval_1d();
      if (cfg.vc_dimension) s.vc_dimension = cfg.vc_dimension;
      return s;
    }
    case ClassKind::StumpND: return HypothesisClassSpec::stumps(cfg.dimension, cfg.vc_dimension);
  }
  throw ConfigError("unknown hypothesis class");
}

inline Hypothesis target_hypothesis(const ScenarioConfig& cfg) {
  switch (cfg.class_kind) {
    case ClassKind::Threshold1D: return Hypothesis::threshold(cfg.target_threshold, cfg.target_polarity);
    case ClassKind::Interval1D: return Hypothesis::interval(cfg.target_lo, cfg.target_hi);
    case ClassKind::StumpND:
      if (cfg.target_feature >= cfg.dimension) throw ConfigError("target.feature is outside the class dimension");
      return Hypothesis::stump(cfg.target_feature, cfg.target_threshold, cfg.target_polarity);
  }
  throw ConfigError("unknown hypothesis class");
}

/// Player distributions for k players under the configured layout. Staggered
/// players are uniform on [s, s + 1/2] along feature 0 with s spread over [0, 1/2].
inline std::vector<CleanDistribution> player_distributions(const ScenarioConfig& cfg, std::size_t k) {
  const std::size_t n = class_spec(cfg).dimension;
  std::vector<CleanDistribution> out;
  if (cfg.layout == Layout::Explicit) {
    for (const auto& p : cfg.explicit_players) {
      if (!p.points.empty()) {
        out.push_back(CleanDistribution::discrete(p.points, p.probs));
      } else {
        Box b{Point(n), Point(n)};
        if (p.box.size() != n) throw ConfigError("player box must give bounds for every feature");
        for (std::size_t f = 0; f < n; ++f) std::tie(b.lo[f], b.hi[f]) = p.box[f];
        out.push_back(CleanDistribution::uniform_box(std::move(b)));
      }
    }
    return out;
  }
  for (std::size_t i = 0; i < k; ++i) {
    Box b = Box::unit(n);
    if (cfg.layout == Layout::Staggered) {
      const double shift = k > 1 ? 0.5 * static_cast<double>(i) / static_cast<double>(k - 1) : 0.0;
      b.lo[0] = shift;
      b.hi[0] = shift + 0.5;
    }
    out.push_back(CleanDistribution::uniform_box(std::move(b)));
  }
  return out;
}

inline Problem build_problem(const ScenarioConfig& cfg, const RunPoint& pt) {
  const auto cls = class_spec(cfg);
  cls.validate();
  auto dists = player_distributions(cfg, pt.k);
  if (pt.eta.size() != dists.size()) throw ConfigError("noise rates must be given for every player");
  std::vector<Player> players;
  for (std::size_t i = 0; i < dists.size(); ++i) {
    if (!(pt.eta[i] >= 0.0 && pt.eta[i] < 0.5))
      throw ConfigError("noise rate of player " + std::to_string(i) + " is " + format_double(pt.eta[i]) +
                        ": every eta must lie in [0, 1/2)");
    players.emplace_back(i, std::move(dists[i]), pt.eta[i]);
  }
  Problem p{cls, std::move(players), TargetConcept(target_hypothesis(cfg), cls)};
  p.validate();
  return p;
}

/// Every (algorithm, sweep value) combination, algorithms outermost.
inline std::vector<RunPoint> run_points(const ScenarioConfig& cfg) {
  const std::size_t base_k = cfg.layout == Layout::Explicit ? cfg.explicit_players.size() : cfg.k;
  std::vector<RunPoint> out;
  for (Algorithm a : cfg.algorithms) {
    auto push = [&](std::size_t k, double eps, std::vector<double> eta) {
      out.push_back({a, k, eps, detail::per_player_eta(eta, k)});
    };
    if (cfg.sweep_axis == SweepAxis::None) {
      push(base_k, cfg.epsilon, cfg.eta);
      continue;
    }
    for (double v : cfg.sweep_values) {
      switch (cfg.sweep_axis) {
        case SweepAxis::K: push(static_cast<std::size_t>(v), cfg.epsilon, cfg.eta); break;
        case SweepAxis::Epsilon: push(base_k, v, cfg.eta); break;
        case SweepAxis::Eta: push(base_k, cfg.epsilon, {v}); break;
        case SweepAxis::None: break;
      }
    }
  }
  return out;
}

/// Checks every sweep point against the domain invariants. Noise rates out
/// of range and boosting past the noise rate get distinct messages.
inline void validate(const ScenarioConfig& cfg) {
  if (cfg.algorithms.empty()) throw ConfigError("no algorithm given");
  if (cfg.trials == 0) throw ConfigError("trials must be positive");
  if (!(cfg.delta > 0.0 && cfg.delta < 1.0)) throw ConfigError("delta must lie in (0, 1)");
  if (cfg.sweep_axis != SweepAxis::None && cfg.sweep_values.empty()) throw ConfigError("sweep.values is empty");
  if (cfg.sweep_axis == SweepAxis::None && !cfg.sweep_values.empty())
    throw ConfigError("sweep.values given without sweep.axis");
  if (cfg.sweep_axis == SweepAxis::K) {
    if (cfg.layout == Layout::Explicit) throw ConfigError("cannot sweep k over an explicit player list");
    for (double v : cfg.sweep_values)
      if (!(v >= 1.0 && v == std::floor(v))) throw ConfigError("k sweep values must be positive integers");
  }
  if (cfg.layout != Layout::Explicit && cfg.k == 0) throw ConfigError("players.k must be positive");
  const Constants c = resolve_constants(cfg);
  for (const auto& pt : run_points(cfg)) {
    if (!(pt.epsilon > 0.0 && pt.epsilon < 1.0)) throw ConfigError("epsilon must lie in (0, 1)");
    const Problem p = build_problem(cfg, pt);
    const bool noisy = p.eta_max() > 0.0;
    if (noisy && !is_noise_tolerant(pt.algorithm))
      throw ConfigError(to_string(pt.algorithm) + " requires noiseless players; use a CN variant");
    if ((pt.algorithm == Algorithm::PLCNBoost || pt.algorithm == Algorithm::CentralCNBoost) && p.eta_max() > pt.epsilon)
      throw ConfigError(to_string(pt.algorithm) + " boosts only up to the noise rate: eta_max = " +
                        format_double(p.eta_max()) + " exceeds epsilon = " + format_double(pt.epsilon));
    if (is_centralized(pt.algorithm))
      centralized_config(c, pt.algorithm, pt.epsilon, cfg.delta).validate();
    else
      personalized_config(c, pt.algorithm, pt.epsilon, cfg.delta).validate();
  }
}

namespace detail {

inline const std::vector<std::string>& known_keys() {
  static const std::vector<std::string> keys{"algorithm", "class", "target", "players", "epsilon", "delta",
                                             "seed",      "trials", "sweep", "constants", "mode"};
  return keys;
}

template <typename T>
T scalar(const YAML::Node& n, const std::string& what) {
  try {
    return n.as<T>();
  } catch (const YAML::Exception&) {
    throw ConfigError("'" + what + "' has the wrong type");
  }
}

inline std::vector<double> number_list(const YAML::Node& n, const std::string& what) {
  std::vector<double> out;
  if (n.IsScalar()) return {scalar<double>(n, what)};
  if (!n.IsSequence()) throw ConfigError("'" + what + "' must be a number or a list of numbers");
  for (const auto& v : n) out.push_back(scalar<double>(v, what));
  return out;
}

inline void check_keys(const YAML::Node& map, const std::vector<std::string>& allowed, const std::string& where) {
  for (const auto& kv : map) {
    const auto key = kv.first.as<std::string>();
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end())
      throw ConfigError("unknown key '" + key + "' in " + where);
  }
}

inline Polarity parse_polarity(const std::string& s) {
  if (s == "positive" || s == "+") return Polarity::Positive;
  if (s == "negative" || s == "-") return Polarity::Negative;
  throw ConfigError("target.polarity must be positive or negative");
}

}  // namespace detail

/// Parses a scenario from YAML text. See README for the key reference.
inline ScenarioConfig parse_scenario(const std::string& text) {
  YAML::Node root;
  try {
    root = YAML::Load(text);
  } catch (const YAML::Exception& e) {
    throw ConfigError(std::string("malformed scenario: ") + e.what());
  }
  if (!root.IsMap()) throw ConfigError("scenario must be a mapping");
  detail::check_keys(root, detail::known_keys(), "scenario");
  ScenarioConfig cfg;

  if (auto a = root["algorithm"]) {
    cfg.algorithms.clear();
    std::vector<std::string> names;
    if (a.IsSequence())
      for (const auto& x : a) names.push_back(detail::scalar<std::string>(x, "algorithm"));
    else
      names.push_back(detail::scalar<std::string>(a, "algorithm"));
    for (const auto& name : names) {
      auto alg = parse_algorithm(name);
      if (!alg) throw ConfigError("unknown algorithm '" + name + "'");
      cfg.algorithms.push_back(*alg);
    }
  }

  if (auto c = root["class"]) {
    // yaml-cpp nodes alias: read the name without reassigning a node.
    std::string name;
    if (c.IsMap()) {
      detail::check_keys(c, {"kind", "dimension", "vc_dimension"}, "class");
      name = detail::scalar<std::string>(c["kind"], "class.kind");
      if (c["dimension"]) cfg.dimension = detail::scalar<std::size_t>(c["dimension"], "class.dimension");
      if (c["vc_dimension"]) cfg.vc_dimension = detail::scalar<std::size_t>(c["vc_dimension"], "class.vc_dimension");
    } else {
      name = detail::scalar<std::string>(c, "class");
    }
    if (name == "threshold") cfg.class_kind = ClassKind::Threshold1D;
    else if (name == "interval") cfg.class_kind = ClassKind::Interval1D;
    else if (name == "stumps") cfg.class_kind = ClassKind::StumpND;
    else throw ConfigError("class must be threshold, interval or stumps");
    if (cfg.class_kind != ClassKind::StumpND && cfg.dimension != 1)
      throw ConfigError("threshold and interval classes are one-dimensional");
  }

  if (auto t = root["target"]) {
    if (!t.IsMap()) throw ConfigError("target must be a mapping");
    detail::check_keys(t, {"threshold", "polarity", "lo", "hi", "feature"}, "target");
    if (t["threshold"]) cfg.target_threshold = detail::scalar<double>(t["threshold"], "target.threshold");
    if (t["polarity"]) cfg.target_polarity = detail::parse_polarity(detail::scalar<std::string>(t["polarity"], "target.polarity"));
    if (t["lo"]) cfg.target_lo = detail::scalar<double>(t["lo"], "target.lo");
    if (t["hi"]) cfg.target_hi = detail::scalar<double>(t["hi"], "target.hi");
    if (t["feature"]) cfg.target_feature = detail::scalar<std::size_t>(t["feature"], "target.feature");
    if (cfg.target_lo > cfg.target_hi) throw ConfigError("target.lo must not exceed target.hi");
  }

  if (auto p = root["players"]) {
    if (!p.IsMap()) throw ConfigError("players must be a mapping");
    detail::check_keys(p, {"k", "layout", "eta", "list"}, "players");
    if (p["k"]) cfg.k = detail::scalar<std::size_t>(p["k"], "players.k");
    if (p["eta"]) cfg.eta = detail::number_list(p["eta"], "players.eta");
    if (auto l = p["layout"]) {
      const auto name = detail::scalar<std::string>(l, "players.layout");
      if (name == "identical") cfg.layout = Layout::Identical;
      else if (name == "staggered") cfg.layout = Layout::Staggered;
      else if (name == "explicit") cfg.layout = Layout::Explicit;
      else throw ConfigError("players.layout must be identical, staggered or explicit");
    }
    if (auto list = p["list"]) {
      if (!list.IsSequence()) throw ConfigError("players.list must be a list");
      cfg.layout = Layout::Explicit;
      for (const auto& entry : list) {
        detail::check_keys(entry, {"box", "points", "probs"}, "players.list entry");
        PlayerDist d;
        if (auto b = entry["box"]) {
          for (const auto& f : b) {
            const auto v = detail::number_list(f, "players.list.box");
            if (v.size() != 2) throw ConfigError("each box entry is a [lo, hi] pair");
            d.box.emplace_back(v[0], v[1]);
          }
        } else if (auto pts = entry["points"]) {
          for (const auto& x : pts) d.points.push_back(detail::number_list(x, "players.list.points"));
          if (!entry["probs"]) throw ConfigError("discrete players need probs");
          d.probs = detail::number_list(entry["probs"], "players.list.probs");
        } else {
          throw ConfigError("each listed player needs a box or points");
        }
        cfg.explicit_players.push_back(std::move(d));
      }
    }
    if (cfg.layout == Layout::Explicit && cfg.explicit_players.empty())
      throw ConfigError("explicit layout needs players.list");
  }

  if (root["epsilon"]) cfg.epsilon = detail::scalar<double>(root["epsilon"], "epsilon");
  if (root["delta"]) cfg.delta = detail::scalar<double>(root["delta"], "delta");
  if (root["seed"]) cfg.seed = detail::scalar<std::uint64_t>(root["seed"], "seed");
  if (root["trials"]) cfg.trials = detail::scalar<std::size_t>(root["trials"], "trials");

  if (auto s = root["sweep"]) {
    if (!s.IsMap()) throw ConfigError("sweep must be a mapping");
    detail::check_keys(s, {"axis", "values"}, "sweep");
    const auto axis = detail::scalar<std::string>(s["axis"], "sweep.axis");
    if (axis == "k") cfg.sweep_axis = SweepAxis::K;
    else if (axis == "epsilon") cfg.sweep_axis = SweepAxis::Epsilon;
    else if (axis == "eta") cfg.sweep_axis = SweepAxis::Eta;
    else if (axis == "none") cfg.sweep_axis = SweepAxis::None;
    else throw ConfigError("sweep.axis must be none, k, epsilon or eta");
    if (s["values"]) cfg.sweep_values = detail::number_list(s["values"], "sweep.values");
  }

  if (auto c = root["constants"]) {
    if (!c.IsMap()) throw ConfigError("constants must be a mapping");
    for (const auto& kv : c) cfg.overrides[kv.first.as<std::string>()] = detail::scalar<std::string>(kv.second, "constants");
  }

  if (auto m = root["mode"]) {
    auto mode = parse_mode(detail::scalar<std::string>(m, "mode"));
    if (!mode) throw ConfigError("mode must be paper-faithful or desk");
    cfg.mode = *mode;
  }
  return cfg;
}

inline ScenarioConfig load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read scenario file " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_scenario(ss.str());
}

}  // namespace cpl::cli

#endif
