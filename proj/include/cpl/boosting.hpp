#ifndef CPL_BOOSTING_HPP
#define CPL_BOOSTING_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "cpl/distribution.hpp"
#include "cpl/error.hpp"
#include "cpl/hypothesis.hpp"
#include "cpl/network.hpp"
#include "cpl/rng.hpp"

namespace cpl {

/// Boosting parameters. Every constant multiplies an O(.) bound and is
/// reported with each run.
struct BoostConfig {
  double gamma = 0.25;              // assumed weak-learner edge, budgeting only
  std::size_t max_rounds = 0;       // 0: derive from the budget
  double target_training_error = 0.0;
  double c_boost = 1.0;             // reservoir budget multiplier
  double c_round = 10.0;            // working sample = c_round * d per round
  double c_cap = 4.0;               // agnostic weight cap: no weight above c_cap / m
  double c_ag = 8.0;                // agnostic round budget multiplier
  double c_vc = 1.0;                // ensemble VC-dimension multiplier
  double beta = 0.1;                // agnostic weak learner slack; working draw d / beta^2
  std::uint64_t sync_width_bits = 64;

  void validate() const {
    detail::require(gamma > 0.0 && gamma <= 0.5, "boost gamma must lie in (0, 1/2]");
    detail::require(target_training_error >= 0.0 && target_training_error < 1.0, "target training error must lie in [0, 1)");
    detail::require(c_boost > 0 && c_round > 0 && c_ag > 0 && c_vc > 0, "boost constants must be positive");
    detail::require(c_cap >= 1.0, "weight cap constant must be at least 1");
    detail::require(beta > 0.0 && beta < 0.5, "beta must lie in (0, 1/2)");
  }
};

/// A player's fixed pool of examples and their current boosting weights.
struct Reservoir {
  std::size_t owner = 0;
  Sample points;
  std::vector<double> weights;

  double total_weight() const {
    double s = 0.0;
    for (double w : weights) s += w;
    return s;
  }
};

struct BoostRound {
  Hypothesis weak;
  double weighted_error;
  double alpha;
};

struct BoostOutcome {
  Hypothesis ensemble;
  std::vector<BoostRound> rounds{};
  std::vector<double> training_error_trace{};  // exact error of the partial ensemble after each round
  std::size_t rounds_used = 0;
  std::size_t round_budget = 0;
  std::uint64_t m_boost = 0;
  std::uint64_t working_sample_size = 0;
  std::vector<std::uint64_t> reservoir_sizes{};
  std::vector<Reservoir> reservoirs{};  // final state, distributed variants only
  double max_normalized_weight = 0.0;

  std::vector<Hypothesis> weak_sequence() const {
    std::vector<Hypothesis> out;
    for (const auto& r : rounds) out.push_back(r.weak);
    return out;
  }
};

/// Rounds after which exp(-2 gamma^2 T) < 1/m, i.e. AdaBoost with edge gamma
/// has zero training error on m points. At least 1.
inline std::size_t rounds_needed(double m, double gamma) {
  detail::require(m >= 1.0, "rounds_needed needs m >= 1");
  detail::require(gamma > 0.0 && gamma <= 0.5, "gamma must lie in (0, 1/2]");
  const double x = std::log(m) / (2.0 * gamma * gamma);
  return std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(x - 1e-9)));
}

/// VC dimension of T-round ensembles over a class of dimension d: c_vc * d * T * ceil(log2(T+1)).
inline std::uint64_t ensemble_vc_dimension(std::uint64_t d, std::uint64_t T, double c_vc = 1.0) {
  detail::require(d >= 1 && T >= 1, "ensemble_vc_dimension needs d >= 1 and T >= 1");
  return static_cast<std::uint64_t>(std::ceil(c_vc * static_cast<double>(d * T * ceil_log2(T + 1))));
}

struct BoostSchedule {
  std::size_t rounds;
  std::uint64_t m_boost;
};

/// Round budget T and reservoir budget m_boost = c_boost * d_boost / eps.
/// With max_rounds unset, T is the fixed point T = rounds_needed(m_boost(T)).
/// Depends on (d, eps, cfg) only: never on the number of players.
inline BoostSchedule boost_schedule(std::uint64_t d, double epsilon, const BoostConfig& cfg) {
  detail::require(epsilon > 0.0 && epsilon < 1.0, "boost accuracy must lie in (0, 1)");
  auto budget = [&](std::size_t T) {
    return static_cast<std::uint64_t>(
        std::ceil(cfg.c_boost * static_cast<double>(ensemble_vc_dimension(d, T, cfg.c_vc)) / epsilon));
  };
  if (cfg.max_rounds > 0) return {cfg.max_rounds, budget(cfg.max_rounds)};
  std::size_t T = rounds_needed(std::ceil(static_cast<double>(d) / epsilon), cfg.gamma);
  for (int iter = 0; iter < 64; ++iter) {
    const std::size_t next = rounds_needed(static_cast<double>(budget(T)), cfg.gamma);
    if (next <= T) break;
    T = next;
  }
  return {T, budget(T)};
}

/// Preprocessing: the center splits m_boost among the players multinomially
/// and announces each reservoir size.
inline std::vector<std::uint64_t> init_reservoirs(std::uint64_t m_boost, std::span<const double> weights, Rng& rng,
                                                  CommLedger& ledger, std::uint64_t round) {
  auto sizes = multinomial_allocation(m_boost, weights, rng);
  charge_allocation_message(ledger, weights.size(), m_boost, round);
  return sizes;
}

/// n i.i.d. draws with replacement, proportional to the reservoir weights.
inline Sample resample_from_reservoir(const Reservoir& r, std::size_t n, Rng& rng) {
  if (n == 0) return {};
  if (r.points.empty()) throw InvalidArgument("cannot resample from an empty reservoir");
  std::vector<double> cumulative(r.weights.size());
  double acc = 0.0;
  for (std::size_t i = 0; i < r.weights.size(); ++i) cumulative[i] = acc += r.weights[i];
  Sample out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) out.push_back(r.points[rng.pick_cumulative(cumulative)]);
  return out;
}

inline Hypothesis flipped(const Hypothesis& h) {
  switch (h.kind()) {
    case HypothesisKind::Threshold: {
      const auto& t = h.as<Threshold>();
      return Hypothesis::threshold(t.t, flip(t.polarity));
    }
    case HypothesisKind::Stump: {
      const auto& s = h.as<Stump>();
      return Hypothesis::stump(s.feature, s.t, flip(s.polarity));
    }
    default:
      throw InvalidArgument("only thresholds and stumps can be flipped");
  }
}

using WeakLearner = std::function<Hypothesis(std::span<const LabeledExample>, std::span<const double>)>;

/// Exact weighted ERM over thresholds / stumps.
inline WeakLearner exhaustive_weak_learner(std::optional<Box> domain = std::nullopt) {
  return [domain](std::span<const LabeledExample> s, std::span<const double> w) {
    return weak_learn(s, w, domain ? &*domain : nullptr).h;
  };
}

namespace detail {

inline double round_alpha(double err) { return 0.5 * std::log((1.0 - err) / err); }

// Multiplicative AdaBoost update in the form w/(2 err) on mistakes and
// w/(2 (1 - err)) on hits; equal to exp(-alpha y h) after normalization
// but free of overflow.
inline double update_factor(bool miss, double err) { return miss ? 0.5 / err : 0.5 / (1.0 - err); }

inline int ensemble_label(double score) { return score > 0.0 ? 1 : 0; }

/// Caps normalized weights at `cap` by water-filling: capped entries sit at
/// the cap, the rest share the remaining mass proportionally. Requires
/// cap * n >= 1.
inline void cap_weights(std::span<double> w, double cap) {
  std::vector<bool> capped(w.size(), false);
  std::size_t n_capped = 0;
  for (;;) {
    double free_total = 0.0;
    for (std::size_t i = 0; i < w.size(); ++i)
      if (!capped[i]) free_total += w[i];
    const double scale = (1.0 - static_cast<double>(n_capped) * cap) / free_total;
    bool changed = false;
    for (std::size_t i = 0; i < w.size(); ++i) {
      if (!capped[i] && w[i] * scale > cap) {
        capped[i] = true;
        ++n_capped;
        changed = true;
      }
    }
    if (!changed) {
      for (std::size_t i = 0; i < w.size(); ++i) w[i] = capped[i] ? cap : w[i] * scale;
      return;
    }
  }
}

}  // namespace detail

/// AdaBoost on a single sample. Labels are mapped to +-1 internally.
/// Stops at the target training error, at the round budget, or as soon as a
/// weak hypothesis is perfect (that hypothesis alone is returned).
inline BoostOutcome adaboost(std::span<const LabeledExample> sample, const WeakLearner& weak_learner,
                             const BoostConfig& cfg) {
  cfg.validate();
  detail::require(!sample.empty(), "adaboost needs a nonempty sample");
  const std::size_t m = sample.size();
  const std::size_t T = cfg.max_rounds > 0 ? cfg.max_rounds : rounds_needed(static_cast<double>(m), cfg.gamma);

  std::vector<double> w(m, 1.0 / static_cast<double>(m));
  std::vector<double> score(m, 0.0);
  std::vector<Hypothesis> members;
  std::vector<double> alphas;
  std::vector<BoostRound> rounds{};
  std::vector<double> trace;
  std::vector<char> miss(m);

  for (std::size_t t = 0; t < T; ++t) {
    Hypothesis h = weak_learner(sample, w);
    double wrong = 0.0, total = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
      miss[i] = predict(h, sample[i].x) != sample[i].y;
      wrong += miss[i] ? w[i] : 0.0;
      total += w[i];
    }
    const double err = wrong / total;
    if (!(err < 0.5)) throw WeakLearnerFailure("weak learner returned weighted error " + std::to_string(err));
    if (err == 0.0) {
      rounds.push_back({h, 0.0, std::numeric_limits<double>::infinity()});
      trace.push_back(0.0);
      BoostOutcome out{Hypothesis::majority({h}, {1.0}), std::move(rounds), std::move(trace)};
      out.rounds_used = out.rounds.size();
      out.round_budget = T;
      return out;
    }
    const double alpha = detail::round_alpha(err);
    std::size_t train_wrong = 0;
    for (std::size_t i = 0; i < m; ++i) {
      const int p = miss[i] ? 1 - sample[i].y : sample[i].y;
      score[i] += alpha * (2.0 * p - 1.0);
      train_wrong += detail::ensemble_label(score[i]) != sample[i].y ? 1 : 0;
    }
    members.push_back(h);
    alphas.push_back(alpha);
    rounds.push_back({std::move(h), err, alpha});
    const double train_err = static_cast<double>(train_wrong) / static_cast<double>(m);
    trace.push_back(train_err);

    double norm = 0.0;
    for (std::size_t i = 0; i < m; ++i) norm += w[i] *= detail::update_factor(miss[i], err);
    for (double& x : w) x /= norm;
    if (train_err <= cfg.target_training_error) break;
  }
  BoostOutcome out{Hypothesis::majority(std::move(members), std::move(alphas)), std::move(rounds), std::move(trace)};
  out.rounds_used = out.rounds.size();
  out.round_budget = T;
  return out;
}

namespace detail {

struct DistributedSetup {
  std::size_t rounds;
  std::uint64_t m_boost;
  std::uint64_t working_size;
  bool agnostic;
  double cap;  // normalized weight cap, agnostic only
};

// Shared round loop of the realizable and agnostic distributed boosters.
// Reservoirs never grow; only their weights change.
inline BoostOutcome run_distributed(std::vector<Reservoir> reservoirs, const DistributedSetup& setup,
                                    const HypothesisClassSpec& cls, const BoostConfig& cfg, const Streams& streams,
                                    CommLedger& ledger, std::uint64_t ledger_round, Rng& center_rng) {
  const std::size_t k = reservoirs.size();
  std::size_t m = 0;
  for (const auto& r : reservoirs) m += r.points.size();
  require(m > 0, "distributed boosting needs a nonempty union of reservoirs");

  for (auto& r : reservoirs) r.weights.assign(r.points.size(), 1.0 / static_cast<double>(m));
  std::vector<std::vector<double>> score(k);
  std::vector<std::vector<char>> miss(k);
  for (std::size_t i = 0; i < k; ++i) {
    score[i].assign(reservoirs[i].points.size(), 0.0);
    miss[i].assign(reservoirs[i].points.size(), 0);
  }
  std::vector<Rng> resample_rng;
  for (const auto& r : reservoirs) resample_rng.push_back(streams.player(r.owner, 0, Purpose::Resample));

  std::vector<Hypothesis> members;
  std::vector<double> alphas;
  std::vector<BoostRound> rounds{};
  std::vector<double> trace;
  double max_weight = 1.0 / static_cast<double>(m);
  const std::vector<double> uniform_w = uniform_weights(setup.working_size);

  auto finish = [&](Hypothesis ensemble) {
    BoostOutcome out{std::move(ensemble), std::move(rounds), std::move(trace)};
    out.rounds_used = out.rounds.size();
    out.round_budget = setup.rounds;
    out.m_boost = setup.m_boost;
    out.working_sample_size = setup.working_size;
    for (const auto& r : reservoirs) out.reservoir_sizes.push_back(r.points.size());
    out.reservoirs = std::move(reservoirs);
    out.max_normalized_weight = max_weight;
    return out;
  };

  for (std::size_t t = 0; t < setup.rounds; ++t) {
    // Center requests a working sample proportional to each player's weight mass.
    std::vector<double> mass(k);
    double total = 0.0;
    for (std::size_t i = 0; i < k; ++i) total += mass[i] = reservoirs[i].total_weight();
    for (double& x : mass) x /= total;
    const auto quota = multinomial_allocation(setup.working_size, mass, center_rng);
    charge_allocation_message(ledger, k, setup.working_size, ledger_round);
    Sample working;
    working.reserve(setup.working_size);
    for (std::size_t i = 0; i < k; ++i) {
      if (quota[i] == 0) continue;
      for (auto& e : resample_from_reservoir(reservoirs[i], quota[i], resample_rng[i])) working.push_back(std::move(e));
    }
    charge_samples(ledger, setup.working_size, ledger_round, "boost-working-sample");

    // Every player sees the broadcast sample and trains the same weak hypothesis.
    Hypothesis h = weak_learn(working, uniform_w, &cls.domain).h;
    auto local_errors = [&](const Hypothesis& g) {
      double wrong = 0.0, sum = 0.0;
      for (std::size_t i = 0; i < k; ++i) {
        const auto& r = reservoirs[i];
        for (std::size_t j = 0; j < r.points.size(); ++j) {
          miss[i][j] = predict(g, r.points[j].x) != r.points[j].y;
          wrong += miss[i][j] ? r.weights[j] : 0.0;
          sum += r.weights[j];
        }
      }
      return wrong / sum;
    };
    double err = local_errors(h);
    if (err > 0.5) {
      h = flipped(h);
      err = local_errors(h);
    }
    charge_boost_sync(ledger, k, cfg.sync_width_bits, ledger_round);
    if (!(err < 0.5)) {
      if (setup.agnostic && !members.empty()) break;
      throw WeakLearnerFailure("no weak hypothesis with an edge on the weighted reservoirs");
    }
    if (err == 0.0) {
      rounds.push_back({h, 0.0, std::numeric_limits<double>::infinity()});
      trace.push_back(0.0);
      return finish(Hypothesis::majority({h}, {1.0}));
    }

    const double alpha = round_alpha(err);
    std::size_t train_wrong = 0;
    for (std::size_t i = 0; i < k; ++i) {
      const auto& r = reservoirs[i];
      for (std::size_t j = 0; j < r.points.size(); ++j) {
        const int p = miss[i][j] ? 1 - r.points[j].y : r.points[j].y;
        score[i][j] += alpha * (2.0 * p - 1.0);
        train_wrong += ensemble_label(score[i][j]) != r.points[j].y ? 1 : 0;
      }
    }
    members.push_back(h);
    alphas.push_back(alpha);
    rounds.push_back({std::move(h), err, alpha});
    const double train_err = static_cast<double>(train_wrong) / static_cast<double>(m);
    trace.push_back(train_err);

    // Local multiplicative updates, then normalization by the synced total.
    double norm = 0.0;
    for (std::size_t i = 0; i < k; ++i) {
      auto& r = reservoirs[i];
      for (std::size_t j = 0; j < r.weights.size(); ++j) norm += r.weights[j] *= update_factor(miss[i][j], err);
    }
    for (auto& r : reservoirs)
      for (double& x : r.weights) x /= norm;
    if (setup.agnostic) {
      std::vector<double> flat;
      flat.reserve(m);
      for (const auto& r : reservoirs) flat.insert(flat.end(), r.weights.begin(), r.weights.end());
      cap_weights(flat, setup.cap);
      std::size_t pos = 0;
      for (auto& r : reservoirs)
        for (double& x : r.weights) x = flat[pos++];
    }
    for (const auto& r : reservoirs)
      for (double x : r.weights) max_weight = std::max(max_weight, x);

    if (train_err <= cfg.target_training_error) break;
  }
  if (members.empty()) throw WeakLearnerFailure("boosting produced no weak hypothesis");
  return finish(Hypothesis::majority(std::move(members), std::move(alphas)));
}

inline std::vector<Reservoir> fill_reservoirs(std::span<const Player> players, std::span<const std::size_t> ids,
                                              std::span<const std::uint64_t> sizes, const TargetConcept& target,
                                              const Streams& streams) {
  std::vector<Reservoir> out;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    const Player& p = players[ids[i]];
    Rng rng = streams.player(p.id, 0, Purpose::Reservoir);
    out.push_back({p.id, sample_noisy(p, target, sizes[i], rng), {}});
  }
  return out;
}

}  // namespace detail

/// A boosting run spread over players. `ids` selects the participating
/// players and `mixture` (aligned with ids, summing to 1) the distribution
/// the reservoirs are drawn from; uniform in the personalized protocols.
struct BoostParticipants {
  std::span<const Player> players;
  std::vector<std::size_t> ids;
  std::vector<double> mixture;

  static BoostParticipants uniform(std::span<const Player> players, std::vector<std::size_t> ids) {
    auto w = uniform_weights(ids.size());
    return {players, std::move(ids), std::move(w)};
  }
};

/// Distributed boosting with multinomial reservoir preprocessing. Reservoir
/// sizes sum to m_boost; each round moves c_round * d examples to the
/// blackboard and k weight summaries. All streams come from `streams`.
inline BoostOutcome distributed_boost(const BoostParticipants& parts, const TargetConcept& target,
                                      const HypothesisClassSpec& cls, double epsilon, const BoostConfig& cfg,
                                      const Streams& streams, CommLedger& ledger, std::uint64_t ledger_round) {
  cfg.validate();
  detail::require(!parts.ids.empty(), "distributed boosting needs at least one player");
  detail::require(parts.mixture.size() == parts.ids.size(), "mixture weights must align with players");
  const auto schedule = boost_schedule(cls.vc_dimension, epsilon, cfg);
  Rng center = streams.center(0, Purpose::Allocation);
  const auto sizes = init_reservoirs(schedule.m_boost, parts.mixture, center, ledger, ledger_round);
  auto reservoirs = detail::fill_reservoirs(parts.players, parts.ids, sizes, target, streams);
  const auto working = static_cast<std::uint64_t>(std::ceil(cfg.c_round * static_cast<double>(cls.vc_dimension)));
  return detail::run_distributed(std::move(reservoirs), {schedule.rounds, schedule.m_boost, working, false, 0.0}, cls,
                                 cfg, streams, ledger, ledger_round, center);
}

struct AgnosticSchedule {
  std::size_t rounds;
  std::uint64_t m_boost;
  std::uint64_t working_size;
};

/// Budgets of the agnostic booster under classification noise:
/// ceil(c_ag ln(1/(eps (1 - 2 eta_max)))) rounds, reservoirs of
/// c_boost d_boost / (eps (1 - 2 eta_max)^2) and working draws of d / beta^2.
inline AgnosticSchedule agnostic_schedule(std::uint64_t d, double epsilon, double eta_max, const BoostConfig& cfg) {
  const double margin = 1.0 - 2.0 * eta_max;
  std::size_t T = cfg.max_rounds;
  if (T == 0) T = std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(cfg.c_ag * std::log(1.0 / (epsilon * margin)))));
  const auto m = static_cast<std::uint64_t>(std::ceil(
      cfg.c_boost * static_cast<double>(ensemble_vc_dimension(d, T, cfg.c_vc)) / (epsilon * margin * margin)));
  const auto working = static_cast<std::uint64_t>(std::ceil(static_cast<double>(d) / (cfg.beta * cfg.beta)));
  return {T, m, working};
}

/// Smooth distributed booster for classification noise with eta_max <= regime_epsilon.
/// AdaBoost updates, but after every round the normalized weights are capped
/// at c_cap / m so that no mislabeled point can absorb the distribution.
/// The weak learner is ERM on a fresh d / beta^2 working draw.
inline BoostOutcome agnostic_distributed_boost(const BoostParticipants& parts, const TargetConcept& target,
                                               const HypothesisClassSpec& cls, double epsilon, double regime_epsilon,
                                               const BoostConfig& cfg, const Streams& streams, CommLedger& ledger,
                                               std::uint64_t ledger_round) {
  cfg.validate();
  detail::require(!parts.ids.empty(), "agnostic boosting needs at least one player");
  detail::require(parts.mixture.size() == parts.ids.size(), "mixture weights must align with players");
  double eta_max = 0.0;
  for (std::size_t id : parts.ids) eta_max = std::max(eta_max, parts.players[id].noise_rate);
  if (eta_max > regime_epsilon)
    throw PreconditionViolation("agnostic boosting is limited to eta_max <= epsilon (eta_max = " +
                                std::to_string(eta_max) + ", epsilon = " + std::to_string(regime_epsilon) + ")");
  const auto schedule = agnostic_schedule(cls.vc_dimension, epsilon, eta_max, cfg);
  Rng center = streams.center(0, Purpose::Allocation);
  const auto sizes = init_reservoirs(schedule.m_boost, parts.mixture, center, ledger, ledger_round);
  auto reservoirs = detail::fill_reservoirs(parts.players, parts.ids, sizes, target, streams);
  const double cap = cfg.c_cap / static_cast<double>(schedule.m_boost);
  return detail::run_distributed(std::move(reservoirs), {schedule.rounds, schedule.m_boost, schedule.working_size, true, cap},
                                 cls, cfg, streams, ledger, ledger_round, center);
}

}  // namespace cpl

#endif
