#ifndef CPL_CENTRALIZED_HPP
#define CPL_CENTRALIZED_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "cpl/boosting.hpp"
#include "cpl/distribution.hpp"
#include "cpl/error.hpp"
#include "cpl/hypothesis.hpp"
#include "cpl/network.hpp"
#include "cpl/personalized.hpp"
#include "cpl/rng.hpp"

namespace cpl {

struct CentralizedConfig {
  double epsilon = 0.1;
  double delta = 0.1;
  double t_multiplier = 150.0;
  double c_fasttest = 56.0;
  double c_pac = 4.0;
  double c_cn = 4.0;
  Algorithm variant = Algorithm::Central;
  BoostConfig boost;

  void validate() const {
    detail::require(epsilon > 0.0 && epsilon < 1.0, "epsilon must lie in (0, 1)");
    detail::require(delta > 0.0 && delta < 1.0, "delta must lie in (0, 1)");
    detail::require(t_multiplier > 0.0, "t multiplier must be positive");
    detail::require(c_fasttest > 0 && c_pac > 0 && c_cn > 0, "sample-size constants must be positive");
    detail::require(is_centralized(variant), "centralized config needs a centralized variant");
    boost.validate();
  }

  /// t = ceil(multiplier * ceil(log2(k / delta))).
  std::size_t rounds(std::size_t k) const {
    const double lg = std::ceil(std::log2(static_cast<double>(k) / delta));
    return std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(t_multiplier * lg)));
  }
  double epsilon_prime() const { return epsilon / 6.0; }
  double delta_prime(std::size_t k) const { return delta / (4.0 * static_cast<double>(rounds(k))); }
};

/// Multiplicative weights stored as exponents: w_i = 2^{exponent_i}.
struct WeightState {
  std::vector<std::uint32_t> exponents;

  explicit WeightState(std::size_t k) : exponents(k, 0) {}

  double weight(std::size_t i) const { return std::ldexp(1.0, static_cast<int>(exponents[i])); }

  /// Normalized weights, computed relative to the largest exponent so that
  /// long runs never overflow.
  std::vector<double> normalized() const {
    const std::uint32_t top = *std::max_element(exponents.begin(), exponents.end());
    std::vector<double> w;
    double total = 0.0;
    for (std::uint32_t e : exponents) {
      w.push_back(std::ldexp(1.0, static_cast<int>(e) - static_cast<int>(top)));
      total += w.back();
    }
    for (double& x : w) x /= total;
    return w;
  }

  /// Doubles the weight of every player not in `passed` (sorted).
  void double_failures(std::span<const std::size_t> passed) {
    for (std::size_t i = 0; i < exponents.size(); ++i)
      if (!std::binary_search(passed.begin(), passed.end(), i)) ++exponents[i];
  }
};

/// The weight-averaged noise rate of the current mixture.
inline double weighted_noise_rate(std::span<const double> weights, std::span<const double> rates) {
  detail::require(weights.size() == rates.size() && !weights.empty(), "weights and rates must align");
  double total = 0.0, acc = 0.0;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    detail::require(weights[i] > 0.0, "weights must be positive");
    detail::require(rates[i] >= 0.0 && rates[i] < 0.5, "noise rates must lie in [0, 1/2)");
    total += weights[i];
    acc += weights[i] * rates[i];
  }
  return acc / total;
}

inline std::uint64_t fast_test_sample_size(double epsilon, double c = 56.0) {
  return static_cast<std::uint64_t>(std::ceil(c / epsilon));
}
inline std::uint64_t cn_fast_test_sample_size(double epsilon, double eta, double c = 56.0) {
  return static_cast<std::uint64_t>(std::ceil(c / (epsilon * (1.0 - 2.0 * eta))));
}

/// Every player checks h on ceil(c / eps) fresh clean draws and passes when
/// the empirical error is at most 3 eps / 4. The caller passes eps'.
inline TestResult fast_test(const Hypothesis& h, std::span<const Player> players, double epsilon,
                            const TargetConcept& target, const Streams& streams, std::uint64_t round,
                            CommLedger& ledger, double c_fasttest = 56.0) {
  detail::require(epsilon > 0.0 && epsilon < 1.0, "fast_test accuracy must lie in (0, 1)");
  const std::uint64_t T = fast_test_sample_size(epsilon, c_fasttest);
  TestResult out;
  for (const auto& p : players) {
    Rng rng = streams.player(p.id, round, Purpose::Test);
    const Sample s = sample_clean(p, target, T, rng);
    out.samples_drawn += T;
    if (static_cast<double>(detail::count_mistakes(h, s)) / static_cast<double>(T) <= 0.75 * epsilon)
      out.passed.push_back(p.id);
  }
  charge_test_votes(ledger, players.size(), round);
  return out;
}

inline double cn_fast_test_threshold(double epsilon, double eta) { return noisy_error_formula(0.75 * epsilon, eta); }

/// Noisy analogue of fast_test with ceil(c / (eps (1 - 2 eta_i))) draws.
inline TestResult cn_fast_test(const Hypothesis& h, std::span<const Player> players, double epsilon,
                               const TargetConcept& target, const Streams& streams, std::uint64_t round,
                               CommLedger& ledger, double c_fasttest = 56.0) {
  detail::require(epsilon > 0.0 && epsilon < 1.0, "cn_fast_test accuracy must lie in (0, 1)");
  TestResult out;
  for (const auto& p : players) {
    const std::uint64_t T = cn_fast_test_sample_size(epsilon, p.noise_rate, c_fasttest);
    Rng rng = streams.player(p.id, round, Purpose::Test);
    const Sample s = sample_noisy(p, target, T, rng);
    out.samples_drawn += T;
    if (static_cast<double>(detail::count_mistakes(h, s)) / static_cast<double>(T) <=
        cn_fast_test_threshold(epsilon, p.noise_rate))
      out.passed.push_back(p.id);
  }
  charge_test_votes(ledger, players.size(), round);
  return out;
}

struct CentralRound {
  std::uint64_t round = 0;
  std::vector<std::uint32_t> exponents;  // weights before the round's update
  std::vector<std::size_t> passed;
  std::uint64_t draw_size = 0;
  double eta_bar = 0.0;
};

struct CentralOutcome {
  Hypothesis hypothesis;
  std::vector<Hypothesis> round_hypotheses;
  std::size_t rounds = 0;
  LedgerSnapshot ledger{};
  std::vector<BroadcastEvent> events{};
  std::vector<double> clean_errors{};
  std::uint64_t samples_consumed = 0;
  std::vector<std::uint32_t> final_exponents{};
  std::vector<CentralRound> trace{};

  double max_clean_error() const { return *std::max_element(clean_errors.begin(), clean_errors.end()); }
};

namespace detail {

inline std::vector<double> noise_rates(const Problem& problem) {
  std::vector<double> r;
  for (const auto& p : problem.players) r.push_back(p.noise_rate);
  return r;
}

inline std::vector<std::size_t> all_ids(std::size_t k) {
  std::vector<std::size_t> ids(k);
  for (std::size_t i = 0; i < k; ++i) ids[i] = i;
  return ids;
}

// t rounds of: learn on the weighted mixture, test everyone, double the
// weights of the players that failed. Output is the plain vote of the t rounds.
template <typename Learn, typename Tester>
CentralOutcome central_loop(const Problem& problem, const CentralizedConfig& cfg, std::uint64_t seed, Learn&& learn,
                            Tester&& tester) {
  const std::size_t k = problem.k();
  const std::size_t t = cfg.rounds(k);
  const Streams streams(seed);
  const auto rates = noise_rates(problem);
  CommLedger ledger;
  WeightState weights(k);
  std::vector<Hypothesis> hs;
  std::vector<CentralRound> trace{};
  std::uint64_t consumed = 0;

  for (std::size_t j = 0; j < t; ++j) {
    const std::uint64_t round = ledger.begin_round();
    CentralRound rec;
    rec.round = round;
    rec.exponents = weights.exponents;
    const auto mix = weights.normalized();
    rec.eta_bar = weighted_noise_rate(mix, rates);
    std::uint64_t drawn = 0;
    Hypothesis h = learn(mix, rec.eta_bar, streams, round, ledger, drawn);
    rec.draw_size = drawn;
    const TestResult tr = tester(h, streams, round, ledger);
    consumed += drawn + tr.samples_drawn;
    weights.double_failures(tr.passed);
    rec.passed = tr.passed;
    hs.push_back(std::move(h));
    trace.push_back(std::move(rec));
  }

  CentralOutcome out{Hypothesis::vote(hs), std::move(hs)};
  out.rounds = t;
  out.ledger = ledger.snapshot();
  out.events = ledger.events();
  out.samples_consumed = consumed;
  out.final_exponents = weights.exponents;
  out.trace = std::move(trace);
  for (const auto& p : problem.players) out.clean_errors.push_back(true_error(out.hypothesis, p.clean, problem.target));
  return out;
}

}  // namespace detail

/// Centralized learning on noiseless players: per round draw
/// m(eps'/16, delta') from the weighted mixture and learn a consistent hypothesis.
inline CentralOutcome centralized_learning(const Problem& problem, const CentralizedConfig& cfg, std::uint64_t seed) {
  problem.validate();
  cfg.validate();
  detail::require_noiseless(problem, "centralized_learning");
  const double ep = cfg.epsilon_prime();
  const double dp = cfg.delta_prime(problem.k());
  const auto ids = detail::all_ids(problem.k());
  return detail::central_loop(
      problem, cfg, seed,
      [&](const std::vector<double>& mix, double, const Streams& st, std::uint64_t round, CommLedger& ledger,
          std::uint64_t& drawn) {
        drawn = m_realizable(ep / 16.0, dp, problem.d(), cfg.c_pac);
        const Sample s = sample_mixture(MixtureSpec::make(ids, mix), problem.players, problem.target, drawn, st, round, ledger);
        return learn_consistent(problem.cls, s);
      },
      [&](const Hypothesis& h, const Streams& st, std::uint64_t round, CommLedger& ledger) {
        return fast_test(h, problem.players, ep, problem.target, st, round, ledger, cfg.c_fasttest);
      });
}

/// Centralized learning under classification noise: the draw is sized for
/// the weighted noise rate of the current mixture and the learner is ERM.
inline CentralOutcome centralized_learning_cn(const Problem& problem, const CentralizedConfig& cfg, std::uint64_t seed) {
  problem.validate();
  cfg.validate();
  const double ep = cfg.epsilon_prime();
  const double dp = cfg.delta_prime(problem.k());
  const auto ids = detail::all_ids(problem.k());
  return detail::central_loop(
      problem, cfg, seed,
      [&](const std::vector<double>& mix, double eta_bar, const Streams& st, std::uint64_t round, CommLedger& ledger,
          std::uint64_t& drawn) {
        drawn = m_cn(ep / 16.0, dp, problem.d(), eta_bar, cfg.c_cn);
        const Sample s = sample_mixture(MixtureSpec::make(ids, mix), problem.players, problem.target, drawn, st, round, ledger);
        return learn_erm(problem.cls, s);
      },
      [&](const Hypothesis& h, const Streams& st, std::uint64_t round, CommLedger& ledger) {
        return cn_fast_test(h, problem.players, ep, problem.target, st, round, ledger, cfg.c_fasttest);
      });
}

/// Centralized learning with each round's hypothesis boosted over the
/// weighted mixture at accuracy eps'/16.
inline CentralOutcome centralized_learning_boost(const Problem& problem, const CentralizedConfig& cfg,
                                                 std::uint64_t seed) {
  problem.validate();
  cfg.validate();
  detail::require_noiseless(problem, "centralized_learning_boost");
  const double ep = cfg.epsilon_prime();
  const auto ids = detail::all_ids(problem.k());
  return detail::central_loop(
      problem, cfg, seed,
      [&](const std::vector<double>& mix, double, const Streams& st, std::uint64_t round, CommLedger& ledger,
          std::uint64_t& drawn) {
        BoostParticipants parts{problem.players, ids, mix};
        BoostOutcome b = distributed_boost(parts, problem.target, problem.cls, ep / 16.0, cfg.boost, st.child(round),
                                           ledger, round);
        drawn = b.m_boost;
        return std::move(b.ensemble);
      },
      [&](const Hypothesis& h, const Streams& st, std::uint64_t round, CommLedger& ledger) {
        return fast_test(h, problem.players, ep, problem.target, st, round, ledger, cfg.c_fasttest);
      });
}

/// Noise-tolerant centralized learning with the agnostic booster. Requires eta_max <= epsilon.
inline CentralOutcome centralized_learning_cn_boost(const Problem& problem, const CentralizedConfig& cfg,
                                                    std::uint64_t seed) {
  problem.validate();
  cfg.validate();
  if (problem.eta_max() > cfg.epsilon)
    throw PreconditionViolation("Central-CN-Boost boosts only up to the noise rate: requires eta_max <= epsilon (eta_max = " +
                                std::to_string(problem.eta_max()) + ", epsilon = " + std::to_string(cfg.epsilon) + ")");
  const double ep = cfg.epsilon_prime();
  const auto ids = detail::all_ids(problem.k());
  return detail::central_loop(
      problem, cfg, seed,
      [&](const std::vector<double>& mix, double, const Streams& st, std::uint64_t round, CommLedger& ledger,
          std::uint64_t& drawn) {
        BoostParticipants parts{problem.players, ids, mix};
        BoostOutcome b = agnostic_distributed_boost(parts, problem.target, problem.cls, ep / 16.0, cfg.epsilon,
                                                    cfg.boost, st.child(round), ledger, round);
        drawn = b.m_boost;
        return std::move(b.ensemble);
      },
      [&](const Hypothesis& h, const Streams& st, std::uint64_t round, CommLedger& ledger) {
        return cn_fast_test(h, problem.players, ep, problem.target, st, round, ledger, cfg.c_fasttest);
      });
}

inline CentralOutcome run_centralized(const Problem& problem, const CentralizedConfig& cfg, std::uint64_t seed) {
  switch (cfg.variant) {
    case Algorithm::Central: return centralized_learning(problem, cfg, seed);
    case Algorithm::CentralBoost: return centralized_learning_boost(problem, cfg, seed);
    case Algorithm::CentralCN: return centralized_learning_cn(problem, cfg, seed);
    case Algorithm::CentralCNBoost: return centralized_learning_cn_boost(problem, cfg, seed);
    default: throw InvalidArgument("not a centralized variant: " + to_string(cfg.variant));
  }
}

}  // namespace cpl

#endif
