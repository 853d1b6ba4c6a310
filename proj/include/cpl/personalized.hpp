#ifndef CPL_PERSONALIZED_HPP
#define CPL_PERSONALIZED_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "cpl/boosting.hpp"
#include "cpl/distribution.hpp"
#include "cpl/error.hpp"
#include "cpl/hypothesis.hpp"
#include "cpl/network.hpp"
#include "cpl/rng.hpp"

namespace cpl {

enum class Algorithm : std::uint8_t {
  Baseline,
  PL,
  PLBoost,
  PLCN,
  PLCNBoost,
  Central,
  CentralBoost,
  CentralCN,
  CentralCNBoost,
};

inline std::string to_string(Algorithm a) {
  switch (a) {
    case Algorithm::Baseline: return "Baseline";
    case Algorithm::PL: return "PL";
    case Algorithm::PLBoost: return "PL-Boost";
    case Algorithm::PLCN: return "PL-CN";
    case Algorithm::PLCNBoost: return "PL-CN-Boost";
    case Algorithm::Central: return "Central";
    case Algorithm::CentralBoost: return "Central-Boost";
    case Algorithm::CentralCN: return "Central-CN";
    case Algorithm::CentralCNBoost: return "Central-CN-Boost";
  }
  return "?";
}

inline std::optional<Algorithm> parse_algorithm(std::string_view s) {
  for (int i = 0; i <= static_cast<int>(Algorithm::CentralCNBoost); ++i)
    if (to_string(static_cast<Algorithm>(i)) == s) return static_cast<Algorithm>(i);
  return std::nullopt;
}

inline bool is_centralized(Algorithm a) { return a >= Algorithm::Central; }
inline bool is_noise_tolerant(Algorithm a) {
  return a == Algorithm::Baseline || a == Algorithm::PLCN || a == Algorithm::PLCNBoost || a == Algorithm::CentralCN ||
         a == Algorithm::CentralCNBoost;
}

/// Everything a protocol run needs besides its configuration.
struct Problem {
  HypothesisClassSpec cls;
  std::vector<Player> players;
  TargetConcept target;

  std::size_t k() const { return players.size(); }
  std::uint64_t d() const { return cls.vc_dimension; }

  double eta_max() const {
    double e = 0.0;
    for (const auto& p : players) e = std::max(e, p.noise_rate);
    return e;
  }

  void validate() const {
    cls.validate();
    detail::require(!players.empty(), "a problem needs at least one player");
    check_player_ids(players);
    for (const auto& p : players)
      detail::require(p.clean.dimension() == cls.dimension, "player distribution dimension must match the class");
  }
};

/// The realizable PAC sample size (C/eps)(d ln(12/eps) + ln(2/delta)) before rounding.
inline double m_realizable_raw(double epsilon, double delta, std::uint64_t d, double c = 4.0) {
  detail::require(epsilon > 0.0 && epsilon < 1.0, "epsilon must lie in (0, 1)");
  detail::require(delta > 0.0 && delta < 1.0, "delta must lie in (0, 1)");
  detail::require(d >= 1 && c > 0.0, "d and the constant must be positive");
  return c / epsilon * (static_cast<double>(d) * std::log(12.0 / epsilon) + std::log(2.0 / delta));
}

inline std::uint64_t m_realizable(double epsilon, double delta, std::uint64_t d, double c = 4.0) {
  return static_cast<std::uint64_t>(std::ceil(m_realizable_raw(epsilon, delta, d, c)));
}

/// Sample size for ERM under classification noise: the realizable size
/// inflated by 1/(1 - 2 eta)^2.
inline double m_cn_raw(double epsilon, double delta, std::uint64_t d, double eta, double c = 4.0) {
  detail::require(eta >= 0.0 && eta < 0.5, "noise rate must lie in [0, 1/2)");
  const double margin = 1.0 - 2.0 * eta;
  return m_realizable_raw(epsilon, delta, d, c) / (margin * margin);
}

inline std::uint64_t m_cn(double epsilon, double delta, std::uint64_t d, double eta, double c = 4.0) {
  return static_cast<std::uint64_t>(std::ceil(m_cn_raw(epsilon, delta, d, eta, c)));
}

/// ceil(log2 k), at least 1 so that a single player still gets one round.
inline std::uint64_t log2_rounds(std::size_t k) { return std::max<std::uint64_t>(1, ceil_log2(k)); }

/// delta' = delta / (2 ceil(log2 k)).
inline double personalized_delta_prime(double delta, std::size_t k) {
  return delta / (2.0 * static_cast<double>(log2_rounds(k)));
}

struct PersonalizedConfig {
  double epsilon = 0.1;
  double delta = 0.1;
  double round_cap_multiplier = 4.0;
  double c_pac = 4.0;
  double c_cn = 4.0;
  double c_test = 32.0;
  double c_cntest = 32.0;
  Algorithm variant = Algorithm::PL;
  BoostConfig boost;

  void validate() const {
    detail::require(epsilon > 0.0 && epsilon < 1.0, "epsilon must lie in (0, 1)");
    detail::require(delta > 0.0 && delta < 1.0, "delta must lie in (0, 1)");
    detail::require(round_cap_multiplier > 0.0, "round cap multiplier must be positive");
    detail::require(c_pac > 0 && c_cn > 0 && c_test > 0 && c_cntest > 0, "sample-size constants must be positive");
    detail::require(!is_centralized(variant), "personalized config needs a personalized variant");
    boost.validate();
  }

  std::size_t round_cap(std::size_t k) const {
    return static_cast<std::size_t>(std::ceil(round_cap_multiplier * static_cast<double>(log2_rounds(k))));
  }
};

struct TestResult {
  std::vector<std::size_t> passed;
  std::uint64_t samples_drawn = 0;
};

/// Per-round record of a personalized run.
struct RoundRecord {
  std::uint64_t round = 0;
  std::vector<std::size_t> live;
  std::vector<std::size_t> passed;
  std::uint64_t draw_size = 0;
  double eta_bar = 0.0;
  bool stalled = false;
};

struct ProtocolOutcome {
  std::vector<std::optional<Hypothesis>> hypotheses;
  std::size_t rounds = 0;
  bool success = false;
  LedgerSnapshot ledger;
  std::vector<BroadcastEvent> events;
  std::vector<double> clean_errors;  // 1.0 for a player left without a hypothesis
  std::uint64_t samples_consumed = 0;
  std::vector<RoundRecord> trace;

  double max_clean_error() const { return *std::max_element(clean_errors.begin(), clean_errors.end()); }
};

inline std::uint64_t test_sample_size(std::size_t live, double epsilon, double delta_prime, double c) {
  return static_cast<std::uint64_t>(
      std::ceil(c * std::log(static_cast<double>(live) / (epsilon * delta_prime)) / epsilon));
}

inline std::uint64_t cn_test_sample_size(std::size_t live, double epsilon, double delta_prime, double eta, double c) {
  return static_cast<std::uint64_t>(
      std::ceil(c * std::log(static_cast<double>(live) / delta_prime) / (epsilon * (1.0 - 2.0 * eta))));
}

/// Pass threshold of CN-TEST: the noisy error of a hypothesis with clean error 3 eps / 4.
inline double cn_test_threshold(double epsilon, double eta) { return noisy_error_formula(0.75 * epsilon, eta); }

namespace detail {

inline std::size_t count_mistakes(const Hypothesis& h, std::span<const LabeledExample> s) {
  std::size_t wrong = 0;
  for (const auto& e : s) wrong += predict(h, e.x) != e.y ? 1 : 0;
  return wrong;
}

}  // namespace detail

/// Each live player checks h on fresh local clean draws and passes when the
/// empirical error is at most 3 eps / 4. Draws stay local; only the vote is sent.
inline TestResult test(const Hypothesis& h, std::span<const std::size_t> live, double epsilon, double delta_prime,
                       std::span<const Player> players, const TargetConcept& target, const Streams& streams,
                       std::uint64_t round, CommLedger& ledger, double c_test = 32.0) {
  detail::require(!live.empty(), "test needs a nonempty player set");
  const std::uint64_t T = test_sample_size(live.size(), epsilon, delta_prime, c_test);
  TestResult out;
  for (std::size_t id : live) {
    Rng rng = streams.player(id, round, Purpose::Test);
    const Sample s = sample_clean(players[id], target, T, rng);
    out.samples_drawn += T;
    if (static_cast<double>(detail::count_mistakes(h, s)) / static_cast<double>(T) <= 0.75 * epsilon)
      out.passed.push_back(id);
  }
  charge_test_votes(ledger, live.size(), round);
  return out;
}

/// Noise-aware test: player i draws ceil(c ln(|N|/delta') / (eps (1 - 2 eta_i)))
/// noisy examples and passes when the noisy error is within the image of 3 eps / 4.
inline TestResult cn_test(const Hypothesis& h, std::span<const std::size_t> live, double epsilon, double delta_prime,
                          std::span<const Player> players, const TargetConcept& target, const Streams& streams,
                          std::uint64_t round, CommLedger& ledger, double c_cntest = 32.0) {
  detail::require(!live.empty(), "cn_test needs a nonempty player set");
  TestResult out;
  for (std::size_t id : live) {
    const Player& p = players[id];
    const std::uint64_t T = cn_test_sample_size(live.size(), epsilon, delta_prime, p.noise_rate, c_cntest);
    Rng rng = streams.player(id, round, Purpose::Test);
    const Sample s = sample_noisy(p, target, T, rng);
    out.samples_drawn += T;
    if (static_cast<double>(detail::count_mistakes(h, s)) / static_cast<double>(T) <=
        cn_test_threshold(epsilon, p.noise_rate))
      out.passed.push_back(id);
  }
  charge_test_votes(ledger, live.size(), round);
  return out;
}

namespace detail {

inline void finalize(ProtocolOutcome& out, const Problem& problem, const CommLedger& ledger) {
  out.ledger = ledger.snapshot();
  out.events = ledger.events();
  out.success = std::all_of(out.hypotheses.begin(), out.hypotheses.end(), [](const auto& h) { return h.has_value(); });
  out.clean_errors.clear();
  for (std::size_t i = 0; i < problem.k(); ++i) {
    const auto& h = out.hypotheses[i];
    out.clean_errors.push_back(h ? true_error(*h, problem.players[i].clean, problem.target) : 1.0);
  }
}

inline void require_noiseless(const Problem& problem, const char* who) {
  for (const auto& p : problem.players)
    if (p.noise_rate != 0.0) throw PreconditionViolation(std::string(who) + " requires noiseless players");
}

// Round structure shared by the four personalized protocols: learn a
// hypothesis on the live set, test it, retire the players that pass.
template <typename Learn, typename Tester>
ProtocolOutcome personalized_loop(const Problem& problem, const PersonalizedConfig& cfg, std::uint64_t seed,
                                  Learn&& learn, Tester&& tester) {
  const std::size_t k = problem.k();
  const double delta_prime = personalized_delta_prime(cfg.delta, k);
  const std::size_t cap = cfg.round_cap(k);
  const Streams streams(seed);
  CommLedger ledger;
  ProtocolOutcome out;
  out.hypotheses.assign(k, std::nullopt);

  std::vector<std::size_t> live(k);
  for (std::size_t i = 0; i < k; ++i) live[i] = i;

  while (!live.empty() && out.rounds < cap) {
    const std::uint64_t round = ledger.begin_round();
    ++out.rounds;
    RoundRecord rec;
    rec.round = round;
    rec.live = live;
    std::uint64_t drawn = 0;
    Hypothesis h = learn(live, delta_prime, streams, round, ledger, drawn, rec);
    const TestResult tr = tester(h, live, delta_prime, streams, round, ledger);
    out.samples_consumed += drawn + tr.samples_drawn;
    rec.passed = tr.passed;
    rec.stalled = tr.passed.empty();
    for (std::size_t id : tr.passed) out.hypotheses[id] = h;
    std::vector<std::size_t> next;
    std::set_difference(live.begin(), live.end(), tr.passed.begin(), tr.passed.end(), std::back_inserter(next));
    live = std::move(next);
    out.trace.push_back(std::move(rec));
  }
  finalize(out, problem, ledger);
  return out;
}

inline double mean_noise(const Problem& problem, std::span<const std::size_t> live) {
  double s = 0.0;
  for (std::size_t id : live) s += problem.players[id].noise_rate;
  return s / static_cast<double>(live.size());
}

}  // namespace detail

/// Personalized learning on noiseless players: each round draws
/// m(eps/4, delta') from the uniform mixture of live players, learns a
/// consistent hypothesis, and retires the players whose TEST passes.
inline ProtocolOutcome personalized_learning(const Problem& problem, const PersonalizedConfig& cfg, std::uint64_t seed) {
  problem.validate();
  cfg.validate();
  detail::require_noiseless(problem, "personalized_learning");
  const double eps = cfg.epsilon;
  return detail::personalized_loop(
      problem, cfg, seed,
      [&](const std::vector<std::size_t>& live, double dp, const Streams& st, std::uint64_t round, CommLedger& ledger,
          std::uint64_t& drawn, RoundRecord& rec) {
        const std::uint64_t m = m_realizable(eps / 4.0, dp, problem.d(), cfg.c_pac);
        const Sample s = sample_mixture(MixtureSpec::uniform(live), problem.players, problem.target, m, st, round, ledger);
        drawn = m;
        rec.draw_size = m;
        return learn_consistent(problem.cls, s);
      },
      [&](const Hypothesis& h, const std::vector<std::size_t>& live, double dp, const Streams& st, std::uint64_t round,
          CommLedger& ledger) {
        return test(h, live, eps, dp, problem.players, problem.target, st, round, ledger, cfg.c_test);
      });
}

/// Personalized learning with the first step replaced by distributed
/// boosting over the live players at accuracy eps/4. Every player holds all
/// weak hypotheses, so the ensemble is rebuilt locally at no cost.
inline ProtocolOutcome personalized_learning_boost(const Problem& problem, const PersonalizedConfig& cfg,
                                                   std::uint64_t seed) {
  problem.validate();
  cfg.validate();
  detail::require_noiseless(problem, "personalized_learning_boost");
  const double eps = cfg.epsilon;
  return detail::personalized_loop(
      problem, cfg, seed,
      [&](const std::vector<std::size_t>& live, double, const Streams& st, std::uint64_t round, CommLedger& ledger,
          std::uint64_t& drawn, RoundRecord& rec) {
        auto parts = BoostParticipants::uniform(problem.players, live);
        BoostOutcome b = distributed_boost(parts, problem.target, problem.cls, eps / 4.0, cfg.boost, st.child(round),
                                           ledger, round);
        drawn = b.m_boost;
        rec.draw_size = b.m_boost;
        return std::move(b.ensemble);
      },
      [&](const Hypothesis& h, const std::vector<std::size_t>& live, double dp, const Streams& st, std::uint64_t round,
          CommLedger& ledger) {
        return test(h, live, eps, dp, problem.players, problem.target, st, round, ledger, cfg.c_test);
      });
}

/// Personalized learning under classification noise: the mixture draw is
/// sized for the average live noise rate, the learner is ERM and the tester CN-TEST.
inline ProtocolOutcome personalized_learning_cn(const Problem& problem, const PersonalizedConfig& cfg,
                                                std::uint64_t seed) {
  problem.validate();
  cfg.validate();
  const double eps = cfg.epsilon;
  return detail::personalized_loop(
      problem, cfg, seed,
      [&](const std::vector<std::size_t>& live, double dp, const Streams& st, std::uint64_t round, CommLedger& ledger,
          std::uint64_t& drawn, RoundRecord& rec) {
        const double eta_bar = detail::mean_noise(problem, live);
        const std::uint64_t m = m_cn(eps / 4.0, dp, problem.d(), eta_bar, cfg.c_cn);
        const Sample s = sample_mixture(MixtureSpec::uniform(live), problem.players, problem.target, m, st, round, ledger);
        drawn = m;
        rec.draw_size = m;
        rec.eta_bar = eta_bar;
        return learn_erm(problem.cls, s);
      },
      [&](const Hypothesis& h, const std::vector<std::size_t>& live, double dp, const Streams& st, std::uint64_t round,
          CommLedger& ledger) {
        return cn_test(h, live, eps, dp, problem.players, problem.target, st, round, ledger, cfg.c_cntest);
      });
}

/// Noise-tolerant personalized learning with the agnostic distributed booster
/// as its first step. Only defined when every noise rate is at most eps.
inline ProtocolOutcome personalized_learning_cn_boost(const Problem& problem, const PersonalizedConfig& cfg,
                                                      std::uint64_t seed) {
  problem.validate();
  cfg.validate();
  const double eps = cfg.epsilon;
  if (problem.eta_max() > eps)
    throw PreconditionViolation("PL-CN-Boost boosts only up to the noise rate: requires eta_max <= epsilon (eta_max = " +
                                std::to_string(problem.eta_max()) + ", epsilon = " + std::to_string(eps) + ")");
  return detail::personalized_loop(
      problem, cfg, seed,
      [&](const std::vector<std::size_t>& live, double, const Streams& st, std::uint64_t round, CommLedger& ledger,
          std::uint64_t& drawn, RoundRecord& rec) {
        auto parts = BoostParticipants::uniform(problem.players, live);
        BoostOutcome b = agnostic_distributed_boost(parts, problem.target, problem.cls, eps / 4.0, eps, cfg.boost,
                                                    st.child(round), ledger, round);
        drawn = b.m_boost;
        rec.draw_size = b.m_boost;
        rec.eta_bar = detail::mean_noise(problem, live);
        return std::move(b.ensemble);
      },
      [&](const Hypothesis& h, const std::vector<std::size_t>& live, double dp, const Streams& st, std::uint64_t round,
          CommLedger& ledger) {
        return cn_test(h, live, eps, dp, problem.players, problem.target, st, round, ledger, cfg.c_cntest);
      });
}

/// No collaboration: each player learns alone from m(eps, delta/k) local
/// examples (consistent learner when noiseless, ERM otherwise).
inline ProtocolOutcome baseline_personalized(const Problem& problem, const PersonalizedConfig& cfg, std::uint64_t seed) {
  problem.validate();
  cfg.validate();
  const std::size_t k = problem.k();
  const double local_delta = cfg.delta / static_cast<double>(k);
  const Streams streams(seed);
  CommLedger ledger;
  ProtocolOutcome out;
  out.hypotheses.assign(k, std::nullopt);
  const std::uint64_t round = ledger.begin_round();
  out.rounds = 1;
  RoundRecord rec;
  rec.round = round;
  for (const auto& p : problem.players) {
    const std::uint64_t m = p.noise_rate == 0.0 ? m_realizable(cfg.epsilon, local_delta, problem.d(), cfg.c_pac)
                                                : m_cn(cfg.epsilon, local_delta, problem.d(), p.noise_rate, cfg.c_cn);
    Rng rng = streams.player(p.id, round, Purpose::LocalTraining);
    const Sample s = sample_noisy(p, problem.target, m, rng);
    out.samples_consumed += m;
    out.hypotheses[p.id] = p.noise_rate == 0.0 ? learn_consistent(problem.cls, s) : learn_erm(problem.cls, s);
    rec.live.push_back(p.id);
    rec.passed.push_back(p.id);
    rec.draw_size += m;
  }
  out.trace.push_back(std::move(rec));
  detail::finalize(out, problem, ledger);
  return out;
}

inline ProtocolOutcome run_personalized(const Problem& problem, const PersonalizedConfig& cfg, std::uint64_t seed) {
  switch (cfg.variant) {
    case Algorithm::Baseline: return baseline_personalized(problem, cfg, seed);
    case Algorithm::PL: return personalized_learning(problem, cfg, seed);
    case Algorithm::PLBoost: return personalized_learning_boost(problem, cfg, seed);
    case Algorithm::PLCN: return personalized_learning_cn(problem, cfg, seed);
    case Algorithm::PLCNBoost: return personalized_learning_cn_boost(problem, cfg, seed);
    default: throw InvalidArgument("not a personalized variant: " + to_string(cfg.variant));
  }
}

}  // namespace cpl

#endif
