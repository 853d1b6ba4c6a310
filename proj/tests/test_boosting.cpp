#include <gtest/gtest.h>

#include <cmath>
#include <numeric>
#include <vector>

#include "cpl/boosting.hpp"

namespace {

using cpl::BoostConfig;
using cpl::BoostParticipants;
using cpl::Box;
using cpl::CleanDistribution;
using cpl::CommLedger;
using cpl::Hypothesis;
using cpl::HypothesisClassSpec;
using cpl::LabeledExample;
using cpl::Player;
using cpl::Rng;
using cpl::Sample;
using cpl::Streams;
using cpl::TargetConcept;

const HypothesisClassSpec kThresholds = HypothesisClassSpec::threshold_1d();

std::vector<Player> uniform_players(std::size_t k, double eta = 0.0) {
  std::vector<Player> out;
  for (std::size_t i = 0; i < k; ++i) out.emplace_back(i, CleanDistribution::uniform_box(Box::unit(1)), eta);
  return out;
}

std::vector<std::size_t> ids_of(std::size_t k) {
  std::vector<std::size_t> ids(k);
  std::iota(ids.begin(), ids.end(), 0);
  return ids;
}

// Independent re-evaluation of a weighted vote: sign of sum alpha * (+-1).
int vote(const std::vector<Hypothesis>& hs, const std::vector<double>& alphas, const cpl::Point& x) {
  double s = 0.0;
  for (std::size_t i = 0; i < hs.size(); ++i) s += alphas[i] * (cpl::predict(hs[i], x) == 1 ? 1.0 : -1.0);
  return s > 0.0 ? 1 : 0;
}

Sample noisy_sample(std::uint64_t seed, std::size_t n, double eta) {
  Rng rng(seed);
  const Player p(0, CleanDistribution::uniform_box(Box::unit(1)), eta);
  return cpl::sample_noisy(p, TargetConcept(Hypothesis::threshold(0.6), kThresholds), n, rng);
}

TEST(RoundsNeeded, Values) {
  EXPECT_EQ(cpl::rounds_needed(1.0, 0.25), 1u);
  EXPECT_EQ(cpl::rounds_needed(std::exp(2.0), 0.5), 4u);
  EXPECT_THROW(cpl::rounds_needed(0.5, 0.25), cpl::InvalidArgument);
  EXPECT_THROW(cpl::rounds_needed(10.0, 0.0), cpl::InvalidArgument);
}

TEST(RoundsNeeded, DoublingAddsAtMostLogTwoTerm) {
  for (double gamma : {0.1, 0.25, 0.5})
    for (double m = 1.0; m < 1e7; m *= 3.7) {
      const auto extra = static_cast<std::size_t>(std::ceil(std::log(2.0) / (2.0 * gamma * gamma)));
      EXPECT_LE(cpl::rounds_needed(2.0 * m, gamma), cpl::rounds_needed(m, gamma) + extra);
      EXPECT_GE(cpl::rounds_needed(2.0 * m, gamma), cpl::rounds_needed(m, gamma));
    }
}

TEST(EnsembleVc, Values) {
  EXPECT_EQ(cpl::ensemble_vc_dimension(3, 1), 3u);
  EXPECT_EQ(cpl::ensemble_vc_dimension(1, 8), 32u);
  for (std::uint64_t d = 1; d < 6; ++d)
    for (std::uint64_t t = 1; t < 40; ++t) {
      EXPECT_LE(cpl::ensemble_vc_dimension(d, t), cpl::ensemble_vc_dimension(d + 1, t));
      EXPECT_LE(cpl::ensemble_vc_dimension(d, t), cpl::ensemble_vc_dimension(d, t + 1));
    }
}

TEST(AdaBoost, AlphaClosedForm) { EXPECT_NEAR(cpl::detail::round_alpha(0.25), 0.5 * std::log(3.0), 1e-15); }

TEST(AdaBoost, SeparableSampleShortCircuits) {
  const Sample s{{{0.1}, 1}, {{0.2}, 1}, {{0.7}, 0}, {{0.9}, 0}};
  const auto out = cpl::adaboost(s, cpl::exhaustive_weak_learner(Box::unit(1)), BoostConfig{});
  ASSERT_EQ(out.rounds_used, 1u);
  EXPECT_EQ(out.rounds[0].weighted_error, 0.0);
  EXPECT_EQ(out.training_error_trace, std::vector<double>{0.0});
  EXPECT_EQ(cpl::empirical_error(out.ensemble, s), 0.0);
}

TEST(AdaBoost, XorLikeSampleMeetsTheRoundBound) {
  const Sample s{{{0.1}, 1}, {{0.3}, 0}, {{0.5}, 1}};
  BoostConfig cfg;
  cfg.max_rounds = 200;
  const auto out = cpl::adaboost(s, cpl::exhaustive_weak_learner(Box::unit(1)), cfg);
  ASSERT_EQ(out.training_error_trace.back(), 0.0);
  double worst_edge = 0.5;
  for (const auto& r : out.rounds) worst_edge = std::min(worst_edge, 0.5 - r.weighted_error);
  ASSERT_GT(worst_edge, 0.0);
  EXPECT_LE(out.rounds_used, cpl::rounds_needed(3.0, worst_edge));
  EXPECT_EQ(cpl::empirical_error(out.ensemble, s), 0.0);
}

TEST(AdaBoost, TraceMatchesPartialEnsembleAndProductBound) {
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const Sample s = noisy_sample(seed, 60, 0.2);
    BoostConfig cfg;
    cfg.max_rounds = 25;
    const auto out = cpl::adaboost(s, cpl::exhaustive_weak_learner(Box::unit(1)), cfg);
    std::vector<Hypothesis> hs;
    std::vector<double> alphas;
    double product = 1.0;
    for (std::size_t t = 0; t < out.rounds.size(); ++t) {
      const auto& r = out.rounds[t];
      ASSERT_GT(r.weighted_error, 0.0);
      ASSERT_LT(r.weighted_error, 0.5);
      hs.push_back(r.weak);
      alphas.push_back(r.alpha);
      std::size_t wrong = 0;
      for (const auto& e : s) wrong += vote(hs, alphas, e.x) != e.y ? 1 : 0;
      const double err = static_cast<double>(wrong) / static_cast<double>(s.size());
      EXPECT_DOUBLE_EQ(out.training_error_trace[t], err) << "seed " << seed << " round " << t;
      product *= 2.0 * std::sqrt(r.weighted_error * (1.0 - r.weighted_error));
      EXPECT_LE(err, product + 1e-12);
    }
  }
}

TEST(AdaBoost, WeakLearnerContractViolationThrows) {
  const Sample s{{{0.1}, 1}, {{0.9}, 0}};
  const cpl::WeakLearner always_wrong = [](std::span<const LabeledExample>, std::span<const double>) {
    return Hypothesis::threshold(0.5, cpl::Polarity::Negative);
  };
  EXPECT_THROW(cpl::adaboost(s, always_wrong, BoostConfig{}), cpl::WeakLearnerFailure);
  EXPECT_THROW(cpl::adaboost(Sample{}, cpl::exhaustive_weak_learner(), BoostConfig{}), cpl::InvalidArgument);
}

TEST(Reservoirs, SizesConserveBudgetAndChargeAllocation) {
  Rng rng(1);
  CommLedger ledger;
  const auto w = cpl::uniform_weights(4);
  const auto sizes = cpl::init_reservoirs(10000, w, rng, ledger, 0);
  EXPECT_EQ(std::accumulate(sizes.begin(), sizes.end(), std::uint64_t{0}), 10000u);
  // sd = sqrt(10^4 * 1/4 * 3/4) = 43.3; three sd is 130.
  for (auto s : sizes) EXPECT_NEAR(static_cast<double>(s), 2500.0, 130.0);
  EXPECT_EQ(ledger.bits_sent(), 4u * cpl::ceil_log2(10002));
  CommLedger one;
  EXPECT_EQ(cpl::init_reservoirs(77, cpl::uniform_weights(1), rng, one, 0), std::vector<std::uint64_t>{77});
}

TEST(Reservoirs, ResampleCases) {
  Rng rng(2);
  const cpl::Reservoir single{0, {{{0.3}, 1}}, {1.0}};
  const auto copies = cpl::resample_from_reservoir(single, 40, rng);
  ASSERT_EQ(copies.size(), 40u);
  for (const auto& e : copies) EXPECT_EQ(e, single.points[0]);
  EXPECT_TRUE(cpl::resample_from_reservoir(single, 0, rng).empty());
  EXPECT_THROW(cpl::resample_from_reservoir(cpl::Reservoir{}, 3, rng), cpl::InvalidArgument);
}

TEST(Reservoirs, ResampleFrequenciesFollowWeights) {
  Rng rng(3);
  cpl::Reservoir r{0, {{{0.1}, 1}, {{0.2}, 1}, {{0.3}, 0}, {{0.4}, 0}}, {0.1, 0.2, 0.3, 0.4}};
  const std::size_t n = 100000;
  const auto draws = cpl::resample_from_reservoir(r, n, rng);
  for (std::size_t i = 0; i < r.points.size(); ++i) {
    double hits = 0;
    for (const auto& e : draws) hits += e == r.points[i] ? 1 : 0;
    const double p = r.weights[i], sd = std::sqrt(p * (1 - p) / n);
    EXPECT_NEAR(hits / n, p, 3.0 * sd);
  }
}

TEST(DistributedBoost, SingleParticipantMatchesAdaBoostWithResamplingLearner) {
  const auto players = uniform_players(1);
  const TargetConcept target(Hypothesis::threshold(0.37), kThresholds);
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    BoostConfig cfg;
    cfg.max_rounds = 12;
    const Streams streams(seed);
    CommLedger ledger;
    const auto dist = cpl::distributed_boost(BoostParticipants::uniform(players, {0}), target, kThresholds, 0.1, cfg,
                                             streams, ledger, 1);
    // The single-player booster sees the same reservoir and draws its
    // working samples from the same stream.
    const Sample& reservoir = dist.reservoirs[0].points;
    Rng resample = streams.player(0, 0, cpl::Purpose::Resample);
    const std::size_t working = dist.working_sample_size;
    const cpl::WeakLearner learner = [&](std::span<const LabeledExample> s, std::span<const double> w) {
      const cpl::Reservoir view{0, Sample(s.begin(), s.end()), std::vector<double>(w.begin(), w.end())};
      const Sample draw = cpl::resample_from_reservoir(view, working, resample);
      Hypothesis h = cpl::weak_learn(draw, cpl::uniform_weights(working), &kThresholds.domain).h;
      double wrong = 0.0;
      for (std::size_t i = 0; i < s.size(); ++i) wrong += cpl::predict(h, s[i].x) != s[i].y ? w[i] : 0.0;
      return wrong > 0.5 ? cpl::flipped(h) : h;
    };
    const auto ada = cpl::adaboost(reservoir, learner, cfg);
    EXPECT_EQ(dist.weak_sequence(), ada.weak_sequence()) << "seed " << seed;
  }
}

TEST(DistributedBoost, ZeroTrainingErrorAndPerRoundCharges) {
  const auto players = uniform_players(4);
  const TargetConcept target(Hypothesis::threshold(0.42), kThresholds);
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    CommLedger ledger;
    BoostConfig cfg;
    const auto out = cpl::distributed_boost(BoostParticipants::uniform(players, ids_of(4)), target, kThresholds, 0.1, cfg,
                                            Streams(seed), ledger, 1);
    EXPECT_EQ(out.training_error_trace.back(), 0.0);
    EXPECT_EQ(std::accumulate(out.reservoir_sizes.begin(), out.reservoir_sizes.end(), std::uint64_t{0}), out.m_boost);
    EXPECT_EQ(out.working_sample_size, 10u);
    std::uint64_t per_round = 0;
    for (const auto& e : ledger.events())
      if (e.annotation == "boost-working-sample") {
        EXPECT_EQ(e.count, out.working_sample_size);
        ++per_round;
      }
    EXPECT_EQ(per_round, out.rounds_used);
    EXPECT_EQ(ledger.samples_sent(), out.rounds_used * out.working_sample_size);
    for (const auto& r : out.reservoirs)
      for (double w : r.weights) {
        EXPECT_GT(w, 0.0);
        EXPECT_TRUE(std::isfinite(w));
      }
  }
}

TEST(DistributedBoost, BudgetDoesNotDependOnPlayerCount) {
  const TargetConcept target(Hypothesis::threshold(0.5), kThresholds);
  std::uint64_t budget = 0;
  for (std::size_t k : {1, 2, 8, 16}) {
    const auto players = uniform_players(k);
    CommLedger ledger;
    const auto out = cpl::distributed_boost(BoostParticipants::uniform(players, ids_of(k)), target, kThresholds, 0.05,
                                            BoostConfig{}, Streams(7), ledger, 1);
    if (budget == 0) budget = out.m_boost;
    EXPECT_EQ(out.m_boost, budget) << "k=" << k;
    EXPECT_EQ(out.m_boost, cpl::boost_schedule(1, 0.05, BoostConfig{}).m_boost);
  }
}

double mixture_error(const Hypothesis& h, const std::vector<Player>& players, const TargetConcept& target) {
  double s = 0.0;
  for (const auto& p : players) s += cpl::true_error(h, p.clean, target);
  return s / static_cast<double>(players.size());
}

TEST(AgnosticBoost, NoiselessRunsLearn) {
  const auto players = uniform_players(3);
  const TargetConcept target(Hypothesis::threshold(0.3), kThresholds);
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    CommLedger ledger;
    const auto out = cpl::agnostic_distributed_boost(BoostParticipants::uniform(players, ids_of(3)), target, kThresholds,
                                                     0.1, 0.1, BoostConfig{}, Streams(seed), ledger, 1);
    EXPECT_LE(mixture_error(out.ensemble, players, target), 0.1);
  }
}

TEST(AgnosticBoost, HalfEpsilonNoiseSucceedsInNinetyPercent) {
  const double eps = 0.1;
  const auto players = uniform_players(4, eps / 2);
  const TargetConcept target(Hypothesis::threshold(0.55), kThresholds);
  int ok = 0;
  const BoostConfig cfg;
  for (std::uint64_t seed = 1; seed <= 100; ++seed) {
    CommLedger ledger;
    const auto out = cpl::agnostic_distributed_boost(BoostParticipants::uniform(players, ids_of(4)), target, kThresholds,
                                                     eps, eps, cfg, Streams(seed), ledger, 1);
    ok += mixture_error(out.ensemble, players, target) <= eps ? 1 : 0;
    EXPECT_LE(out.max_normalized_weight, cfg.c_cap / static_cast<double>(out.m_boost) * (1 + 1e-9));
  }
  EXPECT_GE(ok, 90);
}

TEST(AgnosticBoost, WeightCapHoldsWithCapValue) {
  std::vector<double> w{0.7, 0.1, 0.1, 0.05, 0.05};
  cpl::detail::cap_weights(w, 0.3);
  EXPECT_NEAR(std::accumulate(w.begin(), w.end(), 0.0), 1.0, 1e-12);
  for (double x : w) EXPECT_LE(x, 0.3 + 1e-15);
  EXPECT_DOUBLE_EQ(w[0], 0.3);
  // The uncapped rest keep their proportions.
  EXPECT_NEAR(w[1] / w[3], 2.0, 1e-12);
}

TEST(AgnosticBoost, RejectsNoiseAboveEpsilon) {
  const auto players = uniform_players(2, 0.2);
  const TargetConcept target(Hypothesis::threshold(0.5), kThresholds);
  CommLedger ledger;
  EXPECT_THROW(cpl::agnostic_distributed_boost(BoostParticipants::uniform(players, ids_of(2)), target, kThresholds, 0.1,
                                               0.1, BoostConfig{}, Streams(1), ledger, 1),
               cpl::PreconditionViolation);
}

}  // namespace
