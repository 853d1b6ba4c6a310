#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "cpl/centralized.hpp"

namespace {

using cpl::Algorithm;
using cpl::Box;
using cpl::CentralizedConfig;
using cpl::CleanDistribution;
using cpl::CommLedger;
using cpl::Hypothesis;
using cpl::HypothesisClassSpec;
using cpl::Player;
using cpl::Problem;
using cpl::Streams;
using cpl::TargetConcept;

const HypothesisClassSpec kThresholds = HypothesisClassSpec::threshold_1d();

Problem identical_problem(std::size_t k, double eta = 0.0) {
  std::vector<Player> players;
  for (std::size_t i = 0; i < k; ++i) players.emplace_back(i, CleanDistribution::uniform_box(Box::unit(1)), eta);
  return Problem{kThresholds, std::move(players), TargetConcept(Hypothesis::threshold(0.5), kThresholds)};
}

CentralizedConfig config(Algorithm a, double eps, double multiplier) {
  CentralizedConfig cfg;
  cfg.variant = a;
  cfg.epsilon = eps;
  cfg.delta = 0.1;
  cfg.t_multiplier = multiplier;
  return cfg;
}

// P[Binomial(n, p) <= x], summed in log space.
double binomial_cdf(std::uint64_t n, double p, std::uint64_t x) {
  double acc = 0.0;
  for (std::uint64_t i = 0; i <= x && i <= n; ++i) {
    const double log_term = std::lgamma(n + 1.0) - std::lgamma(i + 1.0) - std::lgamma(n - i + 1.0) +
                            static_cast<double>(i) * std::log(p) + static_cast<double>(n - i) * std::log1p(-p);
    acc += std::exp(log_term);
  }
  return std::min(acc, 1.0);
}

TEST(CentralConfig, RoundAndAccuracyIdentities) {
  const auto cfg = config(Algorithm::Central, 0.12, 150);
  EXPECT_EQ(cfg.rounds(4), 900u);  // ceil(log2 40) = 6
  EXPECT_EQ(cfg.rounds(1), 600u);  // ceil(log2 10) = 4
  EXPECT_DOUBLE_EQ(cfg.epsilon_prime(), 0.02);
  EXPECT_DOUBLE_EQ(cfg.delta_prime(4), 0.1 / 3600.0);
  EXPECT_EQ(config(Algorithm::Central, 0.1, 10).rounds(4), 60u);
  EXPECT_THROW(config(Algorithm::PL, 0.1, 10).validate(), cpl::InvalidArgument);
}

TEST(WeightedNoise, Examples) {
  EXPECT_DOUBLE_EQ(cpl::weighted_noise_rate(std::vector<double>{1, 1}, std::vector<double>{0.1, 0.3}), 0.2);
  EXPECT_DOUBLE_EQ(cpl::weighted_noise_rate(std::vector<double>{1}, std::vector<double>{0.35}), 0.35);
  EXPECT_DOUBLE_EQ(cpl::weighted_noise_rate(std::vector<double>{1, 2}, std::vector<double>{0, 0.3}), 0.2);
  EXPECT_THROW(cpl::weighted_noise_rate(std::vector<double>{1, 0}, std::vector<double>{0, 0.3}), cpl::InvalidArgument);
}

TEST(WeightStateTest, ExponentsReconstructWeights) {
  cpl::WeightState w(4);
  const std::vector<std::size_t> passed_first{0, 2};
  const std::vector<std::size_t> passed_second{0};
  w.double_failures(passed_first);
  w.double_failures(passed_second);
  EXPECT_EQ(w.exponents, (std::vector<std::uint32_t>{0, 2, 1, 2}));
  EXPECT_DOUBLE_EQ(w.weight(1), 4.0);
  const auto n = w.normalized();
  EXPECT_DOUBLE_EQ(n[0], 1.0 / 11.0);
  EXPECT_DOUBLE_EQ(n[1], 4.0 / 11.0);
}

TEST(WeightStateTest, LongRunsDoNotOverflow) {
  cpl::WeightState w(2);
  for (int i = 0; i < 3000; ++i) w.double_failures(std::vector<std::size_t>{0});
  const auto n = w.normalized();
  EXPECT_EQ(n[1], 1.0);
  EXPECT_EQ(n[0], 0.0);
}

TEST(FastTest, TargetPassesAndVotesAreCharged) {
  const auto pr = identical_problem(3);
  CommLedger ledger;
  const auto r = cpl::fast_test(pr.target.h_star, pr.players, 0.02, pr.target, Streams(1), 1, ledger);
  EXPECT_EQ(r.passed, (std::vector<std::size_t>{0, 1, 2}));
  EXPECT_EQ(r.samples_drawn, 3 * cpl::fast_test_sample_size(0.02));
  EXPECT_EQ(ledger.bits_sent(), 3u);
  EXPECT_EQ(ledger.samples_sent(), 0u);
}

struct Rates {
  int far_fail = 0;
  int close_pass = 0;
};

Rates fast_test_rates(bool noisy, double eps_prime, double eta, int trials) {
  const auto pr = identical_problem(1, eta);
  const Hypothesis far = Hypothesis::threshold(0.5 + 2 * eps_prime);
  const Hypothesis close = Hypothesis::threshold(0.5 - eps_prime / 2);
  Rates r;
  for (int t = 0; t < trials; ++t) {
    CommLedger ledger;
    const Streams st(5000 + t);
    auto run = [&](const Hypothesis& h) {
      return noisy ? cpl::cn_fast_test(h, pr.players, eps_prime, pr.target, st, 1, ledger)
                   : cpl::fast_test(h, pr.players, eps_prime, pr.target, st, 1, ledger);
    };
    r.far_fail += run(far).passed.empty() ? 1 : 0;
    r.close_pass += run(close).passed.empty() ? 0 : 1;
  }
  return r;
}

TEST(FastTest, SeparatesAtTwiceAndHalfEpsilon) {
  const auto r = fast_test_rates(false, 0.1 / 6.0, 0.0, 2000);
  EXPECT_GE(r.far_fail, static_cast<int>(0.97 * 2000));
  EXPECT_GE(r.close_pass, static_cast<int>(0.97 * 2000));
}

TEST(CnFastTest, NoiselessCaseIsFastTest) {
  const auto pr = identical_problem(4);
  for (double t : {0.49, 0.5, 0.52, 0.6}) {
    CommLedger a, b;
    const Hypothesis h = Hypothesis::threshold(t);
    EXPECT_EQ(cpl::cn_fast_test(h, pr.players, 0.05, pr.target, Streams(3), 2, a).passed,
              cpl::fast_test(h, pr.players, 0.05, pr.target, Streams(3), 2, b).passed);
  }
}

TEST(CnFastTest, SeparatesUnderNoiseAtLargeAccuracy) {
  // With c = 56 the gap between the two hypotheses is a fixed number of
  // mistakes while the noise spread grows like 1/sqrt(eps'), so the 0.97
  // rates hold only for coarse eps'. The exact binomial rates come first.
  const double ep = 0.5, eta = 0.2;
  const std::uint64_t n = cpl::cn_fast_test_sample_size(ep, eta);
  const auto cutoff = static_cast<std::uint64_t>(std::floor(cpl::cn_fast_test_threshold(ep, eta) * n + 1e-9));
  const double close_pass = binomial_cdf(n, cpl::noisy_error_formula(ep / 2, eta), cutoff);
  const double far_fail = 1.0 - binomial_cdf(n, cpl::noisy_error_formula(std::min(2 * ep, 1.0), eta), cutoff);
  ASSERT_GE(close_pass, 0.97);
  ASSERT_GE(far_fail, 0.97);
  const auto r = fast_test_rates(true, ep, eta, 2000);
  EXPECT_GE(r.close_pass, static_cast<int>(0.97 * 2000));
  EXPECT_GE(r.far_fail, static_cast<int>(0.97 * 2000));
  EXPECT_NEAR(r.close_pass / 2000.0, close_pass, 4 * std::sqrt(close_pass * (1 - close_pass) / 2000) + 1e-3);
}

TEST(CentralizedLearning, SinglePlayer) {
  const auto pr = identical_problem(1);
  const double eps = 0.2;
  int good = 0;
  for (std::uint64_t s = 0; s < 100; ++s) {
    const auto out = cpl::centralized_learning(pr, config(Algorithm::Central, eps, 10), s);
    good += out.max_clean_error() <= eps ? 1 : 0;
    for (const auto& rec : out.trace) EXPECT_EQ(rec.exponents.size(), 1u);
  }
  EXPECT_GE(good, static_cast<int>((1 - 0.1 - 0.05) * 100));
}

TEST(CentralizedLearning, IdenticalPlayersAcceptance) {
  const auto pr = identical_problem(4);
  int good = 0;
  for (std::uint64_t s = 0; s < 50; ++s) {
    const auto out = cpl::centralized_learning(pr, config(Algorithm::Central, 0.15, 10), s);
    good += out.max_clean_error() <= 0.15 ? 1 : 0;
  }
  EXPECT_GE(good, 45);
}

TEST(CentralizedLearning, PlayerPassingEveryRoundKeepsUnitWeight) {
  const auto pr = identical_problem(3);
  const auto out = cpl::centralized_learning(pr, config(Algorithm::Central, 0.2, 2), 4);
  for (std::size_t i = 0; i < 3; ++i) {
    bool always = true;
    for (const auto& rec : out.trace) always = always && std::count(rec.passed.begin(), rec.passed.end(), i) == 1;
    if (always) {
      EXPECT_EQ(out.final_exponents[i], 0u);
    }
  }
}

TEST(CentralizedLearning, OutcomeStructure) {
  const auto pr = identical_problem(2);
  const auto cfg = config(Algorithm::Central, 0.2, 1);
  const auto out = cpl::centralized_learning(pr, cfg, 8);
  ASSERT_EQ(out.rounds, cfg.rounds(2));
  EXPECT_EQ(out.round_hypotheses.size(), out.rounds);
  EXPECT_EQ(out.ledger.rounds, out.rounds);
  std::uint64_t sent = 0;
  for (const auto& rec : out.trace) sent += rec.draw_size;
  EXPECT_EQ(out.ledger.samples_sent, sent);
  EXPECT_EQ(sent, out.rounds * cpl::m_realizable(cfg.epsilon_prime() / 16, cfg.delta_prime(2), 1));
  // The output is the plain vote of the round hypotheses.
  for (double x = 0.0; x < 1.0; x += 0.01) {
    int ones = 0;
    for (const auto& h : out.round_hypotheses) ones += cpl::predict(h, std::vector<double>{x});
    const int expect = 2 * ones > static_cast<int>(out.round_hypotheses.size()) ? 1 : 0;
    EXPECT_EQ(cpl::predict(out.hypothesis, std::vector<double>{x}), expect) << x;
  }
  EXPECT_THROW(cpl::centralized_learning(identical_problem(2, 0.1), cfg, 1), cpl::PreconditionViolation);
}

TEST(CentralizedCn, NoiselessDrawsMatch) {
  const auto pr = identical_problem(3);
  const auto a = cpl::centralized_learning_cn(pr, config(Algorithm::CentralCN, 0.2, 1), 2);
  const auto b = cpl::centralized_learning(pr, config(Algorithm::Central, 0.2, 1), 2);
  ASSERT_EQ(a.trace.size(), b.trace.size());
  for (std::size_t j = 0; j < a.trace.size(); ++j) EXPECT_EQ(a.trace[j].draw_size, b.trace[j].draw_size);
}

TEST(CentralizedCn, NoiseRateFollowsCurrentWeights) {
  std::vector<Player> players;
  players.emplace_back(0, CleanDistribution::uniform_box(Box::unit(1)), 0.0);
  players.emplace_back(1, CleanDistribution::uniform_box(Box{{0.5}, {1.0}}), 0.3);
  const Problem pr{kThresholds, std::move(players), TargetConcept(Hypothesis::threshold(0.7), kThresholds)};
  const auto out = cpl::centralized_learning_cn(pr, config(Algorithm::CentralCN, 0.2, 1), 5);
  for (const auto& rec : out.trace) {
    const double w0 = std::ldexp(1.0, static_cast<int>(rec.exponents[0]));
    const double w1 = std::ldexp(1.0, static_cast<int>(rec.exponents[1]));
    EXPECT_NEAR(rec.eta_bar, 0.3 * w1 / (w0 + w1), 1e-12);
  }
}

TEST(CentralizedCn, UniformNoiseAcceptance) {
  const auto pr = identical_problem(4, 0.15);
  int good = 0;
  for (std::uint64_t s = 0; s < 50; ++s) {
    const auto out = cpl::centralized_learning_cn(pr, config(Algorithm::CentralCN, 0.2, 10), s);
    good += out.max_clean_error() <= 0.2 ? 1 : 0;
  }
  EXPECT_GE(good, static_cast<int>(0.85 * 50));
}

TEST(CentralizedBoost, SinglePlayerRoundsAreDistributedBoostRuns) {
  const auto pr = identical_problem(1);
  const auto cfg = config(Algorithm::CentralBoost, 0.2, 1);
  const std::uint64_t seed = 6;
  const auto out = cpl::centralized_learning_boost(pr, cfg, seed);
  for (std::size_t j = 0; j < out.rounds; ++j) {
    CommLedger ledger;
    const auto b = cpl::distributed_boost(cpl::BoostParticipants::uniform(pr.players, {0}), pr.target, pr.cls,
                                          cfg.epsilon_prime() / 16, cfg.boost, Streams(seed).child(j + 1), ledger, j + 1);
    EXPECT_EQ(out.round_hypotheses[j], b.ensemble) << "round " << j;
  }
}

TEST(CentralizedBoost, CommunicationGrowsSublinearly) {
  const auto pr = identical_problem(4);
  auto sent = [&](double eps) {
    double s = 0.0;
    for (std::uint64_t t = 0; t < 5; ++t)
      s += static_cast<double>(cpl::centralized_learning_boost(pr, config(Algorithm::CentralBoost, eps, 1), t).ledger.samples_sent);
    return s;
  };
  EXPECT_LT(sent(0.1) / sent(0.2), 2.0);
}

TEST(CentralizedBoost, WeightDynamicsMatchPlainVariantWhenAllPass) {
  const auto pr = identical_problem(4);
  for (std::uint64_t s = 0; s < 5; ++s) {
    const auto plain = cpl::centralized_learning(pr, config(Algorithm::Central, 0.2, 1), s);
    const auto boost = cpl::centralized_learning_boost(pr, config(Algorithm::CentralBoost, 0.2, 1), s);
    ASSERT_EQ(plain.trace.size(), boost.trace.size());
    for (std::size_t j = 0; j < plain.trace.size(); ++j) {
      if (plain.trace[j].passed.size() != 4 || boost.trace[j].passed.size() != 4) break;
      EXPECT_EQ(plain.trace[j].exponents, boost.trace[j].exponents);
    }
  }
}

TEST(CentralizedCnBoost, RejectsNoiseAboveEpsilonAndRuns) {
  EXPECT_THROW(cpl::centralized_learning_cn_boost(identical_problem(2, 0.3), config(Algorithm::CentralCNBoost, 0.2, 1), 1),
               cpl::PreconditionViolation);
  const auto out = cpl::centralized_learning_cn_boost(identical_problem(2, 0.1), config(Algorithm::CentralCNBoost, 0.2, 1), 1);
  EXPECT_LE(out.max_clean_error(), 0.2);
}

TEST(RunCentralized, RejectsPersonalizedVariants) {
  EXPECT_THROW(cpl::run_centralized(identical_problem(1), config(Algorithm::PL, 0.2, 1), 1), cpl::InvalidArgument);
}

}  // namespace
