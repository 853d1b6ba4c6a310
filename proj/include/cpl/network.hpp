#ifndef CPL_NETWORK_HPP
#define CPL_NETWORK_HPP

#include <bit>
#include <cmath>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "cpl/error.hpp"
#include "cpl/rng.hpp"

namespace cpl {

inline constexpr std::int64_t kCenterSender = -1;
inline constexpr std::int64_t kPlayersSender = -2;  // aggregate over the senders of one message batch

enum class PayloadKind : std::uint8_t { Samples, Bits };

struct BroadcastEvent {
  std::int64_t sender = kCenterSender;
  PayloadKind kind = PayloadKind::Bits;
  std::uint64_t count = 0;
  std::uint64_t round = 0;
  std::string annotation;

  friend bool operator==(const BroadcastEvent&, const BroadcastEvent&) = default;
};

struct LedgerSnapshot {
  std::uint64_t samples_sent = 0;
  std::uint64_t bits_sent = 0;
  std::uint64_t rounds = 0;

  friend bool operator==(const LedgerSnapshot&, const LedgerSnapshot&) = default;
};

struct RoundTotals {
  std::uint64_t round = 0;
  std::uint64_t samples = 0;
  std::uint64_t bits = 0;
};

/// Shared-blackboard accounting for one protocol run. A broadcast is charged
/// once no matter how many parties read it. Counters only grow.
class CommLedger {
 public:
  std::uint64_t samples_sent() const { return samples_sent_; }
  std::uint64_t bits_sent() const { return bits_sent_; }
  std::uint64_t rounds() const { return rounds_; }
  const std::vector<BroadcastEvent>& events() const { return events_; }

  void record(BroadcastEvent e) {
    (e.kind == PayloadKind::Samples ? samples_sent_ : bits_sent_) += e.count;
    events_.push_back(std::move(e));
  }

  /// Marks the start of a protocol round and returns its 1-based index.
  std::uint64_t begin_round() { return ++rounds_; }

  LedgerSnapshot snapshot() const { return {samples_sent_, bits_sent_, rounds_}; }

  std::vector<RoundTotals> per_round() const {
    std::map<std::uint64_t, RoundTotals> by_round;
    for (const auto& e : events_) {
      auto& r = by_round[e.round];
      r.round = e.round;
      (e.kind == PayloadKind::Samples ? r.samples : r.bits) += e.count;
    }
    std::vector<RoundTotals> out;
    for (const auto& [_, r] : by_round) out.push_back(r);
    return out;
  }

 private:
  std::uint64_t samples_sent_ = 0;
  std::uint64_t bits_sent_ = 0;
  std::uint64_t rounds_ = 0;
  std::vector<BroadcastEvent> events_;
};

/// ceil(log2(x)) for x >= 1.
constexpr std::uint64_t ceil_log2(std::uint64_t x) { return x <= 1 ? 0 : std::bit_width(x - 1); }

/// Bits needed to send a count in [0, m].
constexpr std::uint64_t count_width(std::uint64_t m) { return ceil_log2(m + 2); }

inline void charge_samples(CommLedger& ledger, std::uint64_t n, std::uint64_t round, std::string annotation,
                           std::int64_t sender = kPlayersSender) {
  ledger.record({sender, PayloadKind::Samples, n, round, std::move(annotation)});
}

/// The center tells each of k players how many of m samples to send.
inline void charge_allocation_message(CommLedger& ledger, std::uint64_t k, std::uint64_t m, std::uint64_t round) {
  detail::require(k >= 1, "allocation message needs k >= 1");
  ledger.record({kCenterSender, PayloadKind::Bits, k * count_width(m), round, "allocation"});
}

/// One pass/fail bit per live player.
inline void charge_test_votes(CommLedger& ledger, std::uint64_t live_players, std::uint64_t round) {
  ledger.record({kPlayersSender, PayloadKind::Bits, live_players, round, "test-votes"});
}

/// Each player publishes a fixed-width summary of its boosting weights.
inline void charge_boost_sync(CommLedger& ledger, std::uint64_t k, std::uint64_t width_bits, std::uint64_t round) {
  detail::require(k >= 1, "boost sync needs k >= 1");
  ledger.record({kPlayersSender, PayloadKind::Bits, k * width_bits, round, "boost-sync"});
}

/// Multinomial(m, weights), drawn one item at a time so the result does not
/// depend on any library binomial sampler. A single cell consumes no randomness.
inline std::vector<std::uint64_t> multinomial_allocation(std::uint64_t m, std::span<const double> weights, Rng& rng) {
  detail::require(!weights.empty(), "multinomial_allocation needs at least one cell");
  double total = 0.0;
  for (double w : weights) {
    detail::require(w >= 0.0 && std::isfinite(w), "multinomial weights must be nonnegative");
    total += w;
  }
  detail::require(std::abs(total - 1.0) <= 1e-9, "multinomial weights must sum to 1");
  std::vector<std::uint64_t> counts(weights.size(), 0);
  if (weights.size() == 1) {
    counts[0] = m;
    return counts;
  }
  std::vector<double> cumulative(weights.size());
  double acc = 0.0;
  for (std::size_t i = 0; i < weights.size(); ++i) cumulative[i] = acc += weights[i];
  for (std::uint64_t draw = 0; draw < m; ++draw) {
    std::size_t cell = rng.pick_cumulative(cumulative);
    while (weights[cell] == 0.0) --cell;  // u landed exactly on a boundary of an empty cell
    ++counts[cell];
  }
  return counts;
}

inline std::vector<double> uniform_weights(std::size_t k) { return std::vector<double>(k, 1.0 / static_cast<double>(k)); }

}  // namespace cpl

#endif
