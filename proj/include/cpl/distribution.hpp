#ifndef CPL_DISTRIBUTION_HPP
#define CPL_DISTRIBUTION_HPP

#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "cpl/error.hpp"
#include "cpl/hypothesis.hpp"
#include "cpl/network.hpp"
#include "cpl/rng.hpp"

namespace cpl {

struct DiscreteSupport {
  std::vector<Point> points;
  std::vector<double> probs;
  std::vector<double> cumulative;
};

struct UniformBox {
  Box box;
};

/// A player's distribution over unlabeled points.
class CleanDistribution {
 public:
  static CleanDistribution discrete(std::vector<Point> points, std::vector<double> probs) {
    detail::require(!points.empty(), "discrete support must be nonempty");
    detail::require(points.size() == probs.size(), "support points and probabilities must align");
    const std::size_t n = points.front().size();
    detail::require(n >= 1, "support points need at least one feature");
    double total = 0.0;
    std::vector<double> cumulative;
    for (std::size_t i = 0; i < points.size(); ++i) {
      detail::require(points[i].size() == n, "support points must share one dimension");
      detail::require(probs[i] > 0.0, "support probabilities must be positive");
      cumulative.push_back(total += probs[i]);
    }
    detail::require(std::abs(total - 1.0) <= 1e-12, "support probabilities must sum to 1");
    return CleanDistribution(DiscreteSupport{std::move(points), std::move(probs), std::move(cumulative)});
  }

  static CleanDistribution uniform_box(Box box) {
    detail::require(box.dimension() >= 1 && box.hi.size() == box.dimension(), "box bounds must align");
    for (std::size_t i = 0; i < box.dimension(); ++i)
      detail::require(box.lo[i] < box.hi[i], "uniform box must have positive volume");
    return CleanDistribution(UniformBox{std::move(box)});
  }

  const std::variant<DiscreteSupport, UniformBox>& variant() const { return v_; }

  std::size_t dimension() const {
    if (const auto* d = std::get_if<DiscreteSupport>(&v_)) return d->points.front().size();
    return std::get<UniformBox>(v_).box.dimension();
  }

  Point draw(Rng& rng) const {
    if (const auto* d = std::get_if<DiscreteSupport>(&v_)) return d->points[rng.pick_cumulative(d->cumulative)];
    const Box& b = std::get<UniformBox>(v_).box;
    Point x(b.dimension());
    for (std::size_t i = 0; i < x.size(); ++i) x[i] = rng.uniform(b.lo[i], b.hi[i]);
    return x;
  }

 private:
  explicit CleanDistribution(std::variant<DiscreteSupport, UniformBox> v) : v_(std::move(v)) {}

  std::variant<DiscreteSupport, UniformBox> v_;
};

/// One party of the collaboration. The noise rate is public: the center knows it.
struct Player {
  std::size_t id;
  CleanDistribution clean;
  double noise_rate;

  Player(std::size_t id_, CleanDistribution clean_, double eta = 0.0)
      : id(id_), clean(std::move(clean_)), noise_rate(eta) {
    detail::require(eta >= 0.0 && eta < 0.5, "player noise rate must lie in [0, 1/2)");
  }
};

/// The realizable labeling shared by all players.
struct TargetConcept {
  Hypothesis h_star;

  TargetConcept(Hypothesis h, const HypothesisClassSpec& spec) : h_star(std::move(h)) {
    detail::require(!h_star.is_ensemble() && belongs_to(h_star, spec), "target must belong to the hypothesis class");
  }
  int label(std::span<const double> x) const { return predict(h_star, x); }
};

/// Weights over a subset of players.
struct MixtureSpec {
  std::vector<std::size_t> members;
  std::vector<double> weights;

  static MixtureSpec uniform(std::vector<std::size_t> members) {
    std::vector<double> w = uniform_weights(members.size());
    return MixtureSpec::make(std::move(members), std::move(w));
  }

  /// Normalizes arbitrary positive weights.
  static MixtureSpec weighted(std::vector<std::size_t> members, std::span<const double> raw) {
    detail::require(members.size() == raw.size(), "mixture weights must align with members");
    double total = 0.0;
    for (double w : raw) total += w;
    detail::require(total > 0.0 && std::isfinite(total), "mixture weights must have positive total");
    std::vector<double> w;
    for (double r : raw) w.push_back(r / total);
    return make(std::move(members), std::move(w));
  }

  static MixtureSpec make(std::vector<std::size_t> members, std::vector<double> weights) {
    detail::require(!members.empty(), "mixture needs at least one member");
    detail::require(members.size() == weights.size(), "mixture weights must align with members");
    double total = 0.0;
    for (double w : weights) {
      detail::require(w >= 0.0, "mixture weights must be nonnegative");
      total += w;
    }
    detail::require(std::abs(total - 1.0) <= 1e-12, "mixture weights must sum to 1");
    return MixtureSpec{std::move(members), std::move(weights)};
  }
};

inline Sample sample_clean(const Player& p, const TargetConcept& target, std::size_t n, Rng& rng) {
  Sample out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    Point x = p.clean.draw(rng);
    const int y = target.label(x);
    out.push_back({std::move(x), y});
  }
  return out;
}

/// Draws from EX_eta: each label is flipped independently with probability eta.
/// With eta = 0 the stream is consumed exactly as by sample_clean.
inline Sample sample_noisy(const Player& p, const TargetConcept& target, std::size_t n, Rng& rng) {
  if (p.noise_rate == 0.0) return sample_clean(p, target, n, rng);
  Sample out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    Point x = p.clean.draw(rng);
    int y = target.label(x);
    if (rng.bernoulli(p.noise_rate)) y = 1 - y;
    out.push_back({std::move(x), y});
  }
  return out;
}

inline double noisy_error_formula(double clean_err, double eta) {
  detail::require(clean_err >= 0.0 && clean_err <= 1.0, "clean error must lie in [0, 1]");
  detail::require(eta >= 0.0 && eta < 0.5, "noise rate must lie in [0, 1/2)");
  return eta + clean_err * (1.0 - 2.0 * eta);
}

namespace detail {

inline void collect_breakpoints(const Hypothesis& h, std::vector<std::vector<double>>& breaks) {
  std::visit(
      [&](const auto& v) {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, Threshold>) {
          breaks[0].push_back(v.t);
        } else if constexpr (std::is_same_v<T, Interval>) {
          breaks[0].push_back(v.lo);
          breaks[0].push_back(v.hi);
        } else if constexpr (std::is_same_v<T, Stump>) {
          breaks[v.feature].push_back(v.t);
        } else {
          for (const auto& m : v.members) collect_breakpoints(m, breaks);
        }
      },
      h.variant());
}

inline constexpr std::size_t kMaxCells = std::size_t{1} << 24;

// Exact disagreement volume on a uniform box. Every hypothesis here is
// constant on the cells of the grid cut by its breakpoints, so evaluating
// each cell at its center and weighting by volume is exact.
inline double box_disagreement(const Hypothesis& h, const Hypothesis& target, const Box& box) {
  const std::size_t n = box.dimension();
  std::vector<std::vector<double>> breaks(n);
  collect_breakpoints(h, breaks);
  collect_breakpoints(target, breaks);

  std::vector<std::vector<double>> edges(n);
  std::size_t cells = 1;
  for (std::size_t f = 0; f < n; ++f) {
    auto& e = edges[f];
    e.push_back(box.lo[f]);
    std::sort(breaks[f].begin(), breaks[f].end());
    for (double b : breaks[f])
      if (b > box.lo[f] && b < box.hi[f] && b != e.back()) e.push_back(b);
    e.push_back(box.hi[f]);
    cells *= e.size() - 1;
    if (cells > kMaxCells) throw Unsupported("too many cells for exact error on a uniform box");
  }

  std::vector<std::size_t> idx(n, 0);
  Point x(n);
  double err = 0.0;
  for (std::size_t c = 0; c < cells; ++c) {
    double vol = 1.0;
    for (std::size_t f = 0; f < n; ++f) {
      const double a = edges[f][idx[f]], b = edges[f][idx[f] + 1];
      x[f] = a + 0.5 * (b - a);
      vol *= (b - a) / (box.hi[f] - box.lo[f]);
    }
    if (predict_unchecked(h, x) != predict_unchecked(target, x)) err += vol;
    for (std::size_t f = 0; f < n; ++f) {
      if (++idx[f] + 1 < edges[f].size()) break;
      idx[f] = 0;
    }
  }
  return std::clamp(err, 0.0, 1.0);
}

}  // namespace detail

/// Exact err_D(h) = Pr_{x~D}[h(x) != h*(x)].
inline double true_error(const Hypothesis& h, const CleanDistribution& d, const TargetConcept& target) {
  const std::size_t n = d.dimension();
  try {
    detail::check_dimension(h, n);
    detail::check_dimension(target.h_star, n);
  } catch (const InvalidArgument& e) {
    throw Unsupported(std::string("true_error: ") + e.what());
  }
  if (const auto* s = std::get_if<DiscreteSupport>(&d.variant())) {
    double err = 0.0;
    for (std::size_t i = 0; i < s->points.size(); ++i)
      if (detail::predict_unchecked(h, s->points[i]) != detail::predict_unchecked(target.h_star, s->points[i]))
        err += s->probs[i];
    return std::clamp(err, 0.0, 1.0);
  }
  return detail::box_disagreement(h, target.h_star, std::get<UniformBox>(d.variant()).box);
}

/// err_D(EX_eta, h) summed point by point over a discrete support: a point
/// h labels correctly disagrees with the noisy label with probability eta,
/// a misclassified point with probability 1 - eta.
inline double noisy_error_exact(const Hypothesis& h, const Player& p, const TargetConcept& target) {
  const auto* s = std::get_if<DiscreteSupport>(&p.clean.variant());
  if (s == nullptr) throw Unsupported("noisy_error_exact needs a discrete support");
  double err = 0.0;
  for (std::size_t i = 0; i < s->points.size(); ++i) {
    const bool agree = predict(h, s->points[i]) == target.label(s->points[i]);
    err += s->probs[i] * (agree ? p.noise_rate : 1.0 - p.noise_rate);
  }
  return err;
}

/// Players are addressed by id; the vector index must equal the id.
inline void check_player_ids(std::span<const Player> players) {
  for (std::size_t i = 0; i < players.size(); ++i)
    detail::require(players[i].id == i, "players must be stored in id order");
}

/// Draws m examples from a mixture of players: the center allocates the
/// draw multinomially and announces each quota, members send their examples.
/// Returns the shuffled union.
inline Sample sample_mixture(const MixtureSpec& mix, std::span<const Player> players, const TargetConcept& target,
                             std::uint64_t m, const Streams& streams, std::uint64_t round, CommLedger& ledger) {
  Rng alloc_rng = streams.center(round, Purpose::Allocation);
  const auto counts = multinomial_allocation(m, mix.weights, alloc_rng);
  charge_allocation_message(ledger, mix.members.size(), m, round);
  charge_samples(ledger, m, round, "mixture");

  Sample out;
  out.reserve(m);
  for (std::size_t i = 0; i < mix.members.size(); ++i) {
    if (counts[i] == 0) continue;
    const Player& p = players[mix.members[i]];
    Rng rng = streams.player(p.id, round, Purpose::MixtureDraw);
    Sample part = sample_noisy(p, target, counts[i], rng);
    for (auto& e : part) out.push_back(std::move(e));
  }
  Rng shuffle_rng = streams.center(round, Purpose::Shuffle);
  shuffle_rng.shuffle(std::span<LabeledExample>(out));
  return out;
}

}  // namespace cpl

#endif
