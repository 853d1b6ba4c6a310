#ifndef CPL_HYPOTHESIS_HPP
#define CPL_HYPOTHESIS_HPP

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <numeric>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "cpl/error.hpp"

namespace cpl {

using Point = std::vector<double>;

/// A feature vector with a binary label. Labels are 0 or 1 everywhere outside
/// the boosting internals.
struct LabeledExample {
  Point x;
  int y = 0;

  friend bool operator==(const LabeledExample&, const LabeledExample&) = default;
};

using Sample = std::vector<LabeledExample>;

/// Positive: label 1 iff x <= t. Negative: label 1 iff x > t.
enum class Polarity : std::uint8_t { Positive, Negative };

inline Polarity flip(Polarity p) { return p == Polarity::Positive ? Polarity::Negative : Polarity::Positive; }

struct Threshold {
  double t = 0.0;
  Polarity polarity = Polarity::Positive;

  friend bool operator==(const Threshold&, const Threshold&) = default;
};

/// Label 1 iff lo <= x <= hi.
struct Interval {
  double lo = 0.0;
  double hi = 0.0;

  friend bool operator==(const Interval&, const Interval&) = default;
};

/// Threshold on a single coordinate of an n-dimensional point.
struct Stump {
  std::size_t feature = 0;
  double t = 0.0;
  Polarity polarity = Polarity::Positive;

  friend bool operator==(const Stump&, const Stump&) = default;
};

class Hypothesis;

/// Weighted majority vote. Label 1 iff sum_i w_i (2 h_i(x) - 1) > 0; ties go to 0.
struct MajorityEnsemble {
  std::vector<Hypothesis> members;
  std::vector<double> weights;
};

enum class HypothesisKind : std::uint8_t { Threshold, Interval, Stump, MajorityEnsemble };

class Hypothesis {
 public:
  using Variant = std::variant<Threshold, Interval, Stump, MajorityEnsemble>;

  static Hypothesis threshold(double t, Polarity p = Polarity::Positive) { return Hypothesis(Threshold{t, p}); }

  static Hypothesis interval(double lo, double hi) {
    detail::require(lo <= hi, "interval requires lo <= hi");
    return Hypothesis(Interval{lo, hi});
  }

  static Hypothesis stump(std::size_t feature, double t, Polarity p = Polarity::Positive) {
    return Hypothesis(Stump{feature, t, p});
  }

  /// Depth-1 weighted majority. Members must be base hypotheses.
  static Hypothesis majority(std::vector<Hypothesis> members, std::vector<double> weights) {
    for (const auto& m : members)
      detail::require(!m.is_ensemble(), "majority members must not be ensembles");
    return make_majority(std::move(members), std::move(weights));
  }

  /// Unweighted vote over arbitrary hypotheses, including ensembles. Only the
  /// centralized protocols with a boosted per-round learner need this.
  static Hypothesis vote(std::vector<Hypothesis> members) {
    std::vector<double> weights(members.size(), 1.0);
    return make_majority(std::move(members), std::move(weights));
  }

  const Variant& variant() const { return v_; }
  HypothesisKind kind() const { return static_cast<HypothesisKind>(v_.index()); }
  bool is_ensemble() const { return std::holds_alternative<MajorityEnsemble>(v_); }

  template <typename T>
  const T& as() const { return std::get<T>(v_); }

  /// Smallest input dimension this hypothesis can be evaluated on, and
  /// whether it also requires exactly that dimension.
  std::size_t min_dimension() const {
    return std::visit(
        [](const auto& h) -> std::size_t {
          using T = std::decay_t<decltype(h)>;
          if constexpr (std::is_same_v<T, Stump>) {
            return h.feature + 1;
          } else if constexpr (std::is_same_v<T, MajorityEnsemble>) {
            std::size_t d = 1;
            for (const auto& m : h.members) d = std::max(d, m.min_dimension());
            return d;
          } else {
            return 1;
          }
        },
        v_);
  }
  bool requires_scalar() const {
    return std::visit(
        [](const auto& h) -> bool {
          using T = std::decay_t<decltype(h)>;
          if constexpr (std::is_same_v<T, Stump>) {
            return false;
          } else if constexpr (std::is_same_v<T, MajorityEnsemble>) {
            return std::any_of(h.members.begin(), h.members.end(),
                               [](const Hypothesis& m) { return m.requires_scalar(); });
          } else {
            return true;
          }
        },
        v_);
  }

  friend bool operator==(const Hypothesis& a, const Hypothesis& b) {
    if (a.v_.index() != b.v_.index()) return false;
    if (const auto* ea = std::get_if<MajorityEnsemble>(&a.v_)) {
      const auto& eb = std::get<MajorityEnsemble>(b.v_);
      return ea->weights == eb.weights && ea->members == eb.members;
    }
    return std::visit(
        [&](const auto& ha) -> bool {
          using T = std::decay_t<decltype(ha)>;
          if constexpr (std::is_same_v<T, MajorityEnsemble>) return false;
          else return ha == std::get<T>(b.v_);
        },
        a.v_);
  }

 private:
  explicit Hypothesis(Variant v) : v_(std::move(v)) {}

  static Hypothesis make_majority(std::vector<Hypothesis> members, std::vector<double> weights) {
    detail::require(!members.empty(), "majority ensemble needs at least one member");
    detail::require(members.size() == weights.size(), "majority ensemble weights must align with members");
    bool any_positive = false;
    for (double w : weights) {
      detail::require(std::isfinite(w) && w >= 0.0, "majority ensemble weights must be finite and nonnegative");
      any_positive = any_positive || w > 0.0;
    }
    detail::require(any_positive, "majority ensemble needs a positive weight");
    return Hypothesis(MajorityEnsemble{std::move(members), std::move(weights)});
  }

  Variant v_;
};

inline std::string to_string(const Hypothesis& h);

namespace detail {

inline int predict_unchecked(const Hypothesis& h, std::span<const double> x) {
  return std::visit(
      [&](const auto& v) -> int {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, Threshold>) {
          const bool le = x[0] <= v.t;
          return (v.polarity == Polarity::Positive) == le ? 1 : 0;
        } else if constexpr (std::is_same_v<T, Interval>) {
          return (v.lo <= x[0] && x[0] <= v.hi) ? 1 : 0;
        } else if constexpr (std::is_same_v<T, Stump>) {
          const bool le = x[v.feature] <= v.t;
          return (v.polarity == Polarity::Positive) == le ? 1 : 0;
        } else {
          double score = 0.0;
          for (std::size_t i = 0; i < v.members.size(); ++i)
            score += v.weights[i] * (2.0 * predict_unchecked(v.members[i], x) - 1.0);
          return score > 0.0 ? 1 : 0;
        }
      },
      h.variant());
}

inline void check_dimension(const Hypothesis& h, std::size_t n) {
  if (n < h.min_dimension() || (h.requires_scalar() && n != 1))
    throw InvalidArgument("point dimension " + std::to_string(n) + " does not match hypothesis");
}

}  // namespace detail

inline int predict(const Hypothesis& h, std::span<const double> x) {
  detail::check_dimension(h, x.size());
  return detail::predict_unchecked(h, x);
}

/// Axis-aligned feature domain. Thresholds that would sit at ±∞ are clamped here.
struct Box {
  std::vector<double> lo;
  std::vector<double> hi;

  static Box unit(std::size_t n) { return Box{std::vector<double>(n, 0.0), std::vector<double>(n, 1.0)}; }
  std::size_t dimension() const { return lo.size(); }

  friend bool operator==(const Box&, const Box&) = default;
};

enum class ClassKind : std::uint8_t { Threshold1D, Interval1D, StumpND };

/// A concrete finite-VC class plus the domain its learners clamp to.
struct HypothesisClassSpec {
  ClassKind kind = ClassKind::Threshold1D;
  std::size_t vc_dimension = 1;
  std::size_t dimension = 1;
  std::size_t grid_resolution = 256;
  Box domain = Box::unit(1);

  static HypothesisClassSpec threshold_1d(Box domain = Box::unit(1)) {
    return {ClassKind::Threshold1D, 1, 1, 256, std::move(domain)};
  }
  static HypothesisClassSpec interval_1d(Box domain = Box::unit(1)) {
    return {ClassKind::Interval1D, 2, 1, 256, std::move(domain)};
  }
  /// Stumps over n features. The VC dimension grows like log n; the default
  /// records 1 + ceil(log2 n), which agrees with Threshold1D at n = 1.
  static HypothesisClassSpec stumps(std::size_t n, std::size_t vc = 0) {
    detail::require(n >= 1, "stump class needs at least one feature");
    if (vc == 0) vc = 1 + static_cast<std::size_t>(std::bit_width(n - 1));
    return {ClassKind::StumpND, vc, n, 256, Box::unit(n)};
  }

  void validate() const {
    detail::require(vc_dimension >= 1, "vc_dimension must be positive");
    detail::require(grid_resolution >= 1, "grid resolution must be positive");
    detail::require(domain.dimension() == dimension, "domain box dimension must match class dimension");
    for (std::size_t i = 0; i < dimension; ++i)
      detail::require(domain.lo[i] < domain.hi[i], "domain box must have positive volume");
    switch (kind) {
      case ClassKind::Threshold1D:
        detail::require(vc_dimension == 1 && dimension == 1, "Threshold1D has VC dimension 1 on scalars");
        break;
      case ClassKind::Interval1D:
        detail::require(vc_dimension == 2 && dimension == 1, "Interval1D has VC dimension 2 on scalars");
        break;
      case ClassKind::StumpND:
        break;
    }
  }
};

inline std::string to_string(ClassKind k) {
  switch (k) {
    case ClassKind::Threshold1D: return "threshold";
    case ClassKind::Interval1D: return "interval";
    case ClassKind::StumpND: return "stump";
  }
  return "?";
}

/// True if h is a base hypothesis of the class, or a vote over such.
inline bool belongs_to(const Hypothesis& h, const HypothesisClassSpec& spec) {
  switch (h.kind()) {
    case HypothesisKind::Threshold: return spec.kind == ClassKind::Threshold1D;
    case HypothesisKind::Interval: return spec.kind == ClassKind::Interval1D;
    case HypothesisKind::Stump: return spec.kind == ClassKind::StumpND && h.as<Stump>().feature < spec.dimension;
    case HypothesisKind::MajorityEnsemble: {
      // Boosted ensembles are built from thresholds (scalar classes) or stumps.
      for (const auto& m : h.as<MajorityEnsemble>().members) {
        const bool ok = belongs_to(m, spec) ||
                        (spec.dimension == 1 && m.kind() == HypothesisKind::Threshold) ||
                        (m.kind() == HypothesisKind::Stump && m.as<Stump>().feature < spec.dimension);
        if (!ok) return false;
      }
      return true;
    }
  }
  return false;
}

inline double empirical_error(const Hypothesis& h, std::span<const LabeledExample> sample) {
  detail::require(!sample.empty(), "empirical_error needs a nonempty sample");
  std::size_t wrong = 0;
  for (const auto& e : sample) wrong += predict(h, e.x) != e.y ? 1 : 0;
  return static_cast<double>(wrong) / static_cast<double>(sample.size());
}

namespace detail {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

inline std::size_t sample_dimension(std::span<const LabeledExample> sample) {
  require(!sample.empty(), "sample must be nonempty");
  const std::size_t n = sample.front().x.size();
  require(n >= 1, "examples need at least one feature");
  for (const auto& e : sample) {
    require(e.x.size() == n, "all examples in a sample must share one dimension");
    require(e.y == 0 || e.y == 1, "labels must be 0 or 1");
  }
  return n;
}

/// Distinct feature values in increasing order with the label mass at each.
struct Column {
  std::vector<double> values;
  std::vector<double> mass1;
  std::vector<double> mass0;
};

inline Column make_column(std::span<const LabeledExample> sample, std::span<const double> weights, std::size_t j) {
  std::vector<std::size_t> order(sample.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return sample[a].x[j] < sample[b].x[j]; });
  Column c;
  for (std::size_t idx : order) {
    const double v = sample[idx].x[j];
    if (c.values.empty() || c.values.back() != v) {
      c.values.push_back(v);
      c.mass1.push_back(0.0);
      c.mass0.push_back(0.0);
    }
    (sample[idx].y == 1 ? c.mass1 : c.mass0).back() += weights[idx];
  }
  return c;
}

struct ThresholdCandidate {
  double error = kInf;
  double margin = -1.0;
  double t = 0.0;
  Polarity polarity = Polarity::Positive;
  std::size_t feature = 0;
};

// Lower error, then wider margin, then larger threshold, then positive
// polarity, then lower feature index.
inline bool better(const ThresholdCandidate& a, const ThresholdCandidate& b) {
  if (a.error != b.error) return a.error < b.error;
  if (a.margin != b.margin) return a.margin > b.margin;
  if (a.t != b.t) return a.t > b.t;
  if (a.polarity != b.polarity) return a.polarity == Polarity::Positive;
  return a.feature < b.feature;
}

// Threshold placed in gap g, i.e. v[g-1] <= t < v[g]. End gaps clamp to the box.
inline double gap_threshold(const std::vector<double>& v, std::size_t g, double box_lo, double box_hi) {
  const std::size_t u = v.size();
  if (g == 0) return box_lo < v[0] ? box_lo : std::nextafter(v[0], -kInf);
  if (g == u) return std::max(box_hi, v[u - 1]);
  return v[g - 1] + 0.5 * (v[g] - v[g - 1]);
}

inline double gap_width(const std::vector<double>& v, std::size_t g) {
  if (g == 0 || g == v.size()) return kInf;
  return v[g] - v[g - 1];
}

/// Best threshold on coordinate j over both polarities. O(m log m).
inline ThresholdCandidate scan_thresholds(std::span<const LabeledExample> sample, std::span<const double> weights,
                                          std::size_t j, double box_lo, double box_hi) {
  const Column c = make_column(sample, weights, j);
  const std::size_t u = c.values.size();
  const double pos = std::accumulate(c.mass1.begin(), c.mass1.end(), 0.0);
  const double neg = std::accumulate(c.mass0.begin(), c.mass0.end(), 0.0);
  ThresholdCandidate best;
  double left1 = 0.0, left0 = 0.0;
  for (std::size_t g = 0; g <= u; ++g) {
    if (g > 0) {
      left1 += c.mass1[g - 1];
      left0 += c.mass0[g - 1];
    }
    const double t = gap_threshold(c.values, g, box_lo, box_hi);
    const double margin = gap_width(c.values, g);
    const ThresholdCandidate plus{left0 + (pos - left1), margin, t, Polarity::Positive, j};
    const ThresholdCandidate minus{left1 + (neg - left0), margin, t, Polarity::Negative, j};
    if (better(plus, best)) best = plus;
    if (better(minus, best)) best = minus;
  }
  return best;
}

inline ThresholdCandidate scan_all_features(std::span<const LabeledExample> sample, std::span<const double> weights,
                                            std::size_t n, const Box* domain) {
  ThresholdCandidate best;
  for (std::size_t j = 0; j < n; ++j) {
    const double lo = domain ? domain->lo[j] : 0.0;
    const double hi = domain ? domain->hi[j] : 1.0;
    const ThresholdCandidate c = scan_thresholds(sample, weights, j, lo, hi);
    if (better(c, best)) best = c;
  }
  return best;
}

struct IntervalCandidate {
  double error = kInf;
  double margin = -1.0;
  double lo = 0.0;
  double hi = 0.0;
};

inline bool better(const IntervalCandidate& a, const IntervalCandidate& b) {
  if (a.error != b.error) return a.error < b.error;
  if (a.margin != b.margin) return a.margin > b.margin;
  if (a.lo != b.lo) return a.lo > b.lo;
  return a.hi > b.hi;
}

/// Exact ERM over intervals: every run of consecutive distinct values plus the
/// empty interval. O(m^2) after sorting.
inline IntervalCandidate scan_intervals(std::span<const LabeledExample> sample, double box_lo, double box_hi) {
  const std::vector<double> ones(sample.size(), 1.0);
  const Column c = make_column(sample, ones, 0);
  const std::size_t u = c.values.size();
  const auto& v = c.values;
  std::vector<double> pre1(u + 1, 0.0), pre0(u + 1, 0.0);
  for (std::size_t i = 0; i < u; ++i) {
    pre1[i + 1] = pre1[i] + c.mass1[i];
    pre0[i + 1] = pre0[i] + c.mass0[i];
  }
  const double pos = pre1[u];

  IntervalCandidate best;
  // Empty interval: a degenerate [p, p] away from every sample value.
  {
    IntervalCandidate empty{pos, 0.0, 0.0, 0.0};
    if (box_lo < v[0]) {
      empty.margin = kInf;
      empty.lo = empty.hi = box_lo;
    } else if (box_hi > v[u - 1]) {
      empty.margin = kInf;
      empty.lo = empty.hi = box_hi;
    } else if (u >= 2) {
      std::size_t g = 1;
      for (std::size_t k = 2; k < u; ++k)
        if (gap_width(v, k) > gap_width(v, g)) g = k;
      empty.margin = gap_width(v, g);
      empty.lo = empty.hi = gap_threshold(v, g, box_lo, box_hi);
    } else {
      empty.margin = kInf;
      empty.lo = empty.hi = v[0] + 1.0;
    }
    best = empty;
  }
  for (std::size_t i = 0; i < u; ++i) {
    const double lo = i == 0 ? std::min(box_lo, v[0]) : v[i - 1] + 0.5 * (v[i] - v[i - 1]);
    const double left_margin = gap_width(v, i);
    for (std::size_t j = i; j < u; ++j) {
      const double inside1 = pre1[j + 1] - pre1[i];
      const double inside0 = pre0[j + 1] - pre0[i];
      IntervalCandidate cand;
      cand.error = inside0 + (pos - inside1);
      cand.margin = std::min(left_margin, gap_width(v, j + 1));
      cand.lo = lo;
      cand.hi = j + 1 == u ? std::max(box_hi, v[u - 1]) : v[j] + 0.5 * (v[j + 1] - v[j]);
      if (better(cand, best)) best = cand;
    }
  }
  return best;
}

inline Hypothesis to_hypothesis(const ThresholdCandidate& c, bool as_stump) {
  return as_stump ? Hypothesis::stump(c.feature, c.t, c.polarity) : Hypothesis::threshold(c.t, c.polarity);
}

}  // namespace detail

/// Empirical risk minimizer over the class. Exact for every class: thresholds
/// and stumps scan all O(m) gaps per feature, intervals all O(m^2) runs.
/// Ties: fewest errors, then widest margin, then the rightmost parameter.
inline Hypothesis learn_erm(const HypothesisClassSpec& spec, std::span<const LabeledExample> sample) {
  spec.validate();
  const std::size_t n = detail::sample_dimension(sample);
  detail::require(n == spec.dimension, "sample dimension does not match the hypothesis class");
  const std::vector<double> ones(sample.size(), 1.0);
  switch (spec.kind) {
    case ClassKind::Threshold1D:
      return detail::to_hypothesis(detail::scan_all_features(sample, ones, 1, &spec.domain), false);
    case ClassKind::StumpND:
      return detail::to_hypothesis(detail::scan_all_features(sample, ones, n, &spec.domain), true);
    case ClassKind::Interval1D: {
      const auto best = detail::scan_intervals(sample, spec.domain.lo[0], spec.domain.hi[0]);
      return Hypothesis::interval(best.lo, best.hi);
    }
  }
  throw InvalidArgument("unknown hypothesis class");
}

/// A hypothesis with zero empirical error. For Threshold1D this is the
/// midpoint of the widest consistent gap.
inline Hypothesis learn_consistent(const HypothesisClassSpec& spec, std::span<const LabeledExample> sample) {
  Hypothesis h = learn_erm(spec, sample);
  if (empirical_error(h, sample) != 0.0)
    throw NoConsistentHypothesis("sample is not realizable by the " + to_string(spec.kind) + " class");
  return h;
}

struct WeakHypothesis {
  Hypothesis h;
  double weighted_error;
};

/// Minimizes weighted error over thresholds (scalar samples) or stumps.
/// The reported error never exceeds 1/2 because both polarities are scanned.
inline WeakHypothesis weak_learn(std::span<const LabeledExample> sample, std::span<const double> weights,
                                 const Box* domain = nullptr) {
  const std::size_t n = detail::sample_dimension(sample);
  detail::require(weights.size() == sample.size(), "weights must align with the sample");
  double total = 0.0;
  for (double w : weights) {
    detail::require(w >= 0.0 && std::isfinite(w), "weights must be nonnegative");
    total += w;
  }
  detail::require(std::abs(total - 1.0) <= 1e-9, "weights must sum to 1");
  const auto best = detail::scan_all_features(sample, weights, n, domain);
  return {detail::to_hypothesis(best, n > 1), std::clamp(best.error, 0.0, 0.5)};
}

inline std::string to_string(const Hypothesis& h) {
  auto pol = [](Polarity p) { return p == Polarity::Positive ? "+" : "-"; };
  return std::visit(
      [&](const auto& v) -> std::string {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, Threshold>) {
          return "Threshold(" + std::to_string(v.t) + "," + pol(v.polarity) + ")";
        } else if constexpr (std::is_same_v<T, Interval>) {
          return "Interval(" + std::to_string(v.lo) + "," + std::to_string(v.hi) + ")";
        } else if constexpr (std::is_same_v<T, Stump>) {
          return "Stump(" + std::to_string(v.feature) + "," + std::to_string(v.t) + "," + pol(v.polarity) + ")";
        } else {
          return "Majority[" + std::to_string(v.members.size()) + "]";
        }
      },
      h.variant());
}

}  // namespace cpl

#endif
