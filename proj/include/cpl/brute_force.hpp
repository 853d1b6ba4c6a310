#ifndef CPL_BRUTE_FORCE_HPP
#define CPL_BRUTE_FORCE_HPP

#include <span>
#include <utility>
#include <vector>

#include "cpl/hypothesis.hpp"

namespace cpl {

/// Exhaustive minimizer used as ground truth for learn_erm. Enumerates one
/// representative of every labeling the class can induce on the sample,
/// anchored on the sample values themselves, and scores each with predict().
/// Shares no code with the gap scans in learn_erm.
inline std::pair<Hypothesis, double> brute_force_best(const HypothesisClassSpec& spec,
                                                      std::span<const LabeledExample> sample) {
  detail::require(!sample.empty(), "brute_force_best needs a nonempty sample");
  if (spec.kind != ClassKind::Threshold1D && spec.kind != ClassKind::Interval1D)
    throw Unsupported("brute_force_best supports Threshold1D and Interval1D only");

  std::vector<double> anchors;
  for (const auto& e : sample) anchors.push_back(e.x.at(0));
  double below = anchors[0];
  for (double a : anchors) below = a < below ? a : below;
  below -= 1.0;  // strictly left of every sample value

  Hypothesis best = Hypothesis::threshold(below);
  double best_err = 2.0;
  auto consider = [&](const Hypothesis& h) {
    const double err = empirical_error(h, sample);
    if (err < best_err) {
      best = h;
      best_err = err;
    }
  };

  if (spec.kind == ClassKind::Threshold1D) {
    // x <= a selects a prefix; x > a selects the complementary suffix.
    for (Polarity p : {Polarity::Positive, Polarity::Negative}) {
      consider(Hypothesis::threshold(below, p));
      for (double a : anchors) consider(Hypothesis::threshold(a, p));
    }
  } else {
    consider(Hypothesis::interval(below, below));
    for (double a : anchors)
      for (double b : anchors)
        if (a <= b) consider(Hypothesis::interval(a, b));
  }
  return {best, best_err};
}

}  // namespace cpl

#endif
