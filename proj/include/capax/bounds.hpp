#ifndef CAPAX_BOUNDS_HPP
#define CAPAX_BOUNDS_HPP

// Neuron-count bounds for interpolating n generic points: a necessary lower
// bound, a sufficient width schedule, and an exhaustive consistency check.

#include <cmath>
#include <cstdint>
#include <numeric>
#include <string>
#include <vector>

#include "capax/error.hpp"

namespace capax {

struct ProblemShape {
  long long n = 1;
  long long d = 1;
  long long d_prime = 1;
  int L = 2;  ///< number of hidden layers

  void validate() const {
    if (n < 1 || d < 1 || d_prime < 1) throw ValidationError("n, d and d' must be at least 1");
    if (L < 2) throw ValidationError("at least two hidden layers are required");
  }
};

struct WidthSchedule {
  long long d = 1;
  std::vector<long long> widths;
  long long d_prime = 1;

  int L() const { return static_cast<int>(widths.size()); }

  void validate() const {
    if (d < 1 || d_prime < 1) throw ValidationError("input and output dims must be at least 1");
    if (widths.empty()) throw ValidationError("schedule has no hidden layers");
    for (auto m : widths)
      if (m < 1) throw ValidationError("hidden width below 1");
  }

  bool operator==(const WidthSchedule&) const = default;
};

namespace detail {

inline long long unchecked_parameter_count(const WidthSchedule& s) {
  long long p = s.d * s.widths.front() + s.d_prime * s.widths.back();
  for (std::size_t l = 0; l < s.widths.size(); ++l) {
    p += s.widths[l];
    if (l + 1 < s.widths.size()) p += s.widths[l] * s.widths[l + 1];
  }
  return p;
}

}  // namespace detail

/// Number of weights and biases, output layer included (no output bias).
inline long long parameter_count(const WidthSchedule& s) {
  s.validate();
  return detail::unchecked_parameter_count(s);
}

inline long long hidden_neuron_count(const WidthSchedule& s) {
  return std::accumulate(s.widths.begin(), s.widths.end(), 0LL);
}

/// Hidden neurons plus output neurons.
inline long long neuron_count(const WidthSchedule& s) { return hidden_neuron_count(s) + s.d_prime; }

/// Smallest c >= 0 with c^2 >= x.
inline long long ceil_sqrt(long long x) {
  if (x <= 0) return 0;
  auto c = static_cast<long long>(std::sqrt(static_cast<double>(x)));
  while (c * c < x) ++c;
  while (c > 0 && (c - 1) * (c - 1) >= x) --c;
  return c;
}

/// The bound sqrt(radicand) - offset, kept in integer parts so comparisons
/// against integer neuron counts are exact.
struct NecessaryBound {
  long long radicand = 0;
  long long offset = 0;
  bool degenerate = false;  ///< radicand <= 0; the bound is reported as 0

  double value() const { return degenerate ? 0.0 : std::sqrt(static_cast<double>(radicand)) - offset; }

  /// Exact test of count < value().
  bool exceeds(long long count) const {
    if (degenerate) return count < 0;
    const long long t = count + offset;
    return t < 0 || t * t < radicand;
  }
};

inline NecessaryBound necessary_bound(const ProblemShape& shape) {
  shape.validate();
  const long long big = std::max(shape.d, shape.d_prime);
  const long long small = std::min(shape.d, shape.d_prime);
  NecessaryBound b;
  b.radicand = 2 * shape.n * shape.d_prime + (big + 1) * (big + 1) - 2 * small - 4LL * shape.L + 5;
  b.offset = big - shape.d_prime - shape.L + 2;
  b.degenerate = b.radicand <= 0;
  return b;
}

/// Real-valued lower bound on hidden-plus-output neurons; 0 in the degenerate regime.
inline double necessary_neurons(const ProblemShape& shape) { return necessary_bound(shape).value(); }

/// Widths (1, ..., 1, ceil(sqrt(2 n d')) + 1, d' * ceil(sqrt(2 n / d'))).
inline WidthSchedule sufficient_schedule(const ProblemShape& shape) {
  shape.validate();
  WidthSchedule s;
  s.d = shape.d;
  s.d_prime = shape.d_prime;
  s.widths.assign(static_cast<std::size_t>(shape.L - 2), 1);
  s.widths.push_back(ceil_sqrt(2 * shape.n * shape.d_prime) + 1);
  // smallest c with c^2 * d' >= 2n
  long long c = ceil_sqrt((2 * shape.n + shape.d_prime - 1) / shape.d_prime);
  while (c > 1 && (c - 1) * (c - 1) * shape.d_prime >= 2 * shape.n) --c;
  while (c * c * shape.d_prime < 2 * shape.n) ++c;
  s.widths.push_back(shape.d_prime * c);
  return s;
}

struct BoundReport {
  ProblemShape shape;
  double necessary_lower = 0.0;
  bool degenerate = false;
  WidthSchedule sufficient_widths;
  long long sufficient_neurons = 0;  ///< hidden neurons, the count used by the construction
  long long neuron_count = 0;        ///< hidden plus output neurons
  long long param_count = 0;
  double sufficiency_bound = 0.0;  ///< 2 sqrt(2 n d') + d' + L
  bool hidden_within_sufficiency = false;
  bool total_within_sufficiency = false;
  bool params_cover_constraints = false;  ///< param_count >= n d'
  /// Per-output final width w satisfies w >= 2 ceil(n / (m_{L-1} - 1)).
  bool doubled_width_condition = false;
  /// Per-output final width w satisfies w (m_{L-1} - 1) >= n.
  bool rank_condition = false;
};

namespace detail {

/// Exact test of count < 2 sqrt(2 n d') + d' + L.
inline bool below_sufficiency(long long count, const ProblemShape& s) {
  const long long t = count - s.d_prime - s.L;
  return t < 0 || t * t < 8 * s.n * s.d_prime;
}

}  // namespace detail

inline BoundReport bound_report(const ProblemShape& shape) {
  BoundReport r;
  r.shape = shape;
  const auto nb = necessary_bound(shape);
  r.necessary_lower = nb.value();
  r.degenerate = nb.degenerate;
  r.sufficient_widths = sufficient_schedule(shape);
  r.sufficient_neurons = hidden_neuron_count(r.sufficient_widths);
  r.neuron_count = neuron_count(r.sufficient_widths);
  r.param_count = parameter_count(r.sufficient_widths);
  r.sufficiency_bound = 2.0 * std::sqrt(2.0 * shape.n * shape.d_prime) + shape.d_prime + shape.L;
  r.hidden_within_sufficiency = detail::below_sufficiency(r.sufficient_neurons, shape);
  r.total_within_sufficiency = detail::below_sufficiency(r.neuron_count, shape);
  r.params_cover_constraints = r.param_count >= shape.n * shape.d_prime;
  const long long penultimate = r.sufficient_widths.widths[r.sufficient_widths.widths.size() - 2];
  const long long per_output = r.sufficient_widths.widths.back() / shape.d_prime;
  const long long slots = penultimate - 1;
  r.doubled_width_condition = slots > 0 && per_output >= 2 * ((shape.n + slots - 1) / slots);
  r.rank_condition = per_output * slots >= shape.n;
  return r;
}

struct NecessityVerdict {
  bool holds = true;
  long long violations = 0;
  long long schedules_checked = 0;  ///< leaves visited; pruned subtrees are certified without visiting
  long long feasible_schedules = 0; ///< visited leaves with param_count >= n d'
  bool found_feasible = false;
  WidthSchedule argmin;             ///< lexicographically first feasible schedule of minimal neuron count
  long long min_feasible_neurons = 0;
  double bound = 0.0;
  double gap = 0.0;  ///< min_feasible_neurons - bound
  WidthSchedule first_violation;
};

/// Exhaustive search over widths in [1, cap]^L. Asserts that every schedule
/// with at least n d' parameters has at least necessary_neurons neurons and
/// finds the cheapest such schedule. A subtree is skipped only when none of
/// its schedules can violate the bound or beat the current best.
inline NecessityVerdict brute_force_verify_necessity(const ProblemShape& shape, long long cap,
                                                     long long leaf_budget = 10'000'000) {
  shape.validate();
  if (cap < 1) throw ValidationError("width cap must be at least 1");
  const auto nb = necessary_bound(shape);
  const long long target = shape.n * shape.d_prime;
  NecessityVerdict v;
  v.bound = nb.value();
  WidthSchedule s;
  s.d = shape.d;
  s.d_prime = shape.d_prime;
  s.widths.assign(static_cast<std::size_t>(shape.L), 1);
  long long best = -1;

  auto recurse = [&](auto&& self, int depth, long long sum) -> void {
    const long long remaining = shape.L - depth;
    const long long lowest = sum + remaining + shape.d_prime;
    if (!nb.exceeds(lowest) && best >= 0 && lowest >= best) return;
    if (depth == shape.L) {
      if (++v.schedules_checked > leaf_budget)
        throw ResourceError("brute-force enumeration exceeded " + std::to_string(leaf_budget) + " schedules");
      if (detail::unchecked_parameter_count(s) < target) return;
      ++v.feasible_schedules;
      const long long count = sum + shape.d_prime;
      if (nb.exceeds(count)) {
        if (v.violations == 0) v.first_violation = s;
        ++v.violations;
      }
      if (best < 0 || count < best) {
        best = count;
        v.argmin = s;
      }
      return;
    }
    for (long long m = 1; m <= cap; ++m) {
      s.widths[static_cast<std::size_t>(depth)] = m;
      self(self, depth + 1, sum + m);
    }
    s.widths[static_cast<std::size_t>(depth)] = 1;
  };
  recurse(recurse, 0, 0);

  v.holds = v.violations == 0;
  v.found_feasible = best >= 0;
  if (v.found_feasible) {
    v.min_feasible_neurons = best;
    v.gap = static_cast<double>(best) - v.bound;
  }
  return v;
}

/// Cap that makes the check exhaustive over all integer schedules: a width
/// above the bound alone already exceeds it. Two extra levels leave room for
/// the minimal feasible schedule to be found.
inline long long exhaustive_cap(const ProblemShape& shape) {
  return static_cast<long long>(std::ceil(necessary_neurons(shape))) + 2;
}

}  // namespace capax

#endif  // CAPAX_BOUNDS_HPP
