#ifndef CAPAX_NUMERICAL_RANK_HPP
#define CAPAX_NUMERICAL_RANK_HPP

#include <algorithm>
#include <limits>
#include <string>
#include <vector>

#include <Eigen/SVD>

#include "capax/error.hpp"
#include "capax/numeric.hpp"

namespace capax {

/// How singular values are cut into "retained" and "numerically zero".
struct TolerancePolicy {
  enum class Kind {
    Default,   ///< max(rows, cols) * sigma_max * eps * safety
    Absolute,  ///< fixed threshold
    Gap,       ///< cut at the largest ratio sigma_r / sigma_{r+1} among cuts below ceiling * sigma_max
  };
  Kind kind = Kind::Default;
  double safety = 64.0;
  double absolute = 0.0;
  double ceiling = 1e-6;

  static TolerancePolicy fixed(double tol) {
    TolerancePolicy p;
    p.kind = Kind::Absolute;
    p.absolute = tol;
    return p;
  }
  static TolerancePolicy gap(double ceiling = 1e-6) {
    TolerancePolicy p;
    p.kind = Kind::Gap;
    p.ceiling = ceiling;
    return p;
  }

  std::string describe() const {
    switch (kind) {
      case Kind::Default: return "default: max(rows,cols)*sigma_max*eps*" + std::to_string(safety);
      case Kind::Absolute: return "absolute: " + std::to_string(absolute);
      case Kind::Gap: return "gap: largest sigma_r/sigma_{r+1} with sigma_{r+1} <= " + std::to_string(ceiling) + "*sigma_max";
    }
    return "unknown";
  }
};

struct RankEstimate {
  int rank = 0;
  std::vector<double> singular_values;  ///< descending (rounded to double for reporting)
  double tolerance = 0.0;
  std::string tol_policy;
  double epsilon = 0.0;  ///< machine epsilon of the arithmetic used
  /// sigma_r / sigma_{r+1} at the cut; infinity when nothing lies below the cut.
  double spectral_gap = kInfinity;
  double min_retained = 0.0;  ///< sigma_r, or 0 when rank is 0
};

/// Rank from a full SVD, computed in the scalar type T (double or HighPrecision).
template <class T>
RankEstimate numerical_rank(const MatrixX<T>& m, const TolerancePolicy& policy = {}) {
  for (Eigen::Index j = 0; j < m.cols(); ++j)
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
      using std::isfinite;
      if (!static_cast<bool>(isfinite(m(i, j)))) throw ValidationError("numerical_rank: non-finite entry");
    }
  RankEstimate est;
  est.tol_policy = policy.describe();
  const T eps = std::numeric_limits<T>::epsilon();
  est.epsilon = to_double(eps);
  std::vector<T> sigma;
  if (m.size() > 0) {
    Eigen::JacobiSVD<MatrixX<T>> svd(m);
    const auto& s = svd.singularValues();
    sigma.assign(s.data(), s.data() + s.size());
  }
  std::sort(sigma.begin(), sigma.end(), [](const T& a, const T& b) { return a > b; });
  for (const auto& s : sigma) est.singular_values.push_back(to_double(s));
  const T smax = sigma.empty() ? T(0) : sigma.front();

  T tol(0);
  switch (policy.kind) {
    case TolerancePolicy::Kind::Default:
      tol = T(static_cast<double>(std::max(m.rows(), m.cols()))) * smax * eps * T(policy.safety);
      break;
    case TolerancePolicy::Kind::Absolute:
      tol = T(policy.absolute);
      break;
    case TolerancePolicy::Kind::Gap: {
      // candidate cut after index r (rank r+1), next value sigma[r+1]; cutting at 0 (rank 0) excluded
      const T ceiling = T(policy.ceiling) * smax;
      T best_ratio(-1);
      int best_rank = static_cast<int>(sigma.size());
      for (std::size_t r = 0; r + 1 < sigma.size(); ++r) {
        if (sigma[r + 1] > ceiling) continue;
        const T ratio = sigma[r + 1] > T(0) ? T(sigma[r] / sigma[r + 1]) : T(std::numeric_limits<double>::max());
        if (ratio > best_ratio) {
          best_ratio = ratio;
          best_rank = static_cast<int>(r) + 1;
        }
      }
      tol = best_rank < static_cast<int>(sigma.size()) ? sigma[static_cast<std::size_t>(best_rank)] : T(0);
      break;
    }
  }
  est.tolerance = to_double(tol);
  est.rank = static_cast<int>(std::count_if(sigma.begin(), sigma.end(), [&](const T& s) { return s > tol; }));
  if (est.rank > 0) est.min_retained = to_double(sigma[static_cast<std::size_t>(est.rank) - 1]);
  if (est.rank > 0 && static_cast<std::size_t>(est.rank) < sigma.size()) {
    const T next = sigma[static_cast<std::size_t>(est.rank)];
    est.spectral_gap = next > T(0) ? to_double(T(sigma[static_cast<std::size_t>(est.rank) - 1] / next)) : kInfinity;
  }
  return est;
}

}  // namespace capax

#endif  // CAPAX_NUMERICAL_RANK_HPP
