#ifndef CAPAX_RANK_LAB_HPP
#define CAPAX_RANK_LAB_HPP

// Seeded sampling experiments for the generic rank of the structured
// matrices act1(.) face-split act2(act1(.) .), with controls.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "capax/activation.hpp"
#include "capax/error.hpp"
#include "capax/exact.hpp"
#include "capax/numeric.hpp"
#include "capax/numerical_rank.hpp"
#include "capax/parallel.hpp"
#include "capax/products.hpp"
#include "capax/random.hpp"

namespace capax {

/// Which structured matrix an experiment samples.
enum class RankExperiment {
  PolynomialRankOne,  ///< inner(u v^T) . outer(inner(u v^T) w z^T) with polynomial activations ("thm3-poly")
  RankOne,            ///< same matrix, analytic non-polynomial activations ("thm4-rank1")
  Full,               ///< inner(X^T W) . outer(inner(X^T W) U) ("thm5-full")
  Narrow,             ///< inner(first(X^T u) v^T) . outer(inner(first(X^T u) v^T) W) ("thm6-narrow")
};

inline std::string_view to_string(RankExperiment t) {
  switch (t) {
    case RankExperiment::PolynomialRankOne: return "thm3-poly";
    case RankExperiment::RankOne: return "thm4-rank1";
    case RankExperiment::Full: return "thm5-full";
    case RankExperiment::Narrow: return "thm6-narrow";
  }
  return "unknown";
}

inline RankExperiment parse_experiment(std::string_view s) {
  if (s == "thm3-poly" || s == "thm3" || s == "poly-rank-one") return RankExperiment::PolynomialRankOne;
  if (s == "thm4-rank1" || s == "thm4" || s == "rank-one") return RankExperiment::RankOne;
  if (s == "thm5-full" || s == "thm5" || s == "full") return RankExperiment::Full;
  if (s == "thm6-narrow" || s == "thm6" || s == "narrow") return RankExperiment::Narrow;
  throw ValidationError("unknown rank experiment '" + std::string(s) + "'");
}

enum class Precision { Double, Extended };

inline std::string_view to_string(Precision p) { return p == Precision::Double ? "double" : "extended"; }

inline Precision parse_precision(std::string_view s) {
  if (s == "double") return Precision::Double;
  if (s == "extended") return Precision::Extended;
  throw ValidationError("unknown precision '" + std::string(s) + "'");
}

/// Shape parameters; which ones are used depends on the experiment.
struct RankDims {
  long long n = 0;
  long long d = 0;
  long long m = 0;
  long long ell = 0;
};

struct RankExperimentConfig {
  RankExperiment experiment = RankExperiment::Full;
  RankDims dims;
  /// inner, outer; the narrow experiment takes first, inner, outer (first defaults to sin).
  std::vector<std::string> activations = {"tanh", "tanh"};
  int trials = 50;
  std::uint64_t seed = 0;
  TolerancePolicy tol;
  Precision precision = Precision::Extended;
  bool negative = false;  ///< allow activations that violate the hypotheses (controls)
  unsigned threads = 1;
};

/// The rank lower bound claimed for generic points.
inline long long rank_bound(RankExperiment t, const RankDims& dims) {
  if (t == RankExperiment::PolynomialRankOne || t == RankExperiment::RankOne) {
    const long long blocks = dims.n / (dims.d - 1);
    return std::min(dims.m, blocks) * (dims.d - 1);
  }
  const long long blocks = dims.n / (dims.m - 1);
  return std::min(dims.ell, blocks) * (dims.m - 1);
}

/// Activations in role order: [inner, outer] or [first, inner, outer].
inline std::vector<Activation> resolve_activations(const RankExperimentConfig& cfg) {
  std::vector<Activation> acts;
  for (const auto& name : cfg.activations) acts.push_back(builtin(name));
  if (cfg.experiment == RankExperiment::Narrow && acts.size() == 2) acts.insert(acts.begin(), builtin("sin"));
  const std::size_t expected = cfg.experiment == RankExperiment::Narrow ? 3 : 2;
  if (acts.size() != expected)
    throw ValidationError("experiment '" + std::string(to_string(cfg.experiment)) + "' takes " +
                          std::to_string(expected) + " activations, got " + std::to_string(acts.size()));
  return acts;
}

inline void validate(const RankExperimentConfig& cfg, const std::vector<Activation>& acts) {
  const auto& dims = cfg.dims;
  if (cfg.trials < 1) throw ValidationError("at least one trial is required");
  if (dims.n < 1) throw ValidationError("n must be at least 1");
  switch (cfg.experiment) {
    case RankExperiment::PolynomialRankOne:
    case RankExperiment::RankOne:
      if (dims.d < 2) throw ValidationError("d must be at least 2 (the bound uses d - 1)");
      if (dims.m < 1) throw ValidationError("m must be at least 1");
      break;
    case RankExperiment::Full:
    case RankExperiment::Narrow:
      if (dims.d < 1) throw ValidationError("d must be at least 1");
      if (dims.m < 2) throw ValidationError("m must be at least 2 (the bound uses m - 1)");
      if (dims.ell < 1) throw ValidationError("ell must be at least 1");
      break;
  }
  if (cfg.experiment == RankExperiment::PolynomialRankOne) {
    for (const auto& a : acts)
      if (!a.polynomial) throw HypothesisError("activation '" + a.name + "' is not a polynomial");
    const long long needed = (dims.n / (dims.d - 1)) * (dims.d - 1);
    if (!cfg.negative)
      for (const auto& a : acts)
        if (static_cast<long long>(a.polynomial->size()) < needed)
          throw HypothesisError("polynomial '" + a.name + "' has " + std::to_string(a.polynomial->size()) +
                                " monomials, at least " + std::to_string(needed) + " are needed");
    return;
  }
  if (cfg.negative) return;
  const std::size_t first_nonpoly = cfg.experiment == RankExperiment::Narrow ? 1 : 0;
  if (cfg.experiment == RankExperiment::Narrow && !acts[0].nontrivial_analytic())
    throw HypothesisError("activation '" + acts[0].name + "' is not nontrivial analytic at its expansion point");
  for (std::size_t i = first_nonpoly; i < acts.size(); ++i)
    if (!acts[i].non_polynomial_analytic())
      throw HypothesisError("activation '" + acts[i].name + "' is not analytic-and-non-polynomial");
}

/// Parameters of one sample. Unused members stay empty.
struct RankPoint {
  Matrix X;  ///< d x n (full, narrow)
  Vector u, v, w, z;
  Matrix W, U;
};

struct SampledPoint {
  RankPoint point;
  bool in_domain = true;
  /// Largest |argument| / radius over all constraints (0 when every radius is infinite).
  double max_domain_ratio = 0.0;
};

namespace detail {

inline double clip_radius(double rho) { return std::min(1.0, rho); }
inline double outer_radius(double rho) { return std::isfinite(rho) ? rho : 1.0; }

inline Vector gaussian_vector(Rng& rng, long long n) {
  Vector v(n);
  for (long long i = 0; i < n; ++i) v(i) = rng.gaussian();
  return v;
}

/// Column-major fill order.
inline Matrix gaussian_matrix(Rng& rng, long long rows, long long cols) {
  Matrix m(rows, cols);
  for (long long j = 0; j < cols; ++j)
    for (long long i = 0; i < rows; ++i) m(i, j) = rng.gaussian();
  return m;
}

/// Largest column 1-norm.
inline double max_column_l1(const Matrix& m) { return m.cwiseAbs().colwise().sum().maxCoeff(); }

struct DomainTracker {
  bool inside = true;
  double ratio = 0.0;
  void check(double arg, double rho) {
    if (!std::isfinite(rho)) return;
    const double r = std::abs(arg) / rho;
    ratio = std::max(ratio, r);
    if (!(r < 1.0)) inside = false;
  }
};

inline double guarded(double a) { return a > 0.0 ? a : 1.0; }

}  // namespace detail

/// Standard-normal draw rescaled so every activation argument stays within
/// half the corresponding radius of convergence (or half of 1 when infinite).
inline SampledPoint sample_in_domain(RankExperiment experiment, const RankDims& dims, const std::vector<Activation>& acts,
                                     Rng& rng) {
  using detail::clip_radius;
  using detail::outer_radius;
  SampledPoint s;
  RankPoint& p = s.point;
  detail::DomainTracker dom;
  switch (experiment) {
    case RankExperiment::PolynomialRankOne:
    case RankExperiment::RankOne: {
      const Activation& inner = acts[0];
      const Activation& outer = acts[1];
      p.u = detail::gaussian_vector(rng, dims.n);
      p.v = detail::gaussian_vector(rng, dims.d);
      p.w = detail::gaussian_vector(rng, dims.d);
      p.z = detail::gaussian_vector(rng, dims.m);
      const double c1 = clip_radius(inner.rho);
      p.v *= c1 / (2.0 * p.u.norm() * p.v.norm());
      const double a = detail::guarded(sup_abs_on_interval(inner, c1));
      p.z *= outer_radius(outer.rho) / (2.0 * a * p.w.lpNorm<1>() * p.z.lpNorm<Eigen::Infinity>());
      const Matrix args = p.u * p.v.transpose();
      Matrix act = args;
      for (Eigen::Index j = 0; j < args.cols(); ++j)
        for (Eigen::Index i = 0; i < args.rows(); ++i) {
          dom.check(args(i, j), inner.rho);
          act(i, j) = inner.eval(args(i, j));
        }
      const Matrix second = (act * p.w) * p.z.transpose();
      for (Eigen::Index i = 0; i < second.size(); ++i) dom.check(second(i), outer.rho);
      break;
    }
    case RankExperiment::Full: {
      const Activation& inner = acts[0];
      const Activation& outer = acts[1];
      p.X = detail::gaussian_matrix(rng, dims.d, dims.n);
      p.W = detail::gaussian_matrix(rng, dims.d, dims.m);
      p.U = detail::gaussian_matrix(rng, dims.m, dims.ell);
      const double c1 = clip_radius(inner.rho);
      p.W *= c1 / (2.0 * p.X.norm() * p.W.norm());
      const double a = detail::guarded(sup_abs_on_interval(inner, c1));
      p.U *= outer_radius(outer.rho) / (2.0 * a * detail::max_column_l1(p.U));
      Matrix act = p.X.transpose() * p.W;
      for (Eigen::Index i = 0; i < act.size(); ++i) {
        dom.check(act(i), inner.rho);
        act(i) = inner.eval(act(i));
      }
      const Matrix second = act * p.U;
      for (Eigen::Index i = 0; i < second.size(); ++i) dom.check(second(i), outer.rho);
      break;
    }
    case RankExperiment::Narrow: {
      const Activation& first = acts[0];
      const Activation& inner = acts[1];
      const Activation& outer = acts[2];
      p.X = detail::gaussian_matrix(rng, dims.d, dims.n);
      p.u = detail::gaussian_vector(rng, dims.d);
      p.v = detail::gaussian_vector(rng, dims.m);
      p.W = detail::gaussian_matrix(rng, dims.m, dims.ell);
      const double c0 = clip_radius(first.rho);
      p.u *= c0 / (2.0 * p.X.norm() * p.u.norm());
      const double a0 = detail::guarded(sup_abs_on_interval(first, c0));
      const double c1 = clip_radius(inner.rho);
      p.v *= c1 / (2.0 * a0 * p.v.lpNorm<Eigen::Infinity>());
      const double a1 = detail::guarded(sup_abs_on_interval(inner, c1));
      p.W *= outer_radius(outer.rho) / (2.0 * a1 * detail::max_column_l1(p.W));
      Vector t = p.X.transpose() * p.u;
      for (Eigen::Index i = 0; i < t.size(); ++i) {
        dom.check(t(i), first.rho);
        t(i) = first.eval(t(i));
      }
      Matrix act = t * p.v.transpose();
      for (Eigen::Index i = 0; i < act.size(); ++i) {
        dom.check(act(i), inner.rho);
        act(i) = inner.eval(act(i));
      }
      const Matrix second = act * p.W;
      for (Eigen::Index i = 0; i < second.size(); ++i) dom.check(second(i), outer.rho);
      break;
    }
  }
  s.in_domain = dom.inside;
  s.max_domain_ratio = dom.ratio;
  return s;
}

/// Matrix operations shared by the floating and exact evaluation paths.
template <class M>
struct MatrixOps;

template <class T>
struct MatrixOps<MatrixX<T>> {
  using Scalar = T;
  static MatrixX<T> from(const Matrix& a) { return a.template cast<T>(); }
  static MatrixX<T> transpose(const MatrixX<T>& a) { return a.transpose(); }
  static void apply(const Activation& act, MatrixX<T>& a) {
    for (Eigen::Index i = 0; i < a.size(); ++i) a(i) = act.value(a(i));
  }
};

template <>
struct MatrixOps<RationalMatrix> {
  using Scalar = Rational;
  static RationalMatrix from(const Matrix& a) { return RationalMatrix::from_double(a); }
  static RationalMatrix transpose(const RationalMatrix& a) { return a.transpose(); }
  static void apply(const Activation& act, RationalMatrix& a) {
    for (long long i = 0; i < a.rows(); ++i)
      for (long long j = 0; j < a.cols(); ++j) a(i, j) = act.value(a(i, j));
  }
};

template <class M>
struct RankFactors {
  M inner;     ///< left face-splitting factor
  M outer;     ///< right face-splitting factor
  M combined;  ///< face_split(inner, outer)
};

/// Evaluates the experiment's matrix at a point in the arithmetic of M.
template <class M>
RankFactors<M> build_rank_matrix(RankExperiment experiment, const RankPoint& p, const std::vector<Activation>& acts) {
  using Ops = MatrixOps<M>;
  RankFactors<M> f;
  switch (experiment) {
    case RankExperiment::PolynomialRankOne:
    case RankExperiment::RankOne: {
      f.inner = Ops::from(Matrix(p.u)) * Ops::transpose(Ops::from(Matrix(p.v)));
      Ops::apply(acts[0], f.inner);
      f.outer = f.inner * Ops::from(Matrix(p.w)) * Ops::transpose(Ops::from(Matrix(p.z)));
      Ops::apply(acts[1], f.outer);
      break;
    }
    case RankExperiment::Full: {
      f.inner = Ops::transpose(Ops::from(p.X)) * Ops::from(p.W);
      Ops::apply(acts[0], f.inner);
      f.outer = f.inner * Ops::from(p.U);
      Ops::apply(acts[1], f.outer);
      break;
    }
    case RankExperiment::Narrow: {
      M t = Ops::transpose(Ops::from(p.X)) * Ops::from(Matrix(p.u));
      Ops::apply(acts[0], t);
      f.inner = t * Ops::transpose(Ops::from(Matrix(p.v)));
      Ops::apply(acts[1], f.inner);
      f.outer = f.inner * Ops::from(p.W);
      Ops::apply(acts[2], f.outer);
      break;
    }
  }
  f.combined = face_split(f.inner, f.outer);
  return f;
}

struct TrialResult {
  int trial = 0;
  std::uint64_t seed = 0;
  long long rank = 0;
  long long bound = 0;
  bool pass = false;
  bool full_row_rank = false;
  double min_retained = 0.0;
  double spectral_gap = kInfinity;
  double tolerance = 0.0;
  bool in_domain = true;
  double max_domain_ratio = 0.0;
  long long inner_rank = 0;
  long long outer_rank = 0;
  long long ceiling = 0;  ///< inner_rank * outer_rank
  bool within_ceiling = true;
};

struct RankReport {
  RankExperimentConfig config;
  long long bound = 0;
  long long rows = 0;
  long long cols = 0;
  std::string tol_policy;
  std::vector<TrialResult> trials;
  double pass_rate = 0.0;
  bool all_pass = false;
  bool all_in_domain = true;
  bool all_within_ceiling = true;
  double wall_seconds = 0.0;
};

namespace detail {

template <class T>
TrialResult evaluate_trial(const RankExperimentConfig& cfg, const std::vector<Activation>& acts, int trial) {
  TrialResult r;
  r.trial = trial;
  r.seed = stream_seed(cfg.seed, static_cast<std::uint64_t>(trial));
  Rng rng(r.seed);
  const SampledPoint s = sample_in_domain(cfg.experiment, cfg.dims, acts, rng);
  const auto f = build_rank_matrix<MatrixX<T>>(cfg.experiment, s.point, acts);
  const RankEstimate est = numerical_rank<T>(f.combined, cfg.tol);
  r.rank = est.rank;
  r.bound = rank_bound(cfg.experiment, cfg.dims);
  r.pass = r.rank >= r.bound;
  r.full_row_rank = r.rank == cfg.dims.n;
  r.min_retained = est.min_retained;
  r.spectral_gap = est.spectral_gap;
  r.tolerance = est.tolerance;
  r.in_domain = s.in_domain;
  r.max_domain_ratio = s.max_domain_ratio;
  r.inner_rank = numerical_rank<T>(f.inner, cfg.tol).rank;
  r.outer_rank = numerical_rank<T>(f.outer, cfg.tol).rank;
  r.ceiling = r.inner_rank * r.outer_rank;
  r.within_ceiling = r.rank <= r.ceiling;
  return r;
}

}  // namespace detail

inline RankReport run_rank_experiment(const RankExperimentConfig& cfg) {
  const auto start = std::chrono::steady_clock::now();
  const auto acts = resolve_activations(cfg);
  validate(cfg, acts);
  RankReport rep;
  rep.config = cfg;
  rep.bound = rank_bound(cfg.experiment, cfg.dims);
  rep.rows = cfg.dims.n;
  rep.cols = cfg.experiment == RankExperiment::Full || cfg.experiment == RankExperiment::Narrow ? cfg.dims.m * cfg.dims.ell
                                                                                   : cfg.dims.d * cfg.dims.m;
  rep.tol_policy = cfg.tol.describe();
  rep.trials.resize(static_cast<std::size_t>(cfg.trials));
  parallel_for(rep.trials.size(), cfg.threads, [&](std::size_t i) {
    rep.trials[i] = cfg.precision == Precision::Double
                        ? detail::evaluate_trial<double>(cfg, acts, static_cast<int>(i))
                        : detail::evaluate_trial<HighPrecision>(cfg, acts, static_cast<int>(i));
  });
  long long passed = 0;
  for (const auto& t : rep.trials) {
    passed += t.pass ? 1 : 0;
    rep.all_in_domain = rep.all_in_domain && t.in_domain;
    rep.all_within_ceiling = rep.all_within_ceiling && t.within_ceiling;
  }
  rep.pass_rate = static_cast<double>(passed) / static_cast<double>(rep.trials.size());
  rep.all_pass = passed == static_cast<long long>(rep.trials.size());
  rep.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return rep;
}

struct CrossCheck {
  long long exact_rank = 0;
  long long numerical_rank = 0;
  long long bound = 0;
  bool agree = false;
};

/// Rounds every coordinate to a multiple of 2^-bits so the point is exactly rational.
inline RankPoint round_to_dyadic(RankPoint p, int bits = 24) {
  const double scale = std::ldexp(1.0, bits);
  auto round = [&](auto& m) { m = (m.array() * scale).round() / scale; };
  round(p.X);
  round(p.u);
  round(p.v);
  round(p.w);
  round(p.z);
  round(p.W);
  round(p.U);
  return p;
}

/// Exact rank versus numerical rank at a given point; the activations must be polynomials.
inline CrossCheck cross_check_point(RankExperiment experiment, const RankDims& dims, const RankPoint& point,
                                    const std::vector<Activation>& acts, const TolerancePolicy& tol = {},
                                    Precision precision = Precision::Extended) {
  for (const auto& a : acts)
    if (!a.polynomial) throw UnsupportedError("exact cross-check needs polynomial activations, got '" + a.name + "'");
  if (dims.n > 8) throw ResourceError("exact cross-check is limited to n <= 8");
  CrossCheck c;
  c.exact_rank = exact_rank(build_rank_matrix<RationalMatrix>(experiment, point, acts).combined);
  c.numerical_rank = precision == Precision::Double
                         ? numerical_rank<double>(build_rank_matrix<Matrix>(experiment, point, acts).combined, tol).rank
                         : numerical_rank<HighPrecision>(
                               build_rank_matrix<MatrixX<HighPrecision>>(experiment, point, acts).combined, tol)
                               .rank;
  c.bound = rank_bound(experiment, dims);
  c.agree = c.exact_rank == c.numerical_rank;
  return c;
}

/// Re-samples the given trial of cfg, rounds it to a dyadic rational point and cross-checks.
inline CrossCheck cross_check_exact(const RankExperimentConfig& cfg, int trial) {
  const auto acts = resolve_activations(cfg);
  validate(cfg, acts);
  Rng rng(stream_seed(cfg.seed, static_cast<std::uint64_t>(trial)));
  const SampledPoint s = sample_in_domain(cfg.experiment, cfg.dims, acts, rng);
  return cross_check_point(cfg.experiment, cfg.dims, round_to_dyadic(s.point), acts, cfg.tol, cfg.precision);
}

}  // namespace capax

#endif  // CAPAX_RANK_LAB_HPP
