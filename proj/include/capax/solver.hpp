#ifndef CAPAX_SOLVER_HPP
#define CAPAX_SOLVER_HPP

// Builds interpolating networks: freeze the layers below the last hidden
// layer, then fit (W_L, v) per output row by damped Gauss-Newton.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/QR>

#include "capax/activation.hpp"
#include "capax/bounds.hpp"
#include "capax/error.hpp"
#include "capax/jacobian.hpp"
#include "capax/network.hpp"
#include "capax/numerical_rank.hpp"
#include "capax/parallel.hpp"
#include "capax/random.hpp"

namespace capax {

enum class InitPolicy {
  Spread,  ///< unit-scale features with kinks spread over the data range
  Domain,  ///< every argument inside the activations' convergence disks
};

inline std::string_view to_string(InitPolicy p) { return p == InitPolicy::Spread ? "spread" : "domain"; }

inline InitPolicy parse_init_policy(std::string_view s) {
  if (s == "spread") return InitPolicy::Spread;
  if (s == "domain") return InitPolicy::Domain;
  throw ValidationError("unknown init policy '" + std::string(s) + "'");
}

struct Damping {
  double initial_scale = 1e-3;  ///< lambda_0 = initial_scale * trace(J^T J) / unknowns
  double accept_factor = 1.0 / 3.0;
  double reject_factor = 10.0;
  double max_lambda = 1e15;  ///< beyond this the row is treated as stalled
  int halvings = 2;          ///< step halvings tried before a rejection
};

struct SolveConfig {
  std::vector<std::string> activations;  ///< one name per hidden layer; a single name is repeated
  double tol = 1e-8;                     ///< residual sup-norm target
  int max_iters = 3000;                  ///< iterations of the final continuation stage
  int stages = 20;                       ///< target continuation stages (1 disables continuation)
  int stage_iters = 300;
  double stage_tol = 1e-6;
  int max_restarts = 3;
  Damping damping;
  std::uint64_t seed = 0;
  InitPolicy init = InitPolicy::Spread;
  double gain = 30.0;   ///< slope scale of the last-but-one layer (spread policy)
  int directions = 64;  ///< candidate first-layer directions (spread policy)
  double chain_scalar = 0.5;
  std::optional<std::vector<long long>> widths;  ///< overrides the sufficient schedule
  unsigned threads = 1;
};

struct GaussNewtonStep {
  Vector delta;
  double predicted_reduction = 0.0;  ///< ||r||^2 - ||r - J delta||^2
  bool ok = true;
};

/// Solves (J^T J + lambda I) delta = J^T r. Uses the n x n dual system when J
/// has fewer rows than columns, and a minimum-norm least-squares solve when lambda = 0.
inline GaussNewtonStep gauss_newton_step(const Vector& r, const Matrix& jac, double lambda) {
  if (jac.rows() != r.size()) throw DimensionError("gauss_newton_step: J and r have different row counts");
  GaussNewtonStep step;
  const Eigen::Index n = jac.rows();
  const Eigen::Index p = jac.cols();
  if (r.isZero(0.0)) {
    step.delta = Vector::Zero(p);
    return step;
  }
  if (lambda <= 0.0) {
    step.delta = jac.completeOrthogonalDecomposition().solve(r);
  } else if (n <= p) {
    Matrix g = jac * jac.transpose();
    g.diagonal().array() += lambda;
    Eigen::LDLT<Matrix> ldlt(g);
    if (ldlt.info() != Eigen::Success || !ldlt.isPositive()) {
      step.ok = false;
      step.delta = Vector::Zero(p);
      return step;
    }
    step.delta = jac.transpose() * ldlt.solve(r);
  } else {
    Matrix g = jac.transpose() * jac;
    g.diagonal().array() += lambda;
    Eigen::LDLT<Matrix> ldlt(g);
    if (ldlt.info() != Eigen::Success || !ldlt.isPositive()) {
      step.ok = false;
      step.delta = Vector::Zero(p);
      return step;
    }
    step.delta = ldlt.solve(jac.transpose() * r);
  }
  step.ok = step.delta.allFinite();
  if (step.ok) step.predicted_reduction = r.squaredNorm() - (r - jac * step.delta).squaredNorm();
  return step;
}

/// One row's final layer: z = W^T xhat + b, output v^T act(z).
struct RowParameters {
  Matrix w;  ///< m_{L-1} x width
  Vector b;
  Vector v;
};

struct RowOutcome {
  RowParameters params;
  bool converged = false;
  bool stalled = false;
  double residual_sup = kInfinity;
  long long iterations = 0;
};

struct AttemptRecord {
  int attempt = 0;
  std::vector<double> row_residuals;
  std::vector<long long> row_iterations;
  bool converged = false;
};

struct Certificate {
  double residual_sup = 0.0;
  std::vector<long long> row_ranks;  ///< rank of the final-layer Jacobian per output row
  long long min_rank = 0;
  long long n = 0;
  bool full_rank = false;
  std::vector<double> smallest_singular_values;
};

struct SolveReport {
  bool converged = false;
  double residual_sup = kInfinity;
  double tol = 0.0;
  long long iterations = 0;
  int restarts = 0;
  long long rank = 0;  ///< min over output rows of the final-layer Jacobian rank
  bool full_rank = false;
  WidthSchedule schedule;
  bool schedule_overridden = false;
  std::vector<AttemptRecord> attempts;
  Certificate certificate;
  double wall_seconds = 0.0;
};

namespace detail {

inline double sup_norm(const Vector& r) { return r.size() == 0 ? 0.0 : r.cwiseAbs().maxCoeff(); }

/// Least-squares residual y - v^T act(W^T H + b) and the Jacobian in (vec W, v).
struct RowModel {
  const Matrix& features;  ///< m_{L-1} x n
  const Activation& act;

  Matrix activations(const RowParameters& p) const {
    Matrix z = p.w.transpose() * features;
    z.colwise() += p.b;
    return apply(act, z);
  }

  Vector predict(const RowParameters& p) const { return activations(p).transpose() * p.v; }

  Matrix jacobian(const RowParameters& p) const {
    Matrix z = p.w.transpose() * features;
    z.colwise() += p.b;
    const Matrix a = apply(act, z);
    const Matrix slope = apply_derivative(act, z);
    const Eigen::Index m = features.rows();
    const Eigen::Index width = p.w.cols();
    const Eigen::Index n = features.cols();
    Matrix j(n, m * width + width);
    for (Eigen::Index k = 0; k < width; ++k)
      for (Eigen::Index c = 0; c < m; ++c)
        for (Eigen::Index i = 0; i < n; ++i) j(i, k * m + c) = p.v(k) * slope(k, i) * features(c, i);
    j.rightCols(width) = a.transpose();
    return j;
  }

  RowParameters update(const RowParameters& p, const Vector& delta, double scale) const {
    RowParameters q = p;
    const Eigen::Index m = p.w.rows();
    const Eigen::Index width = p.w.cols();
    for (Eigen::Index k = 0; k < width; ++k)
      for (Eigen::Index c = 0; c < m; ++c) q.w(c, k) += scale * delta(k * m + c);
    q.v += scale * delta.tail(width);
    return q;
  }
};

/// Damped Gauss-Newton with step halving toward target y. Accepted steps
/// strictly decrease ||r||_2.
inline RowOutcome levenberg_marquardt(const RowModel& model, RowParameters p, const Vector& y, int max_iters,
                                      double tol, const Damping& damping) {
  RowOutcome out;
  Vector r = y - model.predict(p);
  double norm = r.norm();
  Matrix jac = model.jacobian(p);
  double lambda = damping.initial_scale * jac.squaredNorm() / static_cast<double>(jac.cols());
  if (!(lambda > 0.0)) lambda = damping.initial_scale;
  bool fresh = true;
  while (sup_norm(r) > tol && out.iterations < max_iters) {
    ++out.iterations;
    if (!fresh) jac = model.jacobian(p);
    fresh = false;
    const GaussNewtonStep step = gauss_newton_step(r, jac, lambda);
    bool accepted = false;
    if (step.ok) {
      double scale = 1.0;
      for (int h = 0; h <= damping.halvings && !accepted; ++h, scale *= 0.5) {
        const RowParameters trial = model.update(p, step.delta, scale);
        const Vector r_trial = y - model.predict(trial);
        const double trial_norm = r_trial.norm();
        if (std::isfinite(trial_norm) && trial_norm < norm) {
          p = trial;
          r = r_trial;
          norm = trial_norm;
          accepted = true;
        }
      }
    }
    if (accepted) {
      lambda *= damping.accept_factor;
    } else {
      lambda *= damping.reject_factor;
      fresh = true;  // parameters unchanged, reuse the Jacobian
      if (lambda > damping.max_lambda) {
        out.stalled = true;
        break;
      }
    }
  }
  out.params = std::move(p);
  out.residual_sup = sup_norm(r);
  out.converged = out.residual_sup <= tol;
  return out;
}

inline double rms(const Matrix& x) {
  const double s = std::sqrt(x.squaredNorm() / static_cast<double>(std::max<Eigen::Index>(x.size(), 1)));
  return s > 0.0 ? s : 1.0;
}

inline double min_sorted_gap(Vector t) {
  std::sort(t.data(), t.data() + t.size());
  double gap = kInfinity;
  for (Eigen::Index i = 1; i < t.size(); ++i) gap = std::min(gap, t(i) - t(i - 1));
  return gap;
}

/// Frozen layers 1..L-1 for one attempt. The final layer is left zero.
inline Network build_prefix(const Dataset& data, const WidthSchedule& row_schedule, const std::vector<Activation>& acts,
                            const SolveConfig& cfg, Rng& rng) {
  Network net = Network::zeros(row_schedule, acts);
  const int layers = net.L();
  net.biases = canonical_biases(acts, row_schedule.widths);
  const double scale_x = rms(data.X);
  const long long d = data.d();
  if (cfg.init == InitPolicy::Domain) {
    // Arguments of every activation stay within half its clipped radius.
    double bound = std::min(1.0, acts[0].rho) / (2.0 * data.X.norm());
    if (layers == 2) {
      Matrix w(d, row_schedule.widths[0]);
      for (Eigen::Index i = 0; i < w.size(); ++i) w(i) = rng.gaussian();
      net.weights[0] = w * (bound / w.norm());
      return net;
    }
    Vector u(d);
    for (Eigen::Index i = 0; i < d; ++i) u(i) = rng.gaussian();
    net.weights[0].col(0) = u * (bound / u.norm());
    double a = std::max(sup_abs_on_interval(acts[0], std::min(1.0, acts[0].rho)), 1e-300);
    for (int l = 1; l + 1 < layers; ++l) {
      const double c = std::min(1.0, acts[l].rho);
      if (l + 2 < layers) {
        net.weights[l](0, 0) = c / (2.0 * a);
      } else {
        Vector v(row_schedule.widths[l]);
        for (Eigen::Index i = 0; i < v.size(); ++i) v(i) = rng.gaussian();
        net.weights[l].row(0) = v.transpose() * (c / (2.0 * a * v.cwiseAbs().maxCoeff()));
      }
      a = std::max(sup_abs_on_interval(acts[l], c), 1e-300);
    }
    return net;
  }
  if (layers == 2) {
    Matrix& w = net.weights[0];
    for (Eigen::Index i = 0; i < w.size(); ++i) w(i) = rng.gaussian();
    w /= std::sqrt(static_cast<double>(d)) * scale_x;
    return net;
  }
  // Width-one chain: pick the input direction whose outputs are best separated.
  Vector best_dir;
  Vector best_t;
  double best_gap = -1.0;
  for (int c = 0; c < std::max(cfg.directions, 1); ++c) {
    Vector dir(d);
    for (Eigen::Index i = 0; i < d; ++i) dir(i) = rng.gaussian();
    dir /= dir.norm() * scale_x;
    Vector t = data.X.transpose() * dir;
    for (Eigen::Index i = 0; i < t.size(); ++i) t(i) = acts[0].eval(t(i) + acts[0].eta);
    for (int l = 1; l + 2 < layers; ++l)
      for (Eigen::Index i = 0; i < t.size(); ++i) t(i) = acts[l].eval(cfg.chain_scalar * t(i) + acts[l].eta);
    const double gap = min_sorted_gap(t);
    if (gap > best_gap) {
      best_gap = gap;
      best_dir = dir;
      best_t = t;
    }
  }
  net.weights[0].col(0) = best_dir;
  for (int l = 1; l + 2 < layers; ++l) net.weights[l](0, 0) = cfg.chain_scalar;
  const double lo = best_t.minCoeff();
  const double hi = best_t.maxCoeff();
  const double span = hi > lo ? hi - lo : 1.0;
  const int last = layers - 2;
  const long long m = row_schedule.widths[static_cast<std::size_t>(last)];
  for (long long k = 0; k < m; ++k) {
    const double slope = cfg.gain * rng.gaussian() / span;
    const double centre = rng.uniform(lo, hi);
    net.weights[static_cast<std::size_t>(last)](0, k) = slope;
    net.biases[static_cast<std::size_t>(last)](k) = acts[static_cast<std::size_t>(last)].eta - slope * centre;
  }
  return net;
}

/// Solves one output row against fixed features.
inline RowOutcome solve_row(const Matrix& features, const Activation& act, double eta, long long width, const Vector& y,
                            const SolveConfig& cfg, Rng& rng) {
  const Eigen::Index m = features.rows();
  RowParameters p;
  p.w = Matrix(m, width);
  if (cfg.init == InitPolicy::Domain) {
    for (Eigen::Index i = 0; i < p.w.size(); ++i) p.w(i) = rng.gaussian();
    const double a = std::max(features.cwiseAbs().maxCoeff(), 1e-300);
    const double radius = std::isfinite(act.rho) ? act.rho : 1.0;
    p.w *= radius / (2.0 * a * p.w.cwiseAbs().colwise().sum().maxCoeff());
  } else {
    for (Eigen::Index i = 0; i < p.w.size(); ++i) p.w(i) = rng.gaussian();
    p.w /= std::sqrt(static_cast<double>(m)) * rms(features);
  }
  p.b = Vector::Constant(width, eta);
  const RowModel model{features, act};
  // Output weights by minimum-norm least squares; y = 0 gives v = 0.
  p.v = model.activations(p).transpose().completeOrthogonalDecomposition().solve(y);
  RowOutcome total;
  const Vector start = model.predict(p);
  const int stages = std::max(cfg.stages, 1);
  if (sup_norm(y - start) <= cfg.tol) {
    total.params = p;
    total.converged = true;
    total.residual_sup = sup_norm(y - start);
    return total;
  }
  for (int s = 1; s <= stages; ++s) {
    const bool final_stage = s == stages;
    const Vector target = final_stage ? y : Vector(start + (y - start) * (static_cast<double>(s) / stages));
    RowOutcome stage = levenberg_marquardt(model, p, target, final_stage ? cfg.max_iters : cfg.stage_iters,
                                           final_stage ? cfg.tol : std::max(cfg.stage_tol, cfg.tol), cfg.damping);
    total.iterations += stage.iterations;
    p = stage.params;
    if (final_stage) {
      total.converged = stage.converged;
      total.stalled = stage.stalled;
      total.residual_sup = stage.residual_sup;
    }
  }
  total.params = std::move(p);
  return total;
}

}  // namespace detail

/// Same input dims and explicit data, with activations resolved and checked.
inline std::vector<Activation> solver_activations(const SolveConfig& cfg, int layers) {
  std::vector<std::string> names = cfg.activations;
  if (names.empty()) names = {"tanh"};
  if (names.size() == 1) names.assign(static_cast<std::size_t>(layers), names.front());
  if (static_cast<int>(names.size()) != layers)
    throw ValidationError("expected " + std::to_string(layers) + " activations, got " + std::to_string(names.size()));
  std::vector<Activation> acts;
  for (const auto& n : names) acts.push_back(builtin(n));
  for (int l = 0; l < layers; ++l) {
    const Activation& a = acts[static_cast<std::size_t>(l)];
    if (l + 2 < layers) {
      if (!a.nontrivial_analytic())
        throw HypothesisError("layer " + std::to_string(l + 1) + " activation '" + a.name +
                              "' must be analytic and nontrivial at its expansion point");
    } else if (!a.non_polynomial_analytic()) {
      throw HypothesisError("layer " + std::to_string(l + 1) + " activation '" + a.name +
                            "' must be analytic and not a polynomial at its expansion point");
    }
  }
  return acts;
}

/// Residual and final-layer Jacobian rank of a network on a dataset.
inline Certificate certify_solution(const Network& net, const Dataset& data, const TolerancePolicy& tol = {}) {
  data.validate();
  Certificate c;
  c.n = data.n();
  const Matrix out = forward(net, data.X);
  if (out.rows() != data.Y.rows()) throw DimensionError("network output dimension differs from targets");
  c.residual_sup = (out - data.Y).cwiseAbs().maxCoeff();
  c.min_rank = std::numeric_limits<long long>::max();
  for (int j = 0; j < net.schedule.d_prime; ++j) {
    const RankEstimate est = numerical_rank<double>(final_layer_jacobian(net, data.X, j).matrix, tol);
    c.row_ranks.push_back(est.rank);
    c.smallest_singular_values.push_back(est.singular_values.empty() ? 0.0 : est.singular_values.back());
    c.min_rank = std::min<long long>(c.min_rank, est.rank);
  }
  c.full_rank = c.min_rank == c.n;
  return c;
}

/// Builds a network whose outputs match data.Y on data.X to within cfg.tol.
inline std::pair<Network, SolveReport> interpolate(const Dataset& data, const SolveConfig& cfg) {
  const auto start_time = std::chrono::steady_clock::now();
  data.validate();
  if (!(cfg.tol > 0.0)) throw ValidationError("tolerance must be positive");
  if (cfg.max_iters < 1) throw ValidationError("max_iters must be at least 1");
  if (cfg.max_restarts < 0) throw ValidationError("max_restarts must be nonnegative");
  if (const auto dup = duplicate_columns(data.X); !dup.empty())
    throw ValidationError("inputs " + std::to_string(dup.front().first + 1) + " and " +
                          std::to_string(dup.front().second + 1) + " coincide; data is not generic");
  SolveReport rep;
  rep.tol = cfg.tol;
  const long long dprime = data.d_prime();
  if (cfg.widths) {
    rep.schedule = WidthSchedule{data.d(), *cfg.widths, dprime};
    rep.schedule_overridden = true;
  } else {
    const int layers = cfg.activations.size() > 1 ? static_cast<int>(cfg.activations.size()) : 2;
    rep.schedule = sufficient_schedule(ProblemShape{data.n(), data.d(), dprime, layers});
  }
  rep.schedule.validate();
  const int layers = rep.schedule.L();
  if (layers < 2) throw ValidationError("the solver needs at least two hidden layers");
  if (rep.schedule.widths.back() % dprime != 0)
    throw ValidationError("final width must be a multiple of the output dimension");
  const auto acts = solver_activations(cfg, layers);
  const long long row_width = rep.schedule.widths.back() / dprime;
  WidthSchedule row_schedule = rep.schedule;
  row_schedule.widths.back() = row_width;
  row_schedule.d_prime = 1;

  Network best;
  for (int attempt = 0; attempt <= cfg.max_restarts; ++attempt) {
    Rng prefix_rng(stream_seed(cfg.seed, static_cast<std::uint64_t>(attempt), 0));
    const Network prefix = detail::build_prefix(data, row_schedule, acts, cfg, prefix_rng);
    const Matrix features = hidden_features(prefix, data.X, layers - 1);
    std::vector<RowOutcome> rows(static_cast<std::size_t>(dprime));
    parallel_for(rows.size(), cfg.threads, [&](std::size_t j) {
      Rng rng(stream_seed(cfg.seed, static_cast<std::uint64_t>(attempt), 1 + j));
      rows[j] = detail::solve_row(features, acts.back(), acts.back().eta, row_width,
                                  Vector(data.Y.row(static_cast<Eigen::Index>(j)).transpose()), cfg, rng);
    });
    AttemptRecord record;
    record.attempt = attempt;
    record.converged = true;
    std::vector<Network> nets;
    for (const auto& row : rows) {
      record.row_residuals.push_back(row.residual_sup);
      record.row_iterations.push_back(row.iterations);
      record.converged = record.converged && row.converged;
      rep.iterations += row.iterations;
      Network net = prefix;
      net.weights.back() = row.params.w;
      net.biases.back() = row.params.b;
      net.output = row.params.v;
      nets.push_back(std::move(net));
    }
    rep.attempts.push_back(record);
    rep.restarts = attempt;
    best = block_diag_lift(nets);
    if (record.converged) break;
  }
  rep.certificate = certify_solution(best, data);
  rep.residual_sup = rep.certificate.residual_sup;
  rep.converged = rep.attempts.back().converged && rep.residual_sup <= cfg.tol;
  rep.rank = rep.certificate.min_rank;
  rep.full_rank = rep.certificate.full_rank;
  rep.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start_time).count();
  return {std::move(best), std::move(rep)};
}

/// Standard-normal dataset with distinct inputs, for experiments and tests.
inline Dataset random_dataset(long long n, long long d, long long dprime, std::uint64_t seed) {
  Rng rng(seed);
  Dataset data;
  data.X = Matrix(d, n);
  data.Y = Matrix(dprime, n);
  for (Eigen::Index i = 0; i < data.X.size(); ++i) data.X(i) = rng.gaussian();
  for (Eigen::Index i = 0; i < data.Y.size(); ++i) data.Y(i) = rng.gaussian();
  return data;
}

}  // namespace capax

#endif  // CAPAX_SOLVER_HPP
