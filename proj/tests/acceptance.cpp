// End-to-end acceptance run. Prints one PASS/FAIL line per criterion and
// exits nonzero if any criterion fails.
#include <chrono>
#include <cstdio>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "capax/capax.hpp"
#include "support.hpp"

namespace {

using namespace capax;
using capax::testing::gaussian;
using capax::testing::gaussian_vector;

struct Outcome {
  bool pass = true;
  std::string detail;
};

class Stopwatch {
 public:
  double seconds() const { return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count(); }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

std::vector<ProblemShape> necessity_grid() {
  std::vector<ProblemShape> grid;
  for (long long n : {1, 5, 20, 100, 200})
    for (long long d : {1, 2, 5, 10})
      for (long long dp : {1, 2, 5, 10})
        for (int L : {2, 3, 4}) grid.push_back({n, d, dp, L});
  return grid;
}

Outcome necessity() {
  Stopwatch clock;
  long long violations = 0, leaves = 0;
  for (const auto& shape : necessity_grid()) {
    const auto v = brute_force_verify_necessity(shape, exhaustive_cap(shape));
    violations += v.violations;
    leaves += v.schedules_checked;
  }
  const double t = clock.seconds();
  return {violations == 0 && t < 60.0,
          fmt("%zu shapes, %lld leaves, %lld violations, %.1f s", necessity_grid().size(), leaves, violations, t)};
}

SolveConfig solver_config(int layers, std::uint64_t seed, unsigned threads = 1) {
  SolveConfig cfg;
  cfg.activations.assign(static_cast<std::size_t>(layers), "tanh");
  cfg.seed = seed;
  cfg.threads = threads;
  return cfg;
}

Dataset pinned_dataset(std::uint64_t seed) { return random_dataset(50, 5, 2, stream_seed(seed, 0xDA7A)); }

Outcome sufficiency() {
  Stopwatch clock;
  Outcome out;
  int converged = 0, runs = 0;
  double worst = 0.0;
  for (int layers : {2, 3})
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
      ++runs;
      const auto data = pinned_dataset(seed);
      const auto [net, rep] = interpolate(data, solver_config(layers, seed));
      const bool ok = rep.converged && rep.residual_sup <= 1e-6 && rep.restarts <= 3 && rep.rank == data.n() &&
                      rep.schedule.widths == sufficient_schedule(ProblemShape{50, 5, 2, layers}).widths;
      worst = std::max(worst, rep.residual_sup);
      if (ok) {
        ++converged;
      } else {
        out.pass = false;
        out.detail += fmt("[L=%d seed=%d residual %.2e restarts %d rank %lld] ", layers, static_cast<int>(seed),
                          rep.residual_sup, rep.restarts, rep.rank);
      }
    }
  const double t = clock.seconds();
  out.pass = out.pass && t < 300.0;
  out.detail += fmt("%d/%d converged, worst residual %.2e, %.1f s", converged, runs, worst, t);
  return out;
}

RankExperimentConfig rank_config(RankExperiment e, RankDims dims, std::vector<std::string> acts, int trials,
                                 unsigned threads = 1) {
  RankExperimentConfig c;
  c.experiment = e;
  c.dims = dims;
  c.activations = std::move(acts);
  c.trials = trials;
  c.seed = 2024;
  c.threads = threads;
  return c;
}

std::vector<RankExperimentConfig> positive_suites(unsigned threads = 1) {
  return {rank_config(RankExperiment::RankOne, {6, 4, 2, 0}, {"tanh", "tanh"}, 50, threads),
          rank_config(RankExperiment::Full, {10, 4, 3, 5}, {"tanh", "tanh"}, 50, threads),
          rank_config(RankExperiment::Narrow, {8, 5, 3, 6}, {"sin", "tanh", "tanh"}, 50, threads)};
}

Outcome generic_rank() {
  Stopwatch clock;
  Outcome out;
  for (const auto& cfg : positive_suites()) {
    const auto rep = run_rank_experiment(cfg);
    out.pass = out.pass && rep.all_pass;
    out.detail += fmt("%s %.0f%% ", std::string(to_string(cfg.experiment)).c_str(), 100.0 * rep.pass_rate);
  }
  const double t = clock.seconds();
  out.pass = out.pass && t < 30.0;
  out.detail += fmt("%.1f s", t);
  return out;
}

Outcome negative_controls() {
  auto cfg = rank_config(RankExperiment::Full, {10, 2, 3, 5}, {"identity", "identity"}, 50);
  cfg.negative = true;
  const auto rep = run_rank_experiment(cfg);
  int collapsed = 0;
  for (const auto& t : rep.trials) collapsed += t.rank <= 4;

  Rng rng(stream_seed(2024, 4));
  int monomial_ok = 0;
  const int points = 20;
  const long long m = 3;
  for (int trial = 0; trial < points; ++trial) {
    const PolynomialSpec inner{{{static_cast<int>(rng.integer(1, 5)), random_rational(rng)}}};
    const auto outer = random_polynomial(rng, 5, 6);
    const auto u = random_distinct_rational_vector(rng, 8), v = random_distinct_rational_vector(rng, 4),
               w = random_distinct_rational_vector(rng, 4), z = random_distinct_rational_vector(rng, m);
    monomial_ok += exact_rank(nested_power_matrix(u, v, w, z, inner, outer)) <= m;
  }
  return {collapsed == 50 && monomial_ok == points,
          fmt("identity rank <= 4 in %d/50, monomial exact rank <= %lld in %d/%d", collapsed, m, monomial_ok, points)};
}

Outcome jacobians() {
  const std::vector<std::vector<std::string>> families = {
      {"tanh", "tanh"}, {"sigmoid", "softplus"}, {"gelu", "arctan"}, {"tanh", "sin", "exp"}, {"sin", "tanh", "gelu"}};
  double worst_final = 0.0, worst_three = 0.0;
  for (int k = 0; k < 20; ++k) {
    Rng rng(stream_seed(5005, k));
    const auto& acts = families[static_cast<std::size_t>(k) % families.size()];
    std::vector<long long> widths;
    for (std::size_t l = 0; l < acts.size(); ++l) widths.push_back(rng.integer(2, 5));
    const long long dprime = rng.integer(1, 3);
    const auto net = capax::testing::random_network(rng, {3, widths, dprime}, acts);
    const Matrix x = gaussian(rng, 3, 6, 1.0);
    for (int row = 0; row < dprime; ++row)
      worst_final = std::max(worst_final, finite_difference_check(net, x, 1e-6, row).max_rel_err);
  }
  for (int k = 0; k < 20; ++k) {
    Rng rng(stream_seed(5006, k));
    const Matrix x = gaussian(rng, 4, 6, 1.0), w = gaussian(rng, 4, 3, 0.2), u = gaussian(rng, 3, 4, 0.2);
    const Vector v = gaussian_vector(rng, 4);
    const auto& pair = families[static_cast<std::size_t>(k) % 3];
    worst_three = std::max(worst_three,
                           finite_difference_check_three_layer(x, w, u, v, builtin(pair[0]), builtin(pair[1])).max_rel_err);
  }
  return {worst_final <= 1e-6 && worst_three <= 1e-6,
          fmt("final layer %.2e, three layer %.2e over 20 configurations each", worst_final, worst_three)};
}

Outcome exact_oracles() {
  Rng rng(stream_seed(2024, 6));
  int cb = 0, fs = 0, det = 0, det_total = 0;
  for (int k = 0; k < 100; ++k) {
    const auto n = rng.integer(1, 4), N = rng.integer(n, 8);
    const auto a = random_rational_matrix(rng, n, N), b = random_rational_matrix(rng, N, n);
    cb += cauchy_binet_minor(a, b) == det_exact(a * b);
  }
  for (int k = 0; k < 100; ++k) {
    const auto n = rng.integer(1, 5);
    const auto a = random_rational_vector(rng, n), b = random_rational_vector(rng, rng.integer(1, 4));
    const auto c = random_rational_vector(rng, n), y = random_rational_vector(rng, rng.integer(1, 4));
    fs += face_split(outer(a, b), outer(c, y)) == outer(hadamard(a, c), kron(b, y));
  }
  for (long long size = 1; size <= 6; ++size)
    for (int k = 0; k < 10; ++k, ++det_total) {
      const auto m = random_rational_matrix(rng, size, size);
      det += det_leibniz(m) == det_bareiss(m);
    }
  return {cb == 100 && fs == 100 && det == det_total,
          fmt("Cauchy-Binet %d/100, face splitting %d/100, determinants %d/%d", cb, fs, det, det_total)};
}

Outcome reduction() {
  double worst = 0.0;
  int count = 0;
  for (int L : {3, 4, 5})
    for (int k = 0; k < (L == 3 ? 34 : 33); ++k, ++count) {
      Rng rng(stream_seed(7007, L, k));
      std::vector<long long> widths;
      for (int l = 0; l < L; ++l) widths.push_back(rng.integer(2, 6));
      const long long d = rng.integer(1, 4);
      auto net = capax::testing::random_network(rng, {d, widths, 1}, std::vector<std::string>(L, "tanh"));
      for (int l = 0; l + 1 < L; ++l) net.weights[l].bottomRows(net.weights[l].rows() - 1).setZero();
      const Matrix x = gaussian(rng, d, 10, 1.0);
      worst = std::max(worst, capax::testing::max_relative_difference(forward(reduce_to_narrow(net), x), forward(net, x)));
    }
  return {worst <= 1e-12 && count == 100, fmt("%d instances, worst relative error %.2e", count, worst)};
}

Outcome distinguished() {
  Rng rng(stream_seed(2024, 8));
  int ok = 0;
  for (int k = 0; k < 20; ++k) {
    const auto inner = random_polynomial(rng, static_cast<int>(rng.integer(6, 8)), 10);
    const auto outer = random_polynomial(rng, static_cast<int>(rng.integer(6, 8)), 10);
    const auto t = distinguished_tuple(6, inner, outer);
    bool good = !t.l.empty();
    for (std::size_t i = 0; i < t.l.size(); ++i) good = good && t.gamma[i] == t.expected[i] && t.gamma[i] != 0;
    ok += good;
  }
  return {ok == 20, fmt("%d/20 specs", ok)};
}

Outcome determinism() {
  Outcome out;
  int compared = 0, equal = 0;
  const auto base = positive_suites(1);
  for (unsigned threads : {2u, 4u}) {
    const auto other = positive_suites(threads);
    for (std::size_t i = 0; i < base.size(); ++i) {
      auto a = base[i], b = other[i];
      a.trials = b.trials = 20;
      ++compared;
      equal += to_json(run_rank_experiment(a)).dump() == to_json(run_rank_experiment(b)).dump();
    }
  }
  for (std::uint64_t seed : {1, 2}) {
    const auto data = pinned_dataset(seed);
    const auto [na, ra] = interpolate(data, solver_config(2, seed, 1));
    const auto [nb, rb] = interpolate(data, solver_config(2, seed, 2));
    ++compared;
    equal += to_json(na).dump() == to_json(nb).dump() && to_json(ra).dump() == to_json(rb).dump();
  }
  const ProblemShape shape{100, 10, 1, 2};
  ++compared;
  equal += to_json(brute_force_verify_necessity(shape, 12)).dump() == to_json(brute_force_verify_necessity(shape, 12)).dump();
  out.pass = equal == compared;
  out.detail = fmt("%d/%d payload pairs byte-identical", equal, compared);
  return out;
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria = {
      {"necessity enumeration", necessity},   {"sufficiency solver", sufficiency},
      {"generic rank suites", generic_rank},  {"negative controls", negative_controls},
      {"jacobian finite differences", jacobians}, {"exact oracle identities", exact_oracles},
      {"narrow reduction", reduction},        {"distinguished coefficient", distinguished},
      {"determinism", determinism}};
  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failures += !o.pass;
    std::printf("%s %zu %s: %s\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].first, o.detail.c_str());
    std::fflush(stdout);
  }
  return failures == 0 ? 0 : 1;
}
