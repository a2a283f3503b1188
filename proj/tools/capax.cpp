// capax command-line entry point.

#include <chrono>
#include <cstdlib>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "capax/capax.hpp"

namespace {

using capax::Json;

constexpr int kExitPass = 0;
constexpr int kExitFailure = 1;
constexpr int kExitUsage = 2;

class Stopwatch {
 public:
  double seconds() const { return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count(); }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ','))
    if (!item.empty()) out.push_back(item);
  return out;
}

std::vector<int> int_list(const std::string& s, const char* flag) {
  std::vector<int> out;
  for (const auto& item : split_list(s)) {
    std::size_t used = 0;
    int v = 0;
    try {
      v = std::stoi(item, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != item.size()) throw capax::ValidationError(std::string(flag) + ": '" + item + "' is not an integer");
    out.push_back(v);
  }
  return out;
}

std::vector<std::string> activation_names(const std::string& list) {
  std::vector<std::string> names;
  for (const auto& a : capax::parse_activation_list(list)) names.push_back(a.name);
  return names;
}

std::vector<capax::Rational> rational_list(const std::string& s, const char* flag) {
  std::vector<capax::Rational> out;
  for (const auto& item : split_list(s)) {
    try {
      out.push_back(capax::parse_rational(item));
    } catch (const std::exception&) {
      throw capax::ValidationError(std::string(flag) + ": '" + item + "' is not a rational");
    }
  }
  return out;
}

capax::TolerancePolicy parse_tolerance(const std::string& s) {
  if (s == "default") return {};
  if (s == "gap") return capax::TolerancePolicy::gap();
  if (s.rfind("gap:", 0) == 0) return capax::TolerancePolicy::gap(std::stod(s.substr(4)));
  if (s.rfind("abs:", 0) == 0) return capax::TolerancePolicy::fixed(std::stod(s.substr(4)));
  throw capax::ValidationError("tolerance policy must be default, gap, gap:<ceiling> or abs:<threshold>");
}

/// Writes the report to `out` when given, otherwise prints it.
void emit(const Json& report, const std::string& out) {
  if (out.empty()) {
    std::cout << report.dump(2) << "\n";
  } else {
    capax::write_json_file(out, report);
  }
}

Json outputs_of(std::initializer_list<std::pair<const char*, std::string>> paths) {
  Json j = Json::object();
  for (const auto& [key, path] : paths)
    if (!path.empty()) j[key] = path;
  return j;
}

// ---------------------------------------------------------------------------

struct BoundsArgs {
  long long n = 0, d = 0, dprime = 0, L = 0;
  std::optional<long long> brute_cap;
  std::string out;
};

int run_bounds(const BoundsArgs& a) {
  Stopwatch clock;
  const capax::ProblemShape shape{a.n, a.d, a.dprime, static_cast<int>(a.L)};
  Json payload = capax::to_json(capax::bound_report(shape));
  int code = kExitPass;
  Json config = capax::to_json(shape);
  if (a.brute_cap) {
    const long long cap = *a.brute_cap > 0 ? *a.brute_cap : capax::exhaustive_cap(shape);
    config["brute_cap"] = cap;
    const auto verdict = capax::brute_force_verify_necessity(shape, cap);
    payload["brute_force"] = capax::to_json(verdict);
    payload["brute_force"]["cap"] = cap;
    if (!verdict.holds) code = kExitFailure;
  }
  emit(capax::make_report("bounds", config, 0, payload, clock.seconds(), outputs_of({{"report", a.out}})), a.out);
  return code;
}

struct RankArgs {
  std::string experiment;
  long long n = 0, d = 1, m = 1, ell = 1;
  std::string act = "tanh,tanh";
  int trials = 50;
  std::uint64_t seed = 0;
  std::string out;
  std::string precision = "extended";
  std::string tol_policy = "default";
  bool negative = false;
  unsigned threads = 1;
  int exact_checks = 0;
};

int run_verify_rank(const RankArgs& a) {
  Stopwatch clock;
  capax::RankExperimentConfig cfg;
  cfg.experiment = capax::parse_experiment(a.experiment);
  cfg.dims = capax::RankDims{a.n, a.d, a.m, a.ell};
  cfg.activations = activation_names(a.act);
  cfg.trials = a.trials;
  cfg.seed = a.seed;
  cfg.tol = parse_tolerance(a.tol_policy);
  cfg.precision = capax::parse_precision(a.precision);
  cfg.negative = a.negative;
  cfg.threads = a.threads;
  if (cfg.trials < 1) throw capax::ValidationError("--trials must be at least 1");

  const auto rep = capax::run_rank_experiment(cfg);
  Json payload = capax::to_json(rep);
  bool ok = a.negative ? rep.all_within_ceiling : rep.all_pass;
  if (a.exact_checks > 0) {
    Json checks = Json::array();
    for (int t = 0; t < std::min(a.exact_checks, cfg.trials); ++t) {
      const auto c = capax::cross_check_exact(cfg, t);
      Json j = capax::to_json(c);
      j["trial"] = t;
      checks.push_back(j);
      ok = ok && c.agree;
    }
    payload["exact_cross_checks"] = checks;
  }
  Json config = capax::config_json(cfg);
  config["exact_checks"] = a.exact_checks;
  emit(capax::make_report("verify-rank", config, cfg.seed, payload, clock.seconds(), outputs_of({{"report", a.out}}),
                          cfg.threads),
       a.out);
  if (!a.out.empty())
    std::cout << capax::to_string(cfg.experiment) << ": " << (rep.pass_rate * 100.0) << "% of " << cfg.trials
              << " trials reach rank " << rep.bound << (ok ? "" : " (FAILED)") << "\n";
  return ok ? kExitPass : kExitFailure;
}

struct JacobianArgs {
  std::string model, data, out;
  double h = 1e-6;
  double tol = 1e-6;
};

int run_jacobian_check(const JacobianArgs& a) {
  Stopwatch clock;
  const auto net = capax::load_model(a.model);
  const auto data = capax::load_dataset(a.data, true);
  capax::FiniteDifferenceReport worst;
  long long worst_output = 0;
  for (long long row = 0; row < net.schedule.d_prime; ++row) {
    const auto r = capax::finite_difference_check(net, data.X, a.h, static_cast<int>(row));
    if (row == 0 || r.max_rel_err > worst.max_rel_err) {
      worst = r;
      worst_output = row;
    }
  }
  Json payload = capax::to_json(worst);
  payload["worst_entry"]["output"] = worst_output;
  payload["tol"] = a.tol;
  payload["pass"] = worst.max_rel_err <= a.tol;
  const Json config{{"model", a.model}, {"data", a.data}, {"h", a.h}, {"tol", a.tol}};
  emit(capax::make_report("jacobian-check", config, 0, payload, clock.seconds(), outputs_of({{"report", a.out}})),
       a.out);
  return worst.max_rel_err <= a.tol ? kExitPass : kExitFailure;
}

struct CompositionArgs {
  int r = 0, ell = 0;
  std::string K, alpha, out;
};

int run_oracle_compositions(const CompositionArgs& a) {
  Stopwatch clock;
  const auto parts = int_list(a.K, "--K");
  const auto comps = capax::compositions(a.r, a.ell, parts);
  Json list = Json::array();
  for (const auto& c : comps) list.push_back(c);
  Json payload{{"r", a.r}, {"ell", a.ell}, {"K", parts}, {"count", comps.size()}, {"compositions", list}};
  Json config{{"r", a.r}, {"ell", a.ell}, {"K", a.K}};
  if (!a.alpha.empty()) {
    const auto alpha = rational_list(a.alpha, "--alpha");
    if (alpha.size() != parts.size()) throw capax::ValidationError("--alpha needs one coefficient per entry of --K");
    std::map<int, capax::Rational> coeffs;
    for (std::size_t i = 0; i < parts.size(); ++i) coeffs[parts[i]] = alpha[i];
    payload["gamma"] = capax::exact(capax::gamma_coeff(a.ell, a.r, coeffs));
    config["alpha"] = a.alpha;
  }
  emit(capax::make_report("oracle compositions", config, 0, payload, clock.seconds(), outputs_of({{"report", a.out}})),
       a.out);
  return kExitPass;
}

struct DetArgs {
  std::string file, out;
};

int run_oracle_det(const DetArgs& a) {
  Stopwatch clock;
  const auto m = capax::rational_matrix_from_json(capax::read_json_file(a.file));
  if (m.rows() != m.cols()) throw capax::DimensionError("det needs a square matrix");
  const auto bareiss = capax::det_bareiss(m);
  Json payload{{"size", m.rows()}, {"det", capax::exact(bareiss)}, {"rank", capax::exact_rank(m)}};
  bool ok = true;
  if (m.rows() <= 8) {
    const auto leibniz = capax::det_leibniz(m);
    payload["det_leibniz"] = capax::exact(leibniz);
    payload["agree"] = leibniz == bareiss;
    ok = leibniz == bareiss;
  }
  emit(capax::make_report("oracle det", Json{{"file", a.file}}, 0, payload, clock.seconds(),
                          outputs_of({{"report", a.out}})),
       a.out);
  return ok ? kExitPass : kExitFailure;
}

struct NestedArgs {
  long long n = 0, d = 0, m = 0;
  std::string K, L, alpha, beta, out;
  std::uint64_t seed = 0;
};

capax::PolynomialSpec polynomial_from_flags(const std::vector<int>& support, const std::string& coeff_flag,
                                            const char* flag, capax::Rng& rng) {
  capax::PolynomialSpec p;
  std::vector<capax::Rational> coeffs;
  if (!coeff_flag.empty()) {
    coeffs = rational_list(coeff_flag, flag);
    if (coeffs.size() != support.size())
      throw capax::ValidationError(std::string(flag) + " needs one coefficient per exponent");
  }
  for (std::size_t i = 0; i < support.size(); ++i) {
    capax::Rational c = 0;
    if (coeffs.empty()) {
      while (c == 0) c = capax::random_rational(rng);
    } else {
      c = coeffs[i];
    }
    if (!p.coeffs.emplace(support[i], c).second) throw capax::ValidationError("repeated exponent in support");
  }
  p.validate();
  return p;
}

int run_oracle_nested(const NestedArgs& a) {
  Stopwatch clock;
  if (a.n < 1 || a.d < 1 || a.m < 1) throw capax::ValidationError("--n, --d and --m must be positive");
  capax::Rng rng(capax::stream_seed(a.seed, 0));
  const auto inner = polynomial_from_flags(int_list(a.K, "--K"), a.alpha, "--alpha", rng);
  const auto outer = polynomial_from_flags(int_list(a.L, "--L"), a.beta, "--beta", rng);
  const auto u = capax::random_distinct_rational_vector(rng, a.n);
  const auto v = capax::random_distinct_rational_vector(rng, a.d);
  const auto w = capax::random_distinct_rational_vector(rng, a.d);
  const auto z = capax::random_distinct_rational_vector(rng, a.m);
  const auto direct = capax::nested_power_matrix(u, v, w, z, inner, outer);
  const auto expanded = capax::nested_power_decomposition(u, v, w, z, inner, outer);
  const long long rank = capax::exact_rank(direct);
  const long long bound = capax::rank_bound(capax::RankExperiment::PolynomialRankOne, capax::RankDims{a.n, a.d, a.m, 1});

  auto to_strings = [](const capax::RationalVector& x) {
    Json j = Json::array();
    for (const auto& q : x) j.push_back(capax::exact(q));
    return j;
  };
  Json payload;
  payload["inner"] = inner.name();
  payload["outer"] = outer.name();
  payload["point"] = Json{{"u", to_strings(u)}, {"v", to_strings(v)}, {"w", to_strings(w)}, {"z", to_strings(z)}};
  payload["shape"] = {direct.rows(), direct.cols()};
  payload["exact_rank"] = rank;
  payload["bound"] = bound;
  payload["reaches_bound"] = rank >= bound;
  payload["expansion_matches"] = direct == expanded;
  if (inner.size() >= static_cast<std::size_t>(a.n) && outer.size() >= static_cast<std::size_t>(a.n)) {
    const auto t = capax::distinguished_tuple(a.n, inner, outer);
    Json gamma = Json::array(), expected = Json::array();
    bool match = true;
    for (std::size_t i = 0; i < t.gamma.size(); ++i) {
      gamma.push_back(capax::exact(t.gamma[i]));
      expected.push_back(capax::exact(t.expected[i]));
      match = match && t.gamma[i] == t.expected[i] && t.gamma[i] != 0;
    }
    payload["distinguished"] = Json{{"k", t.k}, {"l", t.l}, {"r", t.r}, {"gamma", gamma}, {"expected", expected},
                                    {"match", match}};
  }
  if (direct.rows() * direct.cols() <= 400) payload["matrix"] = capax::to_json(direct);
  const Json config{{"n", a.n}, {"d", a.d}, {"m", a.m}, {"K", a.K}, {"L", a.L}, {"alpha", a.alpha}, {"beta", a.beta}};
  emit(capax::make_report("oracle thm3", config, a.seed, payload, clock.seconds(), outputs_of({{"report", a.out}})),
       a.out);
  return direct == expanded ? kExitPass : kExitFailure;
}

struct InterpolateArgs {
  std::string data, act = "tanh,tanh", out, report, widths;
  std::uint64_t seed = 0;
  double tol = 1e-8;
  int max_restarts = 3;
  unsigned threads = 1;
};

int run_interpolate(const InterpolateArgs& a) {
  Stopwatch clock;
  const auto data = capax::load_dataset(a.data);
  capax::SolveConfig cfg;
  cfg.activations = activation_names(a.act);
  cfg.seed = a.seed;
  cfg.tol = a.tol;
  cfg.max_restarts = a.max_restarts;
  cfg.threads = a.threads;
  if (!a.widths.empty()) {
    std::vector<long long> w;
    for (int x : int_list(a.widths, "--widths")) w.push_back(x);
    cfg.widths = w;
  }
  const auto [net, rep] = capax::interpolate(data, cfg);
  if (!a.out.empty()) capax::save_model(a.out, net);
  Json config{{"data", a.data},       {"activations", cfg.activations}, {"tol", cfg.tol},
              {"max_restarts", cfg.max_restarts}, {"widths", a.widths}, {"n", data.n()},
              {"d", data.d()},        {"d_prime", data.d_prime()}};
  const Json report = capax::make_report("interpolate", config, cfg.seed, capax::to_json(rep), clock.seconds(),
                                         outputs_of({{"model", a.out}, {"report", a.report}}), cfg.threads);
  if (a.report.empty()) {
    std::cout << report.dump(2) << "\n";
  } else {
    capax::write_json_file(a.report, report);
    std::cout << (rep.converged ? "converged" : "did not converge") << ": residual " << rep.residual_sup << " after "
              << rep.restarts << " restarts\n";
  }
  return rep.converged ? kExitPass : kExitFailure;
}

struct PredictArgs {
  std::string model, inputs;
  std::optional<double> tol;
};

int run_predict(const PredictArgs& a) {
  const auto net = capax::load_model(a.model);
  const auto data = capax::load_dataset(a.inputs, true);
  capax::Dataset result;
  result.X = data.X;
  result.Y = capax::forward(net, data.X);
  std::cout << capax::dataset_to_csv(result);
  if (data.d_prime() == 0) return kExitPass;
  if (data.d_prime() != net.schedule.d_prime)
    throw capax::DimensionError("inputs file has " + std::to_string(data.d_prime()) + " target columns, model has " +
                                std::to_string(net.schedule.d_prime));
  const double residual = (result.Y - data.Y).cwiseAbs().maxCoeff();
  std::cerr << "residual sup-norm " << residual << "\n";
  return a.tol && residual > *a.tol ? kExitFailure : kExitPass;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Interpolation capacity toolkit: neuron bounds, Jacobian rank experiments, exact oracles and an "
               "interpolating solver."};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(capax::kVersion));
  int code = kExitPass;

  auto add_seed = [](CLI::App* sub, std::uint64_t& seed) {
    sub->add_option("--seed", seed, "master seed")->envname("CAPAX_SEED");
  };

  BoundsArgs bounds;
  auto* b = app.add_subcommand("bounds", "necessary and sufficient neuron counts");
  b->add_option("--n", bounds.n, "number of samples")->required();
  b->add_option("--d", bounds.d, "input dimension")->required();
  b->add_option("--dprime", bounds.dprime, "output dimension")->required();
  b->add_option("--L", bounds.L, "number of hidden layers")->required();
  b->add_option("--brute-cap", bounds.brute_cap, "exhaustive check over widths up to C (0 picks an exhaustive cap)");
  b->add_option("--out", bounds.out, "report path");
  b->callback([&] { code = run_bounds(bounds); });

  RankArgs rank;
  auto* r = app.add_subcommand("verify-rank", "seeded generic-rank experiment");
  r->add_option("--theorem", rank.experiment, "thm3-poly, thm4-rank1, thm5-full or thm6-narrow")->required();
  r->add_option("--n", rank.n, "rows")->required();
  r->add_option("--d", rank.d, "input dimension");
  r->add_option("--m", rank.m, "width m");
  r->add_option("--ell", rank.ell, "width ell");
  r->add_option("--act", rank.act, "comma-separated activations");
  r->add_option("--trials", rank.trials, "number of trials");
  add_seed(r, rank.seed);
  r->add_option("--out", rank.out, "report path");
  r->add_option("--precision", rank.precision, "double or extended");
  r->add_option("--tol-policy", rank.tol_policy, "default, gap, gap:<ceiling> or abs:<threshold>");
  r->add_flag("--negative", rank.negative, "allow activations outside the hypotheses");
  r->add_option("--threads", rank.threads, "worker threads");
  r->add_option("--exact-checks", rank.exact_checks, "cross-check this many trials in exact arithmetic");
  r->callback([&] { code = run_verify_rank(rank); });

  JacobianArgs jac;
  auto* j = app.add_subcommand("jacobian-check", "final-layer Jacobian against finite differences");
  j->add_option("--model", jac.model, "model JSON")->required();
  j->add_option("--data", jac.data, "dataset CSV")->required();
  j->set_help_flag("--help", "Print this help message and exit");
  j->add_option("--h", jac.h, "relative step");
  j->add_option("--tol", jac.tol, "pass threshold on the relative error");
  j->add_option("--out", jac.out, "report path");
  j->callback([&] { code = run_jacobian_check(jac); });

  auto* oracle = app.add_subcommand("oracle", "exact rational computations");
  oracle->require_subcommand(1);
  CompositionArgs comp;
  auto* oc = oracle->add_subcommand("compositions", "ordered sums of ell parts from K totalling r");
  oc->add_option("--r", comp.r, "target sum")->required();
  oc->add_option("--ell", comp.ell, "number of parts")->required();
  oc->add_option("--K", comp.K, "allowed parts, comma-separated")->required();
  oc->add_option("--alpha", comp.alpha, "coefficients for K; also prints gamma");
  oc->add_option("--out", comp.out, "report path");
  oc->callback([&] { code = run_oracle_compositions(comp); });
  DetArgs det;
  auto* od = oracle->add_subcommand("det", "exact determinant of a JSON matrix");
  od->add_option("--file", det.file, "matrix JSON")->required();
  od->add_option("--out", det.out, "report path");
  od->callback([&] { code = run_oracle_det(det); });
  NestedArgs nested;
  auto* on = oracle->add_subcommand("thm3", "exact rank of the polynomial rank-one Jacobian block");
  on->add_option("--n", nested.n, "rows")->required();
  on->add_option("--d", nested.d, "input width")->required();
  on->add_option("--m", nested.m, "output width")->required();
  on->add_option("--K", nested.K, "inner exponents")->required();
  on->add_option("--L", nested.L, "outer exponents")->required();
  on->add_option("--alpha", nested.alpha, "inner coefficients (random if omitted)");
  on->add_option("--beta", nested.beta, "outer coefficients (random if omitted)");
  add_seed(on, nested.seed);
  on->add_option("--out", nested.out, "report path");
  on->callback([&] { code = run_oracle_nested(nested); });

  InterpolateArgs interp;
  auto* in = app.add_subcommand("interpolate", "fit a network through every sample");
  in->add_option("--data", interp.data, "dataset CSV")->required();
  in->add_option("--act", interp.act, "activations, one per hidden layer");
  add_seed(in, interp.seed);
  in->add_option("--tol", interp.tol, "residual sup-norm target");
  in->add_option("--out", interp.out, "model path");
  in->add_option("--report", interp.report, "report path");
  in->add_option("--widths", interp.widths, "override the hidden widths");
  in->add_option("--max-restarts", interp.max_restarts, "restarts after a failed attempt");
  in->add_option("--threads", interp.threads, "worker threads");
  in->callback([&] { code = run_interpolate(interp); });

  PredictArgs pred;
  auto* p = app.add_subcommand("predict", "evaluate a saved model");
  p->add_option("--model", pred.model, "model JSON")->required();
  p->add_option("--inputs", pred.inputs, "CSV with x columns (y columns are compared)")->required();
  p->add_option("--tol", pred.tol, "fail when the residual exceeds this");
  p->callback([&] { code = run_predict(pred); });

  if (argc <= 1) {
    std::cerr << app.help();
    return kExitUsage;
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  } catch (const capax::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  }
  return code;
}
