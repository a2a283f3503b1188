#ifndef CAPAX_IO_HPP
#define CAPAX_IO_HPP

// Model files, CSV datasets and JSON serialization of every report.

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "capax/activation.hpp"
#include "capax/bounds.hpp"
#include "capax/error.hpp"
#include "capax/exact.hpp"
#include "capax/jacobian.hpp"
#include "capax/network.hpp"
#include "capax/rank_lab.hpp"
#include "capax/solver.hpp"

namespace capax {

using Json = nlohmann::ordered_json;

inline constexpr std::string_view kVersion = "1.0.0";

/// Finite values as numbers, the rest as "inf", "-inf" or "nan".
inline Json number(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  return x;
}

inline double read_number(const Json& j) {
  if (j.is_string()) {
    const auto s = j.get<std::string>();
    if (s == "inf") return kInfinity;
    if (s == "-inf") return -kInfinity;
    if (s == "nan") return std::nan("");
    throw ParseError("expected a number, got string '" + s + "'");
  }
  if (!j.is_number()) throw ParseError("expected a number");
  return j.get<double>();
}

/// Column-major flattening.
inline Json flatten(const Matrix& m) {
  Json a = Json::array();
  for (Eigen::Index i = 0; i < m.size(); ++i) a.push_back(number(m.data()[i]));
  return a;
}

inline Matrix unflatten(const Json& a, long long rows, long long cols, const std::string& what) {
  if (!a.is_array() || static_cast<long long>(a.size()) != rows * cols)
    throw ParseError(what + ": expected " + std::to_string(rows * cols) + " entries");
  Matrix m(rows, cols);
  for (long long i = 0; i < rows * cols; ++i) m.data()[i] = read_number(a[static_cast<std::size_t>(i)]);
  return m;
}

// ---------------------------------------------------------------------------
// Models

inline Json to_json(const WidthSchedule& s) {
  return Json{{"d", s.d}, {"widths", s.widths}, {"d_prime", s.d_prime}};
}

inline Json to_json(const Network& net) {
  Json j;
  j["d"] = net.schedule.d;
  j["widths"] = net.schedule.widths;
  j["d_prime"] = net.schedule.d_prime;
  Json acts = Json::array();
  for (const auto& a : net.activations) acts.push_back(a.name);
  j["activations"] = acts;
  Json w = Json::array(), b = Json::array();
  for (std::size_t l = 0; l < net.weights.size(); ++l) {
    w.push_back(flatten(net.weights[l]));
    b.push_back(flatten(net.biases[l]));
  }
  j["weights"] = w;
  j["biases"] = b;
  j["V"] = flatten(net.output);
  return j;
}

inline Network network_from_json(const Json& j) {
  try {
    Network net;
    net.schedule.d = j.at("d").get<long long>();
    net.schedule.widths = j.at("widths").get<std::vector<long long>>();
    net.schedule.d_prime = j.at("d_prime").get<long long>();
    net.schedule.validate();
    for (const auto& name : j.at("activations")) net.activations.push_back(builtin(name.get<std::string>()));
    const auto& w = j.at("weights");
    const auto& b = j.at("biases");
    if (w.size() != net.schedule.widths.size() || b.size() != net.schedule.widths.size())
      throw ParseError("model: one weight and bias array per hidden layer is required");
    long long in = net.schedule.d;
    for (std::size_t l = 0; l < net.schedule.widths.size(); ++l) {
      const long long out = net.schedule.widths[l];
      net.weights.push_back(unflatten(w[l], in, out, "weights[" + std::to_string(l) + "]"));
      net.biases.push_back(unflatten(b[l], out, 1, "biases[" + std::to_string(l) + "]"));
      in = out;
    }
    net.output = unflatten(j.at("V"), in, net.schedule.d_prime, "V");
    net.validate();
    return net;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("model: ") + e.what());
  }
}

inline Json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open '" + path + "'");
  try {
    return Json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError("'" + path + "': " + e.what());
  }
}

inline void write_json_file(const std::string& path, const Json& j) {
  std::ofstream out(path);
  if (!out) throw ParseError("cannot write '" + path + "'");
  out << j.dump(2) << "\n";
}

inline Network load_model(const std::string& path) { return network_from_json(read_json_file(path)); }
inline void save_model(const std::string& path, const Network& net) { write_json_file(path, to_json(net)); }

// ---------------------------------------------------------------------------
// CSV datasets: header x1..xd,y1..yd', one sample per row

namespace detail {

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

inline std::vector<std::string_view> split_csv(std::string_view line) {
  std::vector<std::string_view> cells;
  for (auto c : split(line, ',')) cells.push_back(trim(c));
  return cells;
}

inline bool parse_double(std::string_view s, double& out) {
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  const auto res = std::from_chars(s.data(), s.data() + s.size(), out);
  return res.ec == std::errc() && res.ptr == s.data() + s.size() && std::isfinite(out);
}

}  // namespace detail

/// Parses CSV text. With allow_inputs_only, a header without y columns yields an empty Y.
inline Dataset parse_dataset(std::istream& in, bool allow_inputs_only = false) {
  std::string line;
  std::size_t line_no = 0;
  std::vector<std::string_view> header;
  std::string header_line;
  while (std::getline(in, line)) {
    ++line_no;
    if (!detail::trim(line).empty()) {
      header_line = line;
      header = detail::split_csv(header_line);
      break;
    }
  }
  if (header.empty()) throw ParseError("dataset is empty", line_no, 0);
  long long d = 0, dprime = 0;
  for (std::size_t c = 0; c < header.size(); ++c) {
    const std::string expected_x = "x" + std::to_string(d + 1);
    const std::string expected_y = "y" + std::to_string(dprime + 1);
    if (dprime == 0 && header[c] == expected_x) {
      ++d;
    } else if (d > 0 && header[c] == expected_y) {
      ++dprime;
    } else {
      throw ParseError("header column " + std::to_string(c + 1) + " is '" + std::string(header[c]) + "', expected '" +
                           (dprime == 0 ? expected_x + "' or '" + expected_y : expected_y) + "'",
                       line_no, c + 1);
    }
  }
  if (d == 0) throw ParseError("header has no x columns", line_no, 1);
  if (dprime == 0 && !allow_inputs_only) throw ParseError("header has no y columns", line_no, header.size());
  std::vector<std::vector<double>> rows;
  std::vector<std::size_t> row_lines;
  const std::size_t width = header.size();
  while (std::getline(in, line)) {
    ++line_no;
    if (detail::trim(line).empty()) continue;
    const auto cells = detail::split_csv(line);
    if (cells.size() != width)
      throw ParseError("line " + std::to_string(line_no) + " has " + std::to_string(cells.size()) + " columns, expected " +
                           std::to_string(width),
                       line_no, std::min(cells.size(), width) + 1);
    std::vector<double> values(width);
    for (std::size_t c = 0; c < width; ++c)
      if (!detail::parse_double(cells[c], values[c]))
        throw ParseError("line " + std::to_string(line_no) + ", column " + std::to_string(c + 1) + ": '" +
                             std::string(cells[c]) + "' is not a finite number",
                         line_no, c + 1);
    rows.push_back(std::move(values));
    row_lines.push_back(line_no);
  }
  if (rows.empty()) throw ParseError("dataset has a header but no samples", line_no, 0);
  Dataset data;
  const auto n = static_cast<Eigen::Index>(rows.size());
  data.X = Matrix(d, n);
  data.Y = Matrix(dprime, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (long long r = 0; r < d; ++r) data.X(r, i) = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(r)];
    for (long long r = 0; r < dprime; ++r)
      data.Y(r, i) = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(d + r)];
  }
  for (const auto& [i, j] : duplicate_columns(data.X))
    if (dprime > 0 && data.Y.col(i) != data.Y.col(j))
      throw ParseError("lines " + std::to_string(row_lines[static_cast<std::size_t>(i)]) + " and " +
                           std::to_string(row_lines[static_cast<std::size_t>(j)]) +
                           " have the same inputs but different targets",
                       row_lines[static_cast<std::size_t>(j)], 0);
  return data;
}

inline Dataset load_dataset(const std::string& path, bool allow_inputs_only = false) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open '" + path + "'");
  return parse_dataset(in, allow_inputs_only);
}

inline std::string dataset_to_csv(const Dataset& data) {
  std::ostringstream os;
  os.precision(17);
  for (long long r = 0; r < data.d(); ++r) os << (r ? "," : "") << "x" << r + 1;
  for (long long r = 0; r < data.d_prime(); ++r) os << ",y" << r + 1;
  os << "\n";
  for (Eigen::Index i = 0; i < data.X.cols(); ++i) {
    for (long long r = 0; r < data.d(); ++r) os << (r ? "," : "") << data.X(r, i);
    for (long long r = 0; r < data.d_prime(); ++r) os << "," << data.Y(r, i);
    os << "\n";
  }
  return os.str();
}

// ---------------------------------------------------------------------------
// Reports

inline Json to_json(const ProblemShape& s) {
  return Json{{"n", s.n}, {"d", s.d}, {"d_prime", s.d_prime}, {"L", s.L}};
}

inline Json to_json(const BoundReport& r) {
  Json j;
  j["shape"] = to_json(r.shape);
  j["necessary_lower"] = number(r.necessary_lower);
  j["degenerate"] = r.degenerate;
  j["sufficient_widths"] = to_json(r.sufficient_widths);
  j["sufficient_neurons"] = r.sufficient_neurons;
  j["neuron_count"] = r.neuron_count;
  j["param_count"] = r.param_count;
  j["sufficiency_bound"] = number(r.sufficiency_bound);
  j["hidden_count_within_bound"] = r.hidden_within_sufficiency;
  j["total_count_within_bound"] = r.total_within_sufficiency;
  j["params_cover_constraints"] = r.params_cover_constraints;
  j["doubled_width_condition"] = r.doubled_width_condition;
  j["rank_condition"] = r.rank_condition;
  return j;
}

inline Json to_json(const NecessityVerdict& v) {
  Json j;
  j["holds"] = v.holds;
  j["violations"] = v.violations;
  j["schedules_checked"] = v.schedules_checked;
  j["feasible_schedules"] = v.feasible_schedules;
  j["bound"] = number(v.bound);
  if (v.found_feasible) {
    j["min_feasible_neurons"] = v.min_feasible_neurons;
    j["argmin_widths"] = v.argmin.widths;
    j["gap"] = number(v.gap);
  } else {
    j["min_feasible_neurons"] = nullptr;
  }
  if (v.violations > 0) j["first_violation"] = v.first_violation.widths;
  return j;
}

inline Json to_json(const TrialResult& t) {
  Json j;
  j["trial"] = t.trial;
  j["seed"] = std::to_string(t.seed);
  j["rank"] = t.rank;
  j["bound"] = t.bound;
  j["pass"] = t.pass;
  j["full_row_rank"] = t.full_row_rank;
  j["min_retained_singular_value"] = number(t.min_retained);
  j["spectral_gap"] = number(t.spectral_gap);
  j["tolerance"] = number(t.tolerance);
  j["in_domain"] = t.in_domain;
  j["max_domain_ratio"] = number(t.max_domain_ratio);
  j["factor_ranks"] = {t.inner_rank, t.outer_rank};
  j["rank_ceiling"] = t.ceiling;
  return j;
}

inline Json config_json(const RankExperimentConfig& c) {
  Json j;
  j["experiment"] = std::string(to_string(c.experiment));
  j["n"] = c.dims.n;
  j["d"] = c.dims.d;
  j["m"] = c.dims.m;
  j["ell"] = c.dims.ell;
  j["activations"] = c.activations;
  j["trials"] = c.trials;
  j["seed"] = std::to_string(c.seed);
  j["tol_policy"] = c.tol.describe();
  j["precision"] = std::string(to_string(c.precision));
  j["negative"] = c.negative;
  return j;
}

/// Everything but timing and thread count, which live in the manifest.
inline Json to_json(const RankReport& r) {
  Json j;
  j["config"] = config_json(r.config);
  j["bound"] = r.bound;
  j["matrix_shape"] = {r.rows, r.cols};
  j["tol_policy"] = r.tol_policy;
  j["pass_rate"] = number(r.pass_rate);
  j["all_pass"] = r.all_pass;
  j["all_in_domain"] = r.all_in_domain;
  j["all_within_ceiling"] = r.all_within_ceiling;
  long long full = 0;
  for (const auto& t : r.trials) full += t.full_row_rank ? 1 : 0;
  j["full_row_rank_trials"] = full;
  Json trials = Json::array();
  for (const auto& t : r.trials) trials.push_back(to_json(t));
  j["trials"] = trials;
  return j;
}

inline Json to_json(const CrossCheck& c) {
  return Json{{"exact_rank", c.exact_rank}, {"numerical_rank", c.numerical_rank}, {"bound", c.bound}, {"agree", c.agree}};
}

inline Json to_json(const FiniteDifferenceReport& r) {
  return Json{{"max_rel_err", number(r.max_rel_err)},
              {"worst_entry", Json{{"sample", r.worst_row}, {"column", r.worst_column}}},
              {"analytic", number(r.analytic)},
              {"numeric", number(r.numeric)}};
}

inline Json to_json(const Certificate& c) {
  Json sv = Json::array();
  for (double s : c.smallest_singular_values) sv.push_back(number(s));
  return Json{{"residual_sup", number(c.residual_sup)}, {"row_ranks", c.row_ranks}, {"min_rank", c.min_rank},
              {"n", c.n}, {"full_rank", c.full_rank}, {"smallest_singular_values", sv}};
}

inline Json to_json(const SolveReport& r) {
  Json j;
  j["converged"] = r.converged;
  j["residual_sup"] = number(r.residual_sup);
  j["tol"] = number(r.tol);
  j["iterations"] = r.iterations;
  j["restarts"] = r.restarts;
  j["jacobian_rank"] = r.rank;
  j["full_rank"] = r.full_rank;
  j["schedule"] = to_json(r.schedule);
  j["schedule_overridden"] = r.schedule_overridden;
  Json attempts = Json::array();
  for (const auto& a : r.attempts) {
    Json res = Json::array();
    for (double x : a.row_residuals) res.push_back(number(x));
    attempts.push_back(Json{{"attempt", a.attempt}, {"converged", a.converged}, {"row_residuals", res},
                            {"row_iterations", a.row_iterations}});
  }
  j["attempts"] = attempts;
  j["certificate"] = to_json(r.certificate);
  return j;
}

/// Exact value as its canonical "p/q" string.
inline Json exact(const Rational& q) { return q.str(); }

inline Json to_json(const RationalMatrix& m) {
  Json rows = Json::array();
  for (long long i = 0; i < m.rows(); ++i) {
    Json row = Json::array();
    for (long long j = 0; j < m.cols(); ++j) row.push_back(exact(m(i, j)));
    rows.push_back(row);
  }
  return rows;
}

/// Rows of exact entries: strings such as "2/3", integers, or decimals (taken as their exact double value).
inline RationalMatrix rational_matrix_from_json(const Json& j) {
  const Json& rows = j.is_object() ? j.at("matrix") : j;
  if (!rows.is_array()) throw ParseError("matrix must be an array of rows");
  const auto r = static_cast<long long>(rows.size());
  const auto c = r == 0 ? 0LL : static_cast<long long>(rows[0].size());
  RationalMatrix m(r, c);
  for (long long i = 0; i < r; ++i) {
    const auto& row = rows[static_cast<std::size_t>(i)];
    if (!row.is_array() || static_cast<long long>(row.size()) != c)
      throw ParseError("matrix row " + std::to_string(i + 1) + " has the wrong length", static_cast<std::size_t>(i + 1));
    for (long long k = 0; k < c; ++k) {
      const auto& e = row[static_cast<std::size_t>(k)];
      try {
        if (e.is_string()) {
          m(i, k) = parse_rational(e.get<std::string>());
        } else if (e.is_number_integer()) {
          m(i, k) = Rational(e.get<long long>());
        } else if (e.is_number()) {
          m(i, k) = rational_from_double(e.get<double>());
        } else {
          throw std::invalid_argument("not a number");
        }
      } catch (const std::exception&) {
        throw ParseError("matrix entry (" + std::to_string(i + 1) + "," + std::to_string(k + 1) + ") is not a rational",
                         static_cast<std::size_t>(i + 1), static_cast<std::size_t>(k + 1));
      }
    }
  }
  return m;
}

/// {"manifest": ..., "payload": ...}; only the manifest may differ between identical runs.
inline Json make_report(const std::string& subcommand, Json config, std::uint64_t seed, Json payload,
                        double wall_seconds, Json outputs = Json::object(), unsigned threads = 1) {
  Json manifest;
  manifest["subcommand"] = subcommand;
  manifest["config"] = std::move(config);
  manifest["seed"] = std::to_string(seed);
  manifest["version"] = std::string(kVersion);
  manifest["threads"] = threads;
  manifest["wall_seconds"] = number(wall_seconds);
  manifest["outputs"] = std::move(outputs);
  return Json{{"manifest", std::move(manifest)}, {"payload", std::move(payload)}};
}

}  // namespace capax

#endif  // CAPAX_IO_HPP
