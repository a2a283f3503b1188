#ifndef CAPAX_ACTIVATION_HPP
#define CAPAX_ACTIVATION_HPP

// Activation catalog: scalar functions together with the analytic metadata
// (expansion point, radius of convergence, Taylor coefficients) that the
// rank and interpolation results quantify over.

#include <algorithm>
#include <array>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <boost/math/constants/constants.hpp>
#include <boost/math/special_functions/erf.hpp>
#include <boost/math/special_functions/log1p.hpp>

#include "capax/error.hpp"
#include "capax/numeric.hpp"

namespace capax {

/// Which analytic hypotheses an activation satisfies at its expansion point.
enum class ActivationKind { NonPolynomialAnalytic, Polynomial, NontrivialAnalytic, NonAnalytic };

inline std::string_view to_string(ActivationKind kind) {
  switch (kind) {
    case ActivationKind::NonPolynomialAnalytic: return "non-polynomial-analytic";
    case ActivationKind::Polynomial: return "polynomial";
    case ActivationKind::NontrivialAnalytic: return "nontrivial-analytic";
    case ActivationKind::NonAnalytic: return "non-analytic";
  }
  return "unknown";
}

/// Sparse polynomial sum_{k in K} alpha_k x^k with every alpha_k nonzero.
struct PolynomialSpec {
  std::map<int, Rational> coeffs;

  void validate() const {
    if (coeffs.empty()) throw ValidationError("polynomial has empty support");
    for (const auto& [k, c] : coeffs) {
      if (k < 0) throw ValidationError("negative exponent " + std::to_string(k) + " in polynomial support");
      if (c == 0) throw ValidationError("zero coefficient on support at exponent " + std::to_string(k));
    }
  }

  std::vector<int> support() const {
    std::vector<int> k;
    k.reserve(coeffs.size());
    for (const auto& entry : coeffs) k.push_back(entry.first);
    return k;
  }

  int degree() const { return coeffs.empty() ? 0 : coeffs.rbegin()->first; }
  int min_exponent() const { return coeffs.empty() ? 0 : coeffs.begin()->first; }
  std::size_t size() const { return coeffs.size(); }

  const Rational& coefficient(int k) const {
    static const Rational zero(0);
    auto it = coeffs.find(k);
    return it == coeffs.end() ? zero : it->second;
  }

  /// Horner evaluation over the sparse support.
  template <class T>
  T value(const T& x) const {
    T acc(0);
    int prev = -1;
    for (auto it = coeffs.rbegin(); it != coeffs.rend(); ++it) {
      const T c = from_rational<T>(it->second);
      acc = prev < 0 ? c : T(acc * ipow(x, prev - it->first) + c);
      prev = it->first;
    }
    return prev <= 0 ? acc : T(acc * ipow(x, prev));
  }

  template <class T>
  T derivative(const T& x) const {
    T acc(0);
    int prev = -1;
    for (auto it = coeffs.rbegin(); it != coeffs.rend() && it->first > 0; ++it) {
      const int k = it->first - 1;
      const T c = from_rational<T>(it->second * it->first);
      acc = prev < 0 ? c : T(acc * ipow(x, prev - k) + c);
      prev = k;
    }
    return prev <= 0 ? acc : T(acc * ipow(x, prev));
  }

  /// Canonical catalog identifier, e.g. "poly:K=0,1,2;a=1,1,1".
  std::string name() const {
    std::ostringstream os;
    os << "poly:K=";
    bool first = true;
    for (const auto& entry : coeffs) {
      os << (first ? "" : ",") << entry.first;
      first = false;
    }
    os << ";a=";
    first = true;
    for (const auto& entry : coeffs) {
      os << (first ? "" : ",") << entry.second.str();
      first = false;
    }
    return os.str();
  }
};

enum class ActivationFamily { Tanh, Arctan, Gelu, Sigmoid, Exp, Sin, Softplus, Relu, Polynomial };

namespace detail {

inline Integer factorial(int k) {
  Integer f = 1;
  for (int i = 2; i <= k; ++i) f *= i;
  return f;
}

/// Bernoulli numbers B_0..B_m with B_1 = -1/2.
inline std::vector<Rational> bernoulli_numbers(int m) {
  std::vector<Rational> b(static_cast<std::size_t>(m) + 1);
  b[0] = 1;
  for (int j = 1; j <= m; ++j) {
    Rational sum = 0;
    Integer binom = 1;  // C(j+1, k)
    for (int k = 0; k < j; ++k) {
      sum += Rational(binom) * b[k];
      binom = binom * (j + 1 - k) / (k + 1);
    }
    b[j] = -sum / (j + 1);
  }
  return b;
}

/// Coefficient of x^k in tanh's series at 0 (zero for even k).
inline std::vector<Rational> tanh_series(int order) {
  std::vector<Rational> c(static_cast<std::size_t>(std::max(order, 0)) + 1, Rational(0));
  const auto bern = bernoulli_numbers(order + 1);
  for (int k = 1; k <= order; k += 2) {
    const int two_j = k + 1;
    const Integer p = Integer(1) << two_j;
    c[k] = Rational(p * (p - 1)) * bern[two_j] / Rational(factorial(two_j));
  }
  return c;
}

inline std::vector<Rational> series(ActivationFamily family, int order) {
  std::vector<Rational> c(static_cast<std::size_t>(order) + 1, Rational(0));
  switch (family) {
    case ActivationFamily::Exp:
      for (int k = 0; k <= order; ++k) c[k] = Rational(1) / Rational(factorial(k));
      break;
    case ActivationFamily::Sin:
      for (int k = 1; k <= order; k += 2) c[k] = Rational(((k - 1) / 2) % 2 == 0 ? 1 : -1) / Rational(factorial(k));
      break;
    case ActivationFamily::Arctan:
      for (int k = 1; k <= order; k += 2) c[k] = Rational(((k - 1) / 2) % 2 == 0 ? 1 : -1, k);
      break;
    case ActivationFamily::Tanh:
      c = tanh_series(order);
      break;
    case ActivationFamily::Sigmoid: {
      // sigmoid(x) = 1/2 + tanh(x/2)/2
      const auto t = tanh_series(order);
      c[0] = Rational(1, 2);
      for (int k = 1; k <= order; k += 2) c[k] = t[k] / Rational(Integer(1) << (k + 1));
      break;
    }
    case ActivationFamily::Softplus: {
      // softplus' = sigmoid; the constant log 2 is irrational and is stored
      // as the exact value of its nearest double.
      const auto t = tanh_series(std::max(order - 1, 0));
      c[0] = rational_from_double(0.69314718055994530942);
      if (order >= 1) c[1] = Rational(1, 2);
      for (int k = 2; k <= order; k += 2) c[k] = t[k - 1] / Rational((Integer(1) << k) * k);
      break;
    }
    case ActivationFamily::Gelu: {
      // gelu(x) = x/2 + (2 pi)^{-1/2} sum_j (-1)^j x^{2j+2} / (2^j j! (2j+1));
      // the irrational factor is rounded to the nearest double.
      if (order >= 1) c[1] = Rational(1, 2);
      const HighPrecision inv_sqrt_2pi =
          HighPrecision(1) / boost::math::constants::root_two_pi<HighPrecision>();
      for (int j = 0; 2 * j + 2 <= order; ++j) {
        HighPrecision v = inv_sqrt_2pi / HighPrecision((Integer(1) << j) * factorial(j) * (2 * j + 1));
        if (j % 2 == 1) v = -v;
        c[2 * j + 2] = rational_from_double(v.convert_to<double>());
      }
      break;
    }
    case ActivationFamily::Relu:
    case ActivationFamily::Polynomial:
      break;
  }
  return c;
}

}  // namespace detail

/// Immutable description of a scalar activation.
struct Activation {
  std::string name;
  ActivationFamily family = ActivationFamily::Polynomial;
  double eta = 0.0;          ///< point where the function is real analytic
  double rho = kInfinity;    ///< radius of convergence at eta; infinity for entire functions
  ActivationKind kind = ActivationKind::Polynomial;
  std::optional<PolynomialSpec> polynomial;  ///< present iff kind == Polynomial

  template <class T>
  T value(const T& x) const {
    if (family == ActivationFamily::Polynomial) return polynomial->value(x);
    if constexpr (is_rational_v<T>) {
      throw UnsupportedError("activation '" + name + "' cannot be evaluated exactly");
    } else {
      using std::atan, std::exp, std::log, std::sin, std::tanh;
      switch (family) {
        case ActivationFamily::Tanh: return tanh(x);
        case ActivationFamily::Arctan: return atan(x);
        case ActivationFamily::Gelu:
          return x * (T(1) + boost::math::erf(x / boost::math::constants::root_two<T>())) / T(2);
        case ActivationFamily::Sigmoid: {
          if (x >= T(0)) return T(1) / (T(1) + exp(-x));
          const T e = exp(x);
          return e / (T(1) + e);
        }
        case ActivationFamily::Exp: return exp(x);
        case ActivationFamily::Sin: return sin(x);
        case ActivationFamily::Softplus:
          if (x > T(0)) return T(x + boost::math::log1p(exp(-x)));
          return boost::math::log1p(exp(x));
        case ActivationFamily::Relu: return x > T(0) ? x : T(0);
        case ActivationFamily::Polynomial: break;
      }
      return x;
    }
  }

  template <class T>
  T derivative(const T& x) const {
    if (family == ActivationFamily::Polynomial) return polynomial->derivative(x);
    if constexpr (is_rational_v<T>) {
      throw UnsupportedError("activation '" + name + "' cannot be differentiated exactly");
    } else {
      using std::cos, std::exp, std::tanh;
      switch (family) {
        case ActivationFamily::Tanh: {
          const T t = tanh(x);
          return T(1) - t * t;
        }
        case ActivationFamily::Arctan: return T(1) / (T(1) + x * x);
        case ActivationFamily::Gelu: {
          const T cdf = (T(1) + boost::math::erf(x / boost::math::constants::root_two<T>())) / T(2);
          const T pdf = exp(-x * x / T(2)) / boost::math::constants::root_two_pi<T>();
          return cdf + x * pdf;
        }
        case ActivationFamily::Sigmoid:
        case ActivationFamily::Softplus: {
          Activation s;
          s.family = ActivationFamily::Sigmoid;
          const T v = s.value(x);
          return family == ActivationFamily::Softplus ? v : T(v * (T(1) - v));
        }
        case ActivationFamily::Exp: return exp(x);
        case ActivationFamily::Sin: return cos(x);
        case ActivationFamily::Relu: return x > T(0) ? T(1) : T(0);
        case ActivationFamily::Polynomial: break;
      }
      return T(1);
    }
  }

  double eval(double x) const { return value(x); }
  double deriv(double x) const { return derivative(x); }

  bool has_taylor() const { return family != ActivationFamily::Relu; }

  /// True when every Taylor coefficient is an exact rational (not a rounded irrational).
  bool exact_taylor() const {
    return has_taylor() && family != ActivationFamily::Gelu && family != ActivationFamily::Softplus;
  }

  bool non_polynomial_analytic() const { return kind == ActivationKind::NonPolynomialAnalytic; }

  /// Analytic and not locally constant at eta.
  bool nontrivial_analytic() const {
    switch (kind) {
      case ActivationKind::NonPolynomialAnalytic:
      case ActivationKind::NontrivialAnalytic: return true;
      case ActivationKind::Polynomial: return polynomial && polynomial->degree() >= 1;
      case ActivationKind::NonAnalytic: return false;
    }
    return false;
  }

  void validate() const {
    if (!(rho > 0.0)) throw ValidationError("activation '" + name + "' has non-positive radius");
    if ((kind == ActivationKind::Polynomial) != polynomial.has_value())
      throw ValidationError("activation '" + name + "': polynomial data must be present iff kind is polynomial");
    if (polynomial) polynomial->validate();
  }
};

inline Activation from_polynomial(PolynomialSpec spec, std::string name = {}) {
  spec.validate();
  Activation a;
  a.name = name.empty() ? spec.name() : std::move(name);
  a.family = ActivationFamily::Polynomial;
  a.eta = 0.0;
  a.rho = kInfinity;
  a.kind = ActivationKind::Polynomial;
  a.polynomial = std::move(spec);
  return a;
}

namespace detail {

inline std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> parts;
  std::size_t start = 0;
  while (true) {
    const auto pos = s.find(sep, start);
    parts.push_back(s.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return parts;
}

/// "poly:K=0,1,2;a=1,1,1" (coefficients default to 1 when "a=" is omitted).
inline PolynomialSpec parse_polynomial(std::string_view text) {
  std::string_view body = text.substr(5);
  std::vector<int> exps;
  std::vector<Rational> alpha;
  for (auto field : split(body, ';')) {
    if (field.rfind("K=", 0) == 0) {
      for (auto e : split(field.substr(2), ',')) {
        try {
          exps.push_back(std::stoi(std::string(e)));
        } catch (const std::exception&) {
          throw CatalogError("bad exponent '" + std::string(e) + "' in '" + std::string(text) + "'");
        }
      }
    } else if (field.rfind("a=", 0) == 0) {
      for (auto c : split(field.substr(2), ',')) {
        try {
          alpha.push_back(parse_rational(c));
        } catch (const std::invalid_argument&) {
          throw CatalogError("bad coefficient '" + std::string(c) + "' in '" + std::string(text) + "'");
        }
      }
    } else {
      throw CatalogError("unknown field '" + std::string(field) + "' in '" + std::string(text) + "'");
    }
  }
  if (exps.empty()) throw CatalogError("polynomial '" + std::string(text) + "' has no K= field");
  if (alpha.empty()) alpha.assign(exps.size(), Rational(1));
  if (alpha.size() != exps.size())
    throw CatalogError("polynomial '" + std::string(text) + "': K and a have different lengths");
  PolynomialSpec spec;
  for (std::size_t i = 0; i < exps.size(); ++i) {
    if (!spec.coeffs.emplace(exps[i], alpha[i]).second)
      throw ValidationError("repeated exponent " + std::to_string(exps[i]) + " in '" + std::string(text) + "'");
  }
  return spec;
}

}  // namespace detail

inline const std::vector<std::string>& catalog_names() {
  static const std::vector<std::string> names = {"tanh", "arctan", "gelu",     "sigmoid", "exp",
                                                 "sin",  "softplus", "relu", "identity"};
  return names;
}

/// Looks up a catalog activation by its CLI identifier.
inline Activation builtin(std::string_view name) {
  constexpr double pi = 3.14159265358979323846;
  auto make = [&](ActivationFamily family, double rho) {
    Activation a;
    a.name = std::string(name);
    a.family = family;
    a.eta = 0.0;
    a.rho = rho;
    a.kind = ActivationKind::NonPolynomialAnalytic;
    return a;
  };
  // Radii: distance from 0 to the nearest complex singularity.
  if (name == "tanh") return make(ActivationFamily::Tanh, pi / 2);        // poles at +-i pi/2
  if (name == "arctan") return make(ActivationFamily::Arctan, 1.0);       // branch points at +-i
  if (name == "gelu") return make(ActivationFamily::Gelu, kInfinity);     // x * Phi(x) is entire
  if (name == "sigmoid") return make(ActivationFamily::Sigmoid, pi);      // poles at +-i pi
  if (name == "exp") return make(ActivationFamily::Exp, kInfinity);
  if (name == "sin") return make(ActivationFamily::Sin, kInfinity);
  if (name == "softplus") return make(ActivationFamily::Softplus, pi);    // log(1+e^x) singular at +-i pi
  if (name == "relu") {
    // Kink at 0; analytic (and locally linear) at 1 with radius 1.
    Activation a = make(ActivationFamily::Relu, 1.0);
    a.eta = 1.0;
    a.kind = ActivationKind::NonAnalytic;
    return a;
  }
  if (name == "identity") {
    PolynomialSpec spec;
    spec.coeffs.emplace(1, Rational(1));
    return from_polynomial(std::move(spec), "identity");
  }
  if (name.rfind("poly:", 0) == 0) return from_polynomial(detail::parse_polynomial(name));
  throw CatalogError("unknown activation '" + std::string(name) + "'");
}

/// Comma-separated list of activation names ("tanh,tanh,sin").
inline std::vector<Activation> parse_activation_list(std::string_view list) {
  std::vector<Activation> acts;
  // poly specs contain commas inside their K=/a= fields, so split on commas
  // that start a new catalog token.
  std::string current;
  auto flush = [&]() {
    if (!current.empty()) acts.push_back(builtin(current));
    current.clear();
  };
  for (auto token : detail::split(list, ',')) {
    const bool starts_new = current.empty() || token.rfind("poly:", 0) == 0 ||
                            std::find(catalog_names().begin(), catalog_names().end(), std::string(token)) !=
                                catalog_names().end();
    if (starts_new) {
      flush();
      current = std::string(token);
    } else {
      current += ",";
      current += std::string(token);
    }
  }
  flush();
  return acts;
}

/// First order+1 Taylor terms at eta, zeros dropped from the support.
inline PolynomialSpec truncate_taylor(const Activation& a, int order) {
  if (order < 0) throw ValidationError("negative truncation order");
  if (!a.has_taylor()) throw UnsupportedError("activation '" + a.name + "' has no Taylor expansion at its eta");
  PolynomialSpec out;
  if (a.family == ActivationFamily::Polynomial) {
    for (const auto& [k, c] : a.polynomial->coeffs)
      if (k <= order) out.coeffs.emplace(k, c);
    return out;
  }
  const auto c = detail::series(a.family, order);
  for (int k = 0; k <= order; ++k)
    if (c[k] != 0) out.coeffs.emplace(k, c[k]);
  return out;
}

/// sup of |a(x)| over |x - 0| <= radius, by dense sampling (endpoints included).
inline double sup_abs_on_interval(const Activation& a, double radius, int points = 4001) {
  double best = 0.0;
  for (int i = 0; i < points; ++i) {
    const double x = -radius + 2.0 * radius * i / (points - 1);
    best = std::max(best, std::abs(a.eval(x)));
  }
  return best;
}

}  // namespace capax

#endif  // CAPAX_ACTIVATION_HPP
