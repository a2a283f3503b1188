#ifndef CAPAX_NUMERIC_HPP
#define CAPAX_NUMERIC_HPP

// Scalar and matrix types shared by every module.

#include <cctype>
#include <cmath>
#include <stdexcept>
#include <string_view>
#include <cstdint>
#include <limits>
#include <string>
#include <type_traits>

#include <boost/multiprecision/cpp_bin_float.hpp>
#include <boost/multiprecision/cpp_int.hpp>
#include <boost/multiprecision/eigen.hpp>
#include <Eigen/Dense>

namespace capax {

/// Exact rational with canonical (coprime, positive denominator) representation.
using Rational = boost::multiprecision::number<boost::multiprecision::cpp_rational_backend,
                                               boost::multiprecision::et_off>;
using Integer = boost::multiprecision::number<boost::multiprecision::cpp_int_backend<>,
                                              boost::multiprecision::et_off>;

/// 50 significant decimal digits; used where double cannot resolve a rank gap.
using HighPrecision = boost::multiprecision::number<boost::multiprecision::cpp_bin_float<50>,
                                                    boost::multiprecision::et_off>;

template <class T>
using MatrixX = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic>;
template <class T>
using VectorX = Eigen::Matrix<T, Eigen::Dynamic, 1>;

using Matrix = MatrixX<double>;
using Vector = VectorX<double>;

inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

template <class T>
inline constexpr bool is_rational_v = std::is_same_v<T, Rational>;

/// Converts an exact rational into the working scalar type.
template <class T>
T from_rational(const Rational& q) {
  if constexpr (std::is_same_v<T, Rational>) {
    return q;
  } else if constexpr (std::is_same_v<T, double>) {
    return q.template convert_to<double>();
  } else {
    return T(boost::multiprecision::numerator(q)) / T(boost::multiprecision::denominator(q));
  }
}

template <class T>
double to_double(const T& x) {
  if constexpr (std::is_same_v<T, double>) {
    return x;
  } else {
    return x.template convert_to<double>();
  }
}

/// x^e for a nonnegative integer exponent, with 0^0 = 1.
template <class T>
T ipow(const T& x, int e) {
  T result(1);
  T base = x;
  while (e > 0) {
    if (e & 1) result *= base;
    e >>= 1;
    if (e > 0) base *= base;
  }
  return result;
}

/// Exact rational value of a finite double.
inline Rational rational_from_double(double x) {
  if (!std::isfinite(x)) throw std::domain_error("non-finite value has no rational form");
  return Rational(x);
}

inline std::string to_string(const Rational& q) { return q.str(); }

/// Parses "p", "p/q" or a plain decimal such as "-0.125" or "2.5e-3" into an exact rational.
inline Rational parse_rational(std::string_view text) {
  auto fail = [&]() -> Rational {
    throw std::invalid_argument("not a rational number: '" + std::string(text) + "'");
  };
  auto trim = [](std::string_view s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
    return s;
  };
  auto parse_integer = [&](std::string_view s) -> Integer {
    s = trim(s);
    bool negative = false;
    if (!s.empty() && (s.front() == '-' || s.front() == '+')) {
      negative = s.front() == '-';
      s.remove_prefix(1);
    }
    if (s.empty()) fail();
    Integer value = 0;
    for (char c : s) {
      if (c < '0' || c > '9') fail();
      value = value * 10 + (c - '0');
    }
    return negative ? Integer(-value) : value;
  };
  const std::string_view body = trim(text);
  if (body.empty()) return fail();
  if (auto slash = body.find('/'); slash != std::string_view::npos) {
    const Integer den = parse_integer(body.substr(slash + 1));
    if (den == 0) fail();
    return Rational(parse_integer(body.substr(0, slash))) / Rational(den);
  }
  std::string_view mantissa = body;
  int exponent = 0;
  if (auto e = body.find_first_of("eE"); e != std::string_view::npos) {
    exponent = static_cast<int>(parse_integer(body.substr(e + 1)));
    mantissa = body.substr(0, e);
  }
  bool negative = false;
  if (!mantissa.empty() && (mantissa.front() == '-' || mantissa.front() == '+')) {
    negative = mantissa.front() == '-';
    mantissa.remove_prefix(1);
  }
  std::string digits;
  if (auto dot = mantissa.find('.'); dot != std::string_view::npos) {
    digits = std::string(mantissa.substr(0, dot)) + std::string(mantissa.substr(dot + 1));
    exponent -= static_cast<int>(mantissa.size() - dot - 1);
  } else {
    digits = std::string(mantissa);
  }
  if (digits.empty()) return fail();
  Rational value(parse_integer(digits));
  const Rational ten(10);
  if (exponent >= 0) {
    value *= ipow(ten, exponent);
  } else {
    value /= ipow(ten, -exponent);
  }
  return negative ? Rational(-value) : value;
}

}  // namespace capax

#endif  // CAPAX_NUMERIC_HPP
