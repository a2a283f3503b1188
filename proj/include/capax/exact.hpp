#ifndef CAPAX_EXACT_HPP
#define CAPAX_EXACT_HPP

// Exact rational linear algebra and the combinatorics behind the rank
// expansion of act2(act1(u v^T) w z^T) face-split act1(u v^T).

#include <algorithm>
#include <map>
#include <numeric>
#include <set>
#include <string>
#include <vector>

#include "capax/activation.hpp"
#include "capax/error.hpp"
#include "capax/numeric.hpp"
#include "capax/products.hpp"
#include "capax/random.hpp"

namespace capax {

/// Dense row-major matrix of exact rationals.
class RationalMatrix {
 public:
  RationalMatrix() = default;
  RationalMatrix(long long rows, long long cols)
      : rows_(rows), cols_(cols), data_(static_cast<std::size_t>(rows * cols), Rational(0)) {
    if (rows < 0 || cols < 0) throw DimensionError("negative matrix dimension");
  }
  RationalMatrix(std::initializer_list<std::initializer_list<Rational>> rows) {
    rows_ = static_cast<long long>(rows.size());
    cols_ = rows_ == 0 ? 0 : static_cast<long long>(rows.begin()->size());
    for (const auto& r : rows) {
      if (static_cast<long long>(r.size()) != cols_) throw DimensionError("ragged matrix literal");
      data_.insert(data_.end(), r.begin(), r.end());
    }
  }

  static RationalMatrix identity(long long n) {
    RationalMatrix m(n, n);
    for (long long i = 0; i < n; ++i) m(i, i) = 1;
    return m;
  }

  static RationalMatrix from_double(const Matrix& a) {
    RationalMatrix m(a.rows(), a.cols());
    for (long long i = 0; i < m.rows(); ++i)
      for (long long j = 0; j < m.cols(); ++j) m(i, j) = rational_from_double(a(i, j));
    return m;
  }

  long long rows() const { return rows_; }
  long long cols() const { return cols_; }

  Rational& operator()(long long i, long long j) { return data_[static_cast<std::size_t>(i * cols_ + j)]; }
  const Rational& operator()(long long i, long long j) const {
    return data_[static_cast<std::size_t>(i * cols_ + j)];
  }

  RationalMatrix transpose() const {
    RationalMatrix t(cols_, rows_);
    for (long long i = 0; i < rows_; ++i)
      for (long long j = 0; j < cols_; ++j) t(j, i) = (*this)(i, j);
    return t;
  }

  RationalMatrix select_columns(const std::vector<long long>& cols) const {
    RationalMatrix s(rows_, static_cast<long long>(cols.size()));
    for (long long i = 0; i < rows_; ++i)
      for (std::size_t c = 0; c < cols.size(); ++c) s(i, static_cast<long long>(c)) = (*this)(i, cols[c]);
    return s;
  }

  RationalMatrix select_rows(const std::vector<long long>& rows) const {
    RationalMatrix s(static_cast<long long>(rows.size()), cols_);
    for (std::size_t r = 0; r < rows.size(); ++r)
      for (long long j = 0; j < cols_; ++j) s(static_cast<long long>(r), j) = (*this)(rows[r], j);
    return s;
  }

  Matrix to_double() const {
    Matrix m(rows_, cols_);
    for (long long i = 0; i < rows_; ++i)
      for (long long j = 0; j < cols_; ++j) m(i, j) = (*this)(i, j).convert_to<double>();
    return m;
  }

  bool is_zero() const {
    return std::all_of(data_.begin(), data_.end(), [](const Rational& q) { return q == 0; });
  }

  friend RationalMatrix operator*(const RationalMatrix& a, const RationalMatrix& b) {
    if (a.cols_ != b.rows_) throw DimensionError("rational product: inner dimensions differ");
    RationalMatrix c(a.rows_, b.cols_);
    for (long long i = 0; i < a.rows_; ++i)
      for (long long k = 0; k < a.cols_; ++k) {
        const Rational& aik = a(i, k);
        if (aik == 0) continue;
        for (long long j = 0; j < b.cols_; ++j) c(i, j) += aik * b(k, j);
      }
    return c;
  }

  friend RationalMatrix operator+(RationalMatrix a, const RationalMatrix& b) {
    if (a.rows_ != b.rows_ || a.cols_ != b.cols_) throw DimensionError("rational sum: shapes differ");
    for (std::size_t i = 0; i < a.data_.size(); ++i) a.data_[i] += b.data_[i];
    return a;
  }

  bool operator==(const RationalMatrix& o) const = default;

 private:
  long long rows_ = 0;
  long long cols_ = 0;
  std::vector<Rational> data_;
};

using RationalVector = std::vector<Rational>;

inline RationalMatrix column(const RationalVector& v) {
  RationalMatrix m(static_cast<long long>(v.size()), 1);
  for (std::size_t i = 0; i < v.size(); ++i) m(static_cast<long long>(i), 0) = v[i];
  return m;
}

inline RationalMatrix outer(const RationalVector& a, const RationalVector& b) { return column(a) * column(b).transpose(); }

inline RationalVector hadamard(const RationalVector& a, const RationalVector& b) {
  if (a.size() != b.size()) throw DimensionError("hadamard: lengths differ");
  RationalVector c(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) c[i] = a[i] * b[i];
  return c;
}

inline RationalVector kron(const RationalVector& a, const RationalVector& b) {
  RationalVector c;
  c.reserve(a.size() * b.size());
  for (const auto& x : a)
    for (const auto& y : b) c.push_back(x * y);
  return c;
}

/// Entry-wise power.
inline RationalVector power(const RationalVector& a, int k) {
  RationalVector c(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) c[i] = ipow(a[i], k);
  return c;
}

/// Uniform random rational with numerator in [-num_bound, num_bound] and denominator in [1, den_bound].
inline Rational random_rational(Rng& rng, long long num_bound = 9, long long den_bound = 9) {
  const long long p = rng.integer(-num_bound, num_bound);
  const long long q = rng.integer(1, den_bound);
  return Rational(p, q);
}

inline RationalVector random_rational_vector(Rng& rng, long long size) {
  RationalVector v(static_cast<std::size_t>(size));
  for (auto& x : v) x = random_rational(rng);
  return v;
}

/// Nonzero, pairwise distinct entries p/q with |p|, q <= bound; small-range
/// draws repeat too often to stand in for a generic point.
inline RationalVector random_distinct_rational_vector(Rng& rng, long long size, long long bound = 99) {
  RationalVector v;
  std::set<Rational> seen;
  while (static_cast<long long>(v.size()) < size) {
    const Rational q = random_rational(rng, bound, bound);
    if (q == 0 || !seen.insert(q).second) continue;
    v.push_back(q);
  }
  return v;
}

inline RationalMatrix random_rational_matrix(Rng& rng, long long rows, long long cols) {
  RationalMatrix m(rows, cols);
  for (long long i = 0; i < rows; ++i)
    for (long long j = 0; j < cols; ++j) m(i, j) = random_rational(rng);
  return m;
}

// ---------------------------------------------------------------------------
// Compositions and coefficient sums

using Composition = std::vector<int>;

/// All ordered ell-tuples from K summing to r, in lexicographic order.
inline std::vector<Composition> compositions(int r, int ell, const std::vector<int>& parts) {
  std::vector<Composition> out;
  if (r < 0 || ell < 0) return out;
  std::vector<int> k = parts;
  std::sort(k.begin(), k.end());
  k.erase(std::unique(k.begin(), k.end()), k.end());
  if (ell == 0) {
    if (r == 0) out.emplace_back();
    return out;
  }
  if (k.empty()) return out;
  const int lo = k.front();
  const int hi = k.back();
  Composition current;
  auto recurse = [&](auto&& self, int remaining_sum, int remaining_parts) -> void {
    if (remaining_parts == 0) {
      if (remaining_sum == 0) out.push_back(current);
      return;
    }
    for (int part : k) {
      const int rest = remaining_sum - part;
      if (rest < lo * (remaining_parts - 1)) break;
      if (rest > hi * (remaining_parts - 1)) continue;
      current.push_back(part);
      self(self, rest, remaining_parts - 1);
      current.pop_back();
    }
  };
  recurse(recurse, r, ell);
  return out;
}

/// Sum over compositions of r into ell parts from the support of the product of coefficients; 1 for ell = 0, r = 0.
inline Rational gamma_coeff(int ell, int r, const std::map<int, Rational>& coeffs) {
  std::vector<int> support;
  for (const auto& entry : coeffs) support.push_back(entry.first);
  Rational sum = 0;
  for (const auto& comp : compositions(r, ell, support)) {
    Rational prod = 1;
    for (int k : comp) prod *= coeffs.at(k);
    sum += prod;
  }
  return sum;
}

inline Rational gamma_coeff(int ell, int r, const PolynomialSpec& spec) { return gamma_coeff(ell, r, spec.coeffs); }

/// Independent route: coefficient of t^r in (sum_k alpha_k t^k)^ell.
inline Rational gamma_via_power(int ell, int r, const std::map<int, Rational>& coeffs) {
  if (r < 0 || ell < 0) return Rational(0);
  std::vector<Rational> acc(static_cast<std::size_t>(r) + 1, Rational(0));
  acc[0] = 1;
  for (int step = 0; step < ell; ++step) {
    std::vector<Rational> next(acc.size(), Rational(0));
    for (std::size_t i = 0; i < acc.size(); ++i) {
      if (acc[i] == 0) continue;
      for (const auto& [k, c] : coeffs) {
        const std::size_t j = i + static_cast<std::size_t>(k);
        if (j < next.size()) next[j] += acc[i] * c;
      }
    }
    acc = std::move(next);
  }
  return acc[static_cast<std::size_t>(r)];
}

inline Rational gamma_via_power(int ell, int r, const PolynomialSpec& spec) { return gamma_via_power(ell, r, spec.coeffs); }

// ---------------------------------------------------------------------------
// Determinants and rank

namespace detail {

inline void require_square(const RationalMatrix& m, const char* what) {
  if (m.rows() != m.cols()) throw DimensionError(std::string(what) + ": matrix is not square");
}

/// Rows scaled to integers; returns the product of the row scale factors.
inline Integer integerize(const RationalMatrix& m, std::vector<std::vector<Integer>>& out) {
  Integer scale = 1;
  out.assign(static_cast<std::size_t>(m.rows()), std::vector<Integer>(static_cast<std::size_t>(m.cols())));
  for (long long i = 0; i < m.rows(); ++i) {
    Integer l = 1;
    for (long long j = 0; j < m.cols(); ++j) l = boost::multiprecision::lcm(l, Integer(boost::multiprecision::denominator(m(i, j))));
    for (long long j = 0; j < m.cols(); ++j) {
      const Rational scaled = m(i, j) * Rational(l);
      out[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] = boost::multiprecision::numerator(scaled);
    }
    scale *= l;
  }
  return scale;
}

}  // namespace detail

inline constexpr long long kLeibnizLimit = 8;

/// Leibniz permutation expansion; n <= 8.
inline Rational det_leibniz(const RationalMatrix& m) {
  detail::require_square(m, "det_leibniz");
  const long long n = m.rows();
  if (n > kLeibnizLimit) throw ResourceError("Leibniz expansion is limited to 8x8");
  std::vector<long long> perm(static_cast<std::size_t>(n));
  std::iota(perm.begin(), perm.end(), 0);
  Rational det = 0;
  do {
    int inversions = 0;
    for (long long i = 0; i < n; ++i)
      for (long long j = i + 1; j < n; ++j)
        if (perm[i] > perm[j]) ++inversions;
    Rational term = inversions % 2 == 0 ? 1 : -1;
    for (long long i = 0; i < n && term != 0; ++i) term *= m(i, perm[i]);
    det += term;
  } while (std::next_permutation(perm.begin(), perm.end()));
  return det;
}

/// Fraction-free (Bareiss) elimination on the integerized matrix.
inline Rational det_bareiss(const RationalMatrix& m) {
  detail::require_square(m, "det_bareiss");
  const long long n = m.rows();
  if (n == 0) return Rational(1);
  std::vector<std::vector<Integer>> a;
  const Integer scale = detail::integerize(m, a);
  Integer prev = 1;
  int sign = 1;
  for (long long k = 0; k < n; ++k) {
    long long pivot = k;
    while (pivot < n && a[pivot][k] == 0) ++pivot;
    if (pivot == n) return Rational(0);
    if (pivot != k) {
      std::swap(a[pivot], a[k]);
      sign = -sign;
    }
    for (long long i = k + 1; i < n; ++i) {
      for (long long j = k + 1; j < n; ++j) a[i][j] = (a[i][j] * a[k][k] - a[i][k] * a[k][j]) / prev;
      a[i][k] = 0;
    }
    prev = a[k][k];
  }
  return Rational(sign * a[n - 1][n - 1]) / Rational(scale);
}

/// Leibniz up to 8x8, elimination beyond.
inline Rational det_exact(const RationalMatrix& m) {
  detail::require_square(m, "det_exact");
  return m.rows() <= kLeibnizLimit ? det_leibniz(m) : det_bareiss(m);
}

/// det(A B) as the sum over n-subsets S of det(A[:, S]) det(B[S, :]).
inline Rational cauchy_binet_minor(const RationalMatrix& a, const RationalMatrix& b) {
  const long long n = a.rows();
  const long long big_n = a.cols();
  if (b.rows() != big_n || b.cols() != n) throw DimensionError("cauchy_binet_minor: need A n x N and B N x n");
  if (big_n < n) throw DimensionError("cauchy_binet_minor: N < n");
  std::vector<long long> subset(static_cast<std::size_t>(n));
  std::iota(subset.begin(), subset.end(), 0);
  Rational sum = 0;
  while (true) {
    sum += det_exact(a.select_columns(subset)) * det_exact(b.select_rows(subset));
    long long i = n - 1;
    while (i >= 0 && subset[i] == big_n - n + i) --i;
    if (i < 0) break;
    ++subset[i];
    for (long long j = i + 1; j < n; ++j) subset[j] = subset[j - 1] + 1;
  }
  return sum;
}

/// Rank by fraction-free elimination with full pivoting.
inline long long exact_rank(const RationalMatrix& m) {
  std::vector<std::vector<Integer>> a;
  detail::integerize(m, a);
  const long long rows = m.rows();
  const long long cols = m.cols();
  Integer prev = 1;
  long long rank = 0;
  for (long long k = 0; k < std::min(rows, cols); ++k) {
    long long pi = -1, pj = -1;
    for (long long j = k; j < cols && pi < 0; ++j)
      for (long long i = k; i < rows; ++i)
        if (a[i][j] != 0) {
          pi = i;
          pj = j;
          break;
        }
    if (pi < 0) break;
    std::swap(a[pi], a[k]);
    if (pj != k)
      for (auto& row : a) std::swap(row[pj], row[k]);
    for (long long i = k + 1; i < rows; ++i) {
      for (long long j = k + 1; j < cols; ++j) a[i][j] = (a[i][j] * a[k][k] - a[i][k] * a[k][j]) / prev;
      a[i][k] = 0;
    }
    prev = a[k][k];
    ++rank;
  }
  return rank;
}

// ---------------------------------------------------------------------------
// The polynomial face-splitting matrix and its rank-one expansion

inline RationalMatrix apply(const PolynomialSpec& p, RationalMatrix m) {
  for (long long i = 0; i < m.rows(); ++i)
    for (long long j = 0; j < m.cols(); ++j) m(i, j) = p.value(m(i, j));
  return m;
}

/// inner(u v^T) face-split outer(inner(u v^T) w z^T), n x (d m), evaluated exactly.
inline RationalMatrix nested_power_matrix(const RationalVector& u, const RationalVector& v, const RationalVector& w,
                                      const RationalVector& z, const PolynomialSpec& inner, const PolynomialSpec& outer) {
  if (v.size() != w.size()) throw DimensionError("v and w must have the same length");
  const RationalMatrix a = apply(inner, capax::outer(u, v));
  const RationalMatrix b = apply(outer, a * column(w) * column(z).transpose());
  return face_split(a, b);
}

/// Same matrix as the sum over (k, l, r) of alpha_k beta_l gamma_{l,r} u^(k+r) (v^(k) kron z^(l))^T,
/// where gamma uses the coefficients alpha_k s_k with s_k = sum_j v_j^k w_j.
inline RationalMatrix nested_power_decomposition(const RationalVector& u, const RationalVector& v, const RationalVector& w,
                                             const RationalVector& z, const PolynomialSpec& inner,
                                             const PolynomialSpec& outer) {
  if (v.size() != w.size()) throw DimensionError("v and w must have the same length");
  std::map<int, Rational> weighted;
  for (const auto& [k, alpha] : inner.coeffs) {
    Rational s = 0;
    for (std::size_t j = 0; j < v.size(); ++j) s += ipow(v[j], k) * w[j];
    if (s != 0) weighted.emplace(k, alpha * s);
  }
  RationalMatrix sum(static_cast<long long>(u.size()), static_cast<long long>(v.size() * z.size()));
  const int kmax = inner.degree();
  for (const auto& [k, alpha] : inner.coeffs) {
    const RationalVector vk = power(v, k);
    for (const auto& [l, beta] : outer.coeffs) {
      const RationalVector right = kron(vk, power(z, l));
      for (int r = l * inner.min_exponent(); r <= l * kmax; ++r) {
        const Rational g = gamma_via_power(l, r, weighted);
        if (g == 0) continue;
        const Rational c = alpha * beta * g;
        const RationalVector left = power(u, k + r);
        for (std::size_t i = 0; i < left.size(); ++i)
          for (std::size_t j = 0; j < right.size(); ++j)
            sum(static_cast<long long>(i), static_cast<long long>(j)) += c * left[i] * right[j];
      }
    }
  }
  return sum;
}

/// The distinguished indices of the determinant expansion: k* and l* are
/// the n smallest exponents of each support and r*_i = l*_i min(K).
struct DistinguishedTuple {
  std::vector<int> k;
  std::vector<int> l;
  std::vector<int> r;
  std::vector<Rational> gamma;     ///< gamma_{l*_i, r*_i} by composition enumeration
  std::vector<Rational> expected;  ///< alpha_{min K}^{l*_i}
};

inline DistinguishedTuple distinguished_tuple(long long n, const PolynomialSpec& inner, const PolynomialSpec& outer) {
  inner.validate();
  outer.validate();
  const auto ks = inner.support();
  const auto ls = outer.support();
  if (n < 1 || static_cast<std::size_t>(n) > ks.size() || static_cast<std::size_t>(n) > ls.size())
    throw HypothesisError("both supports need at least n exponents");
  DistinguishedTuple t;
  const int kmin = ks.front();
  const Rational& alpha = inner.coefficient(kmin);
  for (long long i = 0; i < n; ++i) {
    t.k.push_back(ks[i]);
    t.l.push_back(ls[i]);
    t.r.push_back(ls[i] * kmin);
    t.gamma.push_back(gamma_coeff(ls[i], t.r.back(), inner));
    t.expected.push_back(ipow(alpha, ls[i]));
  }
  return t;
}

/// Random polynomial with `size` distinct exponents in [0, max_exponent] and nonzero rational coefficients.
inline PolynomialSpec random_polynomial(Rng& rng, int size, int max_exponent) {
  if (size > max_exponent + 1) throw ValidationError("support larger than exponent range");
  PolynomialSpec p;
  while (static_cast<int>(p.coeffs.size()) < size) {
    const int k = static_cast<int>(rng.integer(0, max_exponent));
    if (p.coeffs.count(k)) continue;
    Rational c = 0;
    while (c == 0) c = random_rational(rng);
    p.coeffs.emplace(k, c);
  }
  return p;
}

}  // namespace capax

#endif  // CAPAX_EXACT_HPP
