#ifndef CAPAX_PRODUCTS_HPP
#define CAPAX_PRODUCTS_HPP

// Row-wise and column-wise Kronecker products. Both work on any matrix type
// with rows(), cols(), operator()(i, j) and a (rows, cols) constructor.

#include <string>
#include <type_traits>

#include "capax/error.hpp"

namespace capax {

/// Row i of the result is A.row(i) kron B.row(i); column k*q + j holds A(i,k)*B(i,j).
template <class M>
M face_split(const M& a, const M& b) {
  if (a.rows() != b.rows())
    throw DimensionError("face_split: row counts differ (" + std::to_string(a.rows()) + " vs " +
                         std::to_string(b.rows()) + ")");
  const auto n = a.rows();
  const auto p = a.cols();
  const auto q = b.cols();
  M out(n, p * q);
  for (std::remove_const_t<decltype(p)> k = 0; k < p; ++k)
    for (std::remove_const_t<decltype(q)> j = 0; j < q; ++j)
      for (std::remove_const_t<decltype(n)> i = 0; i < n; ++i) out(i, k * q + j) = a(i, k) * b(i, j);
  return out;
}

/// Column j of the result is A.col(j) kron B.col(j).
template <class M>
M khatri_rao(const M& a, const M& b) {
  if (a.cols() != b.cols())
    throw DimensionError("khatri_rao: column counts differ (" + std::to_string(a.cols()) + " vs " +
                         std::to_string(b.cols()) + ")");
  const auto n = a.cols();
  const auto p = a.rows();
  const auto q = b.rows();
  M out(p * q, n);
  for (std::remove_const_t<decltype(n)> j = 0; j < n; ++j)
    for (std::remove_const_t<decltype(p)> k = 0; k < p; ++k)
      for (std::remove_const_t<decltype(q)> i = 0; i < q; ++i) out(k * q + i, j) = a(k, j) * b(i, j);
  return out;
}

}  // namespace capax

#endif  // CAPAX_PRODUCTS_HPP
