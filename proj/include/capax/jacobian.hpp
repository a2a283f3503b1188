#ifndef CAPAX_JACOBIAN_HPP
#define CAPAX_JACOBIAN_HPP

// Jacobians of the network output with respect to its last hidden layer,
// in face-splitting form, plus central finite-difference checks.

#include <algorithm>
#include <cmath>
#include <string>

#include "capax/activation.hpp"
#include "capax/network.hpp"
#include "capax/numeric.hpp"
#include "capax/products.hpp"

namespace capax {

/// n x (m_{L-1} * m_L); column k * m_{L-1} + j is the derivative with
/// respect to W_L(j, k) (column-major vec of W_L).
struct JacobianBlock {
  Matrix matrix;
  long long input_width = 0;   ///< m_{L-1}
  long long output_width = 0;  ///< m_L
};

namespace detail {

inline Eigen::Index select_output(const Network& net, int output_row) {
  if (output_row < 0) {
    if (net.schedule.d_prime != 1)
      throw DimensionError("multi-output network: select an output row for the Jacobian");
    return 0;
  }
  if (output_row >= net.schedule.d_prime) throw DimensionError("output row out of range");
  return output_row;
}

}  // namespace detail

/// Entry (i, k m_{L-1} + j) = v_k act_L'(z_{k,i}) xhat_{j,i}.
inline JacobianBlock final_layer_jacobian(const Network& net, const Matrix& x, int output_row = -1) {
  net.validate();
  const Eigen::Index row = detail::select_output(net, output_row);
  const int layers = net.L();
  const Matrix features = hidden_features(net, x, layers - 1);
  const Matrix z = detail::affine(net.weights.back(), features, net.biases.back());
  const Matrix slope = detail::apply_derivative(net.activations.back(), z);
  const Matrix weighted = slope.transpose() * net.output.col(row).asDiagonal();
  JacobianBlock j;
  j.matrix = face_split<Matrix>(weighted, features.transpose());
  j.input_width = features.rows();
  j.output_width = z.rows();
  return j;
}

/// n x m_L derivative with respect to column `output_row` of V: act_L(W_L^T xhat + b_L)^T.
inline Matrix output_weight_jacobian(const Network& net, const Matrix& x) {
  return hidden_features(net, x, net.L()).transpose();
}

/// Three-layer Jacobian act2'(act1(X^T W) U) diag(v) face-split act1(X^T W),
/// an n x (m * ell) matrix with column k * m + j for U(j, k).
template <class T>
MatrixX<T> three_layer_jacobian(const MatrixX<T>& x, const MatrixX<T>& w, const MatrixX<T>& u, const VectorX<T>& v,
                                const Activation& inner, const Activation& outer) {
  if (x.rows() != w.rows() || w.cols() != u.rows() || u.cols() != v.size())
    throw DimensionError("three_layer_jacobian: inconsistent shapes");
  MatrixX<T> features = x.transpose() * w;
  for (Eigen::Index j = 0; j < features.cols(); ++j)
    for (Eigen::Index i = 0; i < features.rows(); ++i) features(i, j) = inner.value(features(i, j));
  MatrixX<T> slope = features * u;
  for (Eigen::Index k = 0; k < slope.cols(); ++k)
    for (Eigen::Index i = 0; i < slope.rows(); ++i) slope(i, k) = outer.derivative(slope(i, k)) * v(k);
  return face_split<MatrixX<T>>(slope, features);
}

/// Two-hidden-layer, bias-free, single-output network computing v^T act2(U^T act1(W^T x)).
inline Network three_layer_network(const Matrix& w, const Matrix& u, const Vector& v, const Activation& inner,
                                   const Activation& outer) {
  WidthSchedule s;
  s.d = w.rows();
  s.widths = {w.cols(), u.cols()};
  s.d_prime = 1;
  Network net = Network::zeros(s, {inner, outer});
  net.weights = {w, u};
  net.output = v;
  net.validate();
  return net;
}

struct FiniteDifferenceReport {
  double max_rel_err = 0.0;
  long long worst_row = 0;     ///< sample index
  long long worst_column = 0;  ///< vec index into W_L
  double analytic = 0.0;
  double numeric = 0.0;
};

inline double relative_error(double a, double b) {
  return std::abs(a - b) / std::max({1.0, std::abs(a), std::abs(b)});
}

/// Central differences of forward() with respect to each W_L entry, step h (1 + |entry|).
/// When `analytic` is given it is checked instead of final_layer_jacobian.
inline FiniteDifferenceReport finite_difference_check(const Network& net, const Matrix& x, double h = 1e-6,
                                                      int output_row = -1, const Matrix* analytic_override = nullptr) {
  const Eigen::Index row = detail::select_output(net, output_row);
  JacobianBlock analytic;
  if (analytic_override) {
    analytic.matrix = *analytic_override;
  } else {
    analytic = final_layer_jacobian(net, x, output_row);
  }
  if (analytic.matrix.rows() != x.cols() || analytic.matrix.cols() != net.weights.back().size())
    throw DimensionError("finite_difference_check: analytic Jacobian has the wrong shape");
  FiniteDifferenceReport rep;
  Network probe = net;
  Matrix& w = probe.weights.back();
  bool first = true;
  for (Eigen::Index k = 0; k < w.cols(); ++k)
    for (Eigen::Index j = 0; j < w.rows(); ++j) {
      const double saved = w(j, k);
      const double step = h * (1.0 + std::abs(saved));
      w(j, k) = saved + step;
      const Matrix plus = forward(probe, x);
      w(j, k) = saved - step;
      const Matrix minus = forward(probe, x);
      w(j, k) = saved;
      const Eigen::Index col = k * w.rows() + j;
      for (Eigen::Index i = 0; i < x.cols(); ++i) {
        const double numeric = (plus(row, i) - minus(row, i)) / (2.0 * step);
        const double a = analytic.matrix(i, col);
        const double err = relative_error(a, numeric);
        if (first || err > rep.max_rel_err) {
          first = false;
          rep.max_rel_err = err;
          rep.worst_row = i;
          rep.worst_column = col;
          rep.analytic = a;
          rep.numeric = numeric;
        }
      }
    }
  return rep;
}

/// Checks three_layer_jacobian against central differences of the matching network.
inline FiniteDifferenceReport finite_difference_check_three_layer(const Matrix& x, const Matrix& w, const Matrix& u,
                                                                  const Vector& v, const Activation& inner,
                                                                  const Activation& outer, double h = 1e-6) {
  const Matrix analytic = three_layer_jacobian<double>(x, w, u, v, inner, outer);
  return finite_difference_check(three_layer_network(w, u, v, inner, outer), x, h, -1, &analytic);
}

}  // namespace capax

#endif  // CAPAX_JACOBIAN_HPP
