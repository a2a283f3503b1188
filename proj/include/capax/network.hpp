#ifndef CAPAX_NETWORK_HPP
#define CAPAX_NETWORK_HPP

// Fully connected network model: x -> V^T act_L(W_L^T ... act_1(W_1^T x + b_1) ... + b_L).

#include <string>
#include <utility>
#include <vector>

#include "capax/activation.hpp"
#include "capax/bounds.hpp"
#include "capax/error.hpp"
#include "capax/numeric.hpp"

namespace capax {

struct Network {
  WidthSchedule schedule;
  std::vector<Matrix> weights;  ///< W_l is m_{l-1} x m_l with m_0 = d
  std::vector<Vector> biases;   ///< b_l has length m_l
  Matrix output;                ///< V is m_L x d'
  std::vector<Activation> activations;

  int L() const { return schedule.L(); }

  void validate() const {
    schedule.validate();
    const auto layers = static_cast<std::size_t>(L());
    if (weights.size() != layers || biases.size() != layers || activations.size() != layers)
      throw DimensionError("network needs one weight matrix, bias and activation per hidden layer");
    long long in = schedule.d;
    for (std::size_t l = 0; l < layers; ++l) {
      const long long out = schedule.widths[l];
      if (weights[l].rows() != in || weights[l].cols() != out)
        throw DimensionError("layer " + std::to_string(l + 1) + " weight is " + std::to_string(weights[l].rows()) +
                             "x" + std::to_string(weights[l].cols()) + ", expected " + std::to_string(in) + "x" +
                             std::to_string(out));
      if (biases[l].size() != out) throw DimensionError("layer " + std::to_string(l + 1) + " bias has wrong length");
      in = out;
    }
    if (output.rows() != in || output.cols() != schedule.d_prime)
      throw DimensionError("output matrix must be m_L x d'");
  }

  /// Network with every parameter zero.
  static Network zeros(const WidthSchedule& s, std::vector<Activation> acts) {
    s.validate();
    Network net;
    net.schedule = s;
    long long in = s.d;
    for (auto m : s.widths) {
      net.weights.push_back(Matrix::Zero(in, m));
      net.biases.push_back(Vector::Zero(m));
      in = m;
    }
    net.output = Matrix::Zero(in, s.d_prime);
    net.activations = std::move(acts);
    net.validate();
    return net;
  }
};

struct Dataset {
  Matrix X;  ///< d x n, one sample per column
  Matrix Y;  ///< d' x n

  long long n() const { return X.cols(); }
  long long d() const { return X.rows(); }
  long long d_prime() const { return Y.rows(); }

  void validate() const {
    if (X.cols() != Y.cols()) throw DimensionError("X and Y have different sample counts");
    if (X.cols() < 1 || X.rows() < 1 || Y.rows() < 1) throw DimensionError("dataset is empty");
  }
};

/// Pairs (i, j), i < j, of exactly equal columns.
inline std::vector<std::pair<long long, long long>> duplicate_columns(const Matrix& x) {
  std::vector<std::pair<long long, long long>> dup;
  for (Eigen::Index j = 0; j < x.cols(); ++j)
    for (Eigen::Index i = 0; i < j; ++i)
      if ((x.col(i).array() == x.col(j).array()).all()) dup.emplace_back(i, j);
  return dup;
}

namespace detail {

/// W^T H + b 1^T, summed in a fixed order so lifted and per-block
/// evaluations produce identical bits.
inline Matrix affine(const Matrix& w, const Matrix& h, const Vector& b) {
  Matrix z(w.cols(), h.cols());
  for (Eigen::Index i = 0; i < h.cols(); ++i)
    for (Eigen::Index k = 0; k < w.cols(); ++k) {
      double acc = 0.0;
      for (Eigen::Index j = 0; j < w.rows(); ++j) acc += w(j, k) * h(j, i);
      z(k, i) = acc + b(k);
    }
  return z;
}

inline Matrix apply(const Activation& a, Matrix z) {
  for (Eigen::Index j = 0; j < z.cols(); ++j)
    for (Eigen::Index i = 0; i < z.rows(); ++i) z(i, j) = a.value(z(i, j));
  return z;
}

inline Matrix apply_derivative(const Activation& a, Matrix z) {
  for (Eigen::Index j = 0; j < z.cols(); ++j)
    for (Eigen::Index i = 0; i < z.rows(); ++i) z(i, j) = a.derivative(z(i, j));
  return z;
}

inline void check_input(const Network& net, const Matrix& x) {
  if (x.rows() != net.schedule.d)
    throw DimensionError("input has " + std::to_string(x.rows()) + " rows, network expects " +
                         std::to_string(net.schedule.d));
}

}  // namespace detail

/// Post-activation features of hidden layer `upto` (1-based); upto = 0 returns X.
inline Matrix hidden_features(const Network& net, const Matrix& x, int upto) {
  detail::check_input(net, x);
  if (upto < 0 || upto > net.L()) throw DimensionError("layer index " + std::to_string(upto) + " out of range");
  Matrix h = x;
  for (int l = 0; l < upto; ++l)
    h = detail::apply(net.activations[l], detail::affine(net.weights[l], h, net.biases[l]));
  return h;
}

/// Pre-activation of hidden layer `layer` (1-based).
inline Matrix pre_activation(const Network& net, const Matrix& x, int layer) {
  if (layer < 1 || layer > net.L()) throw DimensionError("layer index " + std::to_string(layer) + " out of range");
  const Matrix h = hidden_features(net, x, layer - 1);
  return detail::affine(net.weights[layer - 1], h, net.biases[layer - 1]);
}

/// d' x n outputs; column i is the network evaluated at column i of x.
inline Matrix forward(const Network& net, const Matrix& x) {
  const Matrix h = hidden_features(net, x, net.L());
  return detail::affine(net.output, h, Vector::Zero(net.output.cols()));
}

/// Biases eta_l * 1 that centre every unit at its activation's analyticity point.
inline std::vector<Vector> canonical_biases(const std::vector<Activation>& acts, const std::vector<long long>& widths) {
  if (acts.size() != widths.size()) throw DimensionError("one activation per layer is required");
  std::vector<Vector> b;
  for (std::size_t l = 0; l < acts.size(); ++l) b.push_back(Vector::Constant(widths[l], acts[l].eta));
  return b;
}

/// Compresses a network whose first L-1 weight matrices each have only
/// their first row nonzero into the equivalent narrow network with widths
/// (1, ..., 1, m_{L-1}, m_L). Layers 1..L-2 keep their first unit only.
inline Network reduce_to_narrow(const Network& net) {
  net.validate();
  const int layers = net.L();
  if (layers < 2) throw ValidationError("reduction needs at least two hidden layers");
  for (int l = 0; l + 1 < layers; ++l) {
    const Matrix& w = net.weights[l];
    if (w.rows() > 1 && (w.bottomRows(w.rows() - 1).array() != 0.0).any())
      throw ValidationError("layer " + std::to_string(l + 1) + " weight has nonzero entries outside its first row");
  }
  Network out;
  out.activations = net.activations;
  out.schedule = net.schedule;
  for (int l = 0; l + 2 < layers; ++l) out.schedule.widths[l] = 1;
  for (int l = 0; l < layers; ++l) {
    const Matrix& w = net.weights[l];
    if (l + 2 < layers) {
      Matrix narrow = Matrix::Zero(l == 0 ? w.rows() : 1, 1);
      narrow(0, 0) = w(0, 0);
      out.weights.push_back(narrow);
      out.biases.push_back(Vector::Constant(1, net.biases[l](0)));
    } else if (l + 2 == layers) {
      out.weights.push_back(l == 0 ? w : Matrix(w.topRows(1)));
      out.biases.push_back(net.biases[l]);
    } else {
      out.weights.push_back(w);
      out.biases.push_back(net.biases[l]);
    }
  }
  out.output = net.output;
  out.validate();
  return out;
}

/// Stacks single-output networks that share layers 1..L-1 into one network
/// whose output j is network j's output.
inline Network block_diag_lift(const std::vector<Network>& nets) {
  if (nets.empty()) throw ValidationError("nothing to lift");
  const Network& first = nets.front();
  first.validate();
  const int layers = first.L();
  const long long width = first.schedule.widths.back();
  for (const auto& net : nets) {
    net.validate();
    if (net.schedule.d_prime != 1) throw ValidationError("lift expects single-output networks");
    if (net.L() != layers || net.schedule.d != first.schedule.d || net.schedule.widths != first.schedule.widths)
      throw ValidationError("networks to lift have different schedules");
    for (int l = 0; l + 1 < layers; ++l)
      if (net.weights[l] != first.weights[l] || net.biases[l] != first.biases[l])
        throw ValidationError("networks to lift do not share layer " + std::to_string(l + 1));
    for (int l = 0; l < layers; ++l)
      if (net.activations[l].name != first.activations[l].name)
        throw ValidationError("networks to lift use different activations");
  }
  const auto count = static_cast<long long>(nets.size());
  Network out = first;
  out.schedule.d_prime = count;
  out.schedule.widths.back() = width * count;
  const long long prev = first.weights.back().rows();
  Matrix w = Matrix::Zero(prev, width * count);
  Vector b = Vector::Zero(width * count);
  Matrix v = Matrix::Zero(width * count, count);
  for (long long j = 0; j < count; ++j) {
    w.middleCols(j * width, width) = nets[j].weights.back();
    b.segment(j * width, width) = nets[j].biases.back();
    v.block(j * width, j, width, 1) = nets[j].output;
  }
  out.weights.back() = w;
  out.biases.back() = b;
  out.output = v;
  out.validate();
  return out;
}

}  // namespace capax

#endif  // CAPAX_NETWORK_HPP
