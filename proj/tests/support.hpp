#ifndef CAPAX_TESTS_SUPPORT_HPP
#define CAPAX_TESTS_SUPPORT_HPP

#include <cmath>
#include <string>
#include <vector>

#include "capax/activation.hpp"
#include "capax/network.hpp"
#include "capax/random.hpp"

namespace capax::testing {

inline Matrix gaussian(Rng& rng, Eigen::Index rows, Eigen::Index cols, double scale = 1.0) {
  Matrix m(rows, cols);
  for (Eigen::Index j = 0; j < cols; ++j)
    for (Eigen::Index i = 0; i < rows; ++i) m(i, j) = scale * rng.gaussian();
  return m;
}

inline Vector gaussian_vector(Rng& rng, Eigen::Index n, double scale = 1.0) {
  return gaussian(rng, n, 1, scale).col(0);
}

/// Weights N(0, 1 / fan_in), biases at the analyticity points plus N(0, 0.1^2).
inline Network random_network(Rng& rng, const WidthSchedule& s, const std::vector<std::string>& names) {
  std::vector<Activation> acts;
  for (const auto& n : names) acts.push_back(builtin(n));
  Network net = Network::zeros(s, acts);
  for (std::size_t l = 0; l < net.weights.size(); ++l) {
    auto& w = net.weights[l];
    w = gaussian(rng, w.rows(), w.cols(), 1.0 / std::sqrt(static_cast<double>(w.rows())));
    net.biases[l] = Vector::Constant(w.cols(), acts[l].eta) + gaussian_vector(rng, w.cols(), 0.1);
  }
  net.output = gaussian(rng, net.output.rows(), net.output.cols());
  return net;
}

inline double max_relative_difference(const Matrix& a, const Matrix& b) {
  double worst = 0.0;
  for (Eigen::Index i = 0; i < a.size(); ++i)
    worst = std::max(worst, std::abs(a.data()[i] - b.data()[i]) / std::max(1.0, std::abs(b.data()[i])));
  return worst;
}

}  // namespace capax::testing

#endif  // CAPAX_TESTS_SUPPORT_HPP
