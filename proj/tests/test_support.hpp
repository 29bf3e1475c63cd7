#pragma once

#include <random>

#include "clever/net.hpp"
#include "clever/rng.hpp"

namespace clever::test {

// Single Identity layer: logits = W x + b.
inline Network linear_net(const Eigen::MatrixXd& w, const Eigen::VectorXd& b) {
  Network net;
  net.input_dim = static_cast<int>(w.cols());
  net.num_classes = static_cast<int>(w.rows());
  net.layers.push_back({w, b, {ActivationKind::Identity, 1.0}});
  net.validate();
  return net;
}

// One hidden layer of the given activation, Identity output.
inline Network two_layer_net(const Eigen::MatrixXd& w1, const Eigen::VectorXd& b1,
                             const Eigen::MatrixXd& w2, const Eigen::VectorXd& b2,
                             Activation hidden = {ActivationKind::ReLU, 1.0}) {
  Network net;
  net.input_dim = static_cast<int>(w1.cols());
  net.num_classes = static_cast<int>(w2.rows());
  net.layers.push_back({w1, b1, hidden});
  net.layers.push_back({w2, b2, {ActivationKind::Identity, 1.0}});
  net.validate();
  return net;
}

// The worked 1-hidden-unit example: W1 = [[2, -1]], b1 = [-1],
// W2 = [[1], [-1]], b2 = 0.
inline Network tiny_relu_net() {
  Eigen::MatrixXd w1(1, 2);
  w1 << 2.0, -1.0;
  Eigen::VectorXd b1(1);
  b1 << -1.0;
  Eigen::MatrixXd w2(2, 1);
  w2 << 1.0, -1.0;
  Eigen::VectorXd b2 = Eigen::VectorXd::Zero(2);
  return two_layer_net(w1, b1, w2, b2);
}

// Random dense net for property sweeps; depth hidden layers of `width`.
inline Network random_net(int d, int k, int depth, int width, ActivationKind kind,
                          std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  Network net;
  net.input_dim = d;
  net.num_classes = k;
  int in = d;
  for (int l = 0; l <= depth; ++l) {
    const bool last = l == depth;
    const int out = last ? k : width;
    DenseLayer layer;
    layer.weights.resize(out, in);
    for (Eigen::Index r = 0; r < out; ++r)
      for (Eigen::Index c = 0; c < in; ++c) layer.weights(r, c) = gauss(rng) / std::sqrt(in);
    layer.bias.resize(out);
    for (Eigen::Index r = 0; r < out; ++r) layer.bias[r] = 0.1 * gauss(rng);
    layer.activation = last ? Activation{ActivationKind::Identity, 1.0} : Activation{kind, 1.0};
    net.layers.push_back(std::move(layer));
    in = out;
  }
  net.validate();
  return net;
}

inline Eigen::VectorXd random_point(int d, std::mt19937_64& rng, double scale = 1.0) {
  std::normal_distribution<double> gauss(0.0, scale);
  Eigen::VectorXd x(d);
  for (int i = 0; i < d; ++i) x[i] = gauss(rng);
  return x;
}

}  // namespace clever::test
