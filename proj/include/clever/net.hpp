#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "clever/common.hpp"

namespace clever {

enum class ActivationKind { Identity, ReLU, Softplus, BoundedReLU };

std::string to_string(ActivationKind kind);
ActivationKind activation_from_string(const std::string& name);

struct Activation {
  ActivationKind kind = ActivationKind::Identity;
  double cap = 1.0;  // BoundedReLU only: output clamped to [0, cap]

  double apply(double u) const;
  // Derivative consistent with apply(); ReLU/BoundedReLU kinks report 0.
  double slope(double u) const;
};

struct DenseLayer {
  Eigen::MatrixXd weights;  // out_dim x in_dim
  Eigen::VectorXd bias;     // out_dim
  Activation activation;

  Eigen::Index in_dim() const { return weights.cols(); }
  Eigen::Index out_dim() const { return weights.rows(); }
};

// Feedforward dense classifier. Immutable after construction; all evaluation
// entry points allocate their own scratch and are safe to call concurrently.
struct Network {
  std::vector<DenseLayer> layers;
  int input_dim = 0;
  int num_classes = 0;

  // Checks the dimension chain, bias lengths, weight finiteness and that the
  // final layer emits raw logits (Identity activation).
  void validate() const;
};

struct MarginEval {
  double value = 0.0;          // g(x) = f_c(x) - f_j(x)
  Eigen::VectorXd gradient;    // d(g)/dx, length input_dim
  int class_c = 0;
  int class_j = 0;
};

struct BatchMarginEval {
  Eigen::VectorXd values;      // n
  Eigen::MatrixXd gradients;   // input_dim x n
};

Eigen::VectorXd forward(const Network& net, const Eigen::VectorXd& x);
Eigen::MatrixXd forward_batch(const Network& net, const Eigen::MatrixXd& points);  // d x n in, K x n out

int predict(const Network& net, const Eigen::VectorXd& x);

MarginEval margin_and_grad(const Network& net, const Eigen::VectorXd& x, int c, int j);
BatchMarginEval margin_and_grad_batch(const Network& net, const Eigen::MatrixXd& points, int c, int j);

// Central-difference gradient of the margin, the test oracle for
// margin_and_grad. Component i is (g(x + h e_i) - g(x - h e_i)) / (2h).
Eigen::VectorXd finite_diff_grad(const Network& net, const Eigen::VectorXd& x, int c, int j,
                                 double h);

struct LayerSpec {
  int width = 0;
  Activation activation;
};

struct TrainConfig {
  double learning_rate = 0.05;
  int epochs = 200;
  int batch_size = 32;
  std::uint64_t seed = 0;
};

// Mini-batch SGD on softmax cross-entropy. `features` holds one sample per
// row. `hidden` lists the hidden layers; the output layer (num_classes wide,
// Identity) is appended automatically. Deterministic given the seed.
Network train_sgd(const Eigen::MatrixXd& features, const std::vector<int>& labels,
                  int num_classes, const std::vector<LayerSpec>& hidden, const TrainConfig& cfg);

double training_accuracy(const Network& net, const Eigen::MatrixXd& features,
                         const std::vector<int>& labels);

}  // namespace clever
