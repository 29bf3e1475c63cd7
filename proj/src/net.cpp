#include "clever/net.hpp"

#include <cmath>
#include <sstream>

namespace clever {

std::string to_string(ActivationKind kind) {
  switch (kind) {
    case ActivationKind::Identity: return "identity";
    case ActivationKind::ReLU: return "relu";
    case ActivationKind::Softplus: return "softplus";
    case ActivationKind::BoundedReLU: return "brelu";
  }
  return "identity";
}

ActivationKind activation_from_string(const std::string& name) {
  if (name == "identity") return ActivationKind::Identity;
  if (name == "relu") return ActivationKind::ReLU;
  if (name == "softplus") return ActivationKind::Softplus;
  if (name == "brelu") return ActivationKind::BoundedReLU;
  throw InputError("unknown activation: " + name);
}

double Activation::apply(double u) const {
  switch (kind) {
    case ActivationKind::Identity:
      return u;
    case ActivationKind::ReLU:
      return u > 0.0 ? u : 0.0;
    case ActivationKind::Softplus:
      // ln(1 + e^u), stable on both tails
      return u > 0.0 ? u + std::log1p(std::exp(-u)) : std::log1p(std::exp(u));
    case ActivationKind::BoundedReLU:
      return std::min(std::max(u, 0.0), cap);
  }
  return u;
}

double Activation::slope(double u) const {
  switch (kind) {
    case ActivationKind::Identity:
      return 1.0;
    case ActivationKind::ReLU:
      return u > 0.0 ? 1.0 : 0.0;
    case ActivationKind::Softplus: {
      if (u >= 0.0) return 1.0 / (1.0 + std::exp(-u));
      const double e = std::exp(u);
      return e / (1.0 + e);
    }
    case ActivationKind::BoundedReLU:
      return (u > 0.0 && u < cap) ? 1.0 : 0.0;
  }
  return 1.0;
}

void Network::validate() const {
  if (layers.empty()) throw InputError("network has no layers");
  if (input_dim <= 0 || num_classes <= 0)
    throw InputError("network dimensions must be positive");
  Eigen::Index in = input_dim;
  for (std::size_t l = 0; l < layers.size(); ++l) {
    const DenseLayer& layer = layers[l];
    if (layer.weights.cols() != in) {
      std::ostringstream msg;
      msg << "layer " << l << " expects input " << layer.weights.cols() << ", got " << in;
      throw InputError(msg.str());
    }
    if (layer.bias.size() != layer.weights.rows()) {
      std::ostringstream msg;
      msg << "layer " << l << " bias length " << layer.bias.size() << " != rows "
          << layer.weights.rows();
      throw InputError(msg.str());
    }
    if (!layer.weights.allFinite() || !layer.bias.allFinite()) {
      std::ostringstream msg;
      msg << "layer " << l << " has non-finite parameters";
      throw InputError(msg.str());
    }
    if (layer.activation.kind == ActivationKind::BoundedReLU && !(layer.activation.cap > 0.0))
      throw InputError("brelu cap must be positive");
    in = layer.weights.rows();
  }
  if (in != num_classes) throw InputError("last layer width does not match num_classes");
  if (layers.back().activation.kind != ActivationKind::Identity)
    throw InputError("final layer must emit raw logits (identity activation)");
}

namespace {

void check_input(const Network& net, Eigen::Index rows) {
  if (rows != net.input_dim) {
    std::ostringstream msg;
    msg << "input has " << rows << " components, network expects " << net.input_dim;
    throw InputError(msg.str());
  }
}

void check_classes(const Network& net, int c, int j) {
  if (c == j) throw std::invalid_argument("margin classes must differ");
  if (c < 0 || c >= net.num_classes || j < 0 || j >= net.num_classes)
    throw std::invalid_argument("margin class out of range");
}

}  // namespace

Eigen::VectorXd forward(const Network& net, const Eigen::VectorXd& x) {
  check_input(net, x.size());
  Eigen::VectorXd a = x;
  for (const DenseLayer& layer : net.layers) {
    Eigen::VectorXd z = layer.weights * a + layer.bias;
    if (layer.activation.kind != ActivationKind::Identity)
      for (Eigen::Index i = 0; i < z.size(); ++i) z[i] = layer.activation.apply(z[i]);
    a = std::move(z);
  }
  return a;
}

Eigen::MatrixXd forward_batch(const Network& net, const Eigen::MatrixXd& points) {
  check_input(net, points.rows());
  Eigen::MatrixXd a = points;
  for (const DenseLayer& layer : net.layers) {
    Eigen::MatrixXd z = (layer.weights * a).colwise() + layer.bias;
    if (layer.activation.kind != ActivationKind::Identity)
      for (Eigen::Index col = 0; col < z.cols(); ++col)
        for (Eigen::Index row = 0; row < z.rows(); ++row)
          z(row, col) = layer.activation.apply(z(row, col));
    a = std::move(z);
  }
  return a;
}

int predict(const Network& net, const Eigen::VectorXd& x) {
  const Eigen::VectorXd logits = forward(net, x);
  int best = 0;
  for (int i = 1; i < static_cast<int>(logits.size()); ++i)
    if (logits[i] > logits[best]) best = i;  // ties keep the lowest index
  return best;
}

MarginEval margin_and_grad(const Network& net, const Eigen::VectorXd& x, int c, int j) {
  check_input(net, x.size());
  check_classes(net, c, j);

  const std::size_t depth = net.layers.size();
  std::vector<Eigen::VectorXd> pre(depth);  // z_l, pre-activation
  Eigen::VectorXd a = x;
  for (std::size_t l = 0; l < depth; ++l) {
    const DenseLayer& layer = net.layers[l];
    pre[l] = layer.weights * a + layer.bias;
    a = pre[l];
    if (layer.activation.kind != ActivationKind::Identity)
      for (Eigen::Index i = 0; i < a.size(); ++i) a[i] = layer.activation.apply(a[i]);
  }

  MarginEval out;
  out.class_c = c;
  out.class_j = j;
  out.value = a[c] - a[j];

  Eigen::VectorXd delta = Eigen::VectorXd::Zero(net.num_classes);
  delta[c] = 1.0;
  delta[j] = -1.0;
  for (std::size_t l = depth; l-- > 0;) {
    const DenseLayer& layer = net.layers[l];
    if (layer.activation.kind != ActivationKind::Identity)
      for (Eigen::Index i = 0; i < delta.size(); ++i)
        delta[i] *= layer.activation.slope(pre[l][i]);
    delta = (layer.weights.transpose() * delta).eval();
  }
  out.gradient = std::move(delta);
  return out;
}

BatchMarginEval margin_and_grad_batch(const Network& net, const Eigen::MatrixXd& points, int c,
                                      int j) {
  check_input(net, points.rows());
  check_classes(net, c, j);

  const std::size_t depth = net.layers.size();
  const Eigen::Index n = points.cols();
  std::vector<Eigen::MatrixXd> pre(depth);
  Eigen::MatrixXd a = points;
  for (std::size_t l = 0; l < depth; ++l) {
    const DenseLayer& layer = net.layers[l];
    pre[l] = (layer.weights * a).colwise() + layer.bias;
    a = pre[l];
    if (layer.activation.kind != ActivationKind::Identity)
      for (Eigen::Index col = 0; col < n; ++col)
        for (Eigen::Index row = 0; row < a.rows(); ++row)
          a(row, col) = layer.activation.apply(a(row, col));
  }

  BatchMarginEval out;
  out.values = (a.row(c) - a.row(j)).transpose();

  Eigen::MatrixXd delta = Eigen::MatrixXd::Zero(net.num_classes, n);
  delta.row(c).setConstant(1.0);
  delta.row(j).setConstant(-1.0);
  for (std::size_t l = depth; l-- > 0;) {
    const DenseLayer& layer = net.layers[l];
    if (layer.activation.kind != ActivationKind::Identity)
      for (Eigen::Index col = 0; col < n; ++col)
        for (Eigen::Index row = 0; row < delta.rows(); ++row)
          delta(row, col) *= layer.activation.slope(pre[l](row, col));
    delta = (layer.weights.transpose() * delta).eval();
  }
  out.gradients = std::move(delta);
  return out;
}

Eigen::VectorXd finite_diff_grad(const Network& net, const Eigen::VectorXd& x, int c, int j,
                                 double h) {
  if (!(h > 0.0)) throw std::invalid_argument("finite difference step must be positive");
  check_input(net, x.size());
  check_classes(net, c, j);

  Eigen::VectorXd grad(x.size());
  Eigen::VectorXd probe = x;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    probe[i] = x[i] + h;
    Eigen::VectorXd up = forward(net, probe);
    probe[i] = x[i] - h;
    Eigen::VectorXd down = forward(net, probe);
    probe[i] = x[i];
    grad[i] = ((up[c] - up[j]) - (down[c] - down[j])) / (2.0 * h);
  }
  return grad;
}

}  // namespace clever
