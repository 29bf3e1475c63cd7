#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "clever/net.hpp"
#include "clever/rng.hpp"

namespace clever {

namespace {

Network init_network(int input_dim, int num_classes, const std::vector<LayerSpec>& hidden,
                     std::uint64_t seed) {
  Network net;
  net.input_dim = input_dim;
  net.num_classes = num_classes;

  std::vector<std::pair<int, Activation>> plan;
  for (const LayerSpec& spec : hidden) {
    if (spec.width <= 0) throw InputError("hidden layer width must be positive");
    plan.emplace_back(spec.width, spec.activation);
  }
  plan.emplace_back(num_classes, Activation{ActivationKind::Identity, 1.0});

  int in = input_dim;
  for (std::size_t l = 0; l < plan.size(); ++l) {
    auto rng = make_rng(derive_seed(seed, 0x11, l));
    std::normal_distribution<double> gauss(0.0, std::sqrt(2.0 / static_cast<double>(in)));
    DenseLayer layer;
    layer.weights.resize(plan[l].first, in);
    for (Eigen::Index r = 0; r < layer.weights.rows(); ++r)
      for (Eigen::Index c = 0; c < layer.weights.cols(); ++c) layer.weights(r, c) = gauss(rng);
    layer.bias = Eigen::VectorXd::Zero(plan[l].first);
    layer.activation = plan[l].second;
    net.layers.push_back(std::move(layer));
    in = plan[l].first;
  }
  net.validate();
  return net;
}

}  // namespace

Network train_sgd(const Eigen::MatrixXd& features, const std::vector<int>& labels,
                  int num_classes, const std::vector<LayerSpec>& hidden, const TrainConfig& cfg) {
  const Eigen::Index n = features.rows();
  if (n == 0) throw InputError("training dataset is empty");
  if (static_cast<Eigen::Index>(labels.size()) != n)
    throw InputError("feature and label counts differ");
  if (num_classes < 2) throw InputError("need at least two classes");
  for (int y : labels)
    if (y < 0 || y >= num_classes) throw InputError("label out of range");
  if (cfg.batch_size <= 0 || cfg.epochs <= 0) throw InputError("bad training hyperparameters");

  Network net = init_network(static_cast<int>(features.cols()), num_classes, hidden, cfg.seed);
  const std::size_t depth = net.layers.size();

  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    auto shuffle_rng = make_rng(derive_seed(cfg.seed, 0x22, epoch));
    std::shuffle(order.begin(), order.end(), shuffle_rng);

    double epoch_loss = 0.0;
    for (Eigen::Index start = 0; start < n; start += cfg.batch_size) {
      const Eigen::Index bsz = std::min<Eigen::Index>(cfg.batch_size, n - start);
      Eigen::MatrixXd batch(net.input_dim, bsz);
      std::vector<int> ys(bsz);
      for (Eigen::Index k = 0; k < bsz; ++k) {
        batch.col(k) = features.row(order[start + k]).transpose();
        ys[k] = labels[order[start + k]];
      }

      // forward, keeping pre-activations
      std::vector<Eigen::MatrixXd> pre(depth);
      Eigen::MatrixXd a = batch;
      std::vector<Eigen::MatrixXd> acts(depth + 1);
      acts[0] = a;
      for (std::size_t l = 0; l < depth; ++l) {
        const DenseLayer& layer = net.layers[l];
        pre[l] = (layer.weights * a).colwise() + layer.bias;
        a = pre[l];
        if (layer.activation.kind != ActivationKind::Identity)
          for (Eigen::Index col = 0; col < bsz; ++col)
            for (Eigen::Index row = 0; row < a.rows(); ++row)
              a(row, col) = layer.activation.apply(a(row, col));
        acts[l + 1] = a;
      }

      // softmax cross-entropy, gradient = softmax - onehot
      Eigen::MatrixXd delta(net.num_classes, bsz);
      for (Eigen::Index col = 0; col < bsz; ++col) {
        const double mx = a.col(col).maxCoeff();
        Eigen::VectorXd e = (a.col(col).array() - mx).exp();
        const double z = e.sum();
        epoch_loss += -(a(ys[col], col) - mx - std::log(z));
        delta.col(col) = e / z;
        delta(ys[col], col) -= 1.0;
      }

      const double scale = cfg.learning_rate / static_cast<double>(bsz);
      for (std::size_t l = depth; l-- > 0;) {
        DenseLayer& layer = net.layers[l];
        if (layer.activation.kind != ActivationKind::Identity)
          for (Eigen::Index col = 0; col < bsz; ++col)
            for (Eigen::Index row = 0; row < delta.rows(); ++row)
              delta(row, col) *= layer.activation.slope(pre[l](row, col));
        Eigen::MatrixXd grad_w = delta * acts[l].transpose();
        Eigen::VectorXd grad_b = delta.rowwise().sum();
        if (l > 0) delta = (layer.weights.transpose() * delta).eval();
        layer.weights -= scale * grad_w;
        layer.bias -= scale * grad_b;
      }
    }

    if (!std::isfinite(epoch_loss)) {
      std::ostringstream msg;
      msg << "sgd diverged: non-finite loss at epoch " << epoch;
      throw NumericError(msg.str());
    }
  }
  return net;
}

double training_accuracy(const Network& net, const Eigen::MatrixXd& features,
                         const std::vector<int>& labels) {
  const Eigen::Index n = features.rows();
  if (n == 0) return 0.0;
  Eigen::MatrixXd logits = forward_batch(net, features.transpose());
  long hits = 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    int best = 0;
    for (int k = 1; k < net.num_classes; ++k)
      if (logits(k, i) > logits(best, i)) best = k;
    if (best == labels[i]) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(n);
}

}  // namespace clever
