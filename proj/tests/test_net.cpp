#include <doctest.h>

#include <cmath>

#include "clever/fixtures.hpp"
#include "test_support.hpp"

using namespace clever;

TEST_SUITE_BEGIN("net");

TEST_CASE("identity layer forwards its input") {
  const Network net = test::linear_net(Eigen::MatrixXd::Identity(2, 2), Eigen::VectorXd::Zero(2));
  Eigen::VectorXd x(2);
  x << 1.0, -2.0;
  const Eigen::VectorXd y = forward(net, x);
  CHECK(y[0] == 1.0);
  CHECK(y[1] == -2.0);
}

TEST_CASE("softplus(0) is ln 2") {
  Network net;
  net.input_dim = 1;
  net.num_classes = 2;
  Eigen::MatrixXd w1(1, 1);
  w1 << 1.0;
  net.layers.push_back({w1, Eigen::VectorXd::Zero(1), {ActivationKind::Softplus, 1.0}});
  Eigen::MatrixXd w2(2, 1);
  w2 << 1.0, 0.0;
  net.layers.push_back({w2, Eigen::VectorXd::Zero(2), {ActivationKind::Identity, 1.0}});
  net.validate();
  Eigen::VectorXd x(1);
  x << 0.0;
  CHECK(forward(net, x)[0] == doctest::Approx(std::log(2.0)).epsilon(1e-12));
}

TEST_CASE("hand-computed forward pass through one hidden ReLU unit") {
  const Network net = test::tiny_relu_net();
  Eigen::VectorXd x(2);
  x << 1.0, 0.0;
  const Eigen::VectorXd y = forward(net, x);  // hidden = relu(2*1 - 1) = 1
  CHECK(y[0] == 1.0);
  CHECK(y[1] == -1.0);
}

TEST_CASE("activation values and kink conventions") {
  const Activation relu{ActivationKind::ReLU, 1.0};
  CHECK(relu.apply(-2.0) == 0.0);
  CHECK(relu.apply(3.0) == 3.0);
  CHECK(relu.slope(0.0) == 0.0);  // kink reports the off side

  const Activation brelu{ActivationKind::BoundedReLU, 1.0};
  CHECK(brelu.apply(2.0) == 1.0);
  CHECK(brelu.apply(0.4) == 0.4);
  CHECK(brelu.slope(1.0) == 0.0);
  CHECK(brelu.slope(0.5) == 1.0);

  const Activation softplus{ActivationKind::Softplus, 1.0};
  CHECK(softplus.apply(800.0) == doctest::Approx(800.0));  // no overflow
  CHECK(std::isfinite(softplus.apply(-800.0)));
}

TEST_CASE("predict takes the argmax with lowest-index ties") {
  Eigen::MatrixXd w = Eigen::MatrixXd::Identity(3, 3);
  const Network net = test::linear_net(w, Eigen::VectorXd::Zero(3));
  Eigen::VectorXd x(3);
  x << 0.1, 0.9, 0.5;
  CHECK(predict(net, x) == 1);

  const Network net2 = test::linear_net(Eigen::MatrixXd::Identity(2, 2), Eigen::VectorXd::Zero(2));
  Eigen::VectorXd tie(2);
  tie << 0.5, 0.5;
  CHECK(predict(net2, tie) == 0);

  Eigen::VectorXd ident(3);
  ident << 3.0, 7.0, 1.0;
  CHECK(predict(net, ident) == 1);
}

TEST_CASE("predict is invariant to shifting every logit") {
  auto rng = make_rng(7);
  for (int trial = 0; trial < 50; ++trial) {
    Network net = test::random_net(3, 4, 1, 8, ActivationKind::ReLU, 100 + trial);
    const Eigen::VectorXd x = test::random_point(3, rng);
    const int before = predict(net, x);
    net.layers.back().bias.array() += 3.75;  // same constant on every class
    CHECK(predict(net, x) == before);
  }
}

TEST_CASE("margin gradient of a linear net is the weight-row difference") {
  auto rng = make_rng(11);
  Eigen::MatrixXd w(3, 4);
  w << 1, 2, 3, 4, -1, 0.5, 2, -2, 0, 1, -1, 3;
  const Network net = test::linear_net(w, Eigen::VectorXd::Zero(3));
  const Eigen::VectorXd expected = (w.row(0) - w.row(2)).transpose();
  for (int trial = 0; trial < 100; ++trial) {
    const Eigen::VectorXd x = test::random_point(4, rng, 3.0);
    const MarginEval eval = margin_and_grad(net, x, 0, 2);
    CHECK((eval.gradient - expected).norm() == 0.0);  // constant, exactly
  }
}

TEST_CASE("hand-computed chain rule on the tiny ReLU net") {
  const Network net = test::tiny_relu_net();
  Eigen::VectorXd x(2);
  x << 1.0, 0.0;
  const MarginEval eval = margin_and_grad(net, x, 0, 1);
  CHECK(eval.value == 2.0);
  CHECK(eval.gradient[0] == 4.0);   // (V_c1 - V_j1) * w1 = 2 * (2, -1)
  CHECK(eval.gradient[1] == -2.0);
}

TEST_CASE("margin_and_grad rejects c == j") {
  const Network net = test::tiny_relu_net();
  Eigen::VectorXd x(2);
  x << 1.0, 0.0;
  CHECK_THROWS_AS(margin_and_grad(net, x, 1, 1), std::invalid_argument);
}

TEST_CASE("forward rejects dimension mismatches") {
  const Network net = test::tiny_relu_net();
  Eigen::VectorXd bad(3);
  bad << 1, 2, 3;
  CHECK_THROWS_AS(forward(net, bad), InputError);
}

TEST_CASE("finite differences on a linear net reproduce the weight rows") {
  Eigen::MatrixXd w(2, 3);
  w << 1, -2, 0.5, 2, 1, -1;
  const Network net = test::linear_net(w, Eigen::VectorXd::Zero(2));
  Eigen::VectorXd x(3);
  x << 0.3, -0.7, 1.1;
  const Eigen::VectorXd g = finite_diff_grad(net, x, 0, 1, 1e-4);
  const Eigen::VectorXd expected = (w.row(0) - w.row(1)).transpose();
  CHECK((g - expected).lpNorm<Eigen::Infinity>() < 1e-9);
}

TEST_CASE("finite_diff_grad rejects a zero step") {
  const Network net = test::tiny_relu_net();
  Eigen::VectorXd x(2);
  x << 1.0, 0.0;
  CHECK_THROWS_AS(finite_diff_grad(net, x, 0, 1, 0.0), std::invalid_argument);
}

namespace {

// distance from x to the nearest activation kink, per hidden layer preimage
bool away_from_kinks(const Network& net, const Eigen::VectorXd& x, double min_gap) {
  Eigen::VectorXd a = x;
  for (const DenseLayer& layer : net.layers) {
    const Eigen::VectorXd z = layer.weights * a + layer.bias;
    if (layer.activation.kind == ActivationKind::ReLU ||
        layer.activation.kind == ActivationKind::BoundedReLU) {
      for (Eigen::Index i = 0; i < z.size(); ++i) {
        if (std::abs(z[i]) < min_gap) return false;
        if (layer.activation.kind == ActivationKind::BoundedReLU &&
            std::abs(z[i] - layer.activation.cap) < min_gap)
          return false;
      }
    }
    a = z;
    for (Eigen::Index i = 0; i < a.size(); ++i) a[i] = layer.activation.apply(a[i]);
  }
  return true;
}

}  // namespace

TEST_CASE("reverse-mode gradients match central differences") {
  const ActivationKind kinds[] = {ActivationKind::Identity, ActivationKind::ReLU,
                                  ActivationKind::Softplus, ActivationKind::BoundedReLU};
  auto rng = make_rng(2024);
  std::uniform_int_distribution<int> pick_k(2, 5), pick_d(2, 6), pick_depth(1, 3);
  int checked = 0;
  for (int trial = 0; checked < 300; ++trial) {
    const int d = pick_d(rng), k = pick_k(rng);
    const Network net = test::random_net(d, k, pick_depth(rng), 8,
                                         kinds[trial % 4], 5000 + trial);
    const Eigen::VectorXd x = test::random_point(d, rng);
    if (!away_from_kinks(net, x, 1e-3)) continue;
    std::uniform_int_distribution<int> pick_class(0, k - 1);
    const int c = pick_class(rng);
    int j = pick_class(rng);
    if (j == c) j = (j + 1) % k;
    const MarginEval eval = margin_and_grad(net, x, c, j);
    const Eigen::VectorXd fd = finite_diff_grad(net, x, c, j, 1e-4);
    const double scale = std::max(1.0, fd.lpNorm<Eigen::Infinity>());
    CHECK((eval.gradient - fd).lpNorm<Eigen::Infinity>() / scale < 1e-5);
    ++checked;
  }
}

TEST_CASE("identical hidden sign patterns give identical gradients") {
  const Network net = test::random_net(3, 3, 1, 6, ActivationKind::ReLU, 99);
  auto rng = make_rng(17);
  const Eigen::MatrixXd& w1 = net.layers[0].weights;
  const Eigen::VectorXd& b1 = net.layers[0].bias;

  auto pattern_of = [&](const Eigen::VectorXd& x) {
    const Eigen::VectorXd z = w1 * x + b1;
    unsigned mask = 0;
    for (Eigen::Index r = 0; r < z.size(); ++r)
      if (z[r] > 0.0) mask |= 1u << r;
    return mask;
  };

  int matched = 0;
  for (int trial = 0; trial < 4000 && matched < 25; ++trial) {
    const Eigen::VectorXd x = test::random_point(3, rng), y = test::random_point(3, rng);
    if (pattern_of(x) != pattern_of(y)) continue;
    const MarginEval gx = margin_and_grad(net, x, 0, 1);
    const MarginEval gy = margin_and_grad(net, y, 0, 1);
    CHECK((gx.gradient - gy.gradient).lpNorm<Eigen::Infinity>() == 0.0);
    ++matched;
  }
  CHECK(matched >= 25);
}

TEST_CASE("batched margins agree with the scalar path") {
  const Network net = test::random_net(4, 3, 2, 8, ActivationKind::Softplus, 321);
  auto rng = make_rng(5);
  Eigen::MatrixXd points(4, 16);
  for (int k = 0; k < 16; ++k) points.col(k) = test::random_point(4, rng);
  const BatchMarginEval batch = margin_and_grad_batch(net, points, 2, 0);
  for (int k = 0; k < 16; ++k) {
    const MarginEval one = margin_and_grad(net, points.col(k), 2, 0);
    CHECK(batch.values[k] == doctest::Approx(one.value).epsilon(1e-12));
    CHECK((batch.gradients.col(k) - one.gradient).lpNorm<Eigen::Infinity>() < 1e-12);
  }
}

TEST_CASE("train_sgd separates Gaussian blobs") {
  const Dataset blobs = make_blobs(2, 2, 60, 10.0, 42);

  SUBCASE("linear model") {
    const Network net = train_sgd(blobs.features, blobs.labels, blobs.K, {}, {0.1, 120, 16, 7});
    CHECK(training_accuracy(net, blobs.features, blobs.labels) == 1.0);
  }
  SUBCASE("16-unit ReLU model") {
    const Network net = train_sgd(blobs.features, blobs.labels, blobs.K,
                                  {{16, {ActivationKind::ReLU, 1.0}}}, {0.1, 120, 16, 7});
    CHECK(training_accuracy(net, blobs.features, blobs.labels) == 1.0);
  }
}

TEST_CASE("train_sgd rejects an empty dataset") {
  Eigen::MatrixXd empty(0, 2);
  CHECK_THROWS_AS(train_sgd(empty, {}, 2, {}, {}), InputError);
}

TEST_CASE("train_sgd is deterministic given the seed") {
  const Dataset blobs = make_blobs(2, 3, 40, 8.0, 9);
  const TrainConfig cfg{0.1, 60, 16, 31};
  const Network a = train_sgd(blobs.features, blobs.labels, blobs.K,
                              {{8, {ActivationKind::ReLU, 1.0}}}, cfg);
  const Network b = train_sgd(blobs.features, blobs.labels, blobs.K,
                              {{8, {ActivationKind::ReLU, 1.0}}}, cfg);
  for (std::size_t l = 0; l < a.layers.size(); ++l) {
    CHECK(a.layers[l].weights == b.layers[l].weights);
    CHECK(a.layers[l].bias == b.layers[l].bias);
  }
}

TEST_SUITE_END();
