#include <doctest.h>

#include <cmath>

#include "clever/evt.hpp"
#include "clever/oracle.hpp"
#include "clever/sampling.hpp"
#include "test_support.hpp"

using namespace clever;

TEST_SUITE_BEGIN("sampling");

TEST_CASE("dual exponents are Hoelder conjugates") {
  CHECK(dual_exponent(NormOrder::L2) == NormOrder::L2);
  CHECK(dual_exponent(NormOrder::Linf) == NormOrder::L1);
  CHECK(dual_exponent(NormOrder::L1) == NormOrder::Linf);
}

TEST_CASE("unsupported norm orders fail loudly") {
  CHECK_THROWS_AS(norm_from_string("3"), InputError);
  CHECK_THROWS_AS(norm_from_string("1.5"), InputError);
}

TEST_CASE("lp norms") {
  Eigen::VectorXd v(2);
  v << 3.0, 4.0;
  CHECK(lp_norm(v, NormOrder::L2) == 5.0);
  v << 3.0, -4.0;
  CHECK(lp_norm(v, NormOrder::Linf) == 4.0);
  CHECK(lp_norm(v, NormOrder::L1) == 7.0);
}

TEST_CASE("every sample lies inside the ball, all three norms") {
  auto rng = make_rng(404);
  for (NormOrder p : {NormOrder::L1, NormOrder::L2, NormOrder::Linf}) {
    Eigen::VectorXd center(4);
    center << 0.5, -1.0, 2.0, 0.0;
    const Ball ball{center, 2.5, p};
    const Eigen::MatrixXd pts = sample_uniform_ball(ball, 100000, rng);
    for (int k = 0; k < pts.cols(); ++k)
      REQUIRE(lp_norm(pts.col(k) - center, p) <= ball.radius);
  }
}

TEST_CASE("1-d interval sampling has the uniform moments") {
  // uniform on [-5, 5]: mean 0, variance 25/3
  auto rng = make_rng(901);
  const int n = 100000;
  const Ball ball{Eigen::VectorXd::Zero(1), 5.0, NormOrder::L2};
  const Eigen::MatrixXd pts = sample_uniform_ball(ball, n, rng);
  const double mean = pts.row(0).mean();
  const double var = (pts.row(0).array() - mean).square().sum() / (n - 1);
  const double se_mean = std::sqrt(25.0 / 3.0 / n);
  // Var of the sample variance of U(-R,R): (m4 - m2^2)/n, m4 = R^4/5
  const double se_var = std::sqrt((std::pow(5.0, 4) / 5.0 - std::pow(25.0 / 3.0, 2)) / n);
  CHECK(std::abs(mean) < 3.0 * se_mean);
  CHECK(std::abs(var - 25.0 / 3.0) < 3.0 * se_var);
}

TEST_CASE("3-d l2 ball radial mean is 0.75 R") {
  auto rng = make_rng(902);
  const int n = 100000;
  const double radius = 2.0;
  Eigen::VectorXd center(3);
  center << 1.0, 2.0, -3.0;
  const Ball ball{center, radius, NormOrder::L2};
  const Eigen::MatrixXd pts = sample_uniform_ball(ball, n, rng);
  double mean = 0.0, m2 = 0.0;
  for (int k = 0; k < n; ++k) {
    const double r = (pts.col(k) - center).norm();
    mean += r;
    m2 += r * r;
  }
  mean /= n;
  m2 /= n;
  const double expected = radius * 3.0 / 4.0;  // E r = R d/(d+1)
  const double se = std::sqrt((m2 - mean * mean) / n);
  CHECK(std::abs(mean - expected) < 3.0 * se);
}

TEST_CASE("coordinate marginals of the linf ball pass a K-S test") {
  auto rng = make_rng(903);
  const int n = 100000;
  const int d = 3;
  const Ball ball{Eigen::VectorXd::Zero(d), 1.5, NormOrder::Linf};
  const Eigen::MatrixXd pts = sample_uniform_ball(ball, n, rng);
  for (int i = 0; i < d; ++i) {
    std::vector<double> coord(n);
    for (int k = 0; k < n; ++k) coord[k] = pts(i, k) / ball.radius;
    const auto [d_stat, pvalue] =
        ks_test_cdf(std::move(coord), [](double t) { return (t + 1.0) / 2.0; });
    CHECK(pvalue >= 0.01);
  }
}

TEST_CASE("radial CDF of the l2 ball is t^d") {
  auto rng = make_rng(904);
  const int n = 100000;
  const int d = 4;
  const Ball ball{Eigen::VectorXd::Zero(d), 3.0, NormOrder::L2};
  const Eigen::MatrixXd pts = sample_uniform_ball(ball, n, rng);
  std::vector<double> radii(n);
  for (int k = 0; k < n; ++k) radii[k] = pts.col(k).norm() / ball.radius;
  const auto [d_stat, pvalue] = ks_test_cdf(std::move(radii), [d](double t) {
    return t <= 0.0 ? 0.0 : (t >= 1.0 ? 1.0 : std::pow(t, d));
  });
  CHECK(pvalue >= 0.01);
}

TEST_CASE("linear nets give constant batch maxima equal to the dual norm") {
  Eigen::MatrixXd w(2, 3);
  w << 1.0, -2.0, 0.5, -0.5, 1.0, 2.0;
  const Network net = test::linear_net(w, Eigen::VectorXd::Zero(2));
  Eigen::VectorXd x0(3);
  x0 << 5.0, 0.0, 0.0;

  for (NormOrder p : {NormOrder::L1, NormOrder::L2, NormOrder::Linf}) {
    const Ball ball{x0, 2.0, p};
    const SampleConfig cfg{8, 16, 77, 1, false, {}};
    const GradNormSampleSet set = collect_batch_maxima(net, x0, 0, 1, ball, cfg);
    REQUIRE(set.values.size() == 8);
    const double expected = lp_norm((w.row(0) - w.row(1)).transpose(), dual_exponent(p));
    for (double v : set.values) {
      CHECK(v == set.values.front());  // constant gradient: all batches identical
      CHECK(v == doctest::Approx(expected).epsilon(1e-12));
    }
  }
}

TEST_CASE("collect_batch_maxima is bitwise deterministic at any worker count") {
  const Network net = test::random_net(4, 3, 1, 8, ActivationKind::ReLU, 5150);
  Eigen::VectorXd x0 = Eigen::VectorXd::Zero(4);
  const Ball ball{x0, 3.0, NormOrder::L2};

  SampleConfig serial{16, 64, 909, 1, false, {}};
  SampleConfig threaded = serial;
  threaded.workers = 4;

  const GradNormSampleSet a = collect_batch_maxima(net, x0, 0, 1, ball, serial);
  const GradNormSampleSet b = collect_batch_maxima(net, x0, 0, 1, ball, threaded);
  const GradNormSampleSet c = collect_batch_maxima(net, x0, 0, 1, ball, serial);
  REQUIRE(a.values.size() == b.values.size());
  for (std::size_t i = 0; i < a.values.size(); ++i) {
    CHECK(a.values[i] == b.values[i]);
    CHECK(a.values[i] == c.values[i]);
  }
}

TEST_CASE("each stored maximum dominates its batch") {
  const Network net = test::random_net(3, 3, 1, 6, ActivationKind::Softplus, 5151);
  Eigen::VectorXd x0 = Eigen::VectorXd::Zero(3);
  const Ball ball{x0, 2.0, NormOrder::Linf};
  SampleConfig cfg{10, 32, 44, 1, true, {}};
  const GradNormSampleSet set = collect_batch_maxima(net, x0, 0, 2, ball, cfg);
  REQUIRE(set.batch_samples.size() == set.values.size());
  for (std::size_t batch = 0; batch < set.values.size(); ++batch) {
    REQUIRE(set.batch_samples[batch].size() == 32);
    double biggest = 0.0;
    for (double v : set.batch_samples[batch]) {
      CHECK(set.values[batch] >= v);
      biggest = std::max(biggest, v);
    }
    CHECK(set.values[batch] == biggest);
  }
}

TEST_CASE("batch maxima of a tiny ReLU net live in the enumerated norm set") {
  const Network net = test::random_net(2, 2, 1, 5, ActivationKind::ReLU, 5152);
  Eigen::VectorXd x0 = Eigen::VectorXd::Zero(2);
  const Ball ball{x0, 2.0, NormOrder::L2};
  const auto regions = enumerate_region_gradients(net, 0, 1, dual_exponent(ball.p));

  SampleConfig cfg{12, 64, 3003, 1, false, {}};
  const GradNormSampleSet set = collect_batch_maxima(net, x0, 0, 1, ball, cfg);
  for (double v : set.values) {
    bool member = false;
    for (const RegionGradient& region : regions) {
      // batched GEMM and the reconstruction differ by at most summation order
      if (std::abs(region.norm_q - v) <= 1e-12 * std::max(1.0, region.norm_q)) {
        member = true;
        break;
      }
    }
    CHECK(member);
  }
}

TEST_CASE("nested streams extend instead of reshuffling") {
  const Ball ball{Eigen::VectorXd::Zero(3), 1.0, NormOrder::L2};
  BallSampler a(ball, 606), b(ball, 606);
  const Eigen::MatrixXd first = a.next(10);
  const Eigen::MatrixXd combined = b.next(25);
  CHECK((first - combined.leftCols(10)).lpNorm<Eigen::Infinity>() == 0.0);
}

TEST_CASE("config validation") {
  SampleConfig cfg;
  cfg.n_batches = 1;
  CHECK_THROWS_AS(cfg.validate(), InputError);
  cfg = SampleConfig{};
  cfg.n_per_batch = 0;
  CHECK_THROWS_AS(cfg.validate(), InputError);
  Ball ball{Eigen::VectorXd::Zero(2), -1.0, NormOrder::L2};
  CHECK_THROWS_AS(ball.validate(), InputError);
}

TEST_SUITE_END();
