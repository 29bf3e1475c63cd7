#include "clever/sampling.hpp"

#include <atomic>
#include <cmath>
#include <mutex>
#include <sstream>
#include <thread>

#include "clever/rng.hpp"

namespace clever {

NormOrder dual_exponent(NormOrder p) {
  switch (p) {
    case NormOrder::L1: return NormOrder::Linf;
    case NormOrder::L2: return NormOrder::L2;
    case NormOrder::Linf: return NormOrder::L1;
  }
  throw std::invalid_argument("unsupported norm order");
}

double lp_norm(const Eigen::VectorXd& v, NormOrder p) {
  switch (p) {
    case NormOrder::L1: return v.lpNorm<1>();
    case NormOrder::L2: return v.norm();
    case NormOrder::Linf: return v.size() == 0 ? 0.0 : v.lpNorm<Eigen::Infinity>();
  }
  throw std::invalid_argument("unsupported norm order");
}

std::string to_string(NormOrder p) {
  switch (p) {
    case NormOrder::L1: return "1";
    case NormOrder::L2: return "2";
    case NormOrder::Linf: return "inf";
  }
  return "?";
}

NormOrder norm_from_string(const std::string& name) {
  if (name == "1") return NormOrder::L1;
  if (name == "2") return NormOrder::L2;
  if (name == "inf" || name == "Inf" || name == "INF") return NormOrder::Linf;
  throw InputError("unsupported norm order '" + name + "' (expected 1, 2 or inf)");
}

void Ball::validate() const {
  if (!(radius > 0.0)) throw InputError("ball radius must be positive");
  if (!center.allFinite()) throw InputError("ball center must be finite");
}

void SampleConfig::validate() const {
  if (n_batches < 2) throw InputError("need at least 2 batches to fit maxima");
  if (n_per_batch < 1) throw InputError("need at least 1 sample per batch");
  if (workers < 1) throw InputError("workers must be >= 1");
  if (box && !((*box)[0] < (*box)[1])) throw InputError("clamp box must satisfy lo < hi");
}

namespace {

// Direction-times-radial-quantile constructions give exact uniform volume
// measure. A final rescale guards the membership contract against the last
// ulp of the normalization.
Eigen::VectorXd sample_in_ball_once(const Ball& ball, std::mt19937_64& rng,
                                    std::uniform_real_distribution<double>& unit,
                                    std::normal_distribution<double>& gauss,
                                    std::exponential_distribution<double>& expo) {
  const Eigen::Index d = ball.center.size();
  Eigen::VectorXd delta(d);
  switch (ball.p) {
    case NormOrder::Linf: {
      for (Eigen::Index i = 0; i < d; ++i) delta[i] = ball.radius * (2.0 * unit(rng) - 1.0);
      break;
    }
    case NormOrder::L2: {
      double norm2 = 0.0;
      do {
        for (Eigen::Index i = 0; i < d; ++i) delta[i] = gauss(rng);
        norm2 = delta.norm();
      } while (norm2 == 0.0);
      const double r = ball.radius * std::pow(unit(rng), 1.0 / static_cast<double>(d));
      delta *= r / norm2;
      break;
    }
    case NormOrder::L1: {
      double norm1 = 0.0;
      do {
        for (Eigen::Index i = 0; i < d; ++i) {
          const double mag = expo(rng);
          delta[i] = (unit(rng) < 0.5) ? -mag : mag;
        }
        norm1 = delta.lpNorm<1>();
      } while (norm1 == 0.0);
      const double r = ball.radius * std::pow(unit(rng), 1.0 / static_cast<double>(d));
      delta *= r / norm1;
      break;
    }
  }
  double got = lp_norm(delta, ball.p);
  if (got > ball.radius) delta *= (ball.radius / got) * (1.0 - 1e-15);
  return ball.center + delta;
}

}  // namespace

Eigen::VectorXd sample_uniform_ball(const Ball& ball, std::mt19937_64& rng) {
  ball.validate();
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::exponential_distribution<double> expo(1.0);
  return sample_in_ball_once(ball, rng, unit, gauss, expo);
}

BallSampler::BallSampler(const Ball& ball, std::uint64_t seed) : ball_(ball), rng_(seed) {
  ball_.validate();
}

Eigen::VectorXd BallSampler::next() {
  return sample_in_ball_once(ball_, rng_, unit_, gauss_, expo_);
}

Eigen::MatrixXd BallSampler::next(int n) {
  if (n < 1) throw std::invalid_argument("sample count must be positive");
  Eigen::MatrixXd points(ball_.center.size(), n);
  for (int k = 0; k < n; ++k) points.col(k) = next();
  return points;
}

Eigen::MatrixXd sample_uniform_ball(const Ball& ball, int n, std::mt19937_64& rng) {
  ball.validate();
  if (n < 1) throw std::invalid_argument("sample count must be positive");
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::exponential_distribution<double> expo(1.0);
  Eigen::MatrixXd points(ball.center.size(), n);
  for (int k = 0; k < n; ++k)
    points.col(k) = sample_in_ball_once(ball, rng, unit, gauss, expo);
  return points;
}

namespace {

Eigen::MatrixXd sample_batch_points(const Ball& ball, const SampleConfig& cfg,
                                    std::mt19937_64& rng) {
  if (!cfg.box) return sample_uniform_ball(ball, cfg.n_per_batch, rng);
  Eigen::MatrixXd points(ball.center.size(), cfg.n_per_batch);
  const double lo = (*cfg.box)[0], hi = (*cfg.box)[1];
  for (int k = 0; k < cfg.n_per_batch; ++k) {
    bool ok = false;
    for (int attempt = 0; attempt < 100000; ++attempt) {
      Eigen::VectorXd x = sample_uniform_ball(ball, rng);
      if ((x.array() >= lo).all() && (x.array() <= hi).all()) {
        points.col(k) = x;
        ok = true;
        break;
      }
    }
    if (!ok) throw NumericError("ball/box rejection sampling failed: intersection too thin");
  }
  return points;
}

}  // namespace

GradNormSampleSet collect_batch_maxima(const Network& net, const Eigen::VectorXd& x0, int c,
                                       int j, const Ball& ball, const SampleConfig& cfg) {
  cfg.validate();
  ball.validate();
  net.validate();
  (void)x0;  // the ball carries the center; kept for signature symmetry
  const NormOrder q = dual_exponent(ball.p);

  GradNormSampleSet out;
  out.q = q;
  out.target_j = j;
  out.source = GradNormSampleSet::Source::GradNorm;
  out.values.assign(cfg.n_batches, 0.0);
  if (cfg.retain_samples) out.batch_samples.assign(cfg.n_batches, {});

  std::atomic<int> next{0};
  std::atomic<bool> failed{false};
  std::string error;
  std::mutex error_mutex;

  auto worker = [&]() {
    for (;;) {
      const int batch = next.fetch_add(1);
      if (batch >= cfg.n_batches || failed.load()) break;
      try {
        auto rng = make_rng(derive_seed(cfg.seed, batch));
        const Eigen::MatrixXd points = sample_batch_points(ball, cfg, rng);
        const BatchMarginEval eval = margin_and_grad_batch(net, points, c, j);
        double best = 0.0;
        std::vector<double>* retained = cfg.retain_samples ? &out.batch_samples[batch] : nullptr;
        if (retained) retained->reserve(cfg.n_per_batch);
        for (int k = 0; k < cfg.n_per_batch; ++k) {
          const double norm = lp_norm(eval.gradients.col(k), q);
          if (!std::isfinite(norm)) {
            std::ostringstream msg;
            msg << "non-finite gradient norm at batch " << batch << ", sample " << k;
            throw NumericError(msg.str());
          }
          if (retained) retained->push_back(norm);
          if (k == 0 || norm > best) best = norm;
        }
        out.values[batch] = best;
      } catch (const std::exception& e) {
        std::scoped_lock lock(error_mutex);
        failed.store(true);
        if (error.empty()) error = e.what();
      }
    }
  };

  if (cfg.workers <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(cfg.workers);
    for (int w = 0; w < cfg.workers; ++w) pool.emplace_back(worker);
    for (std::thread& t : pool) t.join();
  }
  if (failed.load()) throw NumericError(error);
  return out;
}

}  // namespace clever
