#pragma once

#include <Eigen/Dense>
#include <array>
#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "clever/net.hpp"

namespace clever {

// Norm orders used throughout. The perturbation norm is p; gradient norms are
// taken in the Hoelder-conjugate order q. Other real orders are rejected.
enum class NormOrder { L1, L2, Linf };

NormOrder dual_exponent(NormOrder p);
double lp_norm(const Eigen::VectorXd& v, NormOrder p);
std::string to_string(NormOrder p);
NormOrder norm_from_string(const std::string& name);

struct Ball {
  Eigen::VectorXd center;
  double radius = 5.0;
  NormOrder p = NormOrder::L2;

  void validate() const;
};

struct SampleConfig {
  int n_batches = 500;    // N_b
  int n_per_batch = 1024; // N_s
  std::uint64_t seed = 0;
  int workers = 1;
  bool retain_samples = false;  // keep every per-sample value for debugging
  // Optional per-coordinate clamp box; when set, samples are drawn by
  // rejection from ball-AND-box. Off by default: the theory samples the ball.
  std::optional<std::array<double, 2>> box;

  void validate() const;
};

// One point uniform in the ball. Constructions are rejection-free:
//   p=inf  independent Uniform(-R, R) per coordinate
//   p=2    Gaussian direction, radius R*u^(1/d)
//   p=1    signed exponential direction normalized in l1, radius R*u^(1/d)
Eigen::VectorXd sample_uniform_ball(const Ball& ball, std::mt19937_64& rng);
Eigen::MatrixXd sample_uniform_ball(const Ball& ball, int n, std::mt19937_64& rng);  // d x n

// Stateful sample stream over one ball: drawing n then m points yields the
// same sequence as drawing n+m at once, so running maxima are monotone when
// a stream is extended.
class BallSampler {
 public:
  BallSampler(const Ball& ball, std::uint64_t seed);
  Eigen::VectorXd next();
  Eigen::MatrixXd next(int n);  // d x n

 private:
  Ball ball_;
  std::mt19937_64 rng_;
  std::uniform_real_distribution<double> unit_{0.0, 1.0};
  std::normal_distribution<double> gauss_{0.0, 1.0};
  std::exponential_distribution<double> expo_{1.0};
};

struct GradNormSampleSet {
  std::vector<double> values;  // per-batch maxima of ||grad g||_q, length n_batches
  NormOrder q = NormOrder::L2;
  int target_j = -1;
  enum class Source { GradNorm, Slope } source = Source::GradNorm;
  // populated only when SampleConfig::retain_samples
  std::vector<std::vector<double>> batch_samples;
};

// Batched maxima of the gradient norm over the ball: batch i draws
// n_per_batch points from the stream derived from (seed, i), evaluates
// ||grad g||_q by reverse-mode differentiation and keeps the max. Results
// are bitwise independent of `workers`.
GradNormSampleSet collect_batch_maxima(const Network& net, const Eigen::VectorXd& x0, int c,
                                       int j, const Ball& ball, const SampleConfig& cfg);

}  // namespace clever
