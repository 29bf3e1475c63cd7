#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "clever/evt.hpp"
#include "clever/net.hpp"
#include "clever/sampling.hpp"

namespace clever {

// On/off sign pattern of the hidden ReLU units of a one-hidden-layer net.
struct ActivationPattern {
  std::uint32_t mask = 0;
  int width = 0;

  bool on(int r) const { return (mask >> r) & 1u; }
};

struct RegionGradient {
  ActivationPattern pattern;
  Eigen::VectorXd gradient;  // constant over the pattern's region
  double norm_q = 0.0;
  enum class Feasibility { Feasible, Infeasible, Unknown };
  Feasibility feasible_in_ball = Feasibility::Unknown;
};

struct LipschitzEstimate {
  double value = 0.0;
  enum class Method { ExactRegion, DenseSampling, Slope, EVT };
  Method method = Method::DenseSampling;
  // true only when the value is provably the exact maximum over the ball
  bool certified = false;
};

// All 2^U sign patterns of a one-hidden-layer ReLU network with their region
// gradients sum_{r on} (V_cr - V_jr) w_r and lq norms. Feasibility is left
// Unknown; exact_local_cross_lipschitz resolves it against a concrete ball.
// Requires hidden width U <= 20.
std::vector<RegionGradient> enumerate_region_gradients(const Network& net, int c, int j,
                                                       NormOrder q);

// Exact local cross-Lipschitz constant max ||grad g||_q over the ball, by
// deciding which activation regions meet the ball. Box balls (p = inf) are
// decided by a phase-1 LP; round balls (p = 1, 2) by certificates plus a
// projected subgradient feasibility search. When a region cannot be decided
// within budget the returned value is a safe upper bound and certified is
// false.
LipschitzEstimate exact_local_cross_lipschitz(const Network& net, const Eigen::VectorXd& x0,
                                              int c, int j, const Ball& ball);

// Plain max over n_dense uniform samples; a lower estimate of the true max.
LipschitzEstimate dense_sampling_lipschitz(const Network& net, const Eigen::VectorXd& x0, int c,
                                           int j, const Ball& ball, long n_dense,
                                           std::uint64_t seed);

// Wood & Zhang style baseline: batch maxima of pairwise difference quotients
// |g(x)-g(y)| / ||x-y||_p over the ball, fitted with a reverse Weibull; the
// fitted end-point is the estimate. Pairs are drawn independently per batch.
struct SlopeEstimate {
  LipschitzEstimate estimate;
  FitResult fit;
  GradNormSampleSet maxima;
};
SlopeEstimate slope_estimate(const Network& net, const Eigen::VectorXd& x0, int c, int j,
                             const Ball& ball, const SampleConfig& cfg);

// Empirical CDF of ||grad g||_q over n uniform ball samples, as (value,
// cumulative probability) steps. Values come from the region enumeration
// table, so the support is a subset of the enumerated norms by construction.
std::vector<std::pair<double, double>> empirical_gradnorm_cdf(const Network& net,
                                                              const Eigen::VectorXd& x0, int c,
                                                              int j, const Ball& ball, long n,
                                                              std::uint64_t seed);

}  // namespace clever
