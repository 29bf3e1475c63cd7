#pragma once

#include <optional>
#include <random>
#include <string>
#include <vector>

#include "clever/evt.hpp"
#include "clever/net.hpp"
#include "clever/sampling.hpp"

namespace clever {

struct TargetSpec {
  enum class Kind { Top2, Random, LeastLikely, Fixed };
  Kind kind = Kind::Top2;
  int fixed_j = -1;
};

std::string to_string(TargetSpec::Kind kind);
TargetSpec::Kind target_kind_from_string(const std::string& name);

struct CleverScore {
  double value = 0.0;            // mu (targeted) or nu (untargeted), in lp units
  NormOrder p = NormOrder::L2;
  int target_j = -1;             // untargeted results carry the argmin class
  double location_estimate = 0;  // fitted end-point a_hat
  double margin = 0.0;           // g(x0)
  bool capped = false;           // value hit the sampling radius R
  bool tie = false;              // g(x0) == 0, score is 0 by convention
  bool fit_warning = false;      // K-S p-value below 0.05
  FitResult fit;
  std::vector<double> batch_maxima;  // the fitted sample set S
};

// min(g / L, R): the guaranteed radius when L bounds the local cross
// Lipschitz constant. L == 0 with positive margin means g cannot change
// inside the ball, so the whole radius is safe.
double theoretical_lower_bound(double g_val, double lipschitz, double radius);

// Targeted score for class j: batch maxima of ||grad g||_q over the ball,
// reverse Weibull end-point estimate, then min(g(x0)/a_hat, R).
CleverScore clever_t(const Network& net, const Eigen::VectorXd& x0, int j, const Ball& ball,
                     const SampleConfig& cfg);

struct UntargetedScore {
  CleverScore best;                     // nu = min over j != c
  std::vector<CleverScore> per_class;   // each targeted mu_j, in class order
};

UntargetedScore clever_u(const Network& net, const Eigen::VectorXd& x0, const Ball& ball,
                         const SampleConfig& cfg);

int select_target(const Network& net, const Eigen::VectorXd& x0, const TargetSpec& spec,
                  std::mt19937_64& rng);

}  // namespace clever
