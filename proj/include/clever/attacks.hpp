#pragma once

#include <array>
#include <optional>
#include <vector>

#include "clever/net.hpp"
#include "clever/sampling.hpp"

namespace clever {

struct AttackConfig {
  int iterations = 50;
  std::vector<double> eps_list = {0.01, 0.025, 0.05, 0.1, 0.3, 0.5, 0.8, 1.0};
  double step_fraction = 0.1;  // step = eps * step_fraction
  int l2_steps = 300;
  double l2_lr = 0.05;
  int lambda_search_steps = 9;
  std::optional<std::array<double, 2>> input_box;  // per-coordinate clamp

  void validate() const;
};

struct AttackOutcome {
  Eigen::VectorXd adversarial_x;
  Eigen::VectorXd delta;  // adversarial_x - x0
  bool success = false;
  double distortion_l2 = 0.0;
  double distortion_linf = 0.0;
  int target_j = -1;  // -1 means untargeted
  enum class Method { IFGSM, MarginDescentL2 };
  Method method = Method::IFGSM;
  double eps_used = 0.0;  // IFGSM budget that produced this outcome
};

// Iterative fast gradient sign attack inside the linf ball of radius eps.
// Targeted mode descends the margin toward the target class; untargeted mode
// re-targets the current runner-up every iteration. Failure is a valid
// outcome.
AttackOutcome ifgsm(const Network& net, const Eigen::VectorXd& x0, int c,
                    std::optional<int> target, double eps, const AttackConfig& cfg);

// Smallest eps in cfg.eps_list that succeeds; the largest-eps failed outcome
// when none does.
AttackOutcome ifgsm_best_eps(const Network& net, const Eigen::VectorXd& x0, int c,
                             std::optional<int> target, const AttackConfig& cfg);

// Penalized l2 attack: minimize ||delta||^2 + lambda * max(g(x0+delta), 0)
// by gradient descent, with lambda refined by log-space bisection between
// the smallest succeeding and largest failing value.
AttackOutcome margin_descent_l2(const Network& net, const Eigen::VectorXd& x0, int c,
                                int target_j, const AttackConfig& cfg);

// Single fixed-lambda run of the same objective; the bisection builds on it.
AttackOutcome margin_descent_l2_fixed_lambda(const Network& net, const Eigen::VectorXd& x0,
                                             int c, int target_j, double lambda,
                                             const AttackConfig& cfg);

// One (instance, target, p) cell of a score-vs-attack comparison.
struct ScoreEntry {
  int instance = 0;
  int target_j = -1;
  NormOrder p = NormOrder::L2;
  double value = 0.0;
};
struct OutcomeEntry {
  int instance = 0;
  int target_j = -1;
  NormOrder p = NormOrder::L2;
  bool success = false;
  double distortion = 0.0;
};

struct BoundCheckRow {
  int instance = 0;
  int target_j = -1;
  NormOrder p = NormOrder::L2;
  double score = 0.0;
  double distortion = 0.0;
  bool attack_succeeded = false;
  bool violation = false;  // score above a successful attack's distortion
};

struct BoundReport {
  long total = 0;        // aligned pairs
  long successful = 0;   // pairs whose attack succeeded
  long violations = 0;
  double fraction_valid = 0.0;       // over successful attacks only
  bool no_successful_attacks = false;
  std::vector<BoundCheckRow> rows;
};

// Pairs scores with attack outcomes by (instance, target, p) and counts how
// often an estimated lower bound exceeds a successful attack's distortion.
// Failed attacks bound nothing and are excluded from the denominator.
BoundReport verify_bounds(const std::vector<ScoreEntry>& scores,
                          const std::vector<OutcomeEntry>& outcomes);

}  // namespace clever
