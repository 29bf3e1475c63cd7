#include "clever/score.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace clever {

std::string to_string(TargetSpec::Kind kind) {
  switch (kind) {
    case TargetSpec::Kind::Top2: return "top2";
    case TargetSpec::Kind::Random: return "random";
    case TargetSpec::Kind::LeastLikely: return "least";
    case TargetSpec::Kind::Fixed: return "fixed";
  }
  return "?";
}

TargetSpec::Kind target_kind_from_string(const std::string& name) {
  if (name == "top2") return TargetSpec::Kind::Top2;
  if (name == "random") return TargetSpec::Kind::Random;
  if (name == "least") return TargetSpec::Kind::LeastLikely;
  if (name == "fixed") return TargetSpec::Kind::Fixed;
  throw InputError("unknown target kind '" + name + "' (expected top2, random, least, fixed)");
}

double theoretical_lower_bound(double g_val, double lipschitz, double radius) {
  if (g_val < 0.0 || lipschitz < 0.0 || radius < 0.0)
    throw std::invalid_argument("bound inputs must be nonnegative");
  if (g_val == 0.0) return 0.0;
  if (lipschitz == 0.0) return radius;
  return std::min(g_val / lipschitz, radius);
}

CleverScore clever_t(const Network& net, const Eigen::VectorXd& x0, int j, const Ball& ball,
                     const SampleConfig& cfg) {
  net.validate();
  const int c = predict(net, x0);
  if (j == c) throw std::invalid_argument("target class equals the predicted class");
  if (j < 0 || j >= net.num_classes) throw std::invalid_argument("target class out of range");

  CleverScore score;
  score.p = ball.p;
  score.target_j = j;

  const Eigen::VectorXd logits = forward(net, x0);
  score.margin = logits[c] - logits[j];
  if (score.margin < 0.0)
    throw std::invalid_argument("negative margin contradicts the predicted class");
  if (score.margin == 0.0) {
    score.tie = true;
    score.value = 0.0;
    return score;
  }

  GradNormSampleSet samples = collect_batch_maxima(net, x0, c, j, ball, cfg);
  score.fit = fit_reverse_weibull_mle(samples.values);
  score.batch_maxima = std::move(samples.values);
  score.location_estimate = score.fit.params.location;
  score.fit_warning = !score.fit.degenerate && score.fit.ks_pvalue < 0.05;

  score.value = theoretical_lower_bound(score.margin, score.location_estimate, ball.radius);
  score.capped = score.margin / score.location_estimate >= ball.radius;
  return score;
}

UntargetedScore clever_u(const Network& net, const Eigen::VectorXd& x0, const Ball& ball,
                         const SampleConfig& cfg) {
  net.validate();
  if (net.num_classes < 2) throw std::invalid_argument("untargeted score needs K >= 2");
  const int c = predict(net, x0);

  UntargetedScore out;
  bool have = false;
  for (int j = 0; j < net.num_classes; ++j) {
    if (j == c) continue;
    CleverScore mu = clever_t(net, x0, j, ball, cfg);
    if (!have || mu.value < out.best.value) {
      out.best = mu;
      have = true;
    }
    out.per_class.push_back(std::move(mu));
  }
  return out;
}

int select_target(const Network& net, const Eigen::VectorXd& x0, const TargetSpec& spec,
                  std::mt19937_64& rng) {
  const Eigen::VectorXd logits = forward(net, x0);
  const int k = net.num_classes;
  int c = 0;
  for (int i = 1; i < k; ++i)
    if (logits[i] > logits[c]) c = i;
  if (k < 2) throw std::invalid_argument("target selection needs K >= 2");

  switch (spec.kind) {
    case TargetSpec::Kind::Fixed: {
      if (spec.fixed_j < 0 || spec.fixed_j >= k || spec.fixed_j == c)
        throw std::invalid_argument("fixed target must be a class other than the prediction");
      return spec.fixed_j;
    }
    case TargetSpec::Kind::Top2: {
      int best = -1;
      for (int i = 0; i < k; ++i) {
        if (i == c) continue;
        if (best < 0 || logits[i] > logits[best]) best = i;
      }
      return best;
    }
    case TargetSpec::Kind::LeastLikely: {
      int worst = -1;
      for (int i = 0; i < k; ++i) {
        if (i == c) continue;  // under a total tie argmin would hit c; keep the lowest non-c
        if (worst < 0 || logits[i] < logits[worst]) worst = i;
      }
      return worst;
    }
    case TargetSpec::Kind::Random: {
      std::uniform_int_distribution<int> pick(0, k - 2);
      int r = pick(rng);
      if (r >= c) ++r;
      return r;
    }
  }
  throw std::invalid_argument("unknown target kind");
}

}  // namespace clever
