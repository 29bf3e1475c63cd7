#include "clever/attacks.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>
#include <tuple>

namespace clever {

void AttackConfig::validate() const {
  if (iterations < 1) throw InputError("attack iterations must be >= 1");
  for (std::size_t i = 1; i < eps_list.size(); ++i)
    if (!(eps_list[i] > eps_list[i - 1])) throw InputError("eps_list must be strictly increasing");
  for (double e : eps_list)
    if (!(e > 0.0)) throw InputError("eps budgets must be positive");
  if (!(step_fraction > 0.0)) throw InputError("step_fraction must be positive");
  if (l2_steps < 1 || !(l2_lr > 0.0) || lambda_search_steps < 0)
    throw InputError("bad l2 attack configuration");
  if (input_box && !((*input_box)[0] < (*input_box)[1]))
    throw InputError("input box must satisfy lo < hi");
}

namespace {

void fill_distortions(AttackOutcome& out, const Eigen::VectorXd& x0) {
  out.delta = out.adversarial_x - x0;
  out.distortion_l2 = out.delta.norm();
  out.distortion_linf = out.delta.size() == 0 ? 0.0 : out.delta.lpNorm<Eigen::Infinity>();
}

Eigen::VectorXd clamp_linf(const Eigen::VectorXd& x, const Eigen::VectorXd& x0, double eps,
                           const std::optional<std::array<double, 2>>& box) {
  Eigen::VectorXd out = x.cwiseMax((x0.array() - eps).matrix()).cwiseMin((x0.array() + eps).matrix());
  if (box) out = out.cwiseMax((*box)[0]).cwiseMin((*box)[1]);
  return out;
}

int runner_up(const Eigen::VectorXd& logits, int c) {
  int best = -1;
  for (int i = 0; i < static_cast<int>(logits.size()); ++i) {
    if (i == c) continue;
    if (best < 0 || logits[i] > logits[best]) best = i;
  }
  return best;
}

}  // namespace

AttackOutcome ifgsm(const Network& net, const Eigen::VectorXd& x0, int c,
                    std::optional<int> target, double eps, const AttackConfig& cfg) {
  net.validate();
  cfg.validate();
  if (!(eps >= 0.0)) throw std::invalid_argument("eps must be nonnegative");
  if (target && (*target == c || *target < 0 || *target >= net.num_classes))
    throw std::invalid_argument("attack target must be a class other than the prediction");

  AttackOutcome out;
  out.method = AttackOutcome::Method::IFGSM;
  out.target_j = target ? *target : -1;
  out.eps_used = eps;
  out.adversarial_x = x0;

  const double step = eps * cfg.step_fraction;
  Eigen::VectorXd x = x0;
  bool have_success = false;
  double best_linf = 0.0;

  for (int it = 0; it < cfg.iterations && eps > 0.0; ++it) {
    int j = target ? *target : runner_up(forward(net, x), c);
    const MarginEval eval = margin_and_grad(net, x, c, j);
    Eigen::VectorXd direction(x.size());
    for (Eigen::Index i = 0; i < x.size(); ++i) {
      const double gi = eval.gradient[i];
      direction[i] = gi > 0.0 ? 1.0 : (gi < 0.0 ? -1.0 : 0.0);
    }
    x = clamp_linf(x - step * direction, x0, eps, cfg.input_box);

    const int now = predict(net, x);
    const bool hit = target ? (now == *target) : (now != c);
    if (hit) {
      const double linf = (x - x0).lpNorm<Eigen::Infinity>();
      if (!have_success || linf < best_linf) {
        have_success = true;
        best_linf = linf;
        out.adversarial_x = x;
      }
    }
  }

  out.success = have_success;
  if (!have_success) out.adversarial_x = x;  // final iterate of the failed run
  fill_distortions(out, x0);
  return out;
}

AttackOutcome ifgsm_best_eps(const Network& net, const Eigen::VectorXd& x0, int c,
                             std::optional<int> target, const AttackConfig& cfg) {
  cfg.validate();
  if (cfg.eps_list.empty()) throw std::invalid_argument("eps_list must not be empty");
  AttackOutcome last;
  for (double eps : cfg.eps_list) {
    last = ifgsm(net, x0, c, target, eps, cfg);
    if (last.success) return last;
  }
  return last;  // largest-eps failure
}

AttackOutcome margin_descent_l2_fixed_lambda(const Network& net, const Eigen::VectorXd& x0,
                                             int c, int target_j, double lambda,
                                             const AttackConfig& cfg) {
  net.validate();
  cfg.validate();
  if (target_j == c || target_j < 0 || target_j >= net.num_classes)
    throw std::invalid_argument("attack target must be a class other than the prediction");

  AttackOutcome out;
  out.method = AttackOutcome::Method::MarginDescentL2;
  out.target_j = target_j;
  out.adversarial_x = x0;

  Eigen::VectorXd delta = Eigen::VectorXd::Zero(x0.size());
  bool have_success = false;
  double best_l2 = 0.0;

  for (int it = 0; it < cfg.l2_steps; ++it) {
    Eigen::VectorXd x = x0 + delta;
    if (cfg.input_box) x = x.cwiseMax((*cfg.input_box)[0]).cwiseMin((*cfg.input_box)[1]);
    const MarginEval eval = margin_and_grad(net, x, c, target_j);

    if (predict(net, x) == target_j) {
      const double l2 = (x - x0).norm();
      if (!have_success || l2 < best_l2) {
        have_success = true;
        best_l2 = l2;
        out.adversarial_x = x;
      }
    }

    Eigen::VectorXd grad = 2.0 * delta;
    if (eval.value > 0.0) grad += lambda * eval.gradient;  // hinge active while g > 0
    const double lr = cfg.l2_lr / (1.0 + 4.0 * static_cast<double>(it) / cfg.l2_steps);
    delta -= lr * grad;
  }

  out.success = have_success;
  if (!have_success) out.adversarial_x = x0 + delta;
  fill_distortions(out, x0);
  return out;
}

AttackOutcome margin_descent_l2(const Network& net, const Eigen::VectorXd& x0, int c,
                                int target_j, const AttackConfig& cfg) {
  double lo = 1e-3, hi = 1e3;

  AttackOutcome best;
  bool have_best = false;
  auto consider = [&](const AttackOutcome& candidate) {
    if (!candidate.success) return;
    if (!have_best || candidate.distortion_l2 < best.distortion_l2) {
      best = candidate;
      have_best = true;
    }
  };

  const AttackOutcome at_hi = margin_descent_l2_fixed_lambda(net, x0, c, target_j, hi, cfg);
  consider(at_hi);
  if (!at_hi.success) return at_hi;  // even the heaviest penalty failed

  const AttackOutcome at_lo = margin_descent_l2_fixed_lambda(net, x0, c, target_j, lo, cfg);
  consider(at_lo);
  if (at_lo.success) return best;  // nothing to bisect; smallest lambda already succeeds

  for (int round = 0; round < cfg.lambda_search_steps; ++round) {
    const double mid = std::sqrt(lo * hi);
    const AttackOutcome at_mid = margin_descent_l2_fixed_lambda(net, x0, c, target_j, mid, cfg);
    consider(at_mid);
    if (at_mid.success)
      hi = mid;
    else
      lo = mid;
  }
  return best;
}

BoundReport verify_bounds(const std::vector<ScoreEntry>& scores,
                          const std::vector<OutcomeEntry>& outcomes) {
  if (scores.size() != outcomes.size())
    throw InputError("score/outcome lists differ in length");

  using Key = std::tuple<int, int, int>;
  std::map<Key, OutcomeEntry> by_key;
  for (const OutcomeEntry& o : outcomes) {
    const Key key{o.instance, o.target_j, static_cast<int>(o.p)};
    if (!by_key.emplace(key, o).second)
      throw InputError("duplicate outcome key in bound verification");
  }

  BoundReport report;
  for (const ScoreEntry& s : scores) {
    const auto it = by_key.find(Key{s.instance, s.target_j, static_cast<int>(s.p)});
    if (it == by_key.end()) {
      std::ostringstream msg;
      msg << "no attack outcome for instance " << s.instance << " target " << s.target_j
          << " p " << to_string(s.p);
      throw InputError(msg.str());
    }
    const OutcomeEntry& o = it->second;
    BoundCheckRow row;
    row.instance = s.instance;
    row.target_j = s.target_j;
    row.p = s.p;
    row.score = s.value;
    row.distortion = o.distortion;
    row.attack_succeeded = o.success;
    row.violation = o.success && s.value > o.distortion;
    report.rows.push_back(row);
    report.total += 1;
    if (o.success) {
      report.successful += 1;
      if (row.violation) report.violations += 1;
    }
  }
  if (report.successful == 0) {
    report.no_successful_attacks = true;
    report.fraction_valid = 0.0;
  } else {
    report.fraction_valid =
        1.0 - static_cast<double>(report.violations) / static_cast<double>(report.successful);
  }
  return report;
}

}  // namespace clever
