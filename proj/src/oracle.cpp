#include "clever/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <optional>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include "clever/rng.hpp"

namespace clever {

namespace {

void require_one_hidden_relu(const Network& net) {
  net.validate();
  if (net.layers.size() != 2 || net.layers[0].activation.kind != ActivationKind::ReLU)
    throw InputError("region oracle supports exactly one hidden ReLU layer");
  if (net.layers[0].out_dim() > 20) {
    std::ostringstream msg;
    msg << "hidden width " << net.layers[0].out_dim() << " exceeds the 2^20 enumeration budget";
    throw InputError(msg.str());
  }
}

std::uint32_t classify_pattern(const Eigen::MatrixXd& w, const Eigen::VectorXd& bias,
                               const Eigen::VectorXd& x) {
  std::uint32_t mask = 0;
  const Eigen::VectorXd s = w * x + bias;
  for (Eigen::Index r = 0; r < s.size(); ++r)
    if (s[r] > 0.0) mask |= (1u << r);
  return mask;
}

// ---- ball projections -------------------------------------------------

Eigen::VectorXd project_l1(const Eigen::VectorXd& v, double radius) {
  if (v.lpNorm<1>() <= radius) return v;
  Eigen::VectorXd u = v.cwiseAbs();
  std::vector<double> sorted(u.data(), u.data() + u.size());
  std::sort(sorted.begin(), sorted.end(), std::greater<double>());
  double cumulative = 0.0, theta = 0.0;
  for (std::size_t k = 0; k < sorted.size(); ++k) {
    cumulative += sorted[k];
    const double candidate = (cumulative - radius) / static_cast<double>(k + 1);
    if (sorted[k] - candidate > 0.0) theta = candidate;
  }
  Eigen::VectorXd out(v.size());
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    const double mag = std::max(std::abs(v[i]) - theta, 0.0);
    out[i] = v[i] < 0.0 ? -mag : mag;
  }
  return out;
}

Eigen::VectorXd project_ball(const Ball& ball, const Eigen::VectorXd& x) {
  Eigen::VectorXd delta = x - ball.center;
  switch (ball.p) {
    case NormOrder::L2: {
      const double n = delta.norm();
      if (n > ball.radius) delta *= ball.radius / n;
      break;
    }
    case NormOrder::L1:
      delta = project_l1(delta, ball.radius);
      break;
    case NormOrder::Linf:
      delta = delta.cwiseMax(-ball.radius).cwiseMin(ball.radius);
      break;
  }
  double got = lp_norm(delta, ball.p);
  if (got > ball.radius) delta *= (ball.radius / got) * (1.0 - 1e-15);
  return ball.center + delta;
}

// max_{||delta||_p <= R} w.delta = R * ||w||_dual
double ball_support(const Eigen::VectorXd& w, const Ball& ball) {
  return ball.radius * lp_norm(w, dual_exponent(ball.p));
}

bool strictly_in_region(const Eigen::MatrixXd& w, const Eigen::VectorXd& bias,
                        std::uint32_t mask, const Eigen::VectorXd& x) {
  const Eigen::VectorXd s = w * x + bias;
  for (Eigen::Index r = 0; r < s.size(); ++r) {
    const bool on = (mask >> r) & 1u;
    if (on && !(s[r] > 0.0)) return false;
    if (!on && !(s[r] <= 0.0)) return false;
  }
  return true;
}

// ---- phase-1 simplex, used for box (p = inf) balls --------------------

// min c.z  s.t.  A z = b, z >= 0, with b >= 0. Dense two-phase tableau with
// Bland's rule; sizes here are a few dozen rows at most.
struct LpSolution {
  enum class Status { Optimal, Infeasible, Unbounded };
  Status status = Status::Infeasible;
  Eigen::VectorXd z;
};

LpSolution solve_standard_lp(const Eigen::MatrixXd& a, const Eigen::VectorXd& b,
                             const Eigen::VectorXd& c) {
  const int m = static_cast<int>(a.rows());
  const int n = static_cast<int>(a.cols());
  Eigen::MatrixXd tab(m, n + m + 1);
  tab.leftCols(n) = a;
  tab.block(0, n, m, m) = Eigen::MatrixXd::Identity(m, m);
  tab.col(n + m) = b;
  std::vector<int> basis(m);
  for (int i = 0; i < m; ++i) basis[i] = n + i;

  auto pivot = [&](int row, int col) {
    tab.row(row) /= tab(row, col);
    for (int i = 0; i < m; ++i)
      if (i != row && tab(i, col) != 0.0) tab.row(i) -= tab(i, col) * tab.row(row);
    basis[row] = col;
  };

  auto run = [&](const Eigen::VectorXd& cost, int ncols) -> bool {
    for (int iter = 0; iter < 20000; ++iter) {
      Eigen::VectorXd cb(m);
      for (int i = 0; i < m; ++i) cb[i] = cost[basis[i]];
      int enter = -1;
      for (int col = 0; col < ncols; ++col) {
        if (cost[col] - cb.dot(tab.col(col)) < -1e-9) {
          enter = col;
          break;  // Bland: first improving index
        }
      }
      if (enter < 0) return true;
      int leave = -1;
      double best = 0.0;
      for (int i = 0; i < m; ++i) {
        const double coef = tab(i, enter);
        if (coef > 1e-11) {
          const double ratio = tab(i, n + m) / coef;
          if (leave < 0 || ratio < best - 1e-12 ||
              (std::abs(ratio - best) <= 1e-12 && basis[i] < basis[leave])) {
            leave = i;
            best = ratio;
          }
        }
      }
      if (leave < 0) return false;  // unbounded
      pivot(leave, enter);
    }
    return true;  // iteration cap; tableau is optimal enough for a sign test
  };

  Eigen::VectorXd phase1_cost = Eigen::VectorXd::Zero(n + m);
  phase1_cost.tail(m).setOnes();
  run(phase1_cost, n + m);
  double infeasibility = 0.0;
  for (int i = 0; i < m; ++i)
    if (basis[i] >= n) infeasibility += tab(i, n + m);
  if (infeasibility > 1e-7) return {LpSolution::Status::Infeasible, {}};

  // drive leftover zero-level artificials out where possible
  for (int i = 0; i < m; ++i) {
    if (basis[i] >= n) {
      for (int col = 0; col < n; ++col) {
        if (std::abs(tab(i, col)) > 1e-9) {
          pivot(i, col);
          break;
        }
      }
    }
  }

  Eigen::VectorXd phase2_cost = Eigen::VectorXd::Zero(n + m);
  phase2_cost.head(n) = c;
  if (!run(phase2_cost, n)) return {LpSolution::Status::Unbounded, {}};

  Eigen::VectorXd z = Eigen::VectorXd::Zero(n);
  for (int i = 0; i < m; ++i)
    if (basis[i] < n) z[basis[i]] = tab(i, n + m);
  return {LpSolution::Status::Optimal, z};
}

// Exact feasibility of {on: w x + b > 0, off: w x + b <= 0} intersected with
// the box [x0 - R, x0 + R]: maximize the worst on-slack t; the open region
// meets the box iff the optimum is strictly positive.
bool region_meets_box(const Eigen::MatrixXd& w, const Eigen::VectorXd& bias, std::uint32_t mask,
                      const Ball& ball) {
  const int u = static_cast<int>(w.rows());
  const int d = static_cast<int>(w.cols());
  const Eigen::VectorXd lo = ball.center.array() - ball.radius;
  const Eigen::VectorXd hi = ball.center.array() + ball.radius;

  // variables: y = x - lo (>= 0), tau = t + 1 (>= 0); constraints as <= rows
  const int nvars = d + 1;
  const int nrows = u + d + 1;
  Eigen::MatrixXd g = Eigen::MatrixXd::Zero(nrows, nvars);
  Eigen::VectorXd h(nrows);
  for (int r = 0; r < u; ++r) {
    const double scale = std::max(w.row(r).cwiseAbs().maxCoeff(), 1e-30);
    const Eigen::RowVectorXd wr = w.row(r) / scale;
    const double br = (bias[r] + w.row(r).dot(lo)) / scale;
    if ((mask >> r) & 1u) {
      g.row(r).head(d) = -wr;
      g(r, d) = 1.0;
      h[r] = br + 1.0;
    } else {
      g.row(r).head(d) = wr;
      h[r] = -br;
    }
  }
  for (int i = 0; i < d; ++i) {
    g(u + i, i) = 1.0;
    h[u + i] = hi[i] - lo[i];
  }
  g(u + d, d) = 1.0;
  h[u + d] = 2.0;  // caps t at 1; only the sign of the optimum matters

  // standard form with one slack per row
  Eigen::MatrixXd a(nrows, nvars + nrows);
  a.leftCols(nvars) = g;
  a.rightCols(nrows) = Eigen::MatrixXd::Identity(nrows, nrows);
  Eigen::VectorXd b = h;
  for (int i = 0; i < nrows; ++i) {
    if (b[i] < 0.0) {
      a.row(i) = -a.row(i);
      b[i] = -b[i];
    }
  }
  Eigen::VectorXd cost = Eigen::VectorXd::Zero(nvars + nrows);
  cost[d] = -1.0;  // maximize tau

  const LpSolution sol = solve_standard_lp(a, b, cost);
  if (sol.status != LpSolution::Status::Optimal) return false;
  const double t_star = sol.z[d] - 1.0;
  return t_star > 1e-10;
}

// Polyak-step projected subgradient search for a strictly feasible point of
// the region inside a round (p = 1 or 2) ball. Finding a point settles
// feasibility; not finding one proves nothing by itself.
std::optional<Eigen::VectorXd> find_region_point(const Eigen::MatrixXd& w,
                                                 const Eigen::VectorXd& bias, std::uint32_t mask,
                                                 const Ball& ball, int restarts, int iters,
                                                 std::uint64_t seed) {
  const int u = static_cast<int>(w.rows());
  Eigen::VectorXd margins(u);
  for (int r = 0; r < u; ++r)
    margins[r] = 1e-9 * std::max(1.0, std::abs(bias[r]) + ball_support(w.row(r).transpose(), ball));

  auto rng = make_rng(seed);
  for (int restart = 0; restart < restarts; ++restart) {
    Eigen::VectorXd x = restart == 0 ? ball.center : sample_uniform_ball(ball, rng);
    for (int it = 0; it < iters; ++it) {
      if (strictly_in_region(w, bias, mask, x) && lp_norm(x - ball.center, ball.p) <= ball.radius)
        return x;
      const Eigen::VectorXd s = w * x + bias;
      double violation = 0.0;
      Eigen::VectorXd grad = Eigen::VectorXd::Zero(x.size());
      for (int r = 0; r < u; ++r) {
        const bool on = (mask >> r) & 1u;
        if (on && s[r] < margins[r]) {
          violation += margins[r] - s[r];
          grad -= w.row(r).transpose();
        } else if (!on && s[r] > 0.0) {
          violation += s[r];
          grad += w.row(r).transpose();
        }
      }
      if (violation == 0.0) {
        // all targets met but strictness failed on a boundary; nudge inward
        x = project_ball(ball, x + 1e-12 * Eigen::VectorXd::Ones(x.size()));
        continue;
      }
      const double g2 = grad.squaredNorm();
      if (g2 <= 0.0) break;
      x = project_ball(ball, x - (violation / g2) * grad);
    }
  }
  return std::nullopt;
}

}  // namespace

std::vector<RegionGradient> enumerate_region_gradients(const Network& net, int c, int j,
                                                       NormOrder q) {
  require_one_hidden_relu(net);
  if (c == j || c < 0 || j < 0 || c >= net.num_classes || j >= net.num_classes)
    throw std::invalid_argument("bad class pair for region enumeration");

  const int u = static_cast<int>(net.layers[0].out_dim());
  Eigen::VectorXd dvec = Eigen::VectorXd::Zero(net.num_classes);
  dvec[c] = 1.0;
  dvec[j] = -1.0;
  // same expression chain as reverse-mode margin_and_grad, so gradients
  // reconstructed here match backprop results on region interiors exactly
  const Eigen::VectorXd coeff = net.layers[1].weights.transpose() * dvec;

  std::vector<RegionGradient> regions;
  regions.reserve(std::size_t{1} << u);
  Eigen::VectorXd masked(u);
  for (std::uint32_t mask = 0; mask < (1u << u); ++mask) {
    for (int r = 0; r < u; ++r) masked[r] = coeff[r] * (((mask >> r) & 1u) ? 1.0 : 0.0);
    RegionGradient region;
    region.pattern = {mask, u};
    region.gradient = net.layers[0].weights.transpose() * masked;
    region.norm_q = lp_norm(region.gradient, q);
    regions.push_back(std::move(region));
  }
  return regions;
}

LipschitzEstimate exact_local_cross_lipschitz(const Network& net, const Eigen::VectorXd& x0,
                                              int c, int j, const Ball& ball) {
  require_one_hidden_relu(net);
  ball.validate();
  const NormOrder q = dual_exponent(ball.p);
  std::vector<RegionGradient> regions = enumerate_region_gradients(net, c, j, q);

  const Eigen::MatrixXd& w = net.layers[0].weights;
  const Eigen::VectorXd& bias = net.layers[0].bias;
  const int u = static_cast<int>(w.rows());

  // cheap witnesses first: patterns realized at x0 or at sampled ball points
  std::unordered_set<std::uint32_t> seen;
  seen.insert(classify_pattern(w, bias, x0));
  {
    auto rng = make_rng(derive_seed(0xFEA51B1EULL, ball.p == NormOrder::Linf ? 0 : 1));
    const int probes = 4096;
    for (int k = 0; k < probes; ++k)
      seen.insert(classify_pattern(w, bias, sample_uniform_ball(ball, rng)));
  }

  std::vector<std::size_t> order(regions.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return regions[a].norm_q > regions[b].norm_q; });

  const Eigen::VectorXd slack0 = w * x0 + bias;
  auto certificate_infeasible = [&](std::uint32_t mask) {
    for (int r = 0; r < u; ++r) {
      const double reach = ball_support(w.row(r).transpose(), ball);
      if ((mask >> r) & 1u) {
        if (slack0[r] + reach <= 0.0) return true;  // never positive in the ball
      } else {
        if (slack0[r] - reach > 0.0) return true;  // never nonpositive in the ball
      }
    }
    return false;
  };

  LipschitzEstimate out;
  out.method = LipschitzEstimate::Method::ExactRegion;

  for (std::size_t rank = 0; rank < order.size(); ++rank) {
    RegionGradient& region = regions[order[rank]];
    const std::uint32_t mask = region.pattern.mask;

    if (seen.count(mask)) {
      region.feasible_in_ball = RegionGradient::Feasibility::Feasible;
      out.value = region.norm_q;
      out.certified = true;
      return out;
    }
    if (certificate_infeasible(mask)) {
      region.feasible_in_ball = RegionGradient::Feasibility::Infeasible;
      continue;
    }
    if (ball.p == NormOrder::Linf) {
      if (region_meets_box(w, bias, mask, ball)) {
        region.feasible_in_ball = RegionGradient::Feasibility::Feasible;
        out.value = region.norm_q;
        out.certified = true;
        return out;
      }
      region.feasible_in_ball = RegionGradient::Feasibility::Infeasible;
      continue;
    }
    const auto point = find_region_point(w, bias, mask, ball, 50, 400,
                                         derive_seed(0xFEA51B1EULL, mask));
    if (point) {
      region.feasible_in_ball = RegionGradient::Feasibility::Feasible;
      out.value = region.norm_q;
      out.certified = true;
      return out;
    }
    // search exhausted without a certificate either way: report this norm as
    // a safe upper bound on the local constant
    region.feasible_in_ball = RegionGradient::Feasibility::Unknown;
    out.value = region.norm_q;
    out.certified = false;
    return out;
  }

  // unreachable: the pattern at x0 is always a witness
  out.value = 0.0;
  out.certified = false;
  return out;
}

LipschitzEstimate dense_sampling_lipschitz(const Network& net, const Eigen::VectorXd& x0, int c,
                                           int j, const Ball& ball, long n_dense,
                                           std::uint64_t seed) {
  net.validate();
  ball.validate();
  if (n_dense < 1) throw std::invalid_argument("n_dense must be positive");
  (void)x0;
  const NormOrder q = dual_exponent(ball.p);

  BallSampler sampler(ball, derive_seed(seed));
  LipschitzEstimate out;
  out.method = LipschitzEstimate::Method::DenseSampling;
  out.certified = false;
  long remaining = n_dense;
  while (remaining > 0) {
    const int chunk = static_cast<int>(std::min<long>(remaining, 65536));
    const Eigen::MatrixXd points = sampler.next(chunk);
    const BatchMarginEval eval = margin_and_grad_batch(net, points, c, j);
    for (int k = 0; k < chunk; ++k)
      out.value = std::max(out.value, lp_norm(eval.gradients.col(k), q));
    remaining -= chunk;
  }
  return out;
}

SlopeEstimate slope_estimate(const Network& net, const Eigen::VectorXd& x0, int c, int j,
                             const Ball& ball, const SampleConfig& cfg) {
  net.validate();
  ball.validate();
  cfg.validate();
  if (cfg.n_per_batch < 2) throw std::invalid_argument("slope estimation needs N_s >= 2 pairs");
  (void)x0;

  GradNormSampleSet maxima;
  maxima.q = dual_exponent(ball.p);
  maxima.target_j = j;
  maxima.source = GradNormSampleSet::Source::Slope;
  maxima.values.assign(cfg.n_batches, 0.0);

  for (int batch = 0; batch < cfg.n_batches; ++batch) {
    BallSampler sampler(ball, derive_seed(cfg.seed, 0x51, batch));
    const Eigen::MatrixXd points = sampler.next(2 * cfg.n_per_batch);
    const Eigen::MatrixXd logits = forward_batch(net, points);
    double best = 0.0;
    for (int k = 0; k < cfg.n_per_batch; ++k) {
      Eigen::VectorXd a = points.col(2 * k), b = points.col(2 * k + 1);
      double ga = logits(c, 2 * k) - logits(j, 2 * k);
      double gb = logits(c, 2 * k + 1) - logits(j, 2 * k + 1);
      double dist = lp_norm(a - b, ball.p);
      while (dist == 0.0) {  // coincident pair: draw a fresh one
        a = sampler.next();
        b = sampler.next();
        const Eigen::VectorXd fa = forward(net, a), fb = forward(net, b);
        ga = fa[c] - fa[j];
        gb = fb[c] - fb[j];
        dist = lp_norm(a - b, ball.p);
      }
      best = std::max(best, std::abs(ga - gb) / dist);
    }
    maxima.values[batch] = best;
  }

  SlopeEstimate out;
  out.fit = fit_reverse_weibull_mle(maxima.values);
  out.estimate.value = out.fit.params.location;
  out.estimate.method = LipschitzEstimate::Method::Slope;
  out.estimate.certified = false;
  out.maxima = std::move(maxima);
  return out;
}

std::vector<std::pair<double, double>> empirical_gradnorm_cdf(const Network& net,
                                                              const Eigen::VectorXd& x0, int c,
                                                              int j, const Ball& ball, long n,
                                                              std::uint64_t seed) {
  require_one_hidden_relu(net);
  ball.validate();
  if (n < 1) throw std::invalid_argument("sample count must be positive");
  (void)x0;
  const NormOrder q = dual_exponent(ball.p);
  const std::vector<RegionGradient> regions = enumerate_region_gradients(net, c, j, q);
  std::unordered_map<std::uint32_t, double> norm_of_mask;
  norm_of_mask.reserve(regions.size());
  for (const RegionGradient& region : regions)
    norm_of_mask.emplace(region.pattern.mask, region.norm_q);

  const Eigen::MatrixXd& w = net.layers[0].weights;
  const Eigen::VectorXd& bias = net.layers[0].bias;

  std::map<double, long> counts;
  BallSampler sampler(ball, derive_seed(seed));
  for (long k = 0; k < n; ++k)
    counts[norm_of_mask.at(classify_pattern(w, bias, sampler.next()))] += 1;

  std::vector<std::pair<double, double>> cdf;
  cdf.reserve(counts.size());
  double cumulative = 0.0;
  for (const auto& [value, count] : counts) {
    cumulative += static_cast<double>(count) / static_cast<double>(n);
    cdf.emplace_back(value, cumulative);
  }
  return cdf;
}

}  // namespace clever
