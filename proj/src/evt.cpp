#include "clever/evt.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "clever/rng.hpp"

namespace clever {

double reverse_weibull_cdf(const ReverseWeibullParams& params, double y) {
  if (y >= params.location) return 1.0;
  const double z = (params.location - y) / params.scale;
  return std::exp(-std::pow(z, params.shape));
}

double reverse_weibull_log_likelihood(const ReverseWeibullParams& params,
                                      const std::vector<double>& samples) {
  const double a = params.location, b = params.scale, c = params.shape;
  if (!(b > 0.0) || !(c > 0.0)) return -std::numeric_limits<double>::infinity();
  double ll = 0.0;
  const double log_c_over_b = std::log(c / b);
  for (double y : samples) {
    if (y >= a) return -std::numeric_limits<double>::infinity();
    const double z = (a - y) / b;
    ll += log_c_over_b + (c - 1.0) * std::log(z) - std::pow(z, c);
  }
  return ll;
}

namespace {

// Nelder-Mead on R^n. Stops when the simplex objective spread drops below
// f_spread_tol or the evaluation budget runs out.
struct SimplexResult {
  std::vector<double> x;
  double f = 0.0;
};

SimplexResult nelder_mead(const std::function<double(const std::vector<double>&)>& f,
                          std::vector<double> start, double step, int max_iterations,
                          double f_spread_tol) {
  const std::size_t n = start.size();
  std::vector<std::vector<double>> pts(n + 1, start);
  std::vector<double> vals(n + 1);
  for (std::size_t i = 0; i < n; ++i) pts[i + 1][i] += step;
  for (std::size_t i = 0; i <= n; ++i) vals[i] = f(pts[i]);

  auto order = [&]() {
    std::vector<std::size_t> idx(n + 1);
    for (std::size_t i = 0; i <= n; ++i) idx[i] = i;
    std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return vals[a] < vals[b]; });
    std::vector<std::vector<double>> p2(n + 1);
    std::vector<double> v2(n + 1);
    for (std::size_t i = 0; i <= n; ++i) {
      p2[i] = pts[idx[i]];
      v2[i] = vals[idx[i]];
    }
    pts.swap(p2);
    vals.swap(v2);
  };

  for (int it = 0; it < max_iterations; ++it) {
    order();
    if (vals[n] - vals[0] < f_spread_tol) break;

    std::vector<double> centroid(n, 0.0);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t k = 0; k < n; ++k) centroid[k] += pts[i][k] / static_cast<double>(n);

    auto blend = [&](double t) {
      std::vector<double> x(n);
      for (std::size_t k = 0; k < n; ++k) x[k] = centroid[k] + t * (pts[n][k] - centroid[k]);
      return x;
    };

    const std::vector<double> refl = blend(-1.0);
    const double f_refl = f(refl);
    if (f_refl < vals[0]) {
      const std::vector<double> expd = blend(-2.0);
      const double f_expd = f(expd);
      if (f_expd < f_refl) {
        pts[n] = expd;
        vals[n] = f_expd;
      } else {
        pts[n] = refl;
        vals[n] = f_refl;
      }
      continue;
    }
    if (f_refl < vals[n - 1]) {
      pts[n] = refl;
      vals[n] = f_refl;
      continue;
    }
    const std::vector<double> contr = blend(f_refl < vals[n] ? -0.5 : 0.5);
    const double f_contr = f(contr);
    if (f_contr < std::min(f_refl, vals[n])) {
      pts[n] = contr;
      vals[n] = f_contr;
      continue;
    }
    // shrink toward the best vertex
    for (std::size_t i = 1; i <= n; ++i) {
      for (std::size_t k = 0; k < n; ++k) pts[i][k] = pts[0][k] + 0.5 * (pts[i][k] - pts[0][k]);
      vals[i] = f(pts[i]);
    }
  }
  order();
  return {pts[0], vals[0]};
}

// Method-of-moments Weibull guess for w = a0 - y treated as Weibull(shape k,
// scale lambda): k from the Justus coefficient-of-variation approximation,
// lambda from the mean.
ReverseWeibullParams moment_guess(const std::vector<double>& samples, double y_max) {
  double mean = 0.0;
  const double a0 = y_max + 0.05 * std::max(1e-12, y_max - *std::min_element(samples.begin(), samples.end()));
  for (double y : samples) mean += (a0 - y);
  mean /= static_cast<double>(samples.size());
  double var = 0.0;
  for (double y : samples) {
    const double w = (a0 - y) - mean;
    var += w * w;
  }
  var /= static_cast<double>(samples.size());
  const double cv = std::sqrt(std::max(var, 1e-300)) / std::max(mean, 1e-300);
  double k = std::pow(cv, -1.086);
  k = std::min(std::max(k, 0.05), 50.0);
  const double lambda = mean / std::tgamma(1.0 + 1.0 / k);
  ReverseWeibullParams guess;
  guess.location = a0;
  guess.scale = std::max(lambda, 1e-12);
  guess.shape = k;
  return guess;
}

}  // namespace

FitResult fit_reverse_weibull_mle(const std::vector<double>& samples, const FitOptions& opts) {
  const int n = static_cast<int>(samples.size());
  if (n < 2) throw std::invalid_argument("reverse Weibull fit needs at least 2 samples");
  for (double y : samples)
    if (!std::isfinite(y)) throw NumericError("non-finite sample in reverse Weibull fit");

  const double y_max = *std::max_element(samples.begin(), samples.end());
  const double y_min = *std::min_element(samples.begin(), samples.end());

  FitResult result;
  result.n = n;

  // A constant-gradient classifier legitimately produces a point mass; the
  // Type III likelihood has no interior optimum there.
  if (y_max - y_min <= 1e-12 * std::max(1.0, std::abs(y_max))) {
    result.params = {y_max, opts.degenerate_scale_floor, 1.0};
    result.degenerate = true;
    result.log_likelihood = 0.0;
    auto [d, p] = ks_test(samples, result.params);
    result.ks_statistic = d;
    result.ks_pvalue = p;
    return result;
  }

  // Rescale by the max for conditioning; undone below. Gradient norms are
  // nonnegative so y_max > 0 whenever the data is not a point mass at 0.
  const double unit = std::abs(y_max) > 0.0 ? std::abs(y_max) : 1.0;
  std::vector<double> scaled(samples.size());
  for (std::size_t i = 0; i < samples.size(); ++i) scaled[i] = samples[i] / unit;
  const double s_max = y_max / unit;

  // Optimize (log(a - max), log b, log c); the end-point constraint
  // a > max(samples) holds by construction.
  auto unpack = [&](const std::vector<double>& t) {
    ReverseWeibullParams p;
    p.location = s_max + std::exp(std::max(t[0], -60.0));
    p.scale = std::exp(std::min(std::max(t[1], -60.0), 60.0));
    p.shape = std::exp(std::min(std::max(t[2], -8.0), 8.0));
    return p;
  };
  auto objective = [&](const std::vector<double>& t) {
    return -reverse_weibull_log_likelihood(unpack(t), scaled);
  };

  const ReverseWeibullParams guess = moment_guess(scaled, s_max);
  const std::vector<double> t0 = {std::log(std::max(guess.location - s_max, 1e-10)),
                                  std::log(guess.scale), std::log(guess.shape)};
  const double init_ll = reverse_weibull_log_likelihood(guess, scaled);

  std::vector<double> best_t = t0;
  double best_f = objective(t0);
  auto rng = make_rng(0x5eedf17ULL);  // fixed restart seeds keep fits deterministic
  std::normal_distribution<double> jitter(0.0, 0.5);
  for (int r = 0; r < opts.restarts; ++r) {
    std::vector<double> start = t0;
    if (r > 0)
      for (double& v : start) v += jitter(rng);
    SimplexResult res =
        nelder_mead(objective, start, 0.25, opts.max_iterations, opts.f_spread_tol);
    if (res.f < best_f) {
      best_f = res.f;
      best_t = res.x;
    }
  }

  ReverseWeibullParams fitted = unpack(best_t);
  // optimizer-progress contract: never return something worse than the guess
  if (-best_f < init_ll) {
    fitted = guess;
    best_f = -init_ll;
  }

  result.params.location = fitted.location * unit;
  result.params.scale = fitted.scale * unit;
  result.params.shape = fitted.shape;
  result.log_likelihood =
      reverse_weibull_log_likelihood(result.params, samples);
  result.regular = result.params.shape > 1.0;
  auto [d, p] = ks_test(samples, result.params);
  result.ks_statistic = d;
  result.ks_pvalue = p;
  return result;
}

std::pair<double, double> ks_test(const std::vector<double>& samples,
                                  const ReverseWeibullParams& params) {
  return ks_test_cdf(samples, [&](double y) { return reverse_weibull_cdf(params, y); });
}

std::pair<double, double> ks_test_cdf(std::vector<double> samples,
                                      const std::function<double(double)>& cdf) {
  const std::size_t n = samples.size();
  if (n < 2) throw std::invalid_argument("K-S test needs at least 2 samples");
  std::sort(samples.begin(), samples.end());
  double d_stat = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double f = cdf(samples[i]);
    const double lo = static_cast<double>(i) / static_cast<double>(n);
    const double hi = static_cast<double>(i + 1) / static_cast<double>(n);
    d_stat = std::max(d_stat, std::max(f - lo, hi - f));
  }
  d_stat = std::min(d_stat, 1.0);
  const double sqrt_n = std::sqrt(static_cast<double>(n));
  const double lambda = (sqrt_n + 0.12 + 0.11 / sqrt_n) * d_stat;
  double p = kolmogorov_sf(lambda);
  p = std::min(std::max(p, 0.0), 1.0);
  return {d_stat, p};
}

double kolmogorov_sf(double x) {
  if (x <= 0.0) return 1.0;
  if (x >= 10.0) return 0.0;
  if (x < 1.18) {
    // theta-function form, accurate for small arguments
    const double t = std::exp(-M_PI * M_PI / (8.0 * x * x));
    const double cdf = std::sqrt(2.0 * M_PI) / x *
                       (t + std::pow(t, 9.0) + std::pow(t, 25.0) + std::pow(t, 49.0));
    return 1.0 - cdf;
  }
  double sf = 0.0;
  for (int k = 1; k <= 100; ++k) {
    const double term = 2.0 * std::exp(-2.0 * k * k * x * x);
    sf += (k % 2 == 1) ? term : -term;
    if (term < 1e-16) break;
  }
  return sf;
}

}  // namespace clever
