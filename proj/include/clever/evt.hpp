#pragma once

#include <functional>
#include <utility>
#include <vector>

#include "clever/common.hpp"

namespace clever {

// Type III extreme-value law with finite right end-point:
//   F(y) = exp(-((location - y)/scale)^shape)  for y < location, else 1.
struct ReverseWeibullParams {
  double location = 0.0;  // a_W, the end-point
  double scale = 1.0;     // b_W > 0
  double shape = 1.0;     // c_W > 0
};

double reverse_weibull_cdf(const ReverseWeibullParams& params, double y);
double reverse_weibull_log_likelihood(const ReverseWeibullParams& params,
                                      const std::vector<double>& samples);

struct FitOptions {
  int restarts = 5;
  int max_iterations = 2000;
  double f_spread_tol = 1e-10;      // simplex stops when max-min objective < this
  double degenerate_scale_floor = 1e-9;
};

struct FitResult {
  ReverseWeibullParams params;
  double log_likelihood = 0.0;
  double ks_statistic = 0.0;
  double ks_pvalue = 1.0;
  int n = 0;
  bool degenerate = false;  // all samples equal; params.location is that value
  bool regular = true;      // false when shape <= 1 (MLE regularity fails formally)
};

// Maximum-likelihood fit constrained to location >= max(samples). Samples are
// rescaled by their maximum internally for conditioning; the optimum is
// searched over (log(location - max), log scale, log shape) by a simplex
// method with fixed-seed restarts, so the fit is deterministic.
FitResult fit_reverse_weibull_mle(const std::vector<double>& samples,
                                  const FitOptions& opts = {});

// Two-sided K-S statistic of `samples` against the fitted CDF and the
// asymptotic p-value at (sqrt(n) + 0.12 + 0.11/sqrt(n)) * D.
std::pair<double, double> ks_test(const std::vector<double>& samples,
                                  const ReverseWeibullParams& params);

// Same, against an arbitrary distribution function.
std::pair<double, double> ks_test_cdf(std::vector<double> samples,
                                      const std::function<double(double)>& cdf);

// Survival function of the Kolmogorov distribution, Q(x) = P(K > x).
double kolmogorov_sf(double x);

}  // namespace clever
