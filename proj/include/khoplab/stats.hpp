#pragma once

#include <utility>
#include <vector>

namespace khoplab {

struct Interval {
  double lo = 0.0;
  double hi = 1.0;
};

/// Exact (Clopper-Pearson) two-sided confidence interval for a binomial
/// proportion with `successes` out of `trials`.
Interval clopper_pearson(long successes, long trials, double confidence = 0.95);

/// Central acceptance region [lo, hi] (inclusive counts) of Binomial(trials, p)
/// holding at least `confidence` probability: lo is the largest integer with
/// CDF(lo-1) <= (1-conf)/2, hi the smallest with CDF(hi) >= 1-(1-conf)/2.
std::pair<long, long> binomial_central_region(long trials, double p, double confidence = 0.95);

struct LineFit {
  double slope = 0.0;
  double intercept = 0.0;
  double slope_stderr = 0.0;   // residual-based
  double slope_halfwidth = 0.0;  // 95% half-width, max of residual t-interval
                                 // and propagated per-point uncertainty
  int points = 0;
};

/// Ordinary least squares of y against x with a conservative 95% slope
/// half-width: the larger of the residual-based t interval and the half-width
/// propagated from per-point uncertainties `y_halfwidth`.
LineFit fit_line(const std::vector<double>& x, const std::vector<double>& y,
                 const std::vector<double>& y_halfwidth);

}  // namespace khoplab
