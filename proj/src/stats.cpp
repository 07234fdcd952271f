#include "khoplab/stats.hpp"

#include <boost/math/distributions/beta.hpp>
#include <boost/math/distributions/binomial.hpp>
#include <boost/math/distributions/students_t.hpp>
#include <cmath>

#include "khoplab/error.hpp"

namespace khoplab {

Interval clopper_pearson(long successes, long trials, double confidence) {
  if (trials < 1 || successes < 0 || successes > trials) {
    throw Error("simulator", "invalid binomial counts for interval");
  }
  const double alpha = 1.0 - confidence;
  const double x = static_cast<double>(successes);
  const double n = static_cast<double>(trials);
  Interval out;
  if (successes == 0) {
    out.lo = 0.0;
  } else {
    boost::math::beta_distribution<double> lo_dist(x, n - x + 1.0);
    out.lo = boost::math::quantile(lo_dist, alpha / 2.0);
  }
  if (successes == trials) {
    out.hi = 1.0;
  } else {
    boost::math::beta_distribution<double> hi_dist(x + 1.0, n - x);
    out.hi = boost::math::quantile(hi_dist, 1.0 - alpha / 2.0);
  }
  return out;
}

std::pair<long, long> binomial_central_region(long trials, double p, double confidence) {
  if (trials < 1 || p < 0.0 || p > 1.0) {
    throw Error("simulator", "invalid binomial parameters for region");
  }
  const double tail = (1.0 - confidence) / 2.0;
  if (p == 0.0) return {0, 0};
  if (p == 1.0) return {trials, trials};
  boost::math::binomial_distribution<double> dist(static_cast<double>(trials), p);
  long lo = 0;
  while (lo < trials && boost::math::cdf(dist, static_cast<double>(lo)) <= tail) ++lo;
  long hi = lo;
  while (hi < trials && boost::math::cdf(dist, static_cast<double>(hi)) < 1.0 - tail) ++hi;
  return {lo, hi};
}

LineFit fit_line(const std::vector<double>& x, const std::vector<double>& y,
                 const std::vector<double>& y_halfwidth) {
  const std::size_t m = x.size();
  if (m < 3 || y.size() != m || y_halfwidth.size() != m) {
    throw Error("simulator", "least-squares fit needs at least 3 points");
  }
  double x_mean = 0.0, y_mean = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    x_mean += x[i];
    y_mean += y[i];
  }
  x_mean /= static_cast<double>(m);
  y_mean /= static_cast<double>(m);
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    sxx += (x[i] - x_mean) * (x[i] - x_mean);
    sxy += (x[i] - x_mean) * (y[i] - y_mean);
  }
  if (sxx <= 0.0) throw Error("simulator", "degenerate abscissae in fit");

  LineFit fit;
  fit.points = static_cast<int>(m);
  fit.slope = sxy / sxx;
  fit.intercept = y_mean - fit.slope * x_mean;

  double ssr = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    const double r = y[i] - (fit.intercept + fit.slope * x[i]);
    ssr += r * r;
  }
  const double dof = static_cast<double>(m) - 2.0;
  fit.slope_stderr = std::sqrt(ssr / dof / sxx);
  double residual_halfwidth = 0.0;
  if (dof >= 1.0) {
    boost::math::students_t_distribution<double> t(dof);
    residual_halfwidth = boost::math::quantile(t, 0.975) * fit.slope_stderr;
  }
  // Propagate per-point half-widths through the slope's linear weights.
  double propagated_sq = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    const double w = (x[i] - x_mean) / sxx;
    propagated_sq += w * w * y_halfwidth[i] * y_halfwidth[i];
  }
  fit.slope_halfwidth = std::max(residual_halfwidth, std::sqrt(propagated_sq));
  return fit;
}

}  // namespace khoplab
