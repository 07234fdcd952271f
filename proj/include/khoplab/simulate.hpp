#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "khoplab/network.hpp"
#include "khoplab/pmf.hpp"
#include "khoplab/stats.hpp"

namespace khoplab {

/// Monte Carlo configuration for one network instance.
struct ExperimentSpec {
  HopNetworkSpec network;
  std::vector<ConditionalPmf> channels;  ///< one per hop
  std::vector<int> blocklengths;         ///< strictly increasing
  long trials = 0;                       ///< per (hypothesis, blocklength)
  std::uint64_t seed = 0;
  std::vector<double> epsilon_sweep;     ///< targets for the strong-converse sweep
  double mu_factor = 1.0;                ///< scales the default n^{-1/3} slack
  double fit_ci_cap = 2.0;               ///< drop fit points with wider -log2 beta CI
  long tuning_trials = 20000;            ///< per bisection step in the sweep

  void validate() const;
};

/// Empirical error frequency with its exact 95% binomial interval.
struct ErrorEstimate {
  int k = 0;
  int n = 0;
  int hypothesis = 0;
  long trials = 0;
  long errors = 0;
  double rate = 0.0;
  double ci_lo = 0.0;
  double ci_hi = 1.0;
};

/// Per (k, n) error frequencies under the given hypothesis, reproducible from
/// the seed alone: trial r uses the derived stream (seed, hypothesis, n, r),
/// so results do not depend on threading or trial order.
std::vector<ErrorEstimate> run_trials(const ExperimentSpec& spec, int hypothesis);

/// Least-squares fit of -log2(beta) against n. The smallest configured
/// blocklength is discarded as burn-in; points with zero errors or an
/// interval wider than the cap are unusable.
struct ExponentFit {
  int k = 0;
  std::vector<int> n_used;
  std::vector<double> y_used;  ///< -(1/1) log2 beta-hat (absolute, not per-symbol)
  double slope = 0.0;          ///< bits per symbol
  double intercept = 0.0;
  double slope_ci_lo = 0.0;
  double slope_ci_hi = 0.0;
};

ExponentFit fit_exponent(const std::vector<ErrorEstimate>& beta_estimates, int k,
                         const std::vector<int>& blocklengths, double ci_cap);

/// Strong-converse sweep: per (center, epsilon target, blocklength) the
/// decision slack factor is bisected until the measured type-I error meets
/// the target, then type-II errors are measured at the tuned factors and the
/// exponent is fitted per (center, epsilon).
struct SweepRow {
  int k = 0;
  double epsilon = 0.0;
  int n = 0;
  double slack_factor = 1.0;
  ErrorEstimate alpha;
  ErrorEstimate beta;
};

struct SweepFit {
  int k = 0;
  double epsilon = 0.0;
  std::optional<ExponentFit> fit;  ///< empty when unresolvable at this budget
  std::string status;              ///< "ok" or the reason the fit is missing
};

struct SweepResult {
  std::vector<SweepRow> rows;
  std::vector<SweepFit> fits;
};

SweepResult strong_converse_sweep(const ExperimentSpec& spec);

}  // namespace khoplab
