#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "khoplab/pmf.hpp"

namespace khoplab {

/// Solver knobs for the per-hop auxiliary-channel maximization
/// max I(U;Y1) subject to I(U;Y0) <= R over test channels P_{U|Y0}.
struct EtaOptions {
  int aux_card = 0;       ///< 0 = default |Y0| + 1
  int restarts = 16;      ///< random initializations per inner solve
  int max_iterations = 5000;
  double tolerance = 1e-9;
  std::uint64_t seed = 0x6b686f706c6162ULL;  ///< fixed: results are reproducible
};

/// One solved point: a feasible channel and its objective value.
struct EtaPoint {
  double rate = 0.0;   ///< I(U;Y0) of the returned channel, bits
  double value = 0.0;  ///< I(U;Y1), bits
  ConditionalPmf channel;
};

/// Sampled graph of the per-hop curve with the optimizing channels attached.
/// Rates increase; values are nondecreasing and concave along the grid.
struct EtaCurve {
  int hop = 1;
  int aux_cardinality = 0;
  std::vector<double> rates;
  std::vector<double> values;
  std::vector<ConditionalPmf> channels;

  double max_rate() const { return rates.empty() ? 0.0 : rates.back(); }
  /// Linear interpolation between grid points (valid as an achievable value
  /// by concavity). Throws when R is outside [0, max_rate()].
  double value_at(double rate) const;
};

/// Best feasible channel at rate budget R. The returned channel always
/// satisfies I(U;Y0) <= R + 1e-6; the value is a certified-by-oracle lower
/// bound on the true curve for oracle-eligible alphabet sizes.
EtaPoint eta(const JointPmf& pair, double rate, EtaOptions options = {});

/// Exhaustive grid search over feasible test channels; the independent check
/// for eta(). Only for |Y0| <= 3 and aux_card <= 4. Channels that coincide
/// up to relabeling of U are enumerated once.
double eta_oracle(const JointPmf& pair, double rate, int grid_steps, int aux_card = 3);

/// One grid sweep answering several rate budgets at once.
std::vector<double> eta_oracle_batch(const JointPmf& pair, std::span<const double> rates,
                                     int grid_steps, int aux_card = 3);

/// Traces the concave curve by maximizing I(U;Y1) - lambda I(U;Y0) per
/// lambda (sorted descending). The assembled curve always contains the
/// endpoints (0, 0) and (H(Y0), I(Y0;Y1)).
EtaCurve lagrangian_sweep(const JointPmf& pair, std::span<const double> lambdas,
                          EtaOptions options = {}, int hop = 1);

}  // namespace khoplab
