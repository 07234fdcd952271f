#pragma once

#include <vector>

#include "khoplab/eta.hpp"
#include "khoplab/pmf.hpp"

namespace khoplab {

/// A K-hop chain: terminal 0 observes Y_0, relays 1..K-1 observe Y_1..Y_{K-1},
/// the receiver observes Y_K. Under the null hypothesis the tuple is i.i.d.
/// p_joint; under the alternative it is the product of the same marginals.
struct HopNetworkSpec {
  int hops = 0;                       ///< K >= 1
  std::vector<Alphabet> alphabets;    ///< K + 1 observation alphabets
  JointPmf p_joint;                   ///< joint law under hypothesis 0
  std::vector<double> rates;          ///< R_1..R_K, bits per symbol
  std::vector<double> epsilons;       ///< type-I thresholds, each in [0, 1)

  /// Throws Error("schemes") when inconsistent.
  void validate() const;

  /// Marginal P_{Y_{l-1} Y_l} for hop l in 1..K.
  JointPmf hop_pair(int hop) const;
};

/// Theta bounds per decision center: theta_k^max = sum_{l<=k} eta_l(R_l).
struct ExponentRegion {
  int hops = 0;
  std::vector<double> rates;
  std::vector<double> theta_max;  ///< indexed by k-1
};

/// Evaluates the region bound from per-hop curves (hop l at curves[l-1]).
/// Rates between curve grid points are linearly interpolated; a rate outside
/// a curve's covered range is an error.
ExponentRegion exponent_region(const HopNetworkSpec& spec, std::span<const EtaCurve> curves);

}  // namespace khoplab
