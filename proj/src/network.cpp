#include "khoplab/network.hpp"

#include <string>

#include "khoplab/error.hpp"

namespace khoplab {

void HopNetworkSpec::validate() const {
  if (hops < 1) throw Error("schemes", "network needs at least one hop");
  if (static_cast<int>(alphabets.size()) != hops + 1) {
    throw Error("schemes", "network needs K + 1 alphabets");
  }
  if (p_joint.axes() != alphabets) {
    throw Error("schemes", "joint pmf axes do not match the network alphabets");
  }
  if (static_cast<int>(rates.size()) != hops) throw Error("schemes", "need one rate per hop");
  if (static_cast<int>(epsilons.size()) != hops) {
    throw Error("schemes", "need one type-I threshold per decision center");
  }
  for (double r : rates) {
    if (r < 0.0) throw Error("schemes", "rates must be nonnegative");
  }
  for (double e : epsilons) {
    if (e < 0.0 || e >= 1.0) throw Error("schemes", "type-I thresholds must lie in [0, 1)");
  }
}

JointPmf HopNetworkSpec::hop_pair(int hop) const {
  if (hop < 1 || hop > hops) throw Error("schemes", "hop index out of range");
  const int keep[2] = {hop - 1, hop};
  return p_joint.marginal(keep);
}

ExponentRegion exponent_region(const HopNetworkSpec& spec, std::span<const EtaCurve> curves) {
  spec.validate();
  if (static_cast<int>(curves.size()) != spec.hops) {
    throw Error("exponents", "need one eta curve per hop");
  }
  ExponentRegion region;
  region.hops = spec.hops;
  region.rates = spec.rates;
  region.theta_max.resize(static_cast<std::size_t>(spec.hops));
  double running = 0.0;
  for (int k = 1; k <= spec.hops; ++k) {
    running += curves[static_cast<std::size_t>(k - 1)].value_at(
        spec.rates[static_cast<std::size_t>(k - 1)]);
    region.theta_max[static_cast<std::size_t>(k - 1)] = running;
  }
  return region;
}

}  // namespace khoplab
