#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "khoplab/pmf.hpp"

namespace khoplab {

/// Default cap on exact enumeration of blocklength-n sequence spaces.
inline constexpr std::uint64_t kEnumerationCap = std::uint64_t{1} << 24;

/// The i.i.d. extension of a joint pmf to blocklength n. Never materialized:
/// probabilities are evaluated pointwise, and the joint sequence space can be
/// enumerated exactly while it fits under the cap.
///
/// A position carries one joint symbol (a flat index into the base pmf); a
/// sequence tuple is the length-n vector of these.
class IidBlockMeasure {
 public:
  IidBlockMeasure(JointPmf base, int n);

  const JointPmf& base() const { return base_; }
  int n() const { return n_; }

  /// Number of joint sequence tuples |A|^n; throws when it overflows 2^63.
  std::uint64_t space_size() const;

  double prob(std::span<const int> joint_symbols) const;
  /// Probability under the product of per-axis marginals (the independent
  /// counterpart with identical marginals).
  double prob_independent(std::span<const int> joint_symbols) const;

  /// Visits every sequence tuple in lexicographic order (position 0 most
  /// significant). Throws Error("probcore") when space_size() exceeds cap.
  void enumerate(std::uint64_t cap,
                 const std::function<void(std::uint64_t index, std::span<const int> symbols,
                                          double prob)>& visit) const;

  /// Exact mass of the strongly typical set T_mu at this blocklength.
  double typical_mass(double mu, std::uint64_t cap = kEnumerationCap) const;

 private:
  JointPmf base_;
  int n_;
  std::vector<double> independent_cell_;  // product of per-axis marginals per joint symbol
};

}  // namespace khoplab
