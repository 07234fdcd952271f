#pragma once

#include <span>

#include "khoplab/pmf.hpp"

namespace khoplab {

/// All information quantities are in bits (base-2 logs), with 0 log 0 := 0
/// and p log(p/0) := +inf.

double binary_entropy(double p);

/// H(p) = -sum p log2 p.
double entropy(const JointPmf& p);

/// H(target | given) = H(target, given) - H(given). Axis sets must be disjoint.
double conditional_entropy(const JointPmf& p, std::span<const int> target,
                           std::span<const int> given);

/// I(a; b) = H(a) + H(b) - H(a, b). Axis sets must be disjoint.
double mutual_information(const JointPmf& p, std::span<const int> a, std::span<const int> b);

/// I(a; b | c) = H(a,c) + H(b,c) - H(a,b,c) - H(c). Pairwise disjoint axes.
double conditional_mutual_information(const JointPmf& p, std::span<const int> a,
                                      std::span<const int> b, std::span<const int> c);

/// D(p || q) = sum p log2(p/q); +inf when support(p) is not within support(q).
/// Shapes must match.
double kl_divergence(const JointPmf& p, const JointPmf& q);

}  // namespace khoplab
