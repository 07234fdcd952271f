#pragma once

#include <span>
#include <vector>

#include "khoplab/pmf.hpp"

namespace khoplab {

/// Default strong-typicality slack mu_n = n^{-1/3}.
double default_mu(int n);

/// Per-cell count windows for the strong typicality test at blocklength n:
/// a sequence tuple is mu-typical iff every joint-cell count lies in
/// [lo, hi], with cells of zero probability forced to zero counts.
struct TypicalityBounds {
  int n = 0;
  std::vector<double> lo, hi;  // count scale, one per flat cell

  bool admits(std::span<const long> counts) const;
};

TypicalityBounds make_typicality_bounds(const JointPmf& p, int n, double mu);

/// Strong typicality: every joint empirical frequency within mu of p and
/// support respected. One sequence per axis of p; equal lengths required.
bool is_strongly_typical(std::span<const std::vector<int>> sequences, const JointPmf& p,
                         double mu);

bool is_strongly_typical(const EmpiricalType& type, const JointPmf& p, double mu);

}  // namespace khoplab
