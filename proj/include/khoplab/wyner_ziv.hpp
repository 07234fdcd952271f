#pragma once

#include <cstdint>
#include <vector>

#include "khoplab/pmf.hpp"

namespace khoplab {

/// Per-symbol distortion table d(x, z) >= 0 with the allowed average D.
struct DistortionSpec {
  Alphabet reconstruction;  ///< Z
  std::vector<double> table;  ///< |X| x |Z| row-major
  double max_distortion = 0.0;

  double at(int x, int z) const {
    return table[static_cast<std::size_t>(x) * static_cast<std::size_t>(reconstruction.size()) +
                 static_cast<std::size_t>(z)];
  }
};

DistortionSpec hamming_distortion(const Alphabet& x, double max_distortion);

/// Solution of min I(X;S|Y) over P_{S|X} and deterministic g: S x Y -> Z
/// subject to E[d(X, g(S,Y))] <= D.
struct WynerZivSolution {
  double rate = 0.0;  ///< I(X;S|Y), bits
  ConditionalPmf test_channel;          ///< P_{S|X}
  std::vector<int> reconstruction_map;  ///< g flattened: [s][y] -> z
  double achieved_distortion = 0.0;
};

struct WynerZivOptions {
  int s_card = 0;           ///< 0 = default |X| + 1
  int restarts = 16;
  int max_iterations = 5000;
  double tolerance = 1e-9;
  std::uint64_t map_cap = 1000000;  ///< enumerate maps exhaustively up to here
  std::uint64_t seed = 0x775a6d696eULL;
};

/// Alternating minimization: a distortion-Lagrangian Blahut-Arimoto style
/// inner solve over P_{S|X} per reconstruction map, maps enumerated
/// exhaustively when |Z|^(|S||Y|) fits the cap and greedily refined otherwise,
/// with bisection on the Lagrange weight to meet the distortion budget.
WynerZivSolution wyner_ziv_rmin(const JointPmf& p_xy, const DistortionSpec& distortion,
                                WynerZivOptions options = {});

/// Exhaustive simplex-grid search over (P_{S|X}, greedy g); the independent
/// check for small alphabets.
double wyner_ziv_oracle(const JointPmf& p_xy, const DistortionSpec& distortion, int s_card,
                        int grid_steps);

/// Theorem-1 bound for the lossless problem: H(X|Y).
double lossless_bound(const JointPmf& p_xy);

}  // namespace khoplab
