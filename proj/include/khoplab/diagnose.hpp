#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "khoplab/block.hpp"
#include "khoplab/pmf.hpp"
#include "khoplab/scheme.hpp"

namespace khoplab {

/// Exact membership of the acceptance event at decision center k, enumerated
/// over the joint sequence space of (Y_0^n, ..., Y_k^n).
struct AcceptanceRegion {
  int k = 0;
  int n = 0;
  std::uint64_t space = 0;
  std::uint64_t cardinality = 0;
  std::vector<std::uint64_t> bits;

  bool member(std::uint64_t index) const {
    return (bits[index >> 6] >> (index & 63)) & 1;
  }
};

AcceptanceRegion enumerate_region(const SchemeContext& context, int k,
                                  std::uint64_t cap = kEnumerationCap);

/// Exact single-letter statistics of U_l = (M_l, prefixes, T) under the
/// restricted measure.
struct HopLetterStats {
  int hop = 0;
  double h_message = 0.0;        ///< H(M_l) under the restriction, bits
  double mi_message_block = 0.0; ///< I(M_l; Y_l^n)
  double mi_u_prev = 0.0;        ///< I(U_l; Y_{l-1})
  double mi_u_next = 0.0;        ///< I(U_l; Y_l)
  double markov_gap = 0.0;       ///< I(U_l; Y_l | Y_{l-1})
};

/// Finite-n certificate of the converse lemma at one center.
struct Lemma1Check {
  int hop = 0;
  double rate_budget = 0.0;      ///< n R_l, bits
  double h_message = 0.0;
  double rate_slack = 0.0;       ///< (i)  n R_l - H(M_l)
  double information_floor = 0.0;///< n I(U_l;Y_{l-1}) + log2(delta)
  double floor_slack = 0.0;      ///< (ii) H(M_l) - floor
};

/// Everything the exact small-n analysis of one decision center produces.
struct CenterDiagnostics {
  int k = 0;
  int n = 0;
  double mu = 0.0;

  double alpha_exact = 0.0;
  double beta_exact = 0.0;

  std::uint64_t acceptance_cardinality = 0;
  std::uint64_t dk_cardinality = 0;
  std::vector<std::uint64_t> dk_bits;
  double delta = 0.0;                  ///< mass of D_k under the null law
  double typical_mass = 0.0;           ///< mass of T_mu alone
  double typicality_defect_bound = 0.0;///< product-alphabet size / (4 mu^2 n)
  bool delta_bound_holds = false;      ///< delta >= 1 - alpha - defect bound

  double restriction_kl = 0.0;         ///< direct sum of ptilde log2(ptilde/p)
  double block_entropy = 0.0;          ///< H over the restricted block measure
  double entropy_gap = 0.0;            ///< |(1/n) H(ptilde) - H(p)|
  double log_delta_term = 0.0;         ///< -(1/n) log2 delta
  double max_single_letter_deviation = 0.0;
  JointPmf single_letter;              ///< time-averaged restricted marginal
  double single_letter_kl = 0.0;       ///< D(single letter || p)
  double chain_cmi = 0.0;              ///< I(Y_0..Y_{k-2}; Y_k | Y_{k-1}), k >= 2

  double msg_divergence = 0.0;         ///< D(P_{M Y_k^n} || Q_M P_{Y_k^n})
  double q_acceptance = 0.0;           ///< acceptance mass under Q_M x P_{Y_k^n}
  double delta_prime = 0.0;            ///< -((k+1)/n) log2 delta + 1/n
  double beta_exponent = 0.0;          ///< -(1/n) log2 beta_exact
  double sum_mi_u_next = 0.0;
  double sum_mi_message_block = 0.0;
  double lemma1_iii_slack = 0.0;       ///< sum + delta_prime - beta_exponent

  std::vector<HopLetterStats> hops;
  std::vector<Lemma1Check> lemma1;
};

/// Exact enumeration analysis of center k: acceptance region, D_k and its
/// mass bound, the restricted measure identities, Lemma-style certificates,
/// and the asymptotic-Markov-chain gaps. The typicality slack defaults to
/// n^{-1/3} and is independent of any tuned decision slack.
CenterDiagnostics analyze_center(const SchemeContext& context, int k,
                                 std::optional<double> mu = std::nullopt,
                                 std::uint64_t cap = kEnumerationCap);

/// Entropy-convergence surveillance across blocklengths: one analysis per n
/// with the same spec/channels/seed.
struct ConvergenceRow {
  int n = 0;
  double entropy_gap = 0.0;
  double log_delta_term = 0.0;
  double max_single_letter_deviation = 0.0;
  double markov_gap_hop1 = 0.0;
  double chain_cmi = 0.0;
  double single_letter_kl = 0.0;
  double delta = 0.0;
};

std::vector<ConvergenceRow> entropy_convergence(const HopNetworkSpec& spec,
                                                const std::vector<ConditionalPmf>& channels,
                                                std::uint64_t seed, const std::vector<int>& ns,
                                                int k, std::uint64_t cap = kEnumerationCap);

/// Materialized joint law of (U_l, Y_{l-1,T}, Y_{l,T}) with U_l's alphabet
/// the realized (message, prefix, t) values. Feasible for small n only;
/// cross-checks the streamed statistics through the generic pmf operations.
JointPmf materialize_single_letterization(const SchemeContext& context, int k, int hop,
                                          const std::vector<std::uint64_t>& dk_bits,
                                          double delta, std::uint64_t max_support = 1 << 20,
                                          std::uint64_t cap = kEnumerationCap);

}  // namespace khoplab
