#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "khoplab/network.hpp"
#include "khoplab/pmf.hpp"
#include "khoplab/typicality.hpp"

namespace khoplab {

/// Hard cap on lazily scanned codebook entries per encoding. Entry counts are
/// exponential in n; beyond this window a miss is declared, which only
/// matters for sequences whose own type is already far off.
inline constexpr std::uint64_t kScanCap = std::uint64_t{1} << 22;

/// Message on hop l: either a codeword index or the reserved REJECT value.
/// Always fits in ceil(n R_l) bits: indices use ceil(n R_l) - 1 of them and
/// REJECT is the one extra value.
struct HopMessage {
  bool reject = false;
  std::uint64_t index = 0;
  int bit_len = 0;
};

/// Random quantization codebook for one hop: 2^(ceil(nR)-1) sequences drawn
/// i.i.d. from the hop's auxiliary marginal. Entries are a pure function of
/// (seed, hop, entry, position), so codebooks serialize as spec + seed and
/// never as raw entries. A 0-bit budget degenerates to a single unsendable
/// message and no REJECT value.
struct Codebook {
  int hop = 1;
  int n = 0;
  int bit_budget = 0;  ///< ceil(n R), bits
  std::uint64_t seed = 0;
  int u_size = 0;
  std::vector<double> u_cumulative;
  std::vector<std::uint8_t> entries_materialized;  ///< entry-major, when small

  bool has_reject() const { return bit_budget >= 1; }
  /// log2 of the entry count (bit_budget - 1); 0-bit budgets hold one entry.
  int log2_entries() const { return bit_budget >= 1 ? bit_budget - 1 : 0; }
  std::uint64_t scan_limit() const;
  int symbol(std::uint64_t entry, int t) const;
  HopMessage reject_message() const { return {true, 0, bit_budget}; }
  HopMessage index_message(std::uint64_t entry) const { return {false, entry, bit_budget}; }
};

/// Typicality-based decision at center k against the reference P_{Y_k U_k}.
struct DecisionRule {
  int hop = 1;
  double mu = 0.0;
  JointPmf reference;  ///< axes (Y_k, U_k)
  TypicalityBounds bounds;
};

std::vector<Codebook> build_codebooks(const HopNetworkSpec& spec,
                                      std::span<const ConditionalPmf> channels, int n,
                                      std::uint64_t seed);

/// First codeword jointly mu-typical with y under the (Y_prev, U) reference;
/// REJECT when none is found or the incoming message already rejected.
HopMessage encode_hop(std::span<const int> y, const HopMessage* incoming, const Codebook& book,
                      const JointPmf& reference, double mu);

/// Same with precomputed count windows (the hot path).
HopMessage encode_hop(std::span<const int> y, const HopMessage* incoming, const Codebook& book,
                      const TypicalityBounds& bounds);

/// 1 on incoming REJECT, else 0 iff the indexed codeword is jointly
/// mu-typical with y under the rule's reference.
int decide_hop(std::span<const int> y, const HopMessage& incoming, const Codebook& book,
               const DecisionRule& rule);

/// One network instance at blocklength n: codebooks plus the per-hop encode
/// references P_{Y_{l-1} U_l} and per-center decision rules. Immutable after
/// construction except for the decision slacks, which the strong-converse
/// sweep retunes.
class SchemeContext {
 public:
  SchemeContext(HopNetworkSpec spec, std::vector<ConditionalPmf> channels, int n,
                std::uint64_t seed, double mu_factor = 1.0);

  const HopNetworkSpec& spec() const { return spec_; }
  const std::vector<ConditionalPmf>& channels() const { return channels_; }
  int n() const { return n_; }
  std::uint64_t seed() const { return seed_; }
  double mu() const { return mu_; }
  const std::vector<std::string>& warnings() const { return warnings_; }

  const Codebook& codebook(int hop) const { return codebooks_[static_cast<std::size_t>(hop - 1)]; }
  const JointPmf& encode_reference(int hop) const {
    return encode_refs_[static_cast<std::size_t>(hop - 1)];
  }
  const TypicalityBounds& encode_bounds(int hop) const {
    return encode_bounds_[static_cast<std::size_t>(hop - 1)];
  }
  const DecisionRule& decision_rule(int k) const {
    return rules_[static_cast<std::size_t>(k - 1)];
  }

  /// Decision slack for center k becomes factor * mu_n. Encoding slack is
  /// left alone.
  void set_decision_slack_factor(int k, double factor);

  /// Encodes and decides along the chain. Rejection gates forwarding: a
  /// center that guesses 1 sends REJECT downstream.
  struct Outcome {
    std::vector<int> guesses;          ///< per center 1..K
    std::vector<HopMessage> messages;  ///< message into center 1..K
  };
  Outcome run(std::span<const std::vector<int>> sequences) const;

 private:
  HopNetworkSpec spec_;
  std::vector<ConditionalPmf> channels_;
  int n_;
  std::uint64_t seed_;
  double mu_;
  std::vector<Codebook> codebooks_;
  std::vector<JointPmf> encode_refs_;
  std::vector<TypicalityBounds> encode_bounds_;
  std::vector<DecisionRule> rules_;
  std::vector<std::string> warnings_;
};

}  // namespace khoplab
