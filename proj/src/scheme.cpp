#include "khoplab/scheme.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "khoplab/error.hpp"
#include "khoplab/info.hpp"
#include "khoplab/rng.hpp"

namespace khoplab {

namespace {

[[noreturn]] void fail(const std::string& message) { throw Error("schemes", message); }

int bit_budget_for(double rate, int n) {
  // The 1e-9 shave keeps exact products like 30 * 0.1 from rounding up.
  const double bits = static_cast<double>(n) * rate;
  return std::max(0, static_cast<int>(std::ceil(bits - 1e-9)));
}

/// P_{Y_k U_k} for the decision at center k: U_k -- Y_{k-1} -- Y_k.
JointPmf decision_reference(const HopNetworkSpec& spec, const ConditionalPmf& channel, int k) {
  const JointPmf pair = spec.hop_pair(k);  // (Y_{k-1}, Y_k)
  const int prev = pair.axis(0).size();
  const int next = pair.axis(1).size();
  const int aux = static_cast<int>(channel.to_size());
  std::vector<double> mass(static_cast<std::size_t>(next * aux), 0.0);
  for (int a = 0; a < prev; ++a) {
    for (int b = 0; b < next; ++b) {
      const double w = pair.at(static_cast<std::size_t>(a * next + b));
      if (w <= 0.0) continue;
      for (int u = 0; u < aux; ++u) {
        mass[static_cast<std::size_t>(b * aux + u)] += w * channel.at(static_cast<std::size_t>(a),
                                                                      static_cast<std::size_t>(u));
      }
    }
  }
  return JointPmf::unchecked({pair.axis(1), Alphabet::indexed(aux, "u")}, std::move(mass));
}

bool typical_with_codeword(std::span<const int> y, const Codebook& book, std::uint64_t entry,
                           const TypicalityBounds& bounds, int u_size, long* counts) {
  const int n = static_cast<int>(y.size());
  const std::size_t cells = bounds.lo.size();  // |Y| * |U|, (y, u)-major
  std::fill(counts, counts + cells, 0L);
  for (int t = 0; t < n; ++t) {
    const int u = book.symbol(entry, t);
    ++counts[static_cast<std::size_t>(y[static_cast<std::size_t>(t)] * u_size + u)];
  }
  return bounds.admits(std::span<const long>(counts, cells));
}

}  // namespace

std::uint64_t Codebook::scan_limit() const {
  const int l2 = log2_entries();
  if (l2 >= 63) return kScanCap;
  return std::min<std::uint64_t>(std::uint64_t{1} << l2, kScanCap);
}

int Codebook::symbol(std::uint64_t entry, int t) const {
  if (!entries_materialized.empty()) {
    return entries_materialized[entry * static_cast<std::uint64_t>(n) +
                                static_cast<std::uint64_t>(t)];
  }
  const double u = prf_uniform(seed, entry, static_cast<std::uint64_t>(t));
  return sample_cumulative_at(u_cumulative, u);
}

std::vector<Codebook> build_codebooks(const HopNetworkSpec& spec,
                                      std::span<const ConditionalPmf> channels, int n,
                                      std::uint64_t seed) {
  spec.validate();
  if (static_cast<int>(channels.size()) != spec.hops) fail("need one channel per hop");
  if (n < 1) fail("blocklength must be >= 1");
  std::vector<Codebook> books;
  books.reserve(static_cast<std::size_t>(spec.hops));
  for (int hop = 1; hop <= spec.hops; ++hop) {
    const ConditionalPmf& channel = channels[static_cast<std::size_t>(hop - 1)];
    if (channel.from_axes().size() != 1 ||
        !(channel.from_axes()[0] == spec.alphabets[static_cast<std::size_t>(hop - 1)])) {
      fail("channel " + std::to_string(hop) + " must condition on the hop input alphabet");
    }
    Codebook book;
    book.hop = hop;
    book.n = n;
    book.bit_budget = bit_budget_for(spec.rates[static_cast<std::size_t>(hop - 1)], n);
    book.seed = mix_seed(seed, static_cast<std::uint64_t>(hop));
    book.u_size = static_cast<int>(channel.to_size());

    const JointPmf prev = spec.p_joint.marginal(std::vector<int>{hop - 1});
    std::vector<double> u_marginal(channel.to_size(), 0.0);
    for (std::size_t a = 0; a < prev.size(); ++a) {
      for (std::size_t u = 0; u < channel.to_size(); ++u) {
        u_marginal[u] += prev.at(a) * channel.at(a, u);
      }
    }
    book.u_cumulative = cumulative_from(u_marginal);

    const std::uint64_t entries =
        book.log2_entries() >= 63 ? kScanCap : (std::uint64_t{1} << book.log2_entries());
    if (entries * static_cast<std::uint64_t>(n) <= (std::uint64_t{1} << 22)) {
      book.entries_materialized.resize(entries * static_cast<std::uint64_t>(n));
      for (std::uint64_t e = 0; e < entries; ++e) {
        for (int t = 0; t < n; ++t) {
          const double u = prf_uniform(book.seed, e, static_cast<std::uint64_t>(t));
          book.entries_materialized[e * static_cast<std::uint64_t>(n) +
                                    static_cast<std::uint64_t>(t)] =
              static_cast<std::uint8_t>(sample_cumulative_at(book.u_cumulative, u));
        }
      }
    }
    books.push_back(std::move(book));
  }
  return books;
}

HopMessage encode_hop(std::span<const int> y, const HopMessage* incoming, const Codebook& book,
                      const JointPmf& reference, double mu) {
  return encode_hop(y, incoming, book, make_typicality_bounds(reference, book.n, mu));
}

HopMessage encode_hop(std::span<const int> y, const HopMessage* incoming, const Codebook& book,
                      const TypicalityBounds& bounds) {
  if (static_cast<int>(y.size()) != book.n) fail("sequence length does not match the codebook");
  if (incoming != nullptr && incoming->reject) return book.reject_message();
  std::vector<long> counts(bounds.lo.size());
  const std::uint64_t limit = book.scan_limit();
  for (std::uint64_t entry = 0; entry < limit; ++entry) {
    if (typical_with_codeword(y, book, entry, bounds, book.u_size, counts.data())) {
      return book.index_message(entry);
    }
  }
  return book.has_reject() ? book.reject_message() : book.index_message(0);
}

int decide_hop(std::span<const int> y, const HopMessage& incoming, const Codebook& book,
               const DecisionRule& rule) {
  if (static_cast<int>(y.size()) != book.n) fail("sequence length does not match the codebook");
  if (incoming.reject) return 1;
  std::vector<long> counts(rule.reference.size());
  return typical_with_codeword(y, book, incoming.index, rule.bounds, book.u_size, counts.data())
             ? 0
             : 1;
}

SchemeContext::SchemeContext(HopNetworkSpec spec, std::vector<ConditionalPmf> channels, int n,
                             std::uint64_t seed, double mu_factor)
    : spec_(std::move(spec)), channels_(std::move(channels)), n_(n), seed_(seed) {
  spec_.validate();
  if (n_ < 1) fail("blocklength must be >= 1");
  if (!(mu_factor > 0.0)) fail("mu factor must be positive");
  mu_ = default_mu(n_) * mu_factor;
  codebooks_ = build_codebooks(spec_, channels_, n_, seed_);

  for (int hop = 1; hop <= spec_.hops; ++hop) {
    const JointPmf prev = spec_.p_joint.marginal(std::vector<int>{hop - 1});
    const JointPmf ref = join(prev, channels_[static_cast<std::size_t>(hop - 1)]);
    const double rate_used = mutual_information(ref, std::vector<int>{0}, std::vector<int>{1});
    const double budget = spec_.rates[static_cast<std::size_t>(hop - 1)];
    if (rate_used >= budget) {
      warnings_.push_back("hop " + std::to_string(hop) + " channel uses I(U;Y_prev) = " +
                          std::to_string(rate_used) + " >= rate " + std::to_string(budget) +
                          "; encoding failures will not vanish");
    }
    encode_refs_.push_back(ref);
    encode_bounds_.push_back(make_typicality_bounds(ref, n_, mu_));

    DecisionRule rule;
    rule.hop = hop;
    rule.mu = mu_;
    rule.reference = decision_reference(spec_, channels_[static_cast<std::size_t>(hop - 1)], hop);
    rule.bounds = make_typicality_bounds(rule.reference, n_, mu_);
    rules_.push_back(std::move(rule));
  }
}

void SchemeContext::set_decision_slack_factor(int k, double factor) {
  if (k < 1 || k > spec_.hops) fail("decision center out of range");
  if (!(factor > 0.0)) fail("slack factor must be positive");
  DecisionRule& rule = rules_[static_cast<std::size_t>(k - 1)];
  rule.mu = default_mu(n_) * factor;
  rule.bounds = make_typicality_bounds(rule.reference, n_, rule.mu);
}

SchemeContext::Outcome SchemeContext::run(std::span<const std::vector<int>> sequences) const {
  if (static_cast<int>(sequences.size()) != spec_.hops + 1) {
    fail("need one sequence per terminal");
  }
  Outcome out;
  out.guesses.resize(static_cast<std::size_t>(spec_.hops));
  out.messages.resize(static_cast<std::size_t>(spec_.hops));

  HopMessage message = encode_hop(sequences[0], nullptr, codebooks_[0], encode_bounds_[0]);
  for (int k = 1; k <= spec_.hops; ++k) {
    out.messages[static_cast<std::size_t>(k - 1)] = message;
    const int guess = decide_hop(sequences[static_cast<std::size_t>(k)], message,
                                 codebooks_[static_cast<std::size_t>(k - 1)],
                                 rules_[static_cast<std::size_t>(k - 1)]);
    out.guesses[static_cast<std::size_t>(k - 1)] = guess;
    if (k < spec_.hops) {
      const Codebook& next = codebooks_[static_cast<std::size_t>(k)];
      if (guess == 1) {
        // A rejecting center forwards REJECT; with a 0-bit next hop there is
        // nothing to send and downstream centers are on their own.
        message = next.has_reject() ? next.reject_message() : next.index_message(0);
      } else {
        message = encode_hop(sequences[static_cast<std::size_t>(k)], &message, next,
                             encode_bounds_[static_cast<std::size_t>(k)]);
      }
    }
  }
  return out;
}

}  // namespace khoplab
