#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "khoplab/error.hpp"
#include "khoplab/rng.hpp"
#include "khoplab/scheme.hpp"

using namespace khoplab;

namespace {

HopNetworkSpec dsbs_chain(double crossover, double r1, double r2) {
  HopNetworkSpec spec;
  spec.hops = 2;
  const Alphabet b = Alphabet::binary();
  spec.alphabets = {b, b, b};
  const double keep = 1.0 - crossover;
  const ConditionalPmf bsc({b}, {b}, {keep, crossover, crossover, keep});
  spec.p_joint = markov_chain(JointPmf({b}, {0.5, 0.5}), std::vector<ConditionalPmf>{bsc, bsc});
  spec.rates = {r1, r2};
  spec.epsilons = {0.05, 0.05};
  return spec;
}

std::vector<ConditionalPmf> bsc_channels(double q) {
  const Alphabet b = Alphabet::binary();
  const Alphabet u = Alphabet::indexed(2, "u");
  const ConditionalPmf w({b}, {u}, {1.0 - q, q, q, 1.0 - q});
  return {w, w};
}

std::vector<std::vector<int>> draw_sequences(const HopNetworkSpec& spec, int n, Rng& rng) {
  std::vector<std::vector<int>> out(static_cast<std::size_t>(spec.hops) + 1);
  const std::vector<double> cum = cumulative_from(spec.p_joint.mass());
  for (auto& seq : out) seq.resize(static_cast<std::size_t>(n));
  for (int t = 0; t < n; ++t) {
    const int cell = rng.sample_cumulative(cum);
    const std::vector<int> symbols = spec.p_joint.unflatten(static_cast<std::size_t>(cell));
    for (std::size_t a = 0; a < out.size(); ++a) out[a][static_cast<std::size_t>(t)] = symbols[a];
  }
  return out;
}

}  // namespace

TEST_CASE("codebook sizing: n=20, R=0.5 gives 512 entries in 10 bits") {
  const HopNetworkSpec spec = dsbs_chain(0.1, 0.5, 0.5);
  const auto books = build_codebooks(spec, bsc_channels(0.11), 20, 99);
  REQUIRE(books.size() == 2);
  CHECK(books[0].bit_budget == 10);
  CHECK(books[0].log2_entries() == 9);
  CHECK(books[0].has_reject());
  CHECK(books[0].scan_limit() == 512);
}

TEST_CASE("codebooks are a pure function of the seed") {
  const HopNetworkSpec spec = dsbs_chain(0.1, 0.5, 0.5);
  const auto a = build_codebooks(spec, bsc_channels(0.11), 16, 1234);
  const auto b = build_codebooks(spec, bsc_channels(0.11), 16, 1234);
  const auto c = build_codebooks(spec, bsc_channels(0.11), 16, 1235);
  REQUIRE_FALSE(a[0].entries_materialized.empty());
  CHECK(a[0].entries_materialized == b[0].entries_materialized);
  CHECK(a[1].entries_materialized == b[1].entries_materialized);
  CHECK(a[0].entries_materialized != c[0].entries_materialized);
}

TEST_CASE("infeasible channel rate produces a warning, not an error") {
  const HopNetworkSpec spec = dsbs_chain(0.1, 0.02, 0.5);  // hop-1 budget below I(U;Y0)
  const SchemeContext context(spec, bsc_channels(0.05), 12, 5);
  CHECK_FALSE(context.warnings().empty());
}

TEST_CASE("encode propagates REJECT and finds exact matches under the identity channel") {
  HopNetworkSpec spec = dsbs_chain(0.1, 1.0, 1.0);
  const Alphabet b = Alphabet::binary();
  const Alphabet u = Alphabet::indexed(2, "u");
  const ConditionalPmf identity({b}, {u}, {1.0, 0.0, 0.0, 1.0});
  const SchemeContext context(spec, {identity, identity}, 6, 42);

  const Codebook& book = context.codebook(1);
  const HopMessage rejected = book.reject_message();
  std::vector<int> any(6, 0);
  const HopMessage out = encode_hop(any, &rejected, book, context.encode_bounds(1));
  CHECK(out.reject);

  // Pick a codeword as the observation: under the identity channel the joint
  // reference is diagonal, so only an exact copy is typical.
  const std::uint64_t target = 3;
  std::vector<int> y(6);
  for (int t = 0; t < 6; ++t) y[static_cast<std::size_t>(t)] = book.symbol(target, t);
  const HopMessage hit = encode_hop(y, nullptr, book, context.encode_bounds(1));
  REQUIRE_FALSE(hit.reject);
  for (int t = 0; t < 6; ++t) {
    CHECK(book.symbol(hit.index, t) == y[static_cast<std::size_t>(t)]);
  }
  CHECK(hit.index <= target);  // first matching entry wins
}

TEST_CASE("decide: REJECT gives 1") {
  const HopNetworkSpec spec = dsbs_chain(0.1, 1.0, 1.0);
  const SchemeContext context(spec, bsc_channels(0.11), 8, 7);
  const Codebook& book = context.codebook(1);
  const DecisionRule& rule = context.decision_rule(1);
  std::vector<int> y(8, 0);
  CHECK(decide_hop(y, book.reject_message(), book, rule) == 1);
}

TEST_CASE("pipeline: reject monotonicity and message length contract") {
  const HopNetworkSpec spec = dsbs_chain(0.1, 0.5, 0.5);
  // A tiny slack makes every typicality check fail: all centers must say 1.
  const SchemeContext strict(spec, bsc_channels(0.11), 12, 3, 1e-3);
  Rng rng(2024);
  for (int trial = 0; trial < 20; ++trial) {
    const auto sequences = draw_sequences(spec, 12, rng);
    const SchemeContext::Outcome outcome = strict.run(sequences);
    CHECK(outcome.guesses[0] == 1);
    CHECK(outcome.guesses[1] == 1);
  }

  const SchemeContext normal(spec, bsc_channels(0.11), 12, 3);
  for (int trial = 0; trial < 50; ++trial) {
    const auto sequences = draw_sequences(spec, 12, rng);
    const SchemeContext::Outcome outcome = normal.run(sequences);
    for (int k = 1; k <= spec.hops; ++k) {
      const HopMessage& m = outcome.messages[static_cast<std::size_t>(k - 1)];
      const int budget = static_cast<int>(
          std::ceil(12.0 * spec.rates[static_cast<std::size_t>(k - 1)] - 1e-9));
      CHECK(m.bit_len <= budget);
      if (!m.reject && m.bit_len >= 1) {
        CHECK(m.index < (std::uint64_t{1} << (m.bit_len - 1)));
      }
    }
    // Once any center rejects, downstream centers reject too.
    bool rejected = false;
    for (int k = 0; k < spec.hops; ++k) {
      if (rejected) CHECK(outcome.guesses[static_cast<std::size_t>(k)] == 1);
      if (outcome.guesses[static_cast<std::size_t>(k)] == 1) rejected = true;
    }
  }
}

TEST_CASE("pipeline is a pure function of spec, channels, n, seed and input") {
  const HopNetworkSpec spec = dsbs_chain(0.1, 0.5, 0.5);
  const SchemeContext one(spec, bsc_channels(0.11), 10, 77);
  const SchemeContext two(spec, bsc_channels(0.11), 10, 77);
  Rng rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    const auto sequences = draw_sequences(spec, 10, rng);
    const auto a = one.run(sequences);
    const auto b = two.run(sequences);
    CHECK(a.guesses == b.guesses);
    for (std::size_t k = 0; k < a.messages.size(); ++k) {
      CHECK(a.messages[k].reject == b.messages[k].reject);
      CHECK(a.messages[k].index == b.messages[k].index);
    }
  }
}

TEST_CASE("zero-rate hop degenerates to marginal typicality checking") {
  HopNetworkSpec spec = dsbs_chain(0.1, 0.0, 0.5);
  const Alphabet b = Alphabet::binary();
  const Alphabet u1 = Alphabet::indexed(1, "u");
  const Alphabet u2 = Alphabet::indexed(2, "u");
  // Hop 1 carries nothing: a constant auxiliary.
  const ConditionalPmf constant({b}, {u1}, {1.0, 1.0});
  const ConditionalPmf bsc({b}, {u2}, {0.89, 0.11, 0.11, 0.89});
  const SchemeContext context(spec, {constant, bsc}, 10, 11);
  CHECK(context.codebook(1).bit_budget == 0);
  CHECK_FALSE(context.codebook(1).has_reject());
  Rng rng(6);
  const auto sequences = draw_sequences(spec, 10, rng);
  const auto outcome = context.run(sequences);
  CHECK((outcome.guesses[0] == 0 || outcome.guesses[0] == 1));
  CHECK_FALSE(outcome.messages[0].reject);
  CHECK(outcome.messages[0].bit_len == 0);
}
