#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "khoplab/block.hpp"
#include "khoplab/diagnose.hpp"
#include "khoplab/error.hpp"
#include "khoplab/info.hpp"
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

}  // namespace

TEST_CASE("vacuous decisions and slack reproduce the unrestricted source") {
  // With every typicality check vacuous the acceptance region is the full
  // space, Delta = 1 and the restricted law is the iid law itself.
  const HopNetworkSpec spec = dsbs_chain(0.1, 0.5, 0.5);
  const SchemeContext context(spec, bsc_channels(0.11), 4, 9, 1e6);
  const CenterDiagnostics d = analyze_center(context, 2, 1e6);

  CHECK(d.alpha_exact == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(d.delta == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(d.acceptance_cardinality == d.dk_cardinality);
  CHECK(d.entropy_gap == doctest::Approx(0.0).epsilon(1e-10));
  CHECK(d.restriction_kl == doctest::Approx(0.0).epsilon(1e-10));
  CHECK(d.single_letter_kl == doctest::Approx(0.0).epsilon(1e-10));
  // The message is constant (entry 0 always works), so U = (prefix, T) is
  // independent of the letters under the iid law.
  for (const HopLetterStats& h : d.hops) {
    CHECK(h.h_message == doctest::Approx(0.0).epsilon(1e-10));
    CHECK(h.markov_gap == doctest::Approx(0.0).epsilon(1e-10));
    CHECK(h.mi_u_prev == doctest::Approx(0.0).epsilon(1e-10));
  }
  // eq:la endpoint: the single-letter law equals the source, so both sides
  // vanish.
  CHECK(d.chain_cmi <= d.single_letter_kl + 1e-10);
}

TEST_CASE("vacuous typicality alone ties Delta to the exact type-I error") {
  const HopNetworkSpec spec = dsbs_chain(0.1, 0.5, 0.5);
  const SchemeContext context(spec, bsc_channels(0.11), 4, 9);
  const CenterDiagnostics d = analyze_center(context, 2, 1.5);  // mu >= 1: all counts admitted
  CHECK(d.delta == doctest::Approx(1.0 - d.alpha_exact).epsilon(1e-12));
}

TEST_CASE("delta mass matches the typical set when decisions accept everything") {
  const HopNetworkSpec spec = dsbs_chain(0.1, 0.5, 0.5);
  const SchemeContext vacuous(spec, bsc_channels(0.11), 6, 9, 1e6);
  const CenterDiagnostics d = analyze_center(vacuous, 2);
  const IidBlockMeasure block(spec.p_joint, 6);
  CHECK(d.delta == doctest::Approx(block.typical_mass(default_mu(6))).epsilon(1e-12));
  CHECK(d.typical_mass == doctest::Approx(d.delta).epsilon(1e-12));
}

TEST_CASE("restriction identities and the delta floor on working instances") {
  const HopNetworkSpec spec = dsbs_chain(0.1, 0.5, 0.5);
  for (int n : {4, 6}) {
    const SchemeContext context(spec, bsc_channels(0.11), n, 12345);
    for (int k : {1, 2}) {
      const CenterDiagnostics d = analyze_center(context, k);
      CHECK(d.delta > 0.0);
      CHECK(d.delta_bound_holds);
      CHECK(std::abs(d.restriction_kl - (-std::log2(d.delta))) <= 1e-10);
      CHECK(d.max_single_letter_deviation <= d.mu + 1e-12);
      // Block-entropy decomposition: H(ptilde) = n * CE(single letter, p) + log2 Delta.
      double cross_entropy = 0.0;
      const JointPmf source = k == 2 ? spec.p_joint
                                     : spec.p_joint.marginal(std::vector<int>{0, 1});
      for (std::size_t cell = 0; cell < source.size(); ++cell) {
        if (d.single_letter.at(cell) > 0.0) {
          cross_entropy -= d.single_letter.at(cell) * std::log2(source.at(cell));
        }
      }
      CHECK(d.block_entropy ==
            doctest::Approx(static_cast<double>(n) * cross_entropy + std::log2(d.delta))
                .epsilon(1e-9));
    }
  }
}

TEST_CASE("lemma certificates hold exactly at finite n") {
  const HopNetworkSpec spec = dsbs_chain(0.1, 0.5, 0.5);
  for (int n : {4, 6}) {
    const SchemeContext context(spec, bsc_channels(0.11), n, 2222);
    for (int k : {1, 2}) {
      const CenterDiagnostics d = analyze_center(context, k);
      for (const Lemma1Check& c : d.lemma1) {
        CHECK(c.rate_slack >= -1e-9);   // (i) H(M) <= nR
        CHECK(c.floor_slack >= -1e-9);  // (ii) H(M) >= n I(U;Y_prev) + log2 Delta
      }
      CHECK(d.lemma1_iii_slack >= -1e-9);  // (iii)
      // Intermediate route: the divergence never exceeds the single-letter sum.
      CHECK(d.msg_divergence <=
            static_cast<double>(n) * d.sum_mi_u_next + 1e-9);
      CHECK(d.msg_divergence <= d.sum_mi_message_block * static_cast<double>(1) + 1e-9);
      // And the acceptance mass under Q is consistent with beta.
      CHECK(d.beta_exact >= d.q_acceptance * std::pow(d.delta, k + 1) - 1e-12);
      CHECK(-std::log2(d.q_acceptance) <= d.msg_divergence + 1.0 + 1e-9);
      // eq:la chain inequality.
      if (k >= 2) CHECK(d.chain_cmi <= d.single_letter_kl + 1e-10);
    }
  }
}

TEST_CASE("streamed markov gap equals the materialized conditional mutual information") {
  const HopNetworkSpec spec = dsbs_chain(0.1, 0.5, 0.5);
  for (int n : {4, 5}) {
    const SchemeContext context(spec, bsc_channels(0.11), n, 777);
    const CenterDiagnostics d = analyze_center(context, 2);
    for (int hop : {1, 2}) {
      const JointPmf single =
          materialize_single_letterization(context, 2, hop, d.dk_bits, d.delta);
      const std::vector<int> u{0}, prev{1}, next{2};
      const double cmi = conditional_mutual_information(single, u, next, prev);
      const double mi_prev = mutual_information(single, u, prev);
      const double mi_next = mutual_information(single, u, next);
      const HopLetterStats& h = d.hops[static_cast<std::size_t>(hop - 1)];
      CHECK(h.markov_gap == doctest::Approx(cmi).epsilon(1e-9));
      CHECK(h.mi_u_prev == doctest::Approx(mi_prev).epsilon(1e-9));
      CHECK(h.mi_u_next == doctest::Approx(mi_next).epsilon(1e-9));
    }
  }
}

TEST_CASE("acceptance region enumeration is deterministic given the seed") {
  const HopNetworkSpec spec = dsbs_chain(0.1, 0.5, 0.5);
  const SchemeContext one(spec, bsc_channels(0.11), 6, 31337);
  const SchemeContext two(spec, bsc_channels(0.11), 6, 31337);
  const AcceptanceRegion a = enumerate_region(one, 2);
  const AcceptanceRegion b = enumerate_region(two, 2);
  CHECK(a.cardinality == b.cardinality);
  CHECK(a.bits == b.bits);
  CHECK(a.space == 8ull * 8 * 8 * 8 * 8 * 8);

  const SchemeContext other(spec, bsc_channels(0.11), 6, 31338);
  const AcceptanceRegion c = enumerate_region(other, 2);
  CHECK(c.space == a.space);  // same space, typically different membership
}

TEST_CASE("enumeration cap is enforced and reported") {
  const HopNetworkSpec spec = dsbs_chain(0.1, 0.5, 0.5);
  const SchemeContext context(spec, bsc_channels(0.11), 10, 1);
  try {
    analyze_center(context, 2, std::nullopt, 1 << 16);
    FAIL("expected the cap to be exceeded");
  } catch (const Error& e) {
    CHECK(std::string(e.what()).find("cap") != std::string::npos);
    CHECK(std::string(e.what()).find("65536") != std::string::npos);
  }
}

TEST_CASE("entropy convergence surveillance on the standard fixture") {
  const HopNetworkSpec spec = dsbs_chain(0.1, 0.5, 0.5);
  const auto rows = entropy_convergence(spec, bsc_channels(0.11), 2024, {4, 6, 8}, 2);
  REQUIRE(rows.size() == 3);
  for (const auto& row : rows) {
    CHECK(row.max_single_letter_deviation <= default_mu(row.n) + 1e-12);
    CHECK(row.delta > 0.0);
  }
  // Gaps from the second blocklength onward never grow.
  CHECK(rows[2].entropy_gap <= rows[1].entropy_gap + 1e-12);
}
