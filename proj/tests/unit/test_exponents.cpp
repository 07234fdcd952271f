#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "khoplab/error.hpp"
#include "khoplab/eta.hpp"
#include "khoplab/info.hpp"
#include "khoplab/network.hpp"
#include "khoplab/wyner_ziv.hpp"

using namespace khoplab;

namespace {

double dsbs_mi(double p) { return 1.0 - binary_entropy(p); }

}  // namespace

TEST_CASE("eta trivial endpoints") {
  const JointPmf pair = dsbs(0.1);
  CHECK_THROWS_AS(eta(pair, -0.1), Error);

  const EtaPoint zero = eta(pair, 0.0);
  CHECK(zero.value == doctest::Approx(0.0).epsilon(1e-9));
  CHECK(zero.rate == doctest::Approx(0.0).epsilon(1e-9));

  // Rate above log2|Y0| saturates at I(Y0;Y1) with the identity channel.
  const EtaPoint full = eta(pair, 1.0);
  CHECK(full.value == doctest::Approx(dsbs_mi(0.1)).epsilon(1e-9));
}

TEST_CASE("eta feasibility and dpi cap on random instances") {
  std::mt19937_64 gen(7);
  std::uniform_real_distribution<double> unit(0.05, 0.95);
  for (int trial = 0; trial < 6; ++trial) {
    std::vector<double> mass(4);
    double sum = 0.0;
    for (double& x : mass) {
      x = unit(gen);
      sum += x;
    }
    for (double& x : mass) x /= sum;
    long double s2 = 0.0L;
    for (double x : mass) s2 += x;
    mass[0] += static_cast<double>(1.0L - s2);
    const JointPmf pair({Alphabet::binary(), Alphabet::binary()}, mass);
    const double budget = 0.15 + 0.2 * static_cast<double>(trial % 3);
    const EtaPoint point = eta(pair, budget);
    CHECK(point.rate <= budget + 1e-6);
    const double mi = mutual_information(pair, std::vector<int>{0}, std::vector<int>{1});
    CHECK(point.value <= std::min(budget, mi) + 1e-6);
    CHECK(point.value >= -1e-12);
  }
}

TEST_CASE("eta matches the dsbs closed form at R = 0.5") {
  // Optimal test channels for the doubly symmetric source are BSCs; with
  // 1 - h(q) = R the value is 1 - h(p * q).
  const double p = 0.1;
  double lo = 0.0, hi = 0.5;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    (1.0 - binary_entropy(mid) > 0.5 ? lo : hi) = mid;
  }
  const double q = 0.5 * (lo + hi);
  const double conv = p * (1.0 - q) + q * (1.0 - p);
  const double closed_form = 1.0 - binary_entropy(conv);
  const EtaPoint point = eta(dsbs(p), 0.5);
  CHECK(point.value == doctest::Approx(closed_form).epsilon(5e-4));
  CHECK(point.value == doctest::Approx(0.3040).epsilon(7e-3));  // coarse anchor
}

TEST_CASE("eta oracle basics") {
  const JointPmf pair = dsbs(0.1);
  CHECK(eta_oracle(pair, 0.0, 40, 3) == doctest::Approx(0.0).epsilon(1e-12));

  const JointPmf indep = product(JointPmf({Alphabet::binary()}, {0.5, 0.5}),
                                 JointPmf({Alphabet::binary()}, {0.4, 0.6}));
  CHECK(eta_oracle(indep, 0.7, 40, 3) == doctest::Approx(0.0).epsilon(1e-9));

  CHECK_THROWS_AS(eta_oracle(pair, 0.5, 40, 5), Error);

  // Nested grids: doubling the steps never loses the coarse optimum.
  const double coarse = eta_oracle(pair, 0.5, 25, 3);
  const double mid = eta_oracle(pair, 0.5, 50, 3);
  const double fine = eta_oracle(pair, 0.5, 100, 3);
  CHECK(mid >= coarse - 1e-12);
  CHECK(fine >= mid - 1e-12);
}

TEST_CASE("eta agrees with the oracle on a coarse dsbs grid") {
  const JointPmf pair = dsbs(0.1);
  const std::vector<double> rates{0.1, 0.3, 0.5, 0.8};
  const std::vector<double> oracle = eta_oracle_batch(pair, rates, 100, 3);
  for (std::size_t i = 0; i < rates.size(); ++i) {
    const EtaPoint point = eta(pair, rates[i]);
    CHECK(std::abs(point.value - oracle[i]) <= 5e-3);
    CHECK(point.value >= oracle[i] - 5e-3);  // oracle dominance with tolerance
  }
}

TEST_CASE("lagrangian sweep produces a concave nondecreasing curve") {
  const JointPmf pair = dsbs(0.1);
  std::vector<double> lambdas;
  for (int i = 0; i < 16; ++i) lambdas.push_back(0.95 - 0.06 * static_cast<double>(i));
  const EtaCurve curve = lagrangian_sweep(pair, lambdas);

  REQUIRE(curve.rates.size() >= 3);
  CHECK(curve.rates.front() == doctest::Approx(0.0).epsilon(1e-9));
  CHECK(curve.values.front() == doctest::Approx(0.0).epsilon(1e-9));
  CHECK(curve.max_rate() == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(curve.values.back() == doctest::Approx(dsbs_mi(0.1)).epsilon(1e-6));
  for (std::size_t i = 0; i + 1 < curve.values.size(); ++i) {
    CHECK(curve.values[i] <= curve.values[i + 1] + 1e-12);
    CHECK(curve.values[i] <= std::min(curve.rates[i], dsbs_mi(0.1)) + 1e-6);
  }
  // Concavity along the grid: interior points sit above their chords.
  for (std::size_t i = 1; i + 1 < curve.rates.size(); ++i) {
    const double span = curve.rates[i + 1] - curve.rates[i - 1];
    if (span <= 0.0) continue;
    const double w = (curve.rates[i] - curve.rates[i - 1]) / span;
    const double chord = curve.values[i - 1] + w * (curve.values[i + 1] - curve.values[i - 1]);
    CHECK(curve.values[i] >= chord - 1e-6);
  }
  // Sweep envelope matches the oracle pointwise.
  for (double rate : {0.2, 0.4, 0.6}) {
    const double oracle = eta_oracle(pair, rate, 100, 3);
    CHECK(std::abs(curve.value_at(rate) - oracle) <= 5e-3);
  }
  CHECK_THROWS_AS(lagrangian_sweep(pair, std::vector<double>{}), Error);
  CHECK_THROWS_AS(lagrangian_sweep(pair, std::vector<double>{0.1, 0.5}), Error);
}

TEST_CASE("exponent region composition") {
  HopNetworkSpec spec;
  spec.hops = 2;
  const Alphabet b = Alphabet::binary();
  spec.alphabets = {b, b, b};
  const ConditionalPmf bsc({b}, {b}, {0.9, 0.1, 0.1, 0.9});
  spec.p_joint = markov_chain(JointPmf({b}, {0.5, 0.5}), std::vector<ConditionalPmf>{bsc, bsc});
  spec.rates = {0.5, 0.5};
  spec.epsilons = {0.05, 0.05};

  std::vector<double> lambdas;
  for (int i = 0; i < 16; ++i) lambdas.push_back(0.95 - 0.06 * static_cast<double>(i));
  std::vector<EtaCurve> curves;
  curves.push_back(lagrangian_sweep(spec.hop_pair(1), lambdas, {}, 1));
  curves.push_back(lagrangian_sweep(spec.hop_pair(2), lambdas, {}, 2));
  const ExponentRegion region = exponent_region(spec, curves);
  REQUIRE(region.theta_max.size() == 2);
  CHECK(region.theta_max[0] >= 0.0);
  CHECK(region.theta_max[1] >= region.theta_max[0] - 1e-12);
  CHECK(region.theta_max[1] ==
        doctest::Approx(curves[0].value_at(0.5) + curves[1].value_at(0.5)).epsilon(1e-12));

  // Zero rates collapse the region.
  HopNetworkSpec zero = spec;
  zero.rates = {0.0, 0.0};
  const ExponentRegion z = exponent_region(zero, curves);
  CHECK(z.theta_max[0] == doctest::Approx(0.0).epsilon(1e-9));
  CHECK(z.theta_max[1] == doctest::Approx(0.0).epsilon(1e-9));

  // Saturated rates stack the pair informations.
  HopNetworkSpec sat = spec;
  sat.rates = {1.0, 1.0};
  const ExponentRegion s = exponent_region(sat, curves);
  const double mi1 = mutual_information(spec.hop_pair(1), std::vector<int>{0}, std::vector<int>{1});
  const double mi2 = mutual_information(spec.hop_pair(2), std::vector<int>{0}, std::vector<int>{1});
  CHECK(s.theta_max[0] == doctest::Approx(mi1).epsilon(1e-6));
  CHECK(s.theta_max[1] == doctest::Approx(mi1 + mi2).epsilon(1e-6));

  // Region monotonicity in the rates.
  HopNetworkSpec lower = spec;
  lower.rates = {0.3, 0.5};
  const ExponentRegion l = exponent_region(lower, curves);
  CHECK(l.theta_max[0] <= region.theta_max[0] + 1e-9);
  CHECK(l.theta_max[1] <= region.theta_max[1] + 1e-9);

  HopNetworkSpec outside = spec;
  outside.rates = {1.5, 0.5};
  CHECK_THROWS_AS(exponent_region(outside, curves), Error);
}

TEST_CASE("lossless bound anchors") {
  const Alphabet b = Alphabet::binary();
  const JointPmf copy({b, b}, {0.5, 0.0, 0.0, 0.5});
  CHECK(lossless_bound(copy) == doctest::Approx(0.0).epsilon(1e-12));
  const JointPmf indep = product(JointPmf({b}, {0.5, 0.5}), JointPmf({b}, {0.3, 0.7}));
  CHECK(lossless_bound(indep) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(lossless_bound(dsbs(0.1)) == doctest::Approx(0.4690).epsilon(2e-4));
}

TEST_CASE("wyner-ziv trivial budgets") {
  const JointPmf pair = dsbs(0.1);
  // Budget above the best constant reconstruction: zero rate.
  const WynerZivSolution free_budget =
      wyner_ziv_rmin(pair, hamming_distortion(pair.axis(0), 0.5));
  CHECK(free_budget.rate == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(free_budget.achieved_distortion <= 0.5 + 1e-9);

  // Zero budget forces lossless operation: R_min = H(X|Y).
  const WynerZivSolution lossless = wyner_ziv_rmin(pair, hamming_distortion(pair.axis(0), 0.0));
  CHECK(lossless.rate == doctest::Approx(lossless_bound(pair)).epsilon(1e-3));
  CHECK(lossless.achieved_distortion <= 1e-9);

  DistortionSpec impossible = hamming_distortion(pair.axis(0), 0.0);
  for (double& d : impossible.table) d += 1.0;  // distortion floor is now 1
  CHECK_THROWS_AS(wyner_ziv_rmin(pair, impossible), Error);
}

TEST_CASE("wyner-ziv monotone in the budget and matches the grid oracle") {
  const JointPmf pair = dsbs(0.1);
  double previous = 1e9;
  for (double budget : {0.02, 0.05, 0.10, 0.20}) {
    const WynerZivSolution s = wyner_ziv_rmin(pair, hamming_distortion(pair.axis(0), budget));
    CHECK(s.achieved_distortion <= budget + 1e-9);
    CHECK(s.rate <= previous + 1e-9);
    previous = s.rate;
  }
  const double oracle = wyner_ziv_oracle(pair, hamming_distortion(pair.axis(0), 0.05), 3, 100);
  const WynerZivSolution s = wyner_ziv_rmin(pair, hamming_distortion(pair.axis(0), 0.05));
  CHECK(std::abs(s.rate - oracle) <= 5e-3);
}
