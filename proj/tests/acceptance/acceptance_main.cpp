// Acceptance suite: one pass/fail line per criterion, exit 0 only if every
// requested criterion passes. Criteria are selectable with --criterion N.

#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "khoplab/config.hpp"
#include "khoplab/diagnose.hpp"
#include "khoplab/error.hpp"
#include "khoplab/eta.hpp"
#include "khoplab/info.hpp"
#include "khoplab/run.hpp"
#include "khoplab/scheme.hpp"
#include "khoplab/simulate.hpp"
#include "khoplab/stats.hpp"
#include "khoplab/wyner_ziv.hpp"

using namespace khoplab;
using nlohmann::json;

namespace {

constexpr double kFixtureChannelCrossover = 0.11;
constexpr std::uint64_t kFixtureSeed = 1;

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

std::vector<ConditionalPmf> fixture_channels() {
  const Alphabet b = Alphabet::binary();
  const Alphabet u = Alphabet::indexed(2, "u");
  const double q = kFixtureChannelCrossover;
  const ConditionalPmf w({b}, {u}, {1.0 - q, q, q, 1.0 - q});
  return {w, w};
}

ExperimentSpec converse_instance() {
  ExperimentSpec spec;
  spec.network = dsbs_chain(0.1, 0.5, 0.5);
  spec.channels = fixture_channels();
  spec.blocklengths = {40, 80, 120, 160, 200};
  spec.trials = 100000;
  spec.seed = kFixtureSeed;
  return spec;
}

// ----------------------------------------------------------------- C1
bool criterion1(std::ostream& out) {
  const std::vector<double> rates{0.1, 0.3, 0.5, 0.8};
  double worst = 0.0;
  bool dominance = true;
  for (double p : {0.05, 0.1, 0.2}) {
    const JointPmf pair = dsbs(p);
    const std::vector<double> oracle = eta_oracle_batch(pair, rates, 200, 3);
    for (std::size_t i = 0; i < rates.size(); ++i) {
      const EtaPoint point = eta(pair, rates[i]);
      const double deviation = std::abs(point.value - oracle[i]);
      worst = std::max(worst, deviation);
      if (point.value < oracle[i] - 5e-3) dominance = false;
      out << "  p=" << p << " R=" << rates[i] << " eta=" << point.value
          << " oracle=" << oracle[i] << " |diff|=" << deviation << "\n";
    }
  }
  out << "  max deviation " << worst << " (tolerance 5e-3)\n";
  return worst <= 5e-3 && dominance;
}

// ----------------------------------------------------------------- C2
bool criterion2(std::ostream& out) {
  const JointPmf pair = dsbs(0.1);
  const double bound = lossless_bound(pair);
  const double mi = mutual_information(pair, std::vector<int>{0}, std::vector<int>{1});
  const WynerZivSolution wz = wyner_ziv_rmin(pair, hamming_distortion(pair.axis(0), 0.0));
  out << "  lossless_bound = " << bound << " (anchor 0.4690 +- 1e-4)\n";
  out << "  mutual_information = " << mi << " (anchor 0.5310 +- 1e-4)\n";
  out << "  wyner_ziv_rmin(D=0) = " << wz.rate << " vs bound " << bound << " (+- 1e-3)\n";
  return std::abs(bound - 0.4690) <= 1e-4 && std::abs(mi - 0.5310) <= 1e-4 &&
         std::abs(wz.rate - bound) <= 1e-3;
}

// ----------------------------------------------------------------- C3
bool criterion3(std::ostream& out) {
  const ExperimentSpec spec = converse_instance();
  std::vector<double> theta(static_cast<std::size_t>(spec.network.hops));
  double running = 0.0;
  for (int hop = 1; hop <= spec.network.hops; ++hop) {
    running += eta(spec.network.hop_pair(hop), spec.network.rates[static_cast<std::size_t>(hop - 1)]).value;
    theta[static_cast<std::size_t>(hop - 1)] = running;
  }
  const std::vector<ErrorEstimate> beta = run_trials(spec, 1);
  const std::vector<ErrorEstimate> alpha = run_trials(spec, 0);
  bool pass = true;
  for (int k = 1; k <= spec.network.hops; ++k) {
    const ExponentFit fit = fit_exponent(beta, k, spec.blocklengths, spec.fit_ci_cap);
    const double halfwidth = 0.5 * (fit.slope_ci_hi - fit.slope_ci_lo);
    const double cap = theta[static_cast<std::size_t>(k - 1)] + halfwidth;
    out << "  k=" << k << " slope=" << fit.slope << " +- " << halfwidth
        << " theta_max=" << theta[static_cast<std::size_t>(k - 1)]
        << " points=" << fit.n_used.size() << (fit.slope <= cap ? " (ok)" : " (VIOLATION)")
        << "\n";
    if (!(fit.slope <= cap)) pass = false;
  }
  for (const auto& e : alpha) {
    if (e.k == 1) out << "  alpha_hat(k=1, n=" << e.n << ") = " << e.rate << "\n";
  }
  return pass;
}

// ----------------------------------------------------------------- C4
bool criterion4(std::ostream& out) {
  ExperimentSpec spec = converse_instance();
  spec.epsilon_sweep = {0.1, 0.4, 0.7};
  spec.tuning_trials = 10000;
  const SweepResult result = strong_converse_sweep(spec);
  for (const SweepRow& row : result.rows) {
    out << "  k=" << row.k << " eps=" << row.epsilon << " n=" << row.n
        << " factor=" << row.slack_factor << " alpha_hat=" << row.alpha.rate
        << " beta_hat=" << row.beta.rate << " (beta errors " << row.beta.errors << ")\n";
  }
  bool pass = true;
  for (int k = 1; k <= spec.network.hops; ++k) {
    std::vector<const SweepFit*> fits;
    for (const SweepFit& fit : result.fits) {
      if (fit.k == k) fits.push_back(&fit);
    }
    for (const SweepFit* fit : fits) {
      if (fit->fit.has_value()) {
        out << "  k=" << k << " eps=" << fit->epsilon << " exponent=" << fit->fit->slope
            << " ci=[" << fit->fit->slope_ci_lo << ", " << fit->fit->slope_ci_hi << "]\n";
      } else {
        out << "  k=" << k << " eps=" << fit->epsilon << " UNRESOLVED: " << fit->status << "\n";
        pass = false;
      }
    }
    for (std::size_t i = 0; i < fits.size(); ++i) {
      for (std::size_t j = i + 1; j < fits.size(); ++j) {
        if (!fits[i]->fit || !fits[j]->fit) continue;
        const double difference = std::abs(fits[i]->fit->slope - fits[j]->fit->slope);
        const double allowance = 0.5 * (fits[i]->fit->slope_ci_hi - fits[i]->fit->slope_ci_lo) +
                                 0.5 * (fits[j]->fit->slope_ci_hi - fits[j]->fit->slope_ci_lo);
        const bool ok = difference <= allowance;
        out << "  k=" << k << " eps " << fits[i]->epsilon << " vs " << fits[j]->epsilon
            << ": |diff|=" << difference << " allowance=" << allowance
            << (ok ? " (ok)" : " (VIOLATION)") << "\n";
        if (!ok) pass = false;
      }
    }
  }
  return pass;
}

// ----------------------------------------------------------------- C5
struct InstanceSource {
  HopNetworkSpec network;
  std::vector<ConditionalPmf> channels;
};

InstanceSource random_instance(std::uint64_t index) {
  std::mt19937_64 gen(0x5eedULL + index);
  std::uniform_real_distribution<double> unit(0.15, 0.85);
  std::uniform_real_distribution<double> head(0.3, 0.7);
  const Alphabet b = Alphabet::binary();

  InstanceSource inst;
  inst.network.hops = 2;
  inst.network.alphabets = {b, b, b};
  const double p0 = head(gen);
  const double w1a = unit(gen), w1b = unit(gen), w2a = unit(gen), w2b = unit(gen);
  const ConditionalPmf w1({b}, {b}, {w1a, 1.0 - w1a, 1.0 - w1b, w1b});
  const ConditionalPmf w2({b}, {b}, {w2a, 1.0 - w2a, 1.0 - w2b, w2b});
  inst.network.p_joint = markov_chain(JointPmf({b}, {p0, 1.0 - p0}),
                                      std::vector<ConditionalPmf>{w1, w2});
  // Half-integer rates keep n R integral at n in {4, 6, 8}, so the message
  // alphabet always fits inside the nominal budget.
  inst.network.rates = {gen() % 2 == 0 ? 0.5 : 1.0, gen() % 2 == 0 ? 0.5 : 1.0};
  inst.network.epsilons = {0.1, 0.1};

  const Alphabet u = Alphabet::indexed(2, "u");
  for (int hop = 1; hop <= 2; ++hop) {
    const double qa = unit(gen), qb = unit(gen);
    std::vector<double> kernel{qa, 1.0 - qa, 1.0 - qb, qb};
    const JointPmf prev = inst.network.p_joint.marginal(std::vector<int>{hop - 1});
    // Shrink toward uniform until the channel sits below the rate budget.
    const double budget = inst.network.rates[static_cast<std::size_t>(hop - 1)] - 0.02;
    for (int step = 0; step < 60; ++step) {
      const ConditionalPmf candidate({b}, {u}, kernel);
      const double used =
          mutual_information(join(prev, candidate), std::vector<int>{0}, std::vector<int>{1});
      if (used <= budget) break;
      for (double& x : kernel) x = 0.5 * x + 0.25;  // halfway to uniform
    }
    inst.channels.emplace_back(std::vector<Alphabet>{b}, std::vector<Alphabet>{u}, kernel);
  }
  return inst;
}

bool criterion5(std::ostream& out) {
  const int instances = 100;
  const long trials = 2000;
  long coverage_checks = 0, coverage_hits = 0;
  long bound_failures = 0, kl_failures = 0, lemma_failures = 0;
  double worst_kl_error = 0.0, worst_slack = 1e9;

  for (int i = 0; i < instances; ++i) {
    const InstanceSource inst = random_instance(static_cast<std::uint64_t>(i));
    ExperimentSpec mc;
    mc.network = inst.network;
    mc.channels = inst.channels;
    mc.blocklengths = {4, 6, 8};
    mc.trials = trials;
    mc.seed = 0xabcdULL + static_cast<std::uint64_t>(i);

    const std::vector<ErrorEstimate> alpha = run_trials(mc, 0);
    const std::vector<ErrorEstimate> beta = run_trials(mc, 1);

    for (int n : mc.blocklengths) {
      const SchemeContext context(inst.network, inst.channels, n, mc.seed);
      for (int k = 1; k <= 2; ++k) {
        const CenterDiagnostics d = analyze_center(context, k);
        if (!d.delta_bound_holds) ++bound_failures;
        const double kl_error = std::abs(d.restriction_kl - (-std::log2(d.delta)));
        worst_kl_error = std::max(worst_kl_error, kl_error);
        if (kl_error > 1e-10) ++kl_failures;
        for (const Lemma1Check& c : d.lemma1) {
          worst_slack = std::min(worst_slack, std::min(c.rate_slack, c.floor_slack));
          if (c.rate_slack < -1e-9 || c.floor_slack < -1e-9) ++lemma_failures;
        }
        worst_slack = std::min(worst_slack, d.lemma1_iii_slack);
        if (d.lemma1_iii_slack < -1e-9) ++lemma_failures;

        for (int hypothesis : {0, 1}) {
          const double exact = hypothesis == 0 ? d.alpha_exact : d.beta_exact;
          const std::vector<ErrorEstimate>& estimates = hypothesis == 0 ? alpha : beta;
          for (const ErrorEstimate& e : estimates) {
            if (e.k != k || e.n != n) continue;
            const auto [lo, hi] = binomial_central_region(e.trials, exact);
            ++coverage_checks;
            if (e.errors >= lo && e.errors <= hi) ++coverage_hits;
          }
        }
      }
    }
  }
  const double coverage =
      static_cast<double>(coverage_hits) / static_cast<double>(coverage_checks);
  out << "  coverage " << coverage_hits << "/" << coverage_checks << " = " << coverage
      << " (needs >= 0.93)\n";
  out << "  delta bound failures " << bound_failures << ", kl failures " << kl_failures
      << " (worst error " << worst_kl_error << "), lemma failures " << lemma_failures
      << " (worst slack " << worst_slack << ")\n";
  return coverage >= 0.93 && bound_failures == 0 && kl_failures == 0 && lemma_failures == 0;
}

// ----------------------------------------------------------------- C6
bool criterion6(std::ostream& out) {
  const HopNetworkSpec spec = dsbs_chain(0.1, 0.5, 0.5);
  const auto rows = entropy_convergence(spec, fixture_channels(), kFixtureSeed, {4, 6, 8}, 2);
  bool pass = true;
  for (const auto& row : rows) {
    out << "  n=" << row.n << " entropy_gap=" << row.entropy_gap
        << " markov_gap=" << row.markov_gap_hop1 << " chain_cmi=" << row.chain_cmi
        << " single_letter_kl=" << row.single_letter_kl << " delta=" << row.delta << "\n";
    if (!(row.chain_cmi <= row.single_letter_kl + 1e-10)) {
      out << "  chain inequality VIOLATION at n=" << row.n << "\n";
      pass = false;
    }
  }
  for (std::size_t i = 1; i < rows.size(); ++i) {
    if (rows[i].entropy_gap > rows[i - 1].entropy_gap + 1e-12) {
      out << "  entropy gap increased between n=" << rows[i - 1].n << " and n=" << rows[i].n
          << "\n";
      pass = false;
    }
    if (rows[i].markov_gap_hop1 > rows[i - 1].markov_gap_hop1 + 1e-12) {
      out << "  markov gap increased between n=" << rows[i - 1].n << " and n=" << rows[i].n
          << "\n";
      pass = false;
    }
  }

  // Regression against the frozen fixture.
  const std::string fixture_path = std::string(KHOPLAB_SOURCE_DIR) +
                                   "/tests/fixtures/dsbs_fixture.json";
  std::ifstream in(fixture_path);
  if (!in) {
    out << "  fixture file missing: " << fixture_path << "\n";
    return false;
  }
  json frozen;
  in >> frozen;
  for (const auto& record : frozen["rows"]) {
    const int n = record["n"].get<int>();
    const ConvergenceRow* found = nullptr;
    for (const auto& row : rows) {
      if (row.n == n) found = &row;
    }
    if (found == nullptr) {
      out << "  fixture row n=" << n << " not reproduced\n";
      pass = false;
      continue;
    }
    const double frozen_gap = record["entropy_gap"].get<double>();
    const double frozen_markov = record["markov_gap_hop1"].get<double>();
    const double frozen_delta = record["delta"].get<double>();
    if (std::abs(found->entropy_gap - frozen_gap) > 1e-10 ||
        std::abs(found->markov_gap_hop1 - frozen_markov) > 1e-10 ||
        std::abs(found->delta - frozen_delta) > 1e-10) {
      out << "  regression drift at n=" << n << "\n";
      pass = false;
    }
  }
  // Region cardinality regression at n = 6.
  {
    const SchemeContext context(spec, fixture_channels(), 6, kFixtureSeed);
    const AcceptanceRegion region = enumerate_region(context, 2);
    const std::uint64_t frozen_cardinality = frozen["region_cardinality_n6"].get<std::uint64_t>();
    out << "  region cardinality n=6: " << region.cardinality << " (frozen "
        << frozen_cardinality << ")\n";
    if (region.cardinality != frozen_cardinality) pass = false;
  }
  return pass;
}

// ----------------------------------------------------------------- C7
bool criterion7(std::ostream& out) {
  const auto base = std::filesystem::temp_directory_path() / "khoplab_acceptance_c7";
  std::filesystem::remove_all(base);

  json network{{"pmf", pmf_to_json(dsbs_chain(0.1, 0.5, 0.5).p_joint)},
               {"rates", {0.5, 0.5}},
               {"epsilons", {0.05, 0.05}}};
  json channels = json::array({json{{"kernel", {{0.89, 0.11}, {0.11, 0.89}}}},
                               json{{"kernel", {{0.89, 0.11}, {0.11, 0.89}}}}});
  std::vector<json> configs;
  configs.push_back(json{{"command", "region"},
                         {"seed", 11},
                         {"network", network},
                         {"lambdas", {0.9, 0.6, 0.3, 0.1}}});
  configs.push_back(json{{"command", "simulate"},
                         {"seed", 12},
                         {"network", network},
                         {"channels", channels},
                         {"blocklengths", {8, 12, 16, 20}},
                         {"trials", 2000}});
  configs.push_back(json{{"command", "diagnose"},
                         {"seed", 13},
                         {"network", network},
                         {"channels", channels},
                         {"blocklengths", {4, 6}},
                         {"centers", {2}}});

  bool pass = true;
  int index = 0;
  for (json& doc : configs) {
    std::vector<std::string> texts;
    for (int repeat = 0; repeat < 2; ++repeat) {
      const auto dir = base / (std::to_string(index) + "_" + std::to_string(repeat));
      std::filesystem::create_directories(dir);
      doc["output_dir"] = dir.string();
      std::ostringstream log;
      const auto outputs = run(parse_config(doc.dump()), log);
      std::string combined;
      for (const auto& path : outputs) {
        std::ifstream in(path, std::ios::binary);
        std::ostringstream buffer;
        buffer << in.rdbuf();
        combined += "== " + std::filesystem::path(path).filename().string() + "\n";
        combined += buffer.str();
      }
      texts.push_back(combined);
    }
    // The output_dir differs between reruns but is not part of any artifact.
    const bool identical = texts[0] == texts[1];
    out << "  " << doc["command"].get<std::string>() << ": rerun "
        << (identical ? "byte-identical" : "DIFFERS") << "\n";
    if (!identical) pass = false;
    ++index;
  }
  return pass;
}

struct Criterion {
  int id;
  const char* name;
  bool (*run)(std::ostream&);
};

const Criterion kCriteria[] = {
    {1, "eta oracle agreement (grid 200, tolerance 5e-3)", criterion1},
    {2, "closed-form anchors (lossless, mutual information, WZ at D=0)", criterion2},
    {3, "empirical exponents below the region bound", criterion3},
    {4, "strong-converse sweep: exponent stable across epsilon", criterion4},
    {5, "exact enumeration suite on 100 randomized instances", criterion5},
    {6, "asymptotic trend checks on the standard fixture", criterion6},
    {7, "byte-identical reruns", criterion7},
};

}  // namespace

int main(int argc, char** argv) {
  int selected = 0;
  for (int i = 1; i + 1 < argc + 1; ++i) {
    if (i < argc && std::strcmp(argv[i], "--criterion") == 0 && i + 1 < argc) {
      selected = std::atoi(argv[i + 1]);
    }
  }
  bool all_pass = true;
  for (const Criterion& criterion : kCriteria) {
    if (selected != 0 && criterion.id != selected) continue;
    std::ostringstream detail;
    bool pass = false;
    std::string error;
    try {
      pass = criterion.run(detail);
    } catch (const std::exception& e) {
      error = e.what();
    }
    std::printf("C%d %s: %s\n", criterion.id, criterion.name, pass ? "PASS" : "FAIL");
    std::fputs(detail.str().c_str(), stdout);
    if (!error.empty()) std::printf("  exception: %s\n", error.c_str());
    if (!pass) all_pass = false;
  }
  return all_pass ? 0 : 1;
}
