#include "khoplab/run.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <ostream>

#include "khoplab/csv.hpp"
#include "khoplab/diagnose.hpp"
#include "khoplab/error.hpp"
#include "khoplab/eta.hpp"
#include "khoplab/info.hpp"
#include "khoplab/wyner_ziv.hpp"

namespace khoplab {

namespace {

using nlohmann::json;

std::vector<double> default_lambdas() {
  std::vector<double> lambdas;
  for (int i = 0; i < 40; ++i) lambdas.push_back(0.99 - static_cast<double>(i) * 0.025);
  for (double& l : lambdas) l = std::max(l, 1e-3);
  return lambdas;
}

std::string join_path(const std::string& dir, const std::string& name) {
  return (std::filesystem::path(dir) / name).string();
}

json channel_json(const ConditionalPmf& channel) {
  json rows = json::array();
  for (std::size_t r = 0; r < channel.from_size(); ++r) {
    json row = json::array();
    for (std::size_t c = 0; c < channel.to_size(); ++c) row.push_back(channel.at(r, c));
    rows.push_back(row);
  }
  return json{{"kernel", rows}};
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cli", "cannot open output file " + path);
  out << text;
}

EtaCurve curve_for_hop(const HopNetworkSpec& network, int hop, int aux_card,
                       const std::vector<double>& lambdas) {
  EtaOptions options;
  options.aux_card = aux_card;
  return lagrangian_sweep(network.hop_pair(hop),
                          lambdas.empty() ? default_lambdas() : lambdas, options, hop);
}

std::vector<std::string> run_eta(const RunConfig& config, const EtaCommand& cmd,
                                 std::ostream& log) {
  const std::vector<double> lambdas = cmd.lambdas.empty() ? default_lambdas() : cmd.lambdas;
  EtaOptions options;
  options.aux_card = cmd.aux_card;
  const EtaCurve curve = lagrangian_sweep(cmd.pair, lambdas, options, 1);

  CsvFile curve_csv("eta", config.config_hash, config.seed);
  curve_csv.echo("aux_card", std::to_string(curve.aux_cardinality));
  curve_csv.columns({"R", "eta", "hop"});
  for (std::size_t i = 0; i < curve.rates.size(); ++i) {
    curve_csv.row({format_double(curve.rates[i]), format_double(curve.values[i]),
                   std::to_string(curve.hop)});
  }
  const std::string curve_path = join_path(config.output_dir, "eta_curve.csv");
  curve_csv.write(curve_path);

  CsvFile points_csv("eta", config.config_hash, config.seed);
  points_csv.echo("aux_card", std::to_string(curve.aux_cardinality));
  points_csv.columns({"R", "eta", "rate_used", "hop"});
  json channels = json::array();
  for (double rate : cmd.rates) {
    const EtaPoint point = eta(cmd.pair, rate, options);
    points_csv.row({format_double(rate), format_double(point.value), format_double(point.rate),
                    "1"});
    json entry = channel_json(point.channel);
    entry["R"] = rate;
    entry["eta"] = point.value;
    entry["rate_used"] = point.rate;
    channels.push_back(entry);
  }
  const std::string points_path = join_path(config.output_dir, "eta_points.csv");
  points_csv.write(points_path);

  json report{{"tool", "khoplab"}, {"config_hash", config.config_hash},
              {"seed", config.seed}, {"channels", channels}};
  const std::string channels_path = join_path(config.output_dir, "eta_channels.json");
  write_text(channels_path, report.dump(2) + "\n");
  log << "eta: wrote " << curve.rates.size() << " curve points\n";
  return {curve_path, points_path, channels_path};
}

std::vector<std::string> run_region(const RunConfig& config, const RegionCommand& cmd,
                                    std::ostream& log) {
  std::vector<EtaCurve> curves;
  for (int hop = 1; hop <= cmd.network.hops; ++hop) {
    curves.push_back(curve_for_hop(cmd.network, hop, cmd.aux_card, cmd.lambdas));
  }
  const ExponentRegion region = exponent_region(cmd.network, curves);

  CsvFile region_csv("region", config.config_hash, config.seed);
  region_csv.columns({"k", "R", "eta", "theta_max"});
  double previous = 0.0;
  for (int k = 1; k <= region.hops; ++k) {
    const double theta = region.theta_max[static_cast<std::size_t>(k - 1)];
    region_csv.row({std::to_string(k), format_double(region.rates[static_cast<std::size_t>(k - 1)]),
                    format_double(theta - previous), format_double(theta)});
    previous = theta;
  }
  const std::string region_path = join_path(config.output_dir, "region.csv");
  region_csv.write(region_path);

  CsvFile curves_csv("region", config.config_hash, config.seed);
  curves_csv.columns({"R", "eta", "hop"});
  json channels = json::array();
  for (const EtaCurve& curve : curves) {
    for (std::size_t i = 0; i < curve.rates.size(); ++i) {
      curves_csv.row({format_double(curve.rates[i]), format_double(curve.values[i]),
                      std::to_string(curve.hop)});
    }
    json entry{{"hop", curve.hop}, {"points", json::array()}};
    for (std::size_t i = 0; i < curve.rates.size(); ++i) {
      json point = channel_json(curve.channels[i]);
      point["R"] = curve.rates[i];
      point["eta"] = curve.values[i];
      entry["points"].push_back(point);
    }
    channels.push_back(entry);
  }
  const std::string curves_path = join_path(config.output_dir, "eta_curves.csv");
  curves_csv.write(curves_path);
  const std::string channels_path = join_path(config.output_dir, "region_channels.json");
  write_text(channels_path,
             json{{"tool", "khoplab"}, {"config_hash", config.config_hash},
                  {"seed", config.seed}, {"curves", channels}}
                     .dump(2) +
                 "\n");
  log << "region: theta_max =";
  for (double t : region.theta_max) log << " " << format_double(t);
  log << "\n";
  return {region_path, curves_path, channels_path};
}

std::vector<std::string> run_wz(const RunConfig& config, const WzCommand& cmd, std::ostream& log) {
  WynerZivOptions options;
  options.s_card = cmd.s_card;
  const WynerZivSolution solution = wyner_ziv_rmin(cmd.pair, cmd.distortion, options);

  CsvFile csv("wz", config.config_hash, config.seed);
  csv.echo("max_distortion", format_double(cmd.distortion.max_distortion));
  csv.columns({"r_min", "achieved_distortion", "lossless_bound"});
  csv.row({format_double(solution.rate), format_double(solution.achieved_distortion),
           format_double(lossless_bound(cmd.pair))});
  const std::string csv_path = join_path(config.output_dir, "wz.csv");
  csv.write(csv_path);

  json report = channel_json(solution.test_channel);
  report["r_min"] = solution.rate;
  report["achieved_distortion"] = solution.achieved_distortion;
  report["reconstruction_map"] = solution.reconstruction_map;
  report["config_hash"] = config.config_hash;
  report["seed"] = config.seed;
  const std::string report_path = join_path(config.output_dir, "wz_solution.json");
  write_text(report_path, report.dump(2) + "\n");
  log << "wz: R_min = " << format_double(solution.rate) << "\n";
  return {csv_path, report_path};
}

void echo_experiment(CsvFile& csv, const ExperimentSpec& spec) {
  csv.echo("trials", std::to_string(spec.trials));
  csv.echo("mu_factor", format_double(spec.mu_factor));
  csv.echo("fit_ci_cap", format_double(spec.fit_ci_cap));
}

std::vector<std::string> run_simulate(const RunConfig& config, const SimulateCommand& cmd,
                                      std::ostream& log) {
  ExperimentSpec experiment = cmd.experiment;
  experiment.channels = resolve_channels(cmd.channels, experiment.network);
  const std::vector<ErrorEstimate> alpha = run_trials(experiment, 0);
  const std::vector<ErrorEstimate> beta = run_trials(experiment, 1);

  CsvFile estimates("simulate", config.config_hash, config.seed);
  echo_experiment(estimates, experiment);
  estimates.columns(
      {"k", "n", "hypothesis", "trials", "errors", "alpha_hat", "beta_hat", "ci_lo", "ci_hi"});
  auto emit = [&](const ErrorEstimate& e) {
    estimates.row({std::to_string(e.k), std::to_string(e.n), std::to_string(e.hypothesis),
                   std::to_string(e.trials), std::to_string(e.errors), e.hypothesis == 0
                       ? format_double(e.rate) : "",
                   e.hypothesis == 1 ? format_double(e.rate) : "", format_double(e.ci_lo),
                   format_double(e.ci_hi)});
  };
  for (const auto& e : alpha) emit(e);
  for (const auto& e : beta) emit(e);
  const std::string estimates_path = join_path(config.output_dir, "simulate_estimates.csv");
  estimates.write(estimates_path);

  CsvFile fits("simulate", config.config_hash, config.seed);
  echo_experiment(fits, experiment);
  fits.columns({"k", "slope", "intercept", "slope_ci_lo", "slope_ci_hi", "points"});
  for (int k = 1; k <= experiment.network.hops; ++k) {
    try {
      const ExponentFit fit = fit_exponent(beta, k, experiment.blocklengths, experiment.fit_ci_cap);
      fits.row({std::to_string(k), format_double(fit.slope), format_double(fit.intercept),
                format_double(fit.slope_ci_lo), format_double(fit.slope_ci_hi),
                std::to_string(fit.n_used.size())});
    } catch (const Error& e) {
      log << "simulate: center " << k << ": " << e.what() << "\n";
      fits.row({std::to_string(k), "", "", "", "", "0"});
    }
  }
  const std::string fits_path = join_path(config.output_dir, "simulate_fits.csv");
  fits.write(fits_path);
  log << "simulate: " << alpha.size() + beta.size() << " estimates\n";
  return {estimates_path, fits_path};
}

std::vector<std::string> run_sweep(const RunConfig& config, const SweepCommand& cmd,
                                   std::ostream& log) {
  ExperimentSpec experiment = cmd.experiment;
  experiment.channels = resolve_channels(cmd.channels, experiment.network);
  const SweepResult result = strong_converse_sweep(experiment);

  CsvFile tuning("sweep", config.config_hash, config.seed);
  echo_experiment(tuning, experiment);
  tuning.echo("tuning_trials", std::to_string(experiment.tuning_trials));
  tuning.columns({"k", "epsilon", "n", "slack_factor", "trials", "alpha_errors", "alpha_hat",
                  "alpha_ci_lo", "alpha_ci_hi", "beta_errors", "beta_hat"});
  for (const SweepRow& row : result.rows) {
    tuning.row({std::to_string(row.k), format_double(row.epsilon), std::to_string(row.n),
                format_double(row.slack_factor), std::to_string(row.alpha.trials),
                std::to_string(row.alpha.errors), format_double(row.alpha.rate),
                format_double(row.alpha.ci_lo), format_double(row.alpha.ci_hi),
                std::to_string(row.beta.errors), format_double(row.beta.rate)});
  }
  const std::string tuning_path = join_path(config.output_dir, "sweep_tuning.csv");
  tuning.write(tuning_path);

  CsvFile fits("sweep", config.config_hash, config.seed);
  echo_experiment(fits, experiment);
  fits.columns({"k", "epsilon", "exponent", "slope_ci_lo", "slope_ci_hi"});
  for (const SweepFit& fit : result.fits) {
    if (fit.fit.has_value()) {
      fits.row({std::to_string(fit.k), format_double(fit.epsilon),
                format_double(fit.fit->slope), format_double(fit.fit->slope_ci_lo),
                format_double(fit.fit->slope_ci_hi)});
    } else {
      fits.row({std::to_string(fit.k), format_double(fit.epsilon), "", "", ""});
      log << "sweep: center " << fit.k << " epsilon " << format_double(fit.epsilon) << ": "
          << fit.status << "\n";
    }
  }
  const std::string fits_path = join_path(config.output_dir, "sweep_fits.csv");
  fits.write(fits_path);
  log << "sweep: " << result.rows.size() << " tuned rows\n";
  return {tuning_path, fits_path};
}

std::vector<std::string> run_diagnose(const RunConfig& config, const DiagnoseCommand& cmd,
                                      std::ostream& log) {
  const std::vector<ConditionalPmf> channels = resolve_channels(cmd.channels, cmd.network);

  CsvFile summary("diagnose", config.config_hash, config.seed);
  summary.echo("enumeration_cap", std::to_string(cmd.enumeration_cap));
  summary.columns({"k", "n", "mu", "alpha_exact", "beta_exact", "delta", "delta_bound_ok",
                   "restriction_kl_error", "entropy_gap", "markov_gap_hop1", "chain_cmi",
                   "lemma1_iii_slack"});
  json fixture{{"tool", "khoplab"},
               {"config_hash", config.config_hash},
               {"seed", config.seed},
               {"records", json::array()}};
  for (int n : cmd.blocklengths) {
    const SchemeContext context(cmd.network, channels, n, config.seed);
    for (int k : cmd.centers) {
      const CenterDiagnostics d = analyze_center(context, k, std::nullopt, cmd.enumeration_cap);
      const double kl_error = std::abs(d.restriction_kl - (-std::log2(d.delta)));
      summary.row({std::to_string(k), std::to_string(n), format_double(d.mu),
                   format_double(d.alpha_exact), format_double(d.beta_exact),
                   format_double(d.delta), d.delta_bound_holds ? "1" : "0",
                   format_double(kl_error), format_double(d.entropy_gap),
                   format_double(d.hops.front().markov_gap), format_double(d.chain_cmi),
                   format_double(d.lemma1_iii_slack)});
      json record{{"k", k},
                  {"n", n},
                  {"mu", d.mu},
                  {"alpha_exact", d.alpha_exact},
                  {"beta_exact", d.beta_exact},
                  {"delta", d.delta},
                  {"acceptance_cardinality", d.acceptance_cardinality},
                  {"dk_cardinality", d.dk_cardinality},
                  {"entropy_gap", d.entropy_gap},
                  {"restriction_kl", d.restriction_kl},
                  {"chain_cmi", d.chain_cmi},
                  {"single_letter_kl", d.single_letter_kl},
                  {"delta_prime", d.delta_prime},
                  {"beta_exponent", d.beta_exponent},
                  {"lemma1_iii_slack", d.lemma1_iii_slack}};
      json hops = json::array();
      for (const HopLetterStats& h : d.hops) {
        hops.push_back(json{{"hop", h.hop},
                            {"h_message", h.h_message},
                            {"mi_u_prev", h.mi_u_prev},
                            {"mi_u_next", h.mi_u_next},
                            {"markov_gap", h.markov_gap}});
      }
      json lemma = json::array();
      for (const Lemma1Check& c : d.lemma1) {
        lemma.push_back(json{{"hop", c.hop},
                             {"rate_budget", c.rate_budget},
                             {"rate_slack", c.rate_slack},
                             {"floor_slack", c.floor_slack}});
      }
      record["hops"] = hops;
      record["lemma1"] = lemma;
      fixture["records"].push_back(record);
      log << "diagnose: k=" << k << " n=" << n << " delta=" << format_double(d.delta) << "\n";
    }
  }
  const std::string summary_path = join_path(config.output_dir, "diagnose_summary.csv");
  summary.write(summary_path);
  const std::string fixture_path = join_path(config.output_dir, "diagnose_fixture.json");
  write_text(fixture_path, fixture.dump(2) + "\n");
  return {summary_path, fixture_path};
}

}  // namespace

std::vector<std::string> run(const RunConfig& config, std::ostream& log) {
  std::filesystem::create_directories(config.output_dir);
  if (const auto* cmd = std::get_if<EtaCommand>(&config.payload)) {
    return run_eta(config, *cmd, log);
  }
  if (const auto* cmd = std::get_if<RegionCommand>(&config.payload)) {
    return run_region(config, *cmd, log);
  }
  if (const auto* cmd = std::get_if<WzCommand>(&config.payload)) {
    return run_wz(config, *cmd, log);
  }
  if (const auto* cmd = std::get_if<SimulateCommand>(&config.payload)) {
    return run_simulate(config, *cmd, log);
  }
  if (const auto* cmd = std::get_if<SweepCommand>(&config.payload)) {
    return run_sweep(config, *cmd, log);
  }
  if (const auto* cmd = std::get_if<DiagnoseCommand>(&config.payload)) {
    return run_diagnose(config, *cmd, log);
  }
  throw Error("cli", "unhandled command");
}

}  // namespace khoplab
