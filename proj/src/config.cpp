#include "khoplab/config.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "khoplab/error.hpp"
#include "khoplab/csv.hpp"
#include "khoplab/eta.hpp"

namespace khoplab {

namespace {

using nlohmann::json;

struct Collector {
  std::vector<std::string> errors;

  void add(const std::string& message) { errors.push_back(message); }
  void finish() const {
    if (errors.empty()) return;
    std::string joined = "invalid config:";
    for (const auto& e : errors) joined += "\n  - " + e;
    throw Error("cli", joined);
  }
};

void check_keys(const json& obj, const std::set<std::string>& allowed, const std::string& where,
                Collector& errors) {
  for (const auto& item : obj.items()) {
    if (!allowed.count(item.key())) {
      errors.add(where + ": unknown key '" + item.key() + "'");
    }
  }
}

bool has(const json& obj, const std::string& key) { return obj.contains(key); }

double get_number(const json& obj, const std::string& key, const std::string& where,
                  Collector& errors, double fallback, bool required = false) {
  if (!has(obj, key)) {
    if (required) errors.add(where + ": missing required field '" + key + "'");
    return fallback;
  }
  if (!obj[key].is_number()) {
    errors.add(where + "." + key + ": expected a number");
    return fallback;
  }
  return obj[key].get<double>();
}

long get_integer(const json& obj, const std::string& key, const std::string& where,
                 Collector& errors, long fallback, bool required = false) {
  if (!has(obj, key)) {
    if (required) errors.add(where + ": missing required field '" + key + "'");
    return fallback;
  }
  if (!obj[key].is_number_integer()) {
    errors.add(where + "." + key + ": expected an integer");
    return fallback;
  }
  return obj[key].get<long>();
}

std::vector<double> get_number_list(const json& obj, const std::string& key,
                                    const std::string& where, Collector& errors,
                                    bool required = false) {
  std::vector<double> out;
  if (!has(obj, key)) {
    if (required) errors.add(where + ": missing required field '" + key + "'");
    return out;
  }
  if (!obj[key].is_array()) {
    errors.add(where + "." + key + ": expected an array of numbers");
    return out;
  }
  for (const auto& v : obj[key]) {
    if (!v.is_number()) {
      errors.add(where + "." + key + ": expected an array of numbers");
      return {};
    }
    out.push_back(v.get<double>());
  }
  return out;
}

std::optional<JointPmf> parse_pmf(const json& doc, const std::string& where, Collector& errors) {
  if (!doc.is_object()) {
    errors.add(where + ": expected a pmf object");
    return std::nullopt;
  }
  check_keys(doc, {"alphabets", "probs"}, where, errors);
  if (!has(doc, "alphabets") || !doc["alphabets"].is_array() || doc["alphabets"].empty()) {
    errors.add(where + ".alphabets: expected a nonempty array of label arrays");
    return std::nullopt;
  }
  std::vector<Alphabet> axes;
  for (const auto& labels : doc["alphabets"]) {
    if (!labels.is_array() || labels.empty()) {
      errors.add(where + ".alphabets: each alphabet must be a nonempty label array");
      return std::nullopt;
    }
    std::vector<std::string> symbols;
    for (const auto& label : labels) {
      symbols.push_back(label.is_string() ? label.get<std::string>() : label.dump());
    }
    try {
      axes.emplace_back(std::move(symbols));
    } catch (const Error& e) {
      errors.add(where + ".alphabets: " + e.what());
      return std::nullopt;
    }
  }
  const std::vector<double> probs = get_number_list(doc, "probs", where, errors, true);
  if (probs.empty()) return std::nullopt;
  try {
    return JointPmf(std::move(axes), probs);
  } catch (const Error& e) {
    errors.add(where + ": malformed pmf: " + e.what());
    return std::nullopt;
  }
}

std::optional<HopNetworkSpec> parse_network(const json& doc, const std::string& where,
                                            Collector& errors) {
  if (!doc.is_object()) {
    errors.add(where + ": expected a network object");
    return std::nullopt;
  }
  check_keys(doc, {"pmf", "rates", "epsilons"}, where, errors);
  auto pmf = parse_pmf(doc.value("pmf", json()), where + ".pmf", errors);
  const std::vector<double> rates = get_number_list(doc, "rates", where, errors, true);
  const std::vector<double> epsilons = get_number_list(doc, "epsilons", where, errors, true);
  if (!pmf.has_value() || rates.empty() || epsilons.empty()) return std::nullopt;
  for (std::size_t i = 0; i < rates.size(); ++i) {
    if (rates[i] < 0.0) errors.add(where + ".rates[" + std::to_string(i) + "]: must be nonnegative");
  }
  for (std::size_t i = 0; i < epsilons.size(); ++i) {
    if (epsilons[i] < 0.0 || epsilons[i] >= 1.0) {
      errors.add(where + ".epsilons[" + std::to_string(i) + "]: must lie in [0, 1)");
    }
  }
  HopNetworkSpec spec;
  spec.hops = static_cast<int>(rates.size());
  spec.alphabets = pmf->axes();
  spec.p_joint = *pmf;
  spec.rates = rates;
  spec.epsilons = epsilons;
  if (static_cast<int>(pmf->axes().size()) != spec.hops + 1) {
    errors.add(where + ": pmf needs K + 1 = " + std::to_string(spec.hops + 1) + " axes, has " +
               std::to_string(pmf->axes().size()));
    return std::nullopt;
  }
  return spec;
}

ChannelsSource parse_channels(const json& doc, const std::string& where, Collector& errors) {
  ChannelsSource source;
  if (doc.is_null()) return source;  // defaults: solved here
  if (doc.is_array()) {
    source.mode = "inline";
    for (const auto& entry : doc) {
      if (!entry.is_object() || !entry.contains("kernel") || !entry["kernel"].is_array()) {
        errors.add(where + ": inline channels need objects with a 'kernel' row array");
        return source;
      }
      std::vector<std::vector<double>> kernel;
      for (const auto& row : entry["kernel"]) {
        std::vector<double> r;
        for (const auto& v : row) {
          if (!v.is_number()) {
            errors.add(where + ": kernel rows must be numbers");
            return source;
          }
          r.push_back(v.get<double>());
        }
        kernel.push_back(std::move(r));
      }
      source.kernels.push_back(std::move(kernel));
    }
    return source;
  }
  if (!doc.is_object()) {
    errors.add(where + ": expected a channels object or array");
    return source;
  }
  check_keys(doc, {"mode", "rate_margin", "aux_card", "path"}, where, errors);
  source.mode = doc.value("mode", std::string("eta"));
  if (source.mode != "eta" && source.mode != "file") {
    errors.add(where + ".mode: expected 'eta' or 'file'");
  }
  source.rate_margin = get_number(doc, "rate_margin", where, errors, 0.02);
  source.aux_card = static_cast<int>(get_integer(doc, "aux_card", where, errors, 0));
  source.path = doc.value("path", std::string());
  if (source.mode == "file" && source.path.empty()) {
    errors.add(where + ": mode 'file' needs a 'path'");
  }
  if (source.rate_margin < 0.0) errors.add(where + ".rate_margin: must be nonnegative");
  return source;
}

json channels_to_json(const ChannelsSource& source) {
  if (source.mode == "inline") {
    json arr = json::array();
    for (const auto& kernel : source.kernels) {
      arr.push_back(json{{"kernel", kernel}});
    }
    return arr;
  }
  json obj{{"mode", source.mode}, {"rate_margin", source.rate_margin},
           {"aux_card", source.aux_card}};
  if (!source.path.empty()) obj["path"] = source.path;
  return obj;
}

ExperimentSpec parse_experiment(const json& doc, Collector& errors, ChannelsSource& channels,
                                bool needs_sweep) {
  ExperimentSpec spec;
  auto network = parse_network(doc.value("network", json()), "network", errors);
  channels = parse_channels(doc.value("channels", json()), "channels", errors);
  const std::vector<double> blocklengths = get_number_list(doc, "blocklengths", "config", errors, true);
  for (std::size_t i = 0; i < blocklengths.size(); ++i) {
    if (blocklengths[i] < 1 || blocklengths[i] != std::floor(blocklengths[i])) {
      errors.add("blocklengths[" + std::to_string(i) + "]: must be a positive integer");
    } else {
      spec.blocklengths.push_back(static_cast<int>(blocklengths[i]));
    }
  }
  for (std::size_t i = 0; i + 1 < spec.blocklengths.size(); ++i) {
    if (spec.blocklengths[i] >= spec.blocklengths[i + 1]) {
      errors.add("blocklengths: must be strictly increasing");
      break;
    }
  }
  spec.trials = get_integer(doc, "trials", "config", errors, 0, true);
  if (spec.trials < 1) errors.add("trials: must be >= 1");
  spec.mu_factor = get_number(doc, "mu_factor", "config", errors, 1.0);
  if (!(spec.mu_factor > 0.0)) errors.add("mu_factor: must be positive");
  spec.fit_ci_cap = get_number(doc, "fit_ci_cap", "config", errors, 2.0);
  if (!(spec.fit_ci_cap > 0.0)) errors.add("fit_ci_cap: must be positive");
  spec.tuning_trials = get_integer(doc, "tuning_trials", "config", errors, 20000);
  if (spec.tuning_trials < 100) errors.add("tuning_trials: must be >= 100");
  spec.epsilon_sweep = get_number_list(doc, "epsilon_sweep", "config", errors, needs_sweep);
  for (std::size_t i = 0; i < spec.epsilon_sweep.size(); ++i) {
    if (spec.epsilon_sweep[i] <= 0.0 || spec.epsilon_sweep[i] >= 1.0) {
      errors.add("epsilon_sweep[" + std::to_string(i) + "]: must lie in (0, 1)");
    }
  }
  if (network.has_value()) spec.network = *network;
  return spec;
}

json experiment_to_json(const ExperimentSpec& spec, const ChannelsSource& channels,
                        bool with_sweep) {
  json doc;
  doc["network"] = {{"pmf", pmf_to_json(spec.network.p_joint)},
                    {"rates", spec.network.rates},
                    {"epsilons", spec.network.epsilons}};
  doc["channels"] = channels_to_json(channels);
  doc["blocklengths"] = spec.blocklengths;
  doc["trials"] = spec.trials;
  doc["mu_factor"] = spec.mu_factor;
  doc["fit_ci_cap"] = spec.fit_ci_cap;
  doc["tuning_trials"] = spec.tuning_trials;
  if (with_sweep) doc["epsilon_sweep"] = spec.epsilon_sweep;
  return doc;
}

}  // namespace

JointPmf pmf_from_json(const nlohmann::json& doc) {
  Collector errors;
  auto pmf = parse_pmf(doc, "pmf", errors);
  errors.finish();
  return *pmf;
}

nlohmann::json pmf_to_json(const JointPmf& pmf) {
  json alphabets = json::array();
  for (const auto& axis : pmf.axes()) alphabets.push_back(axis.labels());
  return json{{"alphabets", alphabets}, {"probs", pmf.mass()}};
}

std::vector<ConditionalPmf> resolve_channels(const ChannelsSource& source,
                                             const HopNetworkSpec& network) {
  std::vector<ConditionalPmf> channels;
  if (source.mode == "eta") {
    for (int hop = 1; hop <= network.hops; ++hop) {
      EtaOptions options;
      options.aux_card = source.aux_card;
      const double target =
          std::max(0.0, network.rates[static_cast<std::size_t>(hop - 1)] - source.rate_margin);
      channels.push_back(eta(network.hop_pair(hop), target, options).channel);
    }
    return channels;
  }
  std::vector<std::vector<std::vector<double>>> kernels = source.kernels;
  if (source.mode == "file") {
    std::ifstream in(source.path);
    if (!in) throw Error("cli", "channels file does not exist: " + source.path);
    json doc;
    try {
      in >> doc;
    } catch (const json::exception& e) {
      throw Error("cli", "channels file " + source.path + ": " + e.what());
    }
    if (!doc.contains("channels") || !doc["channels"].is_array()) {
      throw Error("cli", "channels file " + source.path + " needs a 'channels' array");
    }
    Collector errors;
    const ChannelsSource inline_source = parse_channels(doc["channels"], "channels", errors);
    errors.finish();
    kernels = inline_source.kernels;
  }
  if (static_cast<int>(kernels.size()) != network.hops) {
    throw Error("cli", "need one channel kernel per hop (" + std::to_string(network.hops) +
                           "), got " + std::to_string(kernels.size()));
  }
  for (int hop = 1; hop <= network.hops; ++hop) {
    const auto& rows = kernels[static_cast<std::size_t>(hop - 1)];
    const Alphabet& from = network.alphabets[static_cast<std::size_t>(hop - 1)];
    if (static_cast<int>(rows.size()) != from.size()) {
      throw Error("cli", "channel " + std::to_string(hop) + ": need one row per input symbol");
    }
    const std::size_t aux = rows.front().size();
    std::vector<double> flat;
    for (const auto& row : rows) {
      if (row.size() != aux) {
        throw Error("cli", "channel " + std::to_string(hop) + ": ragged kernel rows");
      }
      flat.insert(flat.end(), row.begin(), row.end());
    }
    channels.emplace_back(std::vector<Alphabet>{from},
                          std::vector<Alphabet>{Alphabet::indexed(static_cast<int>(aux), "u")},
                          std::move(flat));
  }
  return channels;
}

RunConfig parse_config(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::exception& e) {
    throw Error("cli", std::string("config is not valid JSON: ") + e.what());
  }
  if (!doc.is_object()) throw Error("cli", "config must be a JSON object");

  Collector errors;
  RunConfig config;
  if (!has(doc, "command") || !doc["command"].is_string()) {
    errors.add("config: missing required string field 'command'");
    errors.finish();
  }
  config.command = doc["command"].get<std::string>();
  const long seed = get_integer(doc, "seed", "config", errors, 1);
  if (seed < 0) errors.add("seed: must be nonnegative");
  config.seed = static_cast<std::uint64_t>(seed);
  config.output_dir = doc.value("output_dir", std::string("."));

  const std::set<std::string> common{"command", "seed", "output_dir"};
  json normalized{{"command", config.command}, {"seed", seed}, {"output_dir", config.output_dir}};

  if (config.command == "eta") {
    std::set<std::string> allowed = common;
    allowed.insert({"pmf", "rates", "aux_card", "lambdas"});
    check_keys(doc, allowed, "config", errors);
    EtaCommand cmd;
    auto pmf = parse_pmf(doc.value("pmf", json()), "pmf", errors);
    cmd.rates = get_number_list(doc, "rates", "config", errors, true);
    for (std::size_t i = 0; i < cmd.rates.size(); ++i) {
      if (cmd.rates[i] < 0.0) errors.add("rates[" + std::to_string(i) + "]: must be nonnegative");
    }
    cmd.aux_card = static_cast<int>(get_integer(doc, "aux_card", "config", errors, 0));
    if (cmd.aux_card < 0) errors.add("aux_card: must be >= 0 (0 = default)");
    cmd.lambdas = get_number_list(doc, "lambdas", "config", errors, false);
    errors.finish();
    if (pmf->rank() != 2) throw Error("cli", "eta needs a two-axis pmf over (Y_prev, Y_next)");
    cmd.pair = *pmf;
    normalized["pmf"] = pmf_to_json(cmd.pair);
    normalized["rates"] = cmd.rates;
    normalized["aux_card"] = cmd.aux_card;
    if (!cmd.lambdas.empty()) normalized["lambdas"] = cmd.lambdas;
    config.payload = std::move(cmd);
  } else if (config.command == "region") {
    std::set<std::string> allowed = common;
    allowed.insert({"network", "aux_card", "lambdas"});
    check_keys(doc, allowed, "config", errors);
    RegionCommand cmd;
    auto network = parse_network(doc.value("network", json()), "network", errors);
    cmd.aux_card = static_cast<int>(get_integer(doc, "aux_card", "config", errors, 0));
    cmd.lambdas = get_number_list(doc, "lambdas", "config", errors, false);
    errors.finish();
    cmd.network = *network;
    normalized["network"] = {{"pmf", pmf_to_json(cmd.network.p_joint)},
                             {"rates", cmd.network.rates},
                             {"epsilons", cmd.network.epsilons}};
    normalized["aux_card"] = cmd.aux_card;
    if (!cmd.lambdas.empty()) normalized["lambdas"] = cmd.lambdas;
    config.payload = std::move(cmd);
  } else if (config.command == "wz") {
    std::set<std::string> allowed = common;
    allowed.insert({"pmf", "distortion", "max_distortion", "s_card"});
    check_keys(doc, allowed, "config", errors);
    WzCommand cmd;
    auto pmf = parse_pmf(doc.value("pmf", json()), "pmf", errors);
    const json dist = doc.value("distortion", json());
    const double budget = get_number(doc, "max_distortion", "config", errors, 0.0, true);
    if (budget < 0.0) errors.add("max_distortion: must be nonnegative");
    cmd.s_card = static_cast<int>(get_integer(doc, "s_card", "config", errors, 0));
    if (!dist.is_object()) {
      errors.add("distortion: expected an object with 'reconstruction' and 'table' or 'hamming'");
      errors.finish();
    }
    check_keys(dist, {"reconstruction", "table", "hamming"}, "distortion", errors);
    errors.finish();
    if (pmf->rank() != 2) throw Error("cli", "wz needs a two-axis pmf over (X, Y)");
    cmd.pair = *pmf;
    if (dist.value("hamming", false)) {
      cmd.distortion = hamming_distortion(cmd.pair.axis(0), budget);
    } else {
      Collector derr;
      std::vector<std::string> labels;
      for (const auto& l : dist.value("reconstruction", json::array())) {
        labels.push_back(l.is_string() ? l.get<std::string>() : l.dump());
      }
      if (labels.empty()) derr.add("distortion.reconstruction: nonempty label array required");
      std::vector<double> table;
      try {
        for (const auto& row : dist.value("table", json::array())) {
          for (const auto& v : row) table.push_back(v.get<double>());
        }
      } catch (const json::exception&) {
        derr.add("distortion.table: expected nested arrays of numbers");
      }
      derr.finish();
      cmd.distortion = DistortionSpec{Alphabet(std::move(labels)), std::move(table), budget};
    }
    cmd.distortion.max_distortion = budget;
    normalized["pmf"] = pmf_to_json(cmd.pair);
    normalized["distortion"] = dist;
    normalized["max_distortion"] = budget;
    normalized["s_card"] = cmd.s_card;
    config.payload = std::move(cmd);
  } else if (config.command == "simulate" || config.command == "sweep") {
    std::set<std::string> allowed = common;
    allowed.insert({"network", "channels", "blocklengths", "trials", "mu_factor", "fit_ci_cap",
                    "tuning_trials", "epsilon_sweep"});
    check_keys(doc, allowed, "config", errors);
    ChannelsSource channels;
    ExperimentSpec experiment = parse_experiment(doc, errors, channels, config.command == "sweep");
    experiment.seed = config.seed;
    errors.finish();
    const json echo = experiment_to_json(experiment, channels, config.command == "sweep");
    for (const auto& item : echo.items()) normalized[item.key()] = item.value();
    if (config.command == "simulate") {
      config.payload = SimulateCommand{std::move(experiment), std::move(channels)};
    } else {
      config.payload = SweepCommand{std::move(experiment), std::move(channels)};
    }
  } else if (config.command == "diagnose") {
    std::set<std::string> allowed = common;
    allowed.insert({"network", "channels", "blocklengths", "centers", "enumeration_cap", "trials"});
    check_keys(doc, allowed, "config", errors);
    DiagnoseCommand cmd;
    auto network = parse_network(doc.value("network", json()), "network", errors);
    cmd.channels = parse_channels(doc.value("channels", json()), "channels", errors);
    const std::vector<double> ns = get_number_list(doc, "blocklengths", "config", errors, true);
    for (double v : ns) {
      if (v < 1 || v != std::floor(v)) {
        errors.add("blocklengths: must be positive integers");
      } else {
        cmd.blocklengths.push_back(static_cast<int>(v));
      }
    }
    const std::vector<double> centers = get_number_list(doc, "centers", "config", errors, false);
    for (double v : centers) cmd.centers.push_back(static_cast<int>(v));
    const long cap = get_integer(doc, "enumeration_cap", "config", errors,
                                 static_cast<long>(kEnumerationCap));
    if (cap < 1) errors.add("enumeration_cap: must be positive");
    cmd.enumeration_cap = static_cast<std::uint64_t>(cap);
    cmd.trials = get_integer(doc, "trials", "config", errors, 0);
    if (cmd.trials < 0) errors.add("trials: must be nonnegative");
    errors.finish();
    cmd.network = *network;
    if (cmd.centers.empty()) {
      for (int k = 1; k <= cmd.network.hops; ++k) cmd.centers.push_back(k);
    }
    for (int k : cmd.centers) {
      if (k < 1 || k > cmd.network.hops) throw Error("cli", "centers: out of range");
    }
    normalized["network"] = {{"pmf", pmf_to_json(cmd.network.p_joint)},
                             {"rates", cmd.network.rates},
                             {"epsilons", cmd.network.epsilons}};
    normalized["channels"] = channels_to_json(cmd.channels);
    normalized["blocklengths"] = cmd.blocklengths;
    normalized["centers"] = cmd.centers;
    normalized["enumeration_cap"] = cmd.enumeration_cap;
    normalized["trials"] = cmd.trials;
    config.payload = std::move(cmd);
  } else {
    throw Error("cli", "unknown command '" + config.command +
                           "' (expected eta | region | wz | simulate | sweep | diagnose)");
  }

  config.normalized = normalized;
  config.config_hash = fnv1a64(normalized.dump());
  return config;
}

std::string serialize_config(const RunConfig& config) { return config.normalized.dump(2) + "\n"; }

}  // namespace khoplab
