#include <CLI11.hpp>
#include <fstream>
#include <iostream>
#include <json.hpp>
#include <sstream>

#include "khoplab/error.hpp"
#include "khoplab/run.hpp"
#include "khoplab/version.hpp"

namespace {

using nlohmann::json;

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw khoplab::Error("cli", "cannot read file " + path);
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

json load_json(const std::string& path) {
  try {
    return json::parse(slurp(path));
  } catch (const json::exception& e) {
    throw khoplab::Error("cli", path + ": " + e.what());
  }
}

int execute(const json& doc) {
  const khoplab::RunConfig config = khoplab::parse_config(doc.dump());
  const std::vector<std::string> outputs = khoplab::run(config, std::cerr);
  for (const std::string& path : outputs) std::cout << path << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"khoplab: exponent solvers, protocol simulation and exact small-n "
               "diagnostics for K-hop testing against independence"};
  app.set_version_flag("--version", khoplab::kVersion);
  app.require_subcommand(1);

  // Shared flags.
  std::uint64_t seed = 1;
  std::string output_dir = ".";

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--seed", seed, "Random seed recorded in every output");
    sub->add_option("--out", output_dir, "Output directory");
  };

  // eta --pmf F --rates ... [--aux-card N] [--lambdas ...]
  std::string pmf_path;
  std::vector<double> rates;
  int aux_card = 0;
  std::vector<double> lambdas;
  CLI::App* eta = app.add_subcommand("eta", "Per-hop curve eta(R) and optimizing channels");
  eta->add_option("--pmf", pmf_path, "Pair pmf file (alphabets + row-major probs)")->required();
  eta->add_option("--rates", rates, "Rate budgets to solve")->required()->expected(-1);
  eta->add_option("--aux-card", aux_card, "Auxiliary cardinality (0 = |Y_prev| + 1)");
  eta->add_option("--lambdas", lambdas, "Descending Lagrangian grid")->expected(-1);
  add_common(eta);

  // wz --pmf F --distortion F --D x [--s-card N]
  std::string distortion_path;
  double max_distortion = 0.0;
  int s_card = 0;
  CLI::App* wz = app.add_subcommand("wz", "Wyner-Ziv rate R_min under a distortion budget");
  wz->add_option("--pmf", pmf_path, "Source pair pmf file over (X, Y)")->required();
  wz->add_option("--distortion", distortion_path, "Distortion spec file")->required();
  wz->add_option("--D", max_distortion, "Maximum allowed average distortion")->required();
  wz->add_option("--s-card", s_card, "Auxiliary cardinality (0 = |X| + 1)");
  add_common(wz);

  // config-driven commands
  std::string config_path;
  CLI::App* region = app.add_subcommand("region", "Theorem exponent region from eta curves");
  region->add_option("--config", config_path, "Config file")->required();
  CLI::App* simulate = app.add_subcommand("simulate", "Monte Carlo error estimation");
  simulate->add_option("--config", config_path, "Config file")->required();
  CLI::App* sweep = app.add_subcommand("sweep", "Strong-converse epsilon sweep");
  sweep->add_option("--config", config_path, "Config file")->required();
  CLI::App* diagnose = app.add_subcommand("diagnose", "Exact small-n converse diagnostics");
  diagnose->add_option("--config", config_path, "Config file")->required();
  add_common(region);
  add_common(simulate);
  add_common(sweep);
  add_common(diagnose);

  CLI11_PARSE(app, argc, argv);

  try {
    if (eta->parsed()) {
      json doc{{"command", "eta"}, {"seed", seed}, {"output_dir", output_dir},
               {"pmf", load_json(pmf_path)}, {"rates", rates}, {"aux_card", aux_card}};
      if (!lambdas.empty()) doc["lambdas"] = lambdas;
      return execute(doc);
    }
    if (wz->parsed()) {
      json doc{{"command", "wz"},
               {"seed", seed},
               {"output_dir", output_dir},
               {"pmf", load_json(pmf_path)},
               {"distortion", load_json(distortion_path)},
               {"max_distortion", max_distortion},
               {"s_card", s_card}};
      return execute(doc);
    }
    // Config file commands; command-line seed/out override the file when given.
    json doc = load_json(config_path);
    CLI::App* active = region->parsed() ? region
                       : simulate->parsed() ? simulate
                       : sweep->parsed() ? sweep
                                         : diagnose;
    doc["command"] = active->get_name();
    if (active->count("--seed")) doc["seed"] = seed;
    if (active->count("--out")) doc["output_dir"] = output_dir;
    if (!doc.contains("seed")) doc["seed"] = seed;
    if (!doc.contains("output_dir")) doc["output_dir"] = output_dir;
    return execute(doc);
  } catch (const khoplab::Error& error) {
    std::cerr << "error: " << error.what() << "\n";
    return error.subsystem() == "cli" ? 1 : 2;
  } catch (const std::exception& error) {
    std::cerr << "error: " << error.what() << "\n";
    return 2;
  }
}
