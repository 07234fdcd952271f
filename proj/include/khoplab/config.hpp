#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "khoplab/block.hpp"
#include "khoplab/network.hpp"
#include "khoplab/pmf.hpp"
#include "khoplab/simulate.hpp"
#include "khoplab/wyner_ziv.hpp"

namespace khoplab {

/// How the per-hop auxiliary channels are supplied: solved here at a margin
/// below each rate, loaded from a channels file emitted by the eta command,
/// or written out inline.
struct ChannelsSource {
  std::string mode = "eta";  ///< "eta" | "inline" | "file"
  double rate_margin = 0.02;
  int aux_card = 0;
  std::string path;
  std::vector<std::vector<std::vector<double>>> kernels;  ///< [hop][y_prev][u]
};

struct EtaCommand {
  JointPmf pair;
  std::vector<double> rates;
  int aux_card = 0;
  std::vector<double> lambdas;  ///< sweep grid; default filled when empty
};

struct RegionCommand {
  HopNetworkSpec network;
  int aux_card = 0;
  std::vector<double> lambdas;
};

struct WzCommand {
  JointPmf pair;
  DistortionSpec distortion;
  int s_card = 0;
};

struct SimulateCommand {
  ExperimentSpec experiment;
  ChannelsSource channels;
};

struct SweepCommand {
  ExperimentSpec experiment;
  ChannelsSource channels;
};

struct DiagnoseCommand {
  HopNetworkSpec network;
  ChannelsSource channels;
  std::vector<int> blocklengths;
  std::vector<int> centers;
  std::uint64_t enumeration_cap = kEnumerationCap;
  long trials = 0;  ///< optional Monte Carlo cross-check per (k, n)
};

struct RunConfig {
  std::string command;
  std::uint64_t seed = 1;
  std::string output_dir = ".";
  nlohmann::json normalized;  ///< parsed config with defaults filled
  std::uint64_t config_hash = 0;
  std::variant<EtaCommand, RegionCommand, WzCommand, SimulateCommand, SweepCommand,
               DiagnoseCommand>
      payload;
};

/// Parses and validates a config document. Every validation problem is
/// collected and reported together; unknown keys are rejected.
RunConfig parse_config(const std::string& text);

/// Canonical serialization of the parsed config (defaults filled, keys
/// sorted); parse(serialize(parse(x))) is the identity.
std::string serialize_config(const RunConfig& config);

/// Loads {"alphabets": [[labels]...], "probs": [row-major flat]} documents.
JointPmf pmf_from_json(const nlohmann::json& doc);
nlohmann::json pmf_to_json(const JointPmf& pmf);

/// Resolves the channel source against a network (solving or loading).
std::vector<ConditionalPmf> resolve_channels(const ChannelsSource& source,
                                             const HopNetworkSpec& network);

}  // namespace khoplab
