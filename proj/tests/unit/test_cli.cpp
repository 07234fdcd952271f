#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "khoplab/config.hpp"
#include "khoplab/error.hpp"
#include "khoplab/run.hpp"

using namespace khoplab;
using nlohmann::json;

namespace {

json dsbs_pmf_json(double p) {
  const double agree = (1.0 - p) / 2.0;
  const double differ = p / 2.0;
  json alphabets = json::array({json::array({"0", "1"}), json::array({"0", "1"})});
  return json{{"alphabets", alphabets}, {"probs", {agree, differ, differ, agree}}};
}

json chain_pmf_json(double p) {
  // Binary Markov chain with two symmetric crossover-p links.
  std::vector<double> mass;
  const double cross[2][2] = {{1.0 - p, p}, {p, 1.0 - p}};
  for (int y0 = 0; y0 < 2; ++y0) {
    for (int y1 = 0; y1 < 2; ++y1) {
      for (int y2 = 0; y2 < 2; ++y2) {
        mass.push_back(0.5 * cross[y0][y1] * cross[y1][y2]);
      }
    }
  }
  json alphabets =
      json::array({json::array({"0", "1"}), json::array({"0", "1"}), json::array({"0", "1"})});
  return json{{"alphabets", alphabets}, {"probs", mass}};
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

std::filesystem::path temp_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / "khoplab_test" / name;
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace

TEST_CASE("minimal eta config gets defaults filled") {
  json doc{{"command", "eta"}, {"pmf", dsbs_pmf_json(0.1)}, {"rates", {0.5}}};
  const RunConfig config = parse_config(doc.dump());
  CHECK(config.command == "eta");
  CHECK(config.seed == 1);
  CHECK(config.output_dir == ".");
  CHECK(config.normalized["aux_card"] == 0);
  CHECK(config.config_hash != 0);
}

TEST_CASE("validation reports every problem and names the field") {
  json doc{{"command", "eta"},
           {"pmf", dsbs_pmf_json(0.1)},
           {"rates", {-0.5, 0.3}},
           {"aux_card", -2},
           {"bogus_key", 1}};
  try {
    parse_config(doc.dump());
    FAIL("expected validation to fail");
  } catch (const Error& e) {
    const std::string what = e.what();
    CHECK(what.find("rates[0]") != std::string::npos);
    CHECK(what.find("aux_card") != std::string::npos);
    CHECK(what.find("bogus_key") != std::string::npos);
  }
}

TEST_CASE("malformed pmfs are rejected, not renormalized") {
  json bad_pmf{{"alphabets", json::array({json::array({"0", "1"})})}, {"probs", {0.5, 0.6}}};
  json doc{{"command", "eta"}, {"pmf", bad_pmf}, {"rates", {0.5}}};
  CHECK_THROWS_AS(parse_config(doc.dump()), Error);
}

TEST_CASE("simulate config round-trips through serialization") {
  json doc{{"command", "simulate"},
           {"seed", 9},
           {"output_dir", "."},
           {"network", json{{"pmf", chain_pmf_json(0.1)},
                            {"rates", {0.5, 0.5}},
                            {"epsilons", {0.05, 0.05}}}},
           {"channels", json{{"mode", "eta"}, {"rate_margin", 0.02}}},
           {"blocklengths", {8, 12}},
           {"trials", 100}};
  const RunConfig first = parse_config(doc.dump());
  const std::string canonical = serialize_config(first);
  const RunConfig second = parse_config(canonical);
  CHECK(serialize_config(second) == canonical);
  CHECK(second.config_hash == first.config_hash);
}

TEST_CASE("unknown command is rejected") {
  CHECK_THROWS_AS(parse_config(R"({"command": "frobnicate"})"), Error);
  CHECK_THROWS_AS(parse_config("not json at all"), Error);
}

TEST_CASE("region run emits K rows and reruns byte-identically") {
  const auto dir = temp_dir("region");
  json doc{{"command", "region"},
           {"seed", 4},
           {"output_dir", dir.string()},
           {"network", json{{"pmf", chain_pmf_json(0.1)},
                            {"rates", {0.5, 0.5}},
                            {"epsilons", {0.05, 0.05}}}},
           {"lambdas", {0.9, 0.7, 0.5, 0.3, 0.1}}};
  const RunConfig config = parse_config(doc.dump());
  std::ostringstream log;
  const auto outputs = run(config, log);
  REQUIRE_FALSE(outputs.empty());
  const std::string region_csv = read_file(outputs[0]);
  int rows = 0;
  std::istringstream lines(region_csv);
  std::string line;
  bool saw_header = false;
  while (std::getline(lines, line)) {
    if (line.rfind("#", 0) == 0) continue;
    if (!saw_header) {
      CHECK(line == "k,R,eta,theta_max");
      saw_header = true;
      continue;
    }
    ++rows;
  }
  CHECK(rows == 2);
  CHECK(region_csv.find("# seed=4") != std::string::npos);
  CHECK(region_csv.find("# config_hash=") != std::string::npos);

  std::ostringstream log2;
  run(config, log2);
  CHECK(read_file(outputs[0]) == region_csv);
}

TEST_CASE("eta run writes curve, points and channels") {
  const auto dir = temp_dir("eta");
  json doc{{"command", "eta"},
           {"seed", 2},
           {"output_dir", dir.string()},
           {"pmf", dsbs_pmf_json(0.1)},
           {"rates", {0.3, 0.5}},
           {"lambdas", {0.9, 0.6, 0.3, 0.1}}};
  std::ostringstream log;
  const auto outputs = run(parse_config(doc.dump()), log);
  REQUIRE(outputs.size() == 3);
  for (const auto& path : outputs) CHECK(std::filesystem::exists(path));
  const std::string points = read_file(outputs[1]);
  CHECK(points.find("R,eta,rate_used,hop") != std::string::npos);
}

TEST_CASE("simulate run respects channel files from the eta command") {
  const auto dir = temp_dir("chanfile");
  const std::string channels_path = (dir / "channels.json").string();
  {
    std::ofstream out(channels_path);
    out << json{{"channels",
                 json::array({json{{"kernel", {{0.89, 0.11}, {0.11, 0.89}}}},
                              json{{"kernel", {{0.89, 0.11}, {0.11, 0.89}}}}})}}
               .dump();
  }
  json doc{{"command", "simulate"},
           {"seed", 3},
           {"output_dir", dir.string()},
           {"network", json{{"pmf", chain_pmf_json(0.1)},
                            {"rates", {0.5, 0.5}},
                            {"epsilons", {0.05, 0.05}}}},
           {"channels", json{{"mode", "file"}, {"path", channels_path}}},
           {"blocklengths", {6, 8, 10, 12}},
           {"trials", 300}};
  std::ostringstream log;
  const auto outputs = run(parse_config(doc.dump()), log);
  REQUIRE(outputs.size() == 2);
  const std::string estimates = read_file(outputs[0]);
  CHECK(estimates.find("k,n,hypothesis,trials,errors,alpha_hat,beta_hat,ci_lo,ci_hi") !=
        std::string::npos);
  CHECK(estimates.find("# trials=300") != std::string::npos);
  CHECK(estimates.find("# mu_factor=1") != std::string::npos);
}

TEST_CASE("diagnose surfaces the enumeration cap with attribution") {
  const auto dir = temp_dir("cap");
  json doc{{"command", "diagnose"},
           {"seed", 5},
           {"output_dir", dir.string()},
           {"network", json{{"pmf", chain_pmf_json(0.1)},
                            {"rates", {0.5, 0.5}},
                            {"epsilons", {0.05, 0.05}}}},
           {"channels", json{{"mode", "eta"}}},
           {"blocklengths", {12}},
           {"enumeration_cap", 65536}};
  std::ostringstream log;
  try {
    run(parse_config(doc.dump()), log);
    FAIL("expected the cap to be exceeded");
  } catch (const Error& e) {
    CHECK(e.subsystem() == "diagnostics");
    CHECK(std::string(e.what()).find("65536") != std::string::npos);
  }
}

TEST_CASE("diagnose writes the summary and fixture for a small instance") {
  const auto dir = temp_dir("diag");
  json doc{{"command", "diagnose"},
           {"seed", 6},
           {"output_dir", dir.string()},
           {"network", json{{"pmf", chain_pmf_json(0.1)},
                            {"rates", {0.5, 0.5}},
                            {"epsilons", {0.05, 0.05}}}},
           {"channels", json::array({json{{"kernel", {{0.89, 0.11}, {0.11, 0.89}}}},
                                     json{{"kernel", {{0.89, 0.11}, {0.11, 0.89}}}}})},
           {"blocklengths", {4}},
           {"centers", {2}}};
  std::ostringstream log;
  const auto outputs = run(parse_config(doc.dump()), log);
  REQUIRE(outputs.size() == 2);
  const json fixture = json::parse(read_file(outputs[1]));
  REQUIRE(fixture["records"].size() == 1);
  CHECK(fixture["records"][0]["delta"].get<double>() > 0.0);
  CHECK(fixture["records"][0]["lemma1"].size() == 2);
}
