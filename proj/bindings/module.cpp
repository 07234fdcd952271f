#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>
#include <vector>

#include "khoplab/config.hpp"
#include "khoplab/diagnose.hpp"
#include "khoplab/error.hpp"
#include "khoplab/eta.hpp"
#include "khoplab/info.hpp"
#include "khoplab/pmf.hpp"
#include "khoplab/run.hpp"
#include "khoplab/scheme.hpp"
#include "khoplab/typicality.hpp"
#include "khoplab/version.hpp"
#include "khoplab/wyner_ziv.hpp"

namespace py = pybind11;
using namespace khoplab;

namespace {

JointPmf pmf_from_lists(const std::vector<std::vector<std::string>>& alphabets,
                        const std::vector<double>& probs) {
  std::vector<Alphabet> axes;
  for (const auto& labels : alphabets) axes.emplace_back(labels);
  return JointPmf(std::move(axes), probs);
}

std::vector<std::vector<double>> kernel_rows(const ConditionalPmf& channel) {
  std::vector<std::vector<double>> rows(channel.from_size());
  for (std::size_t r = 0; r < channel.from_size(); ++r) {
    rows[r].resize(channel.to_size());
    for (std::size_t c = 0; c < channel.to_size(); ++c) rows[r][c] = channel.at(r, c);
  }
  return rows;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Exponent solvers, protocol simulation and exact small-n diagnostics "
            "for K-hop testing against independence";
  m.attr("__version__") = kVersion;

  py::register_exception<Error>(m, "KhoplabError");

  py::class_<JointPmf>(m, "JointPmf")
      .def(py::init(&pmf_from_lists), py::arg("alphabets"), py::arg("probs"))
      .def_property_readonly("rank", &JointPmf::rank)
      .def_property_readonly("probs", [](const JointPmf& p) { return p.mass(); })
      .def("marginal",
           [](const JointPmf& p, const std::vector<int>& keep) { return p.marginal(keep); })
      .def("__len__", [](const JointPmf& p) { return p.size(); });

  m.def("dsbs", &dsbs, py::arg("crossover"),
        "Doubly symmetric binary source with the given crossover");
  m.def("binary_markov_chain",
        [](double p01, double p12) {
          const Alphabet b = Alphabet::binary();
          const ConditionalPmf w1({b}, {b}, {1.0 - p01, p01, p01, 1.0 - p01});
          const ConditionalPmf w2({b}, {b}, {1.0 - p12, p12, p12, 1.0 - p12});
          return markov_chain(JointPmf({b}, {0.5, 0.5}), std::vector<ConditionalPmf>{w1, w2});
        },
        py::arg("p01"), py::arg("p12"),
        "Uniform binary chain Y0 - Y1 - Y2 with symmetric crossovers");

  m.def("entropy", &entropy, py::arg("pmf"));
  m.def("conditional_entropy",
        [](const JointPmf& p, const std::vector<int>& target, const std::vector<int>& given) {
          return conditional_entropy(p, target, given);
        },
        py::arg("pmf"), py::arg("target"), py::arg("given"));
  m.def("mutual_information",
        [](const JointPmf& p, const std::vector<int>& a, const std::vector<int>& b) {
          return mutual_information(p, a, b);
        },
        py::arg("pmf"), py::arg("a"), py::arg("b"));
  m.def("conditional_mutual_information",
        [](const JointPmf& p, const std::vector<int>& a, const std::vector<int>& b,
           const std::vector<int>& c) { return conditional_mutual_information(p, a, b, c); },
        py::arg("pmf"), py::arg("a"), py::arg("b"), py::arg("c"));
  m.def("kl_divergence", &kl_divergence, py::arg("p"), py::arg("q"));
  m.def("is_strongly_typical",
        [](const std::vector<std::vector<int>>& sequences, const JointPmf& p, double mu) {
          return is_strongly_typical(sequences, p, mu);
        },
        py::arg("sequences"), py::arg("pmf"), py::arg("mu"));

  m.def("eta",
        [](const JointPmf& pair, double rate, int aux_card) {
          EtaOptions options;
          options.aux_card = aux_card;
          const EtaPoint point = eta(pair, rate, options);
          return py::make_tuple(point.value, point.rate, kernel_rows(point.channel));
        },
        py::arg("pair"), py::arg("rate"), py::arg("aux_card") = 0,
        "Returns (value, rate_used, channel_rows)");
  m.def("eta_oracle", &eta_oracle, py::arg("pair"), py::arg("rate"), py::arg("grid_steps"),
        py::arg("aux_card") = 3);
  m.def("lossless_bound", &lossless_bound, py::arg("pair"));
  m.def("wyner_ziv_rmin",
        [](const JointPmf& pair, double max_distortion, int s_card) {
          WynerZivOptions options;
          options.s_card = s_card;
          const WynerZivSolution s =
              wyner_ziv_rmin(pair, hamming_distortion(pair.axis(0), max_distortion), options);
          py::dict out;
          out["rate"] = s.rate;
          out["achieved_distortion"] = s.achieved_distortion;
          out["test_channel"] = kernel_rows(s.test_channel);
          out["reconstruction_map"] = s.reconstruction_map;
          return out;
        },
        py::arg("pair"), py::arg("max_distortion"), py::arg("s_card") = 0,
        "Hamming-distortion R_min with the achieving channel and map");

  m.def("run_config",
        [](const std::string& config_json) {
          const RunConfig config = parse_config(config_json);
          std::ostringstream log;
          const std::vector<std::string> outputs = run(config, log);
          py::dict out;
          out["outputs"] = outputs;
          out["log"] = log.str();
          return out;
        },
        py::arg("config_json"),
        "Parses and executes a JSON config exactly like the command line tool");
}
