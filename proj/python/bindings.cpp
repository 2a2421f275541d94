#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "chartevo/config.hpp"
#include "chartevo/corpus_io.hpp"
#include "chartevo/preprocess.hpp"
#include "chartevo/search.hpp"
#include "chartevo/synth.hpp"

namespace py = pybind11;
using namespace chartevo;
using nlohmann::json;

namespace {

// JSON crosses the boundary as text; the Python wrapper handles dict <-> str.
json parse(const std::string& text) { return text.empty() ? json::object() : json::parse(text); }

PriceSeries series_from_py(const std::string& id, const std::vector<std::string>& dates,
                           const std::vector<double>& closes) {
  PriceSeries s;
  s.instrument_id = id;
  for (const auto& d : dates) s.dates.push_back(Date::parse(d));
  s.closes = closes;
  s.validate();
  return s;
}

py::array_t<double> chart_values(const Dataset& d) {
  py::array_t<double> out({d.size(), kChartSteps, kChartChannels});
  auto* p = out.mutable_data();
  for (const auto& c : d.charts) p = std::copy(c.values.begin(), c.values.end(), p);
  return out;
}

py::array_t<double> chart_returns(const Dataset& d, int k) {
  py::array_t<double> out(d.size());
  auto* p = out.mutable_data();
  for (const auto& c : d.charts) {
    const auto r = c.forward_return(k);
    *p++ = r ? *r : std::numeric_limits<double>::quiet_NaN();
  }
  return out;
}

AppConfig app_config(const std::string& text) {
  const json doc = parse(text);
  return resolve_config(&doc, {});
}

}  // namespace

PYBIND11_MODULE(_chartevo, m) {
  m.doc() = "chart-pattern search core";
  m.attr("__version__") = CHARTEVO_VERSION;

  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<FormatError>(m, "FormatError", PyExc_IOError);
  py::register_exception<StructuralError>(m, "StructuralError", PyExc_RuntimeError);

  m.def("penalty", &penalty, py::arg("match_count"), py::arg("alpha"));

  py::class_<Dataset>(m, "Dataset")
      .def_property_readonly("split", [](const Dataset& d) { return std::string(to_string(d.split)); })
      .def("__len__", &Dataset::size)
      .def("ids", [](const Dataset& d) {
        std::vector<std::string> ids;
        for (const auto& c : d.charts) ids.push_back(c.id());
        return ids;
      })
      .def("values", &chart_values, "charts as an (N, 32, 2) array")
      .def("returns", &chart_returns, py::arg("k"), "k-day log returns, NaN where absent")
      .def("limit_hit", [](const Dataset& d) {
        std::vector<bool> v;
        for (const auto& c : d.charts) v.push_back(c.limit_hit);
        return v;
      });

  py::class_<Corpus>(m, "Corpus")
      .def_readonly("training", &Corpus::training)
      .def_readonly("validation", &Corpus::validation)
      .def_readonly("test", &Corpus::test)
      .def("split", [](const Corpus& c, const std::string& s) { return c.at(parse_split(s)); });

  m.def("load_corpus", &load_corpus, py::arg("directory"));
  m.def("save_corpus", &save_corpus, py::arg("directory"), py::arg("corpus"));

  m.def(
      "_build_corpus",
      [](const std::vector<std::tuple<std::string, std::vector<std::string>, std::vector<double>>>&
             series,
         const std::string& config) {
        std::vector<PriceSeries> set;
        for (const auto& [id, dates, closes] : series) set.push_back(series_from_py(id, dates, closes));
        const AppConfig cfg = app_config(config);
        py::gil_scoped_release release;
        return build_corpus(set, cfg.preprocess, cfg.workers);
      },
      py::arg("series"), py::arg("config") = "");

  m.def(
      "_synth",
      [](const std::string& config) {
        const AppConfig cfg = app_config(config);
        const SynthOutput out = generate(cfg.synth);
        py::list series;
        for (const auto& s : out.series) {
          std::vector<std::string> dates;
          for (const auto& d : s.dates) dates.push_back(d.to_string());
          series.append(py::make_tuple(s.instrument_id, dates, s.closes));
        }
        return py::make_tuple(series, ground_truth_to_json(cfg.synth, out.ground_truth).dump());
      },
      py::arg("config") = "");

  py::class_<PhenotypeNetwork>(m, "Phenotype")
      .def_property_readonly("hidden_layer_count", &PhenotypeNetwork::hidden_layer_count)
      .def_property_readonly("expressed_connections", &PhenotypeNetwork::expressed_connections)
      .def("_to_json", [](const PhenotypeNetwork& n) { return n.to_json().dump(); })
      .def_static("_from_json",
                  [](const std::string& s) { return PhenotypeNetwork::from_json(parse(s)); })
      .def("matches", [](const PhenotypeNetwork& n, const Dataset& d) {
        const auto flags = forward(n, PackedDataset::pack(d, 1));
        return std::vector<bool>(flags.begin(), flags.end());
      });

  m.def(
      "_random_genome",
      [](std::uint64_t seed) {
        Rng rng(seed);
        InnovationTracker tracker;
        return CppnGenome::minimal(rng, tracker).to_json().dump();
      },
      py::arg("seed"));

  m.def(
      "_express",
      [](const std::string& genome, const std::string& substrate, const std::string& scaling,
         const std::string& activation) {
        return express(CppnGenome::from_json(parse(genome)), substrate_by_name(substrate),
                       parse_weight_scaling(scaling), parse_hidden_activation(activation));
      },
      py::arg("genome"), py::arg("substrate") = "network", py::arg("scaling") = "he",
      py::arg("activation") = "relu");

  m.def(
      "_fitness",
      [](const PhenotypeNetwork& net, const Dataset& data, int k, double alpha) {
        EvalConfig cfg;
        cfg.k = k;
        cfg.alpha = alpha;
        cfg.validate();
        return to_json(fitness(net, data, cfg)).dump();
      },
      py::arg("phenotype"), py::arg("dataset"), py::arg("k") = 20, py::arg("alpha") = 100000.0);

  m.def(
      "_run_search",
      [](const Corpus& corpus, const std::string& config) {
        const AppConfig cfg = app_config(config);
        SearchRun run;
        {
          py::gil_scoped_release release;
          run = run_search(corpus, cfg.evolution, cfg.eval, cfg.search);
        }
        std::ostringstream history;
        write_history_tsv(history, run.history);
        json j = to_json(run.selected);
        j["genome"] = run.selected.genome.to_json();
        j["history_tsv"] = history.str();
        j["results_row"] = results_row(cfg.search.run_name + "_" + std::to_string(cfg.eval.k),
                                       run.selected.scores);
        return std::make_pair(j.dump(), run.selected.phenotype);
      },
      py::arg("corpus"), py::arg("config") = "");
}
