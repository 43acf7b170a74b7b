// Copyright 2026 The FEDS Lab Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//    http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <nlohmann/json.hpp>

#include "feds/errors.hpp"
#include "feds/experiment.hpp"

namespace py = pybind11;
namespace fs = std::filesystem;

namespace {

// CharGrid <-> (|A|, L) float64 array.
py::array_t<double> grid_to_array(const feds::CharGrid& g) {
  py::array_t<double> out({g.alphabet_size(), g.length_capacity()});
  auto v = out.mutable_unchecked<2>();
  for (std::size_t s = 0; s < g.alphabet_size(); ++s)
    for (std::size_t p = 0; p < g.length_capacity(); ++p) v(s, p) = g.at(s, p);
  return out;
}

feds::CharGrid array_to_grid(const py::array_t<double, py::array::c_style | py::array::forcecast>& a) {
  if (a.ndim() != 2) throw feds::ShapeError("expected a 2-D (|A|, L) array");
  auto v = a.unchecked<2>();
  feds::CharGrid g(static_cast<std::size_t>(a.shape(0)), static_cast<std::size_t>(a.shape(1)));
  for (py::ssize_t s = 0; s < a.shape(0); ++s)
    for (py::ssize_t p = 0; p < a.shape(1); ++p) g.at(s, p) = v(s, p);
  return g;
}

py::array_t<double> image_to_array(const feds::WordImage& img) {
  py::array_t<double> out({img.height, img.width});
  std::copy(img.pixels.begin(), img.pixels.end(), out.mutable_data());
  return out;
}

feds::WordImage array_to_image(const py::array_t<double, py::array::c_style | py::array::forcecast>& a) {
  if (a.ndim() != 2) throw feds::ShapeError("expected a 2-D (H, W) image");
  feds::WordImage img;
  img.height = static_cast<std::size_t>(a.shape(0));
  img.width = static_cast<std::size_t>(a.shape(1));
  img.pixels.assign(a.data(), a.data() + a.size());
  return img;
}

py::dict report_to_dict(const feds::MetricsReport& r) {
  py::dict d;
  d["dataset_id"] = r.dataset_id;
  d["n_samples"] = r.n_samples;
  d["accuracy"] = r.accuracy;
  d["ned"] = r.ned;
  d["ted"] = r.ted;
  py::list rows;
  for (const auto& row : r.rows) rows.append(py::make_tuple(row.index, row.gt, row.pred, row.ed));
  d["rows"] = rows;
  return d;
}

feds::ExperimentConfig parse_config(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text.empty() ? std::string("{}") : text);
  } catch (const nlohmann::json::exception& e) {
    throw feds::ConfigError(std::string("malformed config: ") + e.what());
  }
  return feds::config_from_json(j);
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Filtered learned edit-distance post-tuning (C++ core)";

  // Registered base first: later translators are tried first.
  auto base_error = py::register_exception<feds::Error>(m, "FedsError", PyExc_RuntimeError);
  py::register_exception<feds::ConfigError>(m, "ConfigError", base_error.ptr());
  py::register_exception<feds::IoError>(m, "IoError", base_error.ptr());

  py::class_<feds::Alphabet>(m, "Alphabet")
      .def(py::init<std::string>(), py::arg("chars"))
      .def_static("default", &feds::Alphabet::default_alphabet)
      .def_property_readonly("chars", &feds::Alphabet::chars)
      .def("__len__", &feds::Alphabet::size)
      .def("index_of", &feds::Alphabet::index_of);

  m.def("edit_distance", &feds::edit_distance, py::arg("a"), py::arg("b"));
  m.def(
      "encode_one_hot",
      [](const std::string& word, const feds::Alphabet& a, std::size_t length) {
        return grid_to_array(feds::encode_one_hot(word, a, length));
      },
      py::arg("word"), py::arg("alphabet"), py::arg("length_capacity"));
  m.def(
      "decode_greedy",
      [](const py::array_t<double, py::array::c_style | py::array::forcecast>& grid, const feds::Alphabet& a) {
        return feds::decode_greedy(array_to_grid(grid), a);
      },
      py::arg("grid"), py::arg("alphabet"));
  m.def(
      "evaluate_set",
      [](const std::vector<std::string>& preds, const std::vector<std::string>& gts) {
        return report_to_dict(feds::evaluate_set(preds, gts));
      },
      py::arg("preds"), py::arg("gts"));
  m.def("filter_value", py::overload_cast<double, double, double>(&feds::filter_value), py::arg("e"),
        py::arg("e_hat"), py::arg("lam"));
  m.def("gate_open", &feds::gate_open, py::arg("e"), py::arg("e_hat"), py::arg("lam"));
  m.def("relative_ted_improvement", &feds::relative_ted_improvement, py::arg("ted_base"), py::arg("ted_tuned"));

  // Config crosses the boundary as JSON text.
  m.def(
      "normalize_config", [](const std::string& text) { return feds::config_to_json(parse_config(text)).dump(); },
      py::arg("config_json"), "Fill in defaults and validate; returns JSON text.");

  m.def(
      "sample_corpus",
      [](const std::string& config_json) {
        feds::Corpus c = feds::sample_corpus(parse_config(config_json).data);
        py::list labels, images;
        for (const auto& s : c.samples) {
          labels.append(s.label);
          images.append(image_to_array(s));
        }
        py::dict d;
        d["labels"] = labels;
        d["images"] = images;
        d["train"] = c.train;
        d["val"] = c.val;
        d["test"] = c.test;
        return d;
      },
      py::arg("config_json") = "");

  py::class_<feds::RecognizerNet>(m, "Recognizer")
      .def_static("load", &feds::RecognizerNet::load, py::arg("path"))
      .def(
          "recognize",
          [](const feds::RecognizerNet& net, const py::array_t<double, py::array::c_style | py::array::forcecast>& img) {
            return grid_to_array(feds::recognize(array_to_image(img), net));
          },
          py::arg("image"))
      .def("save", &feds::RecognizerNet::save, py::arg("path"));

  py::class_<feds::SurrogateNet>(m, "Surrogate")
      .def_static("load", &feds::SurrogateNet::load, py::arg("path"))
      .def(
          "distance",
          [](const feds::SurrogateNet& net, const py::array_t<double, py::array::c_style | py::array::forcecast>& z,
             const py::array_t<double, py::array::c_style | py::array::forcecast>& y) {
            return feds::surrogate_distance(array_to_grid(z), array_to_grid(y), net).item();
          },
          py::arg("z_hat"), py::arg("y_hat"));

  // The long-running commands release the GIL.
  m.def(
      "gen_data", [](const std::string& cfg, const fs::path& out) { feds::command_gen_data(parse_config(cfg), out); },
      py::arg("config_json"), py::arg("out_dir"));
  m.def(
      "train_baseline",
      [](const std::string& cfg, const fs::path& data, const fs::path& out) {
        feds::ExperimentConfig c = parse_config(cfg);
        feds::MetricsReport r;
        {
          py::gil_scoped_release release;
          r = feds::command_train_baseline(c, data, out);
        }
        return report_to_dict(r);
      },
      py::arg("config_json"), py::arg("data_dir"), py::arg("out_dir"));
  m.def(
      "tune",
      [](const std::string& cfg, const fs::path& data, const fs::path& init, const fs::path& out) {
        feds::ExperimentConfig c = parse_config(cfg);
        py::gil_scoped_release release;
        feds::command_tune(c, data, init, out);
      },
      py::arg("config_json"), py::arg("data_dir"), py::arg("init_checkpoint"), py::arg("out_dir"));
  m.def(
      "evaluate",
      [](const fs::path& ckpt, const fs::path& data, const std::string& split, const fs::path& out,
         std::optional<fs::path> baseline) {
        return report_to_dict(feds::command_evaluate(ckpt, data, split, out, baseline));
      },
      py::arg("checkpoint"), py::arg("data_dir"), py::arg("split"), py::arg("out_dir"),
      py::arg("baseline") = py::none());
  m.def(
      "scatter",
      [](const fs::path& log, std::size_t first, std::size_t last, double lambda, const fs::path& out) {
        feds::Scatter s = feds::command_scatter(log, first, last, lambda, out);
        py::dict d;
        d["rows"] = s.rows.size();
        d["in_band_fraction"] = feds::in_band_fraction(s);
        return d;
      },
      py::arg("log_csv"), py::arg("first_epoch"), py::arg("last_epoch"), py::arg("lam"), py::arg("out_csv"));
  m.def(
      "read_log",
      [](const fs::path& path) {
        py::list rows;
        for (const auto& r : feds::read_log_csv(path)) {
          py::dict d;
          d["epoch"] = r.epoch;
          d["phase"] = feds::to_string(r.phase);
          d["iteration"] = r.iteration;
          d["sample_index"] = r.sample_index;
          d["e"] = r.e;
          d["e_hat"] = r.e_hat;
          d["loss"] = r.loss;
          d["gate_open"] = r.gate_open;
          rows.append(d);
        }
        return rows;
      },
      py::arg("path"));
}
