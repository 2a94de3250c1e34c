// Copyright 2026 The eeg-prognosis Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Python bindings. Signals cross the boundary as numpy arrays; configs and
// reports as plain dicts.

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <nlohmann/json.hpp>

#include "prognosis/checkpoint.hpp"
#include "prognosis/dsp.hpp"
#include "prognosis/eeg_io.hpp"
#include "prognosis/error.hpp"
#include "prognosis/eval.hpp"
#include "prognosis/gradcheck.hpp"
#include "prognosis/model.hpp"
#include "prognosis/synth.hpp"
#include "prognosis/train.hpp"

namespace py = pybind11;
using namespace prognosis;

namespace {

using DoubleArray = py::array_t<double, py::array::c_style | py::array::forcecast>;
using FloatArray = py::array_t<float, py::array::c_style | py::array::forcecast>;

std::vector<double> to_vector(const DoubleArray& a) {
  if (a.ndim() != 1) throw py::value_error("expected a 1-D array");
  return {a.data(), a.data() + a.size()};
}

py::array_t<double> to_array(const std::vector<double>& v) {
  return py::array_t<double>(std::vector<py::ssize_t>{static_cast<py::ssize_t>(v.size())}, v.data());
}

py::object to_python(const nlohmann::json& j) { return py::module_::import("json").attr("loads")(j.dump()); }

io::Outcome outcome_arg(const std::string& s) {
  if (s == "good" || s == "Good") return io::Outcome::Good;
  if (s == "poor" || s == "Poor") return io::Outcome::Poor;
  throw py::value_error("outcome must be 'good' or 'poor'");
}

py::dict recording_dict(const io::RawRecording& r) {
  py::dict d;
  d["patient_id"] = r.patient_id;
  d["hour_index"] = r.hour_index;
  d["fs_hz"] = r.fs_hz;
  d["electrodes"] = r.electrodes;
  py::array_t<float> samples({static_cast<py::ssize_t>(r.electrodes.size()), static_cast<py::ssize_t>(r.n_samples)});
  std::copy(r.samples.begin(), r.samples.end(), samples.mutable_data());
  d["samples"] = samples;
  return d;
}

py::dict meta_dict(const io::PatientMeta& m) {
  py::dict d;
  d["patient_id"] = m.patient_id;
  d["outcome"] = io::to_string(m.outcome);
  d["cpc"] = m.cpc;
  d["hospital"] = m.hospital;
  return d;
}

py::array_t<float> segments_array(const std::vector<dsp::BipolarSegment>& segs) {
  py::array_t<float> out({static_cast<py::ssize_t>(segs.size()), static_cast<py::ssize_t>(dsp::kBipolarChannels),
                          static_cast<py::ssize_t>(dsp::kSegmentSamples)});
  float* dst = out.mutable_data();
  for (const auto& s : segs) dst = std::copy(s.data.begin(), s.data.end(), dst);
  return out;
}

dsp::BipolarSegment segment_from(const FloatArray& a) {
  if (a.ndim() != 2 || a.shape(0) != static_cast<py::ssize_t>(dsp::kBipolarChannels) ||
      a.shape(1) != static_cast<py::ssize_t>(dsp::kSegmentSamples)) {
    throw py::value_error("segment must have shape (18, 30000)");
  }
  dsp::BipolarSegment s;
  s.data.assign(a.data(), a.data() + a.size());
  return s;
}

py::dict output_dict(const model::ModelOutput& o) {
  py::dict d;
  d["poor_prob"] = o.poor_prob;
  d["cpc_raw"] = o.cpc_raw;
  d["cpc_pred"] = o.cpc_pred;
  return d;
}

// A config plus parameters, the unit that forward passes need.
struct Model {
  model::ModelConfig config;
  model::ModelParams params;
};

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "EEG outcome prognosis: preprocessing, model, training losses and metrics";

  py::register_exception<Error>(m, "PrognosisError", PyExc_RuntimeError);

  // --- eeg_io ---------------------------------------------------------------
  m.def("load_recording", [](const std::filesystem::path& p) { return recording_dict(io::load_recording(p)); },
        py::arg("header_path"));
  m.def(
      "write_recording",
      [](const std::string& patient_id, int hour_index, double fs_hz, const std::vector<std::string>& electrodes,
         const FloatArray& samples, const std::filesystem::path& dir) {
        if (samples.ndim() != 2 || samples.shape(0) != static_cast<py::ssize_t>(electrodes.size()))
          throw py::value_error("samples must have shape (len(electrodes), n_samples)");
        io::RawRecording r;
        r.patient_id = patient_id;
        r.hour_index = hour_index;
        r.fs_hz = fs_hz;
        r.electrodes = electrodes;
        r.n_samples = static_cast<std::size_t>(samples.shape(1));
        r.samples.assign(samples.data(), samples.data() + samples.size());
        const auto files = io::write_recording(r, dir);
        return py::make_tuple(files.header, files.signal);
      },
      py::arg("patient_id"), py::arg("hour_index"), py::arg("fs_hz"), py::arg("electrodes"), py::arg("samples"),
      py::arg("dir"));
  m.def(
      "synthesize_patient",
      [](const std::string& outcome, std::uint64_t seed, int n_hours, double duration_s, const std::string& patient_id,
         const std::optional<std::filesystem::path>& out_dir) {
        synth::SynthesisProfile profile;
        profile.outcome = outcome_arg(outcome);
        profile.seed = seed;
        profile.n_hours = n_hours;
        profile.duration_s = duration_s;
        const auto p = synth::synthesize_patient(profile, patient_id);
        if (out_dir) {
          std::filesystem::create_directories(*out_dir);
          io::write_patient_meta(p.meta, *out_dir);
          for (const auto& r : p.recordings) io::write_recording(r, *out_dir);
        }
        py::list recs;
        for (const auto& r : p.recordings) recs.append(recording_dict(r));
        return py::make_tuple(meta_dict(p.meta), recs);
      },
      py::arg("outcome"), py::arg("seed"), py::arg("n_hours") = 1, py::arg("duration_s") = 3600.0,
      py::arg("patient_id") = "synthetic", py::arg("out_dir") = py::none(),
      "Returns (meta, recordings); writes them under out_dir when given.");

  // --- dsp ------------------------------------------------------------------
  m.def(
      "butterworth_bandpass",
      [](double low, double high, int order, double fs) {
        const auto c = dsp::design_butterworth_bandpass(low, high, order, fs);
        py::array_t<double> sos({static_cast<py::ssize_t>(c.sections.size()), py::ssize_t{5}});
        double* d = sos.mutable_data();
        for (const auto& s : c.sections) {
          *d++ = s.b0, *d++ = s.b1, *d++ = s.b2, *d++ = s.a1, *d++ = s.a2;
        }
        return sos;
      },
      py::arg("low_hz"), py::arg("high_hz"), py::arg("order"), py::arg("fs_hz"),
      "Second-order sections as rows (b0, b1, b2, a1, a2).");
  m.def(
      "bandpass_magnitude",
      [](double low, double high, int order, double fs, const DoubleArray& freqs) {
        const auto c = dsp::design_butterworth_bandpass(low, high, order, fs);
        std::vector<double> out;
        for (double f : to_vector(freqs)) out.push_back(c.magnitude(f, fs));
        return to_array(out);
      },
      py::arg("low_hz"), py::arg("high_hz"), py::arg("order"), py::arg("fs_hz"), py::arg("freqs_hz"));
  m.def(
      "bandpass_filter",
      [](const DoubleArray& x, double fs) {
        const auto c = dsp::design_butterworth_bandpass(dsp::kLowCutHz, dsp::kHighCutHz, dsp::kFilterOrder, fs);
        return to_array(dsp::filter_signal(c, to_vector(x)));
      },
      py::arg("x"), py::arg("fs_hz"));
  m.def(
      "resample", [](const DoubleArray& x, double fs_in, double fs_out) { return to_array(dsp::resample(to_vector(x), fs_in, fs_out)); },
      py::arg("x"), py::arg("fs_in"), py::arg("fs_out"));
  m.def("minmax_rescale", [](const DoubleArray& x) { return to_array(dsp::minmax_rescale(to_vector(x))); }, py::arg("x"));
  m.def("montage", [] {
    std::vector<std::pair<std::string, std::string>> out;
    for (const auto& p : dsp::standard_montage()) out.emplace_back(p.anode, p.cathode);
    return out;
  });
  m.def(
      "preprocess",
      [](const std::filesystem::path& header) { return segments_array(dsp::preprocess(io::load_recording(header))); },
      py::arg("header_path"), "Segments of one recording as a float32 array (n, 18, 30000).");

  // --- model ----------------------------------------------------------------
  m.def("model_config", [](const std::string& preset) { return to_python(model::ModelConfig::preset(preset).to_json()); },
        py::arg("preset"));
  m.def(
      "receptive_field",
      [](const std::string& preset) {
        const auto cfg = model::ModelConfig::preset(preset);
        const auto rf = model::receptive_field(cfg.conv_layers);
        return py::make_tuple(rf.size, rf.jump);
      },
      py::arg("preset") = "entry4");

  py::class_<Model>(m, "Model")
      .def_static(
          "init",
          [](const std::string& preset, std::uint64_t seed) {
            Model mdl{model::ModelConfig::preset(preset), {}};
            mdl.params = model::init_params(mdl.config, seed);
            return mdl;
          },
          py::arg("preset"), py::arg("seed") = 1)
      .def_static(
          "load",
          [](const std::filesystem::path& path) {
            Checkpoint c = load_checkpoint(path);
            return Model{std::move(c.config), std::move(c.params)};
          },
          py::arg("path"))
      .def_property_readonly("config", [](const Model& mdl) { return to_python(mdl.config.to_json()); })
      .def_property_readonly("n_parameters", [](const Model& mdl) { return model::count_parameters(mdl.params); })
      .def(
          "forward", [](const Model& mdl, const FloatArray& seg) { return output_dict(model::forward(mdl.params, mdl.config, segment_from(seg))); },
          py::arg("segment"), "Heads for one (18, 30000) segment.")
      .def(
          "predict_patient",
          [](const Model& mdl, const std::filesystem::path& patient_dir, const std::string& aggregation) {
            const io::PatientEntry entry = io::scan_patient(patient_dir);
            const auto p = eval::predict_patient(mdl.params, mdl.config, entry, eval::aggregation_from_string(aggregation));
            py::dict d;
            d["patient_id"] = p.patient_id;
            d["poor_prob"] = p.poor_prob;
            d["cpc_pred"] = p.cpc_pred;
            d["hour_index"] = p.hour_index;
            d["n_segments_used"] = p.n_segments_used;
            return d;
          },
          py::arg("patient_dir"), py::arg("aggregation") = "mean")
      .def(
          "evaluate",
          [](const Model& mdl, const std::filesystem::path& data_root, const std::string& aggregation) {
            const auto entries = io::scan_dataset(data_root);
            return to_python(
                eval::evaluate_dataset(mdl.params, mdl.config, entries, eval::aggregation_from_string(aggregation))
                    .summary_json());
          },
          py::arg("data_root"), py::arg("aggregation") = "mean")
      .def("save", [](const Model& mdl, const std::filesystem::path& path) {
        Checkpoint c;
        c.config = mdl.config;
        c.params = mdl.params;
        save_checkpoint(c, path);
      });

  // --- train ----------------------------------------------------------------
  m.def("cross_entropy_loss", [](const DoubleArray& p, const DoubleArray& y) { return train::cross_entropy_loss(to_vector(p), to_vector(y)); },
        py::arg("probs"), py::arg("labels"));
  m.def("mse_loss", [](const DoubleArray& p, const DoubleArray& t) { return train::mse_loss(to_vector(p), to_vector(t)); },
        py::arg("preds"), py::arg("targets"));
  m.def(
      "total_loss",
      [](double ce, double mse) {
        const auto l = train::total_loss(ce, mse);
        return py::make_tuple(l.ce, l.mse, l.total);
      },
      py::arg("ce"), py::arg("mse"), "Returns (ce, mse, total).");
  m.def(
      "train_config", [](const std::string& preset) { return to_python(train::TrainConfig::preset(preset).to_json()); },
      py::arg("preset"));
  m.def(
      "split_patients",
      [](const std::vector<std::pair<std::string, int>>& patients, double ratio, std::uint64_t seed) {
        std::vector<io::PatientMeta> metas;
        for (const auto& [id, cpc] : patients) metas.push_back({id, io::outcome_for_cpc(cpc), cpc, ""});
        const auto s = train::split_patients(metas, ratio, seed);
        return py::make_tuple(s.train, s.val);
      },
      py::arg("patients"), py::arg("ratio") = 0.8, py::arg("seed") = 1,
      "patients is a list of (patient_id, cpc); returns (train_ids, val_ids).");

  // --- eval -----------------------------------------------------------------
  m.def(
      "challenge_metric",
      [](const DoubleArray& scores, const std::vector<int>& labels, double cap) {
        return eval::challenge_metric(to_vector(scores), labels, cap);
      },
      py::arg("scores"), py::arg("labels"), py::arg("fpr_cap") = 0.05);
  m.def(
      "roc_points",
      [](const DoubleArray& scores, const std::vector<int>& labels) {
        std::vector<std::tuple<double, double, double>> out;
        for (const auto& p : eval::roc_points(to_vector(scores), labels)) out.emplace_back(p.threshold, p.tpr, p.fpr);
        return out;
      },
      py::arg("scores"), py::arg("labels"), "List of (threshold, tpr, fpr).");
  m.def("accuracy", [](const std::vector<int>& p, const std::vector<int>& l) { return eval::accuracy(p, l); },
        py::arg("preds"), py::arg("labels"));

  // --- autodiff -------------------------------------------------------------
  m.def(
      "gradcheck",
      [](std::uint64_t seed, std::size_t coords, bool include_model) {
        GradcheckOptions o;
        o.seed = seed;
        o.model_coords = coords;
        o.include_model = include_model;
        std::vector<std::tuple<std::string, std::size_t, double, bool>> out;
        for (const auto& c : run_gradcheck_suite(o).cases)
          out.emplace_back(c.name, c.coordinates, c.max_relative_error, c.passed);
        return out;
      },
      py::arg("seed") = 1, py::arg("model_coords") = 200, py::arg("include_model") = true,
      "List of (case, coordinates, max_relative_error, passed).");

  m.attr("BIPOLAR_CHANNELS") = dsp::kBipolarChannels;
  m.attr("SEGMENT_SAMPLES") = dsp::kSegmentSamples;
}
