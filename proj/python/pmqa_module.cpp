// Copyright 2026 The pmqa Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Python bindings. Audio crosses the boundary as float64 arrays shaped
// (channels, samples); a 1-D array is one channel.

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "pmqa/audio.hpp"
#include "pmqa/degradations.hpp"
#include "pmqa/error.hpp"
#include "pmqa/evaluation.hpp"
#include "pmqa/gan/synthetic.hpp"
#include "pmqa/scoring.hpp"
#include "pmqa/spectral.hpp"

namespace py = pybind11;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

pmqa::AudioBuffer to_buffer(const Array& samples, int sample_rate) {
  if (samples.ndim() != 1 && samples.ndim() != 2) throw pmqa::ShapeError("audio must be 1-D or 2-D");
  const py::ssize_t channels = samples.ndim() == 1 ? 1 : samples.shape(0);
  const py::ssize_t length = samples.shape(samples.ndim() - 1);
  std::vector<std::vector<double>> out(static_cast<std::size_t>(channels));
  const double* p = samples.data();
  for (py::ssize_t c = 0; c < channels; ++c) out[static_cast<std::size_t>(c)].assign(p + c * length, p + (c + 1) * length);
  return pmqa::AudioBuffer(std::move(out), sample_rate);
}

py::array_t<double> to_array(const pmqa::AudioBuffer& buffer) {
  const auto channels = static_cast<py::ssize_t>(buffer.channel_count());
  const auto length = static_cast<py::ssize_t>(buffer.length());
  py::array_t<double> out({channels, length});
  auto* p = out.mutable_data();
  for (py::ssize_t c = 0; c < channels; ++c) {
    const auto ch = buffer.channel(static_cast<std::size_t>(c));
    std::copy(ch.begin(), ch.end(), p + c * length);
  }
  return out;
}

}  // namespace

PYBIND11_MODULE(_pmqa, m) {
  m.doc() = "No-reference music quality assessment";

  auto error = py::register_exception<pmqa::Error>(m, "Error");
  py::register_exception<pmqa::InvalidArgument>(m, "InvalidArgument", error.ptr());
  py::register_exception<pmqa::ShapeError>(m, "ShapeError", error.ptr());
  py::register_exception<pmqa::IoError>(m, "IoError", error.ptr());
  py::register_exception<pmqa::FormatError>(m, "FormatError", error.ptr());
  py::register_exception<pmqa::WavError>(m, "WavError", error.ptr());
  py::register_exception<pmqa::StatisticsError>(m, "StatisticsError", error.ptr());

  m.def(
      "read_wav",
      [](const std::filesystem::path& path) {
        const auto b = pmqa::read_wav(path);
        return py::make_tuple(to_array(b), b.sample_rate());
      },
      py::arg("path"), "Returns (samples[channels, n], sample_rate).");
  m.def(
      "write_wav",
      [](const std::filesystem::path& path, const Array& samples, int sample_rate, int bit_depth) {
        pmqa::write_wav(to_buffer(samples, sample_rate), path, bit_depth);
      },
      py::arg("path"), py::arg("samples"), py::arg("sample_rate"), py::arg("bit_depth") = 16);
  m.def(
      "resample",
      [](const Array& samples, int sample_rate, int target_rate) {
        return to_array(pmqa::resample(to_buffer(samples, sample_rate), target_rate));
      },
      py::arg("samples"), py::arg("sample_rate"), py::arg("target_rate"));

  m.def(
      "degrade",
      [](const Array& samples, int sample_rate, const std::string& kind, double intensity, std::uint64_t seed) {
        const pmqa::DegradationSpec spec{pmqa::parse_degradation_kind(kind), intensity, seed};
        return to_array(pmqa::apply(to_buffer(samples, sample_rate), spec));
      },
      py::arg("samples"), py::arg("sample_rate"), py::arg("kind"), py::arg("intensity"), py::arg("seed") = 0);
  m.def("intensity_to_param",
        [](const std::string& kind, double intensity) {
          return pmqa::intensity_to_param(pmqa::parse_degradation_kind(kind), intensity);
        },
        py::arg("kind"), py::arg("intensity"));

  m.def(
      "mel_spectrogram",
      [](const Array& samples, int n_mels) {
        pmqa::FrontendConfig fc;
        fc.n_mels = n_mels;
        const auto mel = pmqa::mel_spectrogram(to_buffer(samples, 16000), fc);
        py::array_t<float> out({static_cast<py::ssize_t>(mel.bands), static_cast<py::ssize_t>(mel.frames)});
        std::copy(mel.values.begin(), mel.values.end(), out.mutable_data());
        return out;
      },
      py::arg("samples"), py::arg("n_mels") = 256, "Log-mel of mono 16 kHz audio, shaped (bands, frames).");

  m.def(
      "synth_clip",
      [](int genre, double seconds, int sample_rate, std::uint64_t seed) {
        return to_array(pmqa::gan::synth_clip(genre, seconds, sample_rate, seed));
      },
      py::arg("genre"), py::arg("seconds"), py::arg("sample_rate") = 48000, py::arg("seed") = 0,
      "Procedural test clip: genre 0 tonal, 1 percussive.");

  m.def(
      "spearman",
      [](const std::vector<double>& x, const std::vector<double>& y) {
        const auto r = pmqa::spearman(x, y);
        return py::make_tuple(r.rho, r.p);
      },
      py::arg("x"), py::arg("y"), "Returns (rho, p).");
  m.def(
      "spectral_flatness",
      [](const Array& samples, int sample_rate, int analysis_rate) {
        return pmqa::spectral_flatness(to_buffer(samples, sample_rate), analysis_rate > 0 ? analysis_rate : sample_rate);
      },
      py::arg("samples"), py::arg("sample_rate"), py::arg("analysis_rate") = 0);
  m.def(
      "mse",
      [](const Array& reference, const Array& degraded) {
        return pmqa::mse_measure(to_buffer(reference, 1), to_buffer(degraded, 1));
      },
      py::arg("reference"), py::arg("degraded"));

  py::class_<pmqa::Scorer>(m, "Scorer")
      .def(py::init([](const std::filesystem::path& path) { return pmqa::Scorer::from_checkpoint(path); }),
           py::arg("checkpoint"))
      .def(
          "score",
          [](const pmqa::Scorer& s, const Array& samples, int sample_rate, const std::string& genre) {
            return s.score(to_buffer(samples, sample_rate), pmqa::resolve_genre(s.config(), genre));
          },
          py::arg("samples"), py::arg("sample_rate"), py::arg("genre"))
      .def_property_readonly("bands", [](const pmqa::Scorer& s) { return s.config().bands; })
      .def_property_readonly("frames", [](const pmqa::Scorer& s) { return s.config().frames; })
      .def_property_readonly("n_genres", [](const pmqa::Scorer& s) { return s.config().n_genres; });
}
