#include <pybind11/complex.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "beamlab/harness.hpp"

namespace py = pybind11;
using namespace beamlab;

namespace {

TimeTrackSet tracks_from_array(py::array_t<float, py::array::c_style> x,
                               double rate) {
  if (x.ndim() != 2) throw std::invalid_argument("expected (samples, channels)");
  TimeTrackSet t;
  t.sample_rate = rate;
  const auto n = x.shape(0), ch = x.shape(1);
  t.channels.assign(ch, std::vector<float>(n));
  auto r = x.unchecked<2>();
  for (py::ssize_t m = 0; m < ch; ++m)
    for (py::ssize_t i = 0; i < n; ++i) t.channels[m][i] = r(i, m);
  return t;
}

py::array_t<float> tracks_to_array(const TimeTrackSet& t) {
  const py::ssize_t n = static_cast<py::ssize_t>(t.length());
  const py::ssize_t ch = t.n_channels();
  py::array_t<float> out({n, ch});
  auto w = out.mutable_unchecked<2>();
  for (py::ssize_t m = 0; m < ch; ++m)
    for (py::ssize_t i = 0; i < n; ++i) w(i, m) = t.channels[m][i];
  return out;
}

py::array_t<std::complex<float>> tensor_to_array(const TFTensor& t) {
  py::array_t<std::complex<float>> out(
      {static_cast<py::ssize_t>(t.n_frames), static_cast<py::ssize_t>(t.n_bins),
       static_cast<py::ssize_t>(t.n_channels)});
  std::copy(t.data.begin(), t.data.end(), out.mutable_data());
  return out;
}

TFTensor tensor_from_array(
    py::array_t<std::complex<float>, py::array::c_style> x, StftParams p) {
  if (x.ndim() != 3)
    throw std::invalid_argument("expected (frames, bins, channels)");
  TFTensor t(static_cast<int>(x.shape(0)), static_cast<int>(x.shape(1)),
             static_cast<int>(x.shape(2)), p);
  std::copy(x.data(), x.data() + x.size(), t.data.begin());
  return t;
}

py::dict report_to_dict(const MetricReport& r) {
  py::dict d;
  d["scenario"] = r.scenario;
  d["algorithm"] = r.algorithm;
  d["better_ear"] = r.better_ear_side == Side::Left ? "left" : "right";
  auto opt = [](const std::optional<double>& v) -> py::object {
    return v ? py::cast(*v) : py::none();
  };
  d["snr_gain_db"] = opt(r.gains.snr_gain_bb);
  d["sir_gain_db"] = opt(r.gains.sir_gain_bb);
  d["sdnr_gain_db"] = opt(r.gains.sdnr_gain_bb);
  if (r.target_distortion) {
    d["sdr_db"] = r.target_distortion->sdr_bb;
    d["sdmag_db"] = r.target_distortion->sdmag_bb;
  }
  d["ild_err_db"] = opt(r.ild_err_bb);
  d["ipd_err_rad"] = opt(r.ipd_err_bb);
  d["msc_err"] = opt(r.msc_err_bb);
  return d;
}

ScenarioSpec scenario_from_kwargs(
    const std::string& name, double target_true, double target_est,
    std::vector<double> interferers, std::vector<double> interferers_est,
    py::object diffuse_rel_db, const std::string& environment, double duration_s,
    uint32_t seed) {
  ScenarioSpec s;
  s.name = name;
  s.true_target_deg = target_true;
  s.estimated_target_deg = target_est;
  s.interferer_true_degs = std::move(interferers);
  s.interferer_estimated_degs = std::move(interferers_est);
  if (!diffuse_rel_db.is_none()) s.diffuse_rel_db = diffuse_rel_db.cast<double>();
  s.environment = environment == "reverberant" ? EnvironmentKind::Reverberant
                                               : EnvironmentKind::Anechoic;
  s.duration_s = duration_s;
  s.seed = seed;
  return s;
}

}  // namespace

PYBIND11_MODULE(_beamlab, m) {
  m.doc() = "binaural beamforming core bindings";

  py::class_<StftParams>(m, "StftParams")
      .def(py::init<>())
      .def_readwrite("sample_rate", &StftParams::sample_rate)
      .def_readwrite("fft_size", &StftParams::fft_size)
      .def_readwrite("hop", &StftParams::hop)
      .def("n_bins", &StftParams::n_bins);

  m.def(
      "analyze",
      [](py::array_t<float, py::array::c_style> x, StftParams p, double rate) {
        return tensor_to_array(analyze(tracks_from_array(x, rate), p));
      },
      py::arg("signal"), py::arg("params") = StftParams{},
      py::arg("sample_rate") = 24000.0,
      "STFT of a (samples, channels) float array -> (frames, bins, channels)");

  m.def(
      "synthesize",
      [](py::array_t<std::complex<float>, py::array::c_style> x, StftParams p) {
        return tracks_to_array(synthesize(tensor_from_array(x, p), p));
      },
      py::arg("spectra"), py::arg("params") = StftParams{},
      "WOLA inverse of analyze()");

  m.def("speech_source", &builtin_speech_source, py::arg("duration_s"),
        py::arg("seed"), py::arg("sample_rate") = 24000.0,
        "amplitude-modulated speech-shaped noise, RMS 1");

  m.def("preset_names", &preset_names);

  m.def(
      "compose_scene",
      [](const std::string& name, double target_true, double target_est,
         std::vector<double> interferers, std::vector<double> interferers_est,
         py::object diffuse_rel_db, const std::string& environment,
         double duration_s, uint32_t seed) {
        const ScenarioSpec s = scenario_from_kwargs(
            name, target_true, target_est, std::move(interferers),
            std::move(interferers_est), diffuse_rel_db, environment, duration_s,
            seed);
        const SceneTracks scene = compose_scene(s, StftParams{});
        py::dict d;
        d["mixture"] = tracks_to_array(scene.mixture);
        d["target"] = tracks_to_array(scene.target);
        py::list interf;
        for (const auto& v : scene.interferers) interf.append(tracks_to_array(v));
        d["interferers"] = interf;
        if (scene.diffuse) d["diffuse"] = tracks_to_array(*scene.diffuse);
        return d;
      },
      py::arg("name") = "scene", py::arg("target_true_deg") = 0.0,
      py::arg("target_estimated_deg") = 0.0,
      py::arg("interferer_degs") = std::vector<double>{},
      py::arg("interferer_estimated_degs") = std::vector<double>{},
      py::arg("diffuse_rel_db") = py::none(), py::arg("environment") = "anechoic",
      py::arg("duration_s") = 10.0, py::arg("seed") = 1,
      "render per-component 4-mic tracks for a scenario");

  m.def(
      "run_scenario",
      [](const std::string& name, double target_true, double target_est,
         std::vector<double> interferers, std::vector<double> interferers_est,
         py::object diffuse_rel_db, const std::string& environment,
         double duration_s, uint32_t seed,
         const std::vector<std::string>& algorithms) {
        const ScenarioSpec s = scenario_from_kwargs(
            name, target_true, target_est, std::move(interferers),
            std::move(interferers_est), diffuse_rel_db, environment, duration_s,
            seed);
        std::vector<AlgorithmSpec> algs;
        for (const auto& a : algorithms) algs.push_back(AlgorithmSpec::parse(a));
        const ExperimentResult res = run_experiment(s, algs);
        py::list out;
        for (const auto& run : res.runs) {
          if (run.failed) {
            py::dict d;
            d["algorithm"] = run.algorithm;
            d["error"] = run.error;
            out.append(d);
          } else {
            out.append(report_to_dict(run.report));
          }
        }
        return out;
      },
      py::arg("name") = "scene", py::arg("target_true_deg") = 0.0,
      py::arg("target_estimated_deg") = 0.0,
      py::arg("interferer_degs") = std::vector<double>{},
      py::arg("interferer_estimated_degs") = std::vector<double>{},
      py::arg("diffuse_rel_db") = py::none(), py::arg("environment") = "anechoic",
      py::arg("duration_s") = 10.0, py::arg("seed") = 1,
      py::arg("algorithms") = std::vector<std::string>{"bmvdr", "robust_tlcmv"},
      "run algorithms on one scenario, returning broadband metric dicts");

  m.def(
      "run_preset",
      [](const std::string& name, uint32_t seed) {
        Preset p = preset(name);
        py::list out;
        for (auto& s : p.scenarios) {
          s.seed = seed;
          const ExperimentResult res = run_experiment(s, p.algorithms);
          for (const auto& run : res.runs) {
            if (run.failed) {
              py::dict d;
              d["scenario"] = s.name;
              d["algorithm"] = run.algorithm;
              d["error"] = run.error;
              out.append(d);
            } else {
              out.append(report_to_dict(run.report));
            }
          }
        }
        return out;
      },
      py::arg("name"), py::arg("seed") = 1,
      "run a named preset, returning broadband metric dicts");

  m.def(
      "beampattern",
      [](const std::string& design, double target_deg,
         const std::vector<double>& interferer_degs, const std::string& side) {
        StftParams params;
        const DirectivityModel model({}, params, Environment::anechoic());
        const DirectivitySet d_set = DirectivitySet::build(model);
        const BinMatrixSet r = isotropic_diffuse_covariance(d_set);
        const Side s = side == "right" ? Side::Right : Side::Left;
        DesignParams dp;
        ConstraintSet cs;
        if (design == "bmvdr") cs = design_bmvdr(model, target_deg, s, dp);
        else if (design == "robust_tlcmv")
          cs = design_robust_tlcmv(model, target_deg, s, dp);
        else if (design == "blcmv")
          cs = design_blcmv(model, target_deg, interferer_degs, s, dp);
        else throw std::invalid_argument("unknown design: " + design);
        const Eigen::MatrixXd bp = beampattern(solve_fixed(r, cs, dp), d_set);
        py::array_t<double> out({static_cast<py::ssize_t>(bp.rows()),
                                 static_cast<py::ssize_t>(bp.cols())});
        auto w = out.mutable_unchecked<2>();
        for (py::ssize_t i = 0; i < bp.rows(); ++i)
          for (py::ssize_t j = 0; j < bp.cols(); ++j) w(i, j) = bp(i, j);
        return out;
      },
      py::arg("design"), py::arg("target_deg") = 0.0,
      py::arg("interferer_degs") = std::vector<double>{225.0, 90.0},
      py::arg("side") = "left",
      "BP(f, theta) under isotropic diffuse noise; rows = bins, cols = 5 deg grid");
}
