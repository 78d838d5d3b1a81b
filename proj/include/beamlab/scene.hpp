#pragma once

#include <optional>
#include <string>
#include <vector>

#include "beamlab/directivity.hpp"
#include "beamlab/stft.hpp"

namespace beamlab {

// Acoustic scenario: true source angles drive the rendering, estimated
// angles are what the beamformer designs are given.
struct ScenarioSpec {
  std::string name;
  double true_target_deg = 0.0;
  double estimated_target_deg = 0.0;
  std::vector<double> interferer_true_degs;
  std::vector<double> interferer_estimated_degs;  // used by BLCMV only
  std::optional<double> diffuse_rel_db;           // dB relative to directional level
  EnvironmentKind environment = EnvironmentKind::Anechoic;
  double duration_s = 10.0;
  uint32_t seed = 1;
  std::vector<std::string> source_paths;  // optional WAV overrides
  double t60_s = 0.150;
  double drr_db = 5.0;

  void validate() const;
};

// Per-component microphone tracks; mixture is the exact sample-wise sum.
struct SceneTracks {
  TimeTrackSet target;
  std::vector<TimeTrackSet> interferers;
  std::optional<TimeTrackSet> diffuse;
  TimeTrackSet mixture;
  double target_deg = 0.0;
  std::vector<double> interferer_degs;
};

// Amplitude-modulated speech-shaped noise, deterministic per seed, RMS 1.
std::vector<float> builtin_speech_source(double duration_s, uint32_t seed,
                                         double sample_rate = 24000.0);

// Source signal convolved with the model's 4-mic impulse responses at theta.
TimeTrackSet render_point_source(const DirectivityModel& model, double theta_deg,
                                 const std::vector<float>& src);

// Eight independent speech-shaped noise sources on a 1 m circle at 45 deg
// spacing, each through its anechoic directivity; total level (dB re unit
// RMS) calibrated at the front-left microphone.
TimeTrackSet render_diffuse(const DirectivityModel& model, double duration_s,
                            double level_db, uint32_t seed);

SceneTracks compose_scene(const ScenarioSpec& spec, const StftParams& params,
                          const ArrayGeometry& geometry = {});

}  // namespace beamlab
