#pragma once

#include <complex>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "beamlab/beamform.hpp"
#include "beamlab/ccmbb.hpp"
#include "beamlab/scene.hpp"

namespace beamlab {

// Frame range used for all PSD statistics: edge frames and the adaptive
// warm-up are excluded.
struct FrameMask {
  int first = 0;  // inclusive
  int last = 0;   // exclusive
  int count() const { return last - first; }
};
FrameMask steady_frames(int n_frames, int warmup_frames);

// Per-component single-channel outputs at one side.
struct SideShadow {
  TFTensor target;
  std::vector<TFTensor> interferers;
  TFTensor interferer_sum;           // valid when interferers exist
  std::optional<TFTensor> diffuse;
  TFTensor mixture;
};

struct ShadowOutputs {
  SideShadow left;
  SideShadow right;
};

// Post-processing recorded from the mixture run, replayed on components as
// the per-bin complex ratio H = z_m / z (additivity-preserving).
struct PostProc {
  enum class Kind { None, PartialNoise, ComplexRatio } kind = Kind::None;
  double rho = 0.7;                 // PartialNoise
  TFTensor ratio_num_left;          // ComplexRatio: post-processed mixture
  TFTensor ratio_num_right;
};

// Components of the scene through the identical time-varying weights (and
// post-filtering) that processed the mixture.
ShadowOutputs shadow_filter(const SceneTracks& scene,
                            const std::map<std::string, TFTensor>& tensors,
                            const AdaptiveWeights& weights,
                            const PostProc& post);

// Gamma_ab(f) = mean over steady-state frames of a(f,t) conj(b(f,t)).
std::vector<std::complex<double>> long_psd(const TFTensor& a, const TFTensor& b,
                                           const FrameMask& mask);

struct CueCurves {
  std::vector<std::optional<double>> delta_ild_db;   // per bin, > crossover only
  std::vector<std::optional<double>> delta_ipd_rad;  // per bin, < crossover only
};

// Eqs. for interaural transfer function deltas of the (summed) interferer.
CueCurves itf_cues(const TFTensor& in_l, const TFTensor& in_r,
                   const TFTensor& out_l, const TFTensor& out_r,
                   const FrameMask& mask, int crossover);

std::vector<std::optional<double>> msc_error(const TFTensor& in_l,
                                             const TFTensor& in_r,
                                             const TFTensor& out_l,
                                             const TFTensor& out_r,
                                             const FrameMask& mask);

struct GainCurves {
  std::optional<std::vector<double>> snr_gain_db;
  std::optional<std::vector<double>> sir_gain_db;
  std::optional<std::vector<double>> sdnr_gain_db;
  std::optional<double> snr_gain_bb, sir_gain_bb, sdnr_gain_bb;
};

GainCurves ratio_gains(const SideShadow& shadow,
                       const std::map<std::string, TFTensor>& tensors,
                       Side side, const FrameMask& mask);

struct DistortionResult {
  std::vector<double> sdr_db;
  std::vector<double> sdmag_db;
  double sdr_bb = 0.0;
  double sdmag_bb = 0.0;
};

DistortionResult distortion(const TFTensor& z_target, const TFTensor& x_ref,
                            const FrameMask& mask);

Side better_ear(const std::map<std::string, TFTensor>& tensors,
                const FrameMask& mask);

// Arithmetic mean over present bins; dB quantities are averaged in dB.
std::optional<double> band_average(const std::vector<std::optional<double>>& curve,
                                   int first_bin, int last_bin);

// Everything the harness reports for one (scenario, algorithm) run.
struct MetricReport {
  std::string scenario;
  std::string algorithm;
  Side better_ear_side = Side::Left;

  GainCurves gains;          // at the better ear
  std::optional<DistortionResult> target_distortion;
  CueCurves interferer_cues;
  std::vector<std::optional<double>> msc_err;

  // Band-averaged absolute cue errors and broadband scalars.
  std::optional<double> ild_err_bb;
  std::optional<double> ipd_err_bb;
  std::optional<double> msc_err_bb;
};

void write_report_csv(const std::string& path,
                      const std::vector<MetricReport>& reports,
                      const StftParams& params);

}  // namespace beamlab
