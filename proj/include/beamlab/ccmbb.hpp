#pragma once

#include <complex>
#include <cstdint>
#include <vector>

#include "beamlab/stft.hpp"

namespace beamlab {

struct CcmbbParams {
  double mu = 0.1;          // phase-threshold factor, threshold mu*pi
  double alpha = 0.7;       // magnitude mixing weight
  double crossover_hz = 1500.0;
  int short_window = 10;    // frames, coherence in the mixing rules
  int long_window = 40;     // frames, threshold T

  void validate() const;
};

// First bin whose center frequency is >= crossover; that bin belongs to the
// high-frequency (magnitude) rule.
int crossover_bin(const CcmbbParams& params, const StftParams& stft);

// Trailing rectangular sliding-mean coherence between two single-channel
// TF tracks. Frames with fewer than `window` predecessors use the prefix.
// Bins where both auto-PSDs underflow get coherence 0.
std::vector<std::complex<float>> sliding_coherence(const TFTensor& z,
                                                   const TFTensor& y,
                                                   int window);

// Branch decisions recorded per (frame, bin) for shadow filtering.
// Low bins: 1 = phase from beamformer, 0 = phase from noisy input.
// High bins: 1 = emphasize beamformer magnitude, 0 = emphasize noisy.
struct DecisionMap {
  int n_frames = 0;
  int n_bins = 0;
  int crossover = 0;
  std::vector<uint8_t> choice;

  uint8_t at(int t, int f) const { return choice[static_cast<size_t>(t) * n_bins + f]; }
};

struct CcmbbOutput {
  TFTensor left;
  TFTensor right;
  DecisionMap decisions_left;
  DecisionMap decisions_right;
};

// Full post-processor: per side, bins below the crossover keep the
// beamformer magnitude and classify the phase; bins at/above it keep the
// beamformer phase and mix the magnitude against the long-window threshold.
CcmbbOutput apply_ccmbb(const TFTensor& z_l, const TFTensor& z_r,
                        const TFTensor& y_l, const TFTensor& y_r,
                        const CcmbbParams& params);

}  // namespace beamlab
