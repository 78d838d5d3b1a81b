#pragma once

#include <complex>
#include <string>
#include <vector>

namespace beamlab {

struct StftParams {
  double sample_rate = 24000.0;
  int fft_size = 256;
  int hop = 128;

  int n_bins() const { return fft_size / 2 + 1; }
  double bin_hz(int f) const { return f * sample_rate / fft_size; }

  // Enforces fft_size even and hop = fft_size/2 (50% overlap, Hann COLA).
  void validate() const;
};

// Multichannel real signal with a role label (target, interferer, diffuse,
// mixture). All channels have equal length.
struct TimeTrackSet {
  std::vector<std::vector<float>> channels;
  double sample_rate = 24000.0;
  std::string role;

  size_t length() const { return channels.empty() ? 0 : channels[0].size(); }
  int n_channels() const { return static_cast<int>(channels.size()); }
  void validate() const;
};

// Complex short-time spectra indexed (frame, bin, channel).
class TFTensor {
 public:
  TFTensor() = default;
  TFTensor(int frames, int bins, int channels, StftParams p)
      : n_frames(frames), n_bins(bins), n_channels(channels), params(p),
        data(static_cast<size_t>(frames) * bins * channels) {}

  std::complex<float>& at(int t, int f, int m) {
    return data[(static_cast<size_t>(t) * n_bins + f) * n_channels + m];
  }
  const std::complex<float>& at(int t, int f, int m) const {
    return data[(static_cast<size_t>(t) * n_bins + f) * n_channels + m];
  }

  int n_frames = 0;
  int n_bins = 0;
  int n_channels = 0;
  StftParams params;
  std::vector<std::complex<float>> data;
};

// Windowed STFT analysis; frame t covers samples [t*hop, t*hop + fft_size).
// Frames carry raw windowed spectra (normalization happens at synthesis).
TFTensor analyze(const TimeTrackSet& signal, const StftParams& params);

// Weighted overlap-add synthesis, perfect reconstruction on the interior.
TimeTrackSet synthesize(const TFTensor& tf, const StftParams& params);

// Periodic Hann window of length n.
std::vector<double> hann_window(int n);

// First/last frame index (exclusive) whose window lies fully inside the
// overlapped interior; metrics exclude edge frames.
int n_stft_frames(size_t length, const StftParams& params);

}  // namespace beamlab
