#include "beamlab/stft.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

#include "beamlab/fft.hpp"

namespace beamlab {

void StftParams::validate() const {
  if (fft_size <= 0 || fft_size % 2 != 0)
    throw std::invalid_argument("fft_size must be a positive even number");
  if (hop != fft_size / 2)
    throw std::invalid_argument("hop must equal fft_size/2 (50% overlap)");
  if (sample_rate <= 0) throw std::invalid_argument("sample_rate must be > 0");
}

void TimeTrackSet::validate() const {
  for (const auto& ch : channels)
    if (ch.size() != length())
      throw std::invalid_argument("channel lengths differ");
}

std::vector<double> hann_window(int n) {
  std::vector<double> w(n);
  for (int i = 0; i < n; ++i)
    w[i] = 0.5 * (1.0 - std::cos(2.0 * std::numbers::pi * i / n));
  return w;
}

int n_stft_frames(size_t length, const StftParams& params) {
  if (length < static_cast<size_t>(params.fft_size)) return 0;
  return static_cast<int>((length - params.fft_size) / params.hop) + 1;
}

TFTensor analyze(const TimeTrackSet& signal, const StftParams& params) {
  params.validate();
  signal.validate();
  if (signal.length() < static_cast<size_t>(params.fft_size))
    throw std::invalid_argument("signal shorter than one analysis frame");
  if (signal.sample_rate != params.sample_rate)
    throw std::invalid_argument("sample rate mismatch between signal and params");

  const int nfft = params.fft_size;
  const int frames = n_stft_frames(signal.length(), params);
  const int bins = params.n_bins();
  const int nch = signal.n_channels();
  const auto win = hann_window(nfft);

  TFTensor tf(frames, bins, nch, params);
  std::vector<double> buf(nfft);
  std::vector<std::complex<double>> spec(bins);
  for (int m = 0; m < nch; ++m) {
    const auto& ch = signal.channels[m];
    for (int t = 0; t < frames; ++t) {
      const size_t off = static_cast<size_t>(t) * params.hop;
      for (int i = 0; i < nfft; ++i) buf[i] = win[i] * ch[off + i];
      rfft(buf.data(), spec.data(), nfft);
      for (int f = 0; f < bins; ++f)
        tf.at(t, f, m) = std::complex<float>(spec[f]);
    }
  }
  return tf;
}

TimeTrackSet synthesize(const TFTensor& tf, const StftParams& params) {
  params.validate();
  if (tf.n_bins != params.n_bins())
    throw std::invalid_argument("bin count inconsistent with params");

  const int nfft = params.fft_size;
  const int hop = params.hop;
  const auto win = hann_window(nfft);

  // WOLA synthesis window: w[n] / sum_k w^2[n - k*hop]
  std::vector<double> wsum(nfft, 0.0);
  for (int i = 0; i < nfft; ++i) {
    wsum[i] += win[i] * win[i];
    wsum[i] += win[(i + hop) % nfft] * win[(i + hop) % nfft];
  }
  std::vector<double> swin(nfft);
  for (int i = 0; i < nfft; ++i) swin[i] = win[i] / wsum[i];

  const size_t out_len =
      static_cast<size_t>(tf.n_frames - 1) * hop + nfft;
  TimeTrackSet out;
  out.sample_rate = params.sample_rate;
  out.channels.resize(tf.n_channels);

  std::vector<std::complex<double>> spec(tf.n_bins);
  std::vector<double> frame(nfft);
  for (int m = 0; m < tf.n_channels; ++m) {
    std::vector<double> acc(out_len, 0.0);
    for (int t = 0; t < tf.n_frames; ++t) {
      for (int f = 0; f < tf.n_bins; ++f)
        spec[f] = std::complex<double>(tf.at(t, f, m));
      irfft(spec.data(), frame.data(), nfft);
      const size_t off = static_cast<size_t>(t) * hop;
      for (int i = 0; i < nfft; ++i) acc[off + i] += swin[i] * frame[i];
    }
    out.channels[m].resize(out_len);
    for (size_t i = 0; i < out_len; ++i)
      out.channels[m][i] = static_cast<float>(acc[i]);
  }
  return out;
}

}  // namespace beamlab
