#include "beamlab/ccmbb.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace beamlab {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kTFloorLo = 0.05;
constexpr double kTFloorHi = 0.999;

struct SlidingStats {
  // Trailing means of z*conj(y), |z|^2, |y|^2 per (t, f).
  std::vector<std::complex<double>> zy;
  std::vector<double> zz, yy;
  int frames = 0, bins = 0;
};

SlidingStats sliding_psds(const TFTensor& z, const TFTensor& y, int window) {
  if (window < 2) throw std::invalid_argument("coherence window must be >= 2");
  if (z.n_frames != y.n_frames || z.n_bins != y.n_bins)
    throw std::invalid_argument("tracks not aligned");

  const int frames = z.n_frames, bins = z.n_bins;
  SlidingStats s;
  s.frames = frames;
  s.bins = bins;
  s.zy.resize(static_cast<size_t>(frames) * bins);
  s.zz.resize(s.zy.size());
  s.yy.resize(s.zy.size());

  std::vector<std::complex<double>> acc_zy(bins, 0.0);
  std::vector<double> acc_zz(bins, 0.0), acc_yy(bins, 0.0);
  for (int t = 0; t < frames; ++t) {
    for (int f = 0; f < bins; ++f) {
      const std::complex<double> zv(z.at(t, f, 0));
      const std::complex<double> yv(y.at(t, f, 0));
      acc_zy[f] += zv * std::conj(yv);
      acc_zz[f] += std::norm(zv);
      acc_yy[f] += std::norm(yv);
      if (t >= window) {
        const std::complex<double> zo(z.at(t - window, f, 0));
        const std::complex<double> yo(y.at(t - window, f, 0));
        acc_zy[f] -= zo * std::conj(yo);
        acc_zz[f] -= std::norm(zo);
        acc_yy[f] -= std::norm(yo);
      }
      const double n = std::min(t + 1, window);
      const size_t idx = static_cast<size_t>(t) * bins + f;
      s.zy[idx] = acc_zy[f] / n;
      s.zz[idx] = std::max(0.0, acc_zz[f]) / n;
      s.yy[idx] = std::max(0.0, acc_yy[f]) / n;
    }
  }
  return s;
}

double mean_power(const SlidingStats& s, const std::vector<double>& auto_psd) {
  double acc = 0.0;
  for (double v : auto_psd) acc += v;
  return acc / std::max<size_t>(1, auto_psd.size());
}

std::vector<std::complex<float>> coherence_from(const SlidingStats& s) {
  const double floor_zz = 1e-12 * mean_power(s, s.zz);
  const double floor_yy = 1e-12 * mean_power(s, s.yy);
  std::vector<std::complex<float>> c(s.zy.size());
  for (size_t i = 0; i < c.size(); ++i) {
    if (s.zz[i] <= floor_zz && s.yy[i] <= floor_yy) {
      c[i] = 0.0f;  // silence convention
    } else {
      const double denom = std::sqrt(std::max(s.zz[i] * s.yy[i], 1e-300));
      c[i] = std::complex<float>(s.zy[i] / denom);
    }
  }
  return c;
}

}  // namespace

void CcmbbParams::validate() const {
  if (!(mu > 0.0 && mu < 1.0)) throw std::invalid_argument("mu must be in (0,1)");
  if (!(alpha > 0.5 && alpha <= 1.0))
    throw std::invalid_argument("alpha must be in (0.5, 1]");
  if (short_window >= long_window)
    throw std::invalid_argument("short window must be shorter than long window");
}

int crossover_bin(const CcmbbParams& params, const StftParams& stft) {
  const double nyquist = stft.sample_rate / 2.0;
  if (params.crossover_hz >= nyquist)
    throw std::invalid_argument("crossover at or above Nyquist");
  return static_cast<int>(
      std::ceil(params.crossover_hz * stft.fft_size / stft.sample_rate));
}

std::vector<std::complex<float>> sliding_coherence(const TFTensor& z,
                                                   const TFTensor& y,
                                                   int window) {
  return coherence_from(sliding_psds(z, y, window));
}

CcmbbOutput apply_ccmbb(const TFTensor& z_l, const TFTensor& z_r,
                        const TFTensor& y_l, const TFTensor& y_r,
                        const CcmbbParams& params) {
  params.validate();
  const int xbin = crossover_bin(params, z_l.params);

  auto run_side = [&](const TFTensor& z, const TFTensor& y, TFTensor& out,
                      DecisionMap& dm) {
    const auto c_short = sliding_coherence(z, y, params.short_window);
    const auto c_long = sliding_coherence(z, y, params.long_window);
    const int frames = z.n_frames, bins = z.n_bins;
    out = TFTensor(frames, bins, 1, z.params);
    dm.n_frames = frames;
    dm.n_bins = bins;
    dm.crossover = xbin;
    dm.choice.assign(static_cast<size_t>(frames) * bins, 0);

    for (int t = 0; t < frames; ++t) {
      for (int f = 0; f < bins; ++f) {
        const size_t idx = static_cast<size_t>(t) * bins + f;
        const std::complex<double> zv(z.at(t, f, 0));
        const std::complex<double> yv(y.at(t, f, 0));
        const std::complex<double> c(c_short[idx]);
        double mag, phase;
        if (f < xbin) {
          // low band: magnitude from the beamformer, phase classified
          mag = std::abs(zv);
          const bool keep_z = std::abs(std::arg(c)) <= params.mu * kPi;
          phase = keep_z ? std::arg(zv) : std::arg(yv);
          dm.choice[idx] = keep_z ? 1 : 0;
        } else {
          // high band: phase from the beamformer, magnitude mixed
          phase = std::arg(zv);
          const double thr =
              std::clamp(static_cast<double>(std::abs(c_long[idx])),
                         kTFloorLo, kTFloorHi);
          const bool emphasize_z = std::abs(c) < thr;
          const double a = params.alpha;
          mag = emphasize_z ? a * std::abs(zv) + (1.0 - a) * std::abs(yv)
                            : (1.0 - a) * std::abs(zv) + a * std::abs(yv);
          dm.choice[idx] = emphasize_z ? 1 : 0;
        }
        out.at(t, f, 0) = std::complex<float>(
            mag * std::complex<double>(std::cos(phase), std::sin(phase)));
      }
    }
  };

  CcmbbOutput result;
  run_side(z_l, y_l, result.left, result.decisions_left);
  run_side(z_r, y_r, result.right, result.decisions_right);
  return result;
}

}  // namespace beamlab
