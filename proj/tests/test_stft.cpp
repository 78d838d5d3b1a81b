#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <complex>
#include <cstdio>
#include <filesystem>
#include <numbers>
#include <random>
#include <vector>

#include "beamlab/fft.hpp"
#include "beamlab/stft.hpp"
#include "beamlab/wav.hpp"

using namespace beamlab;

namespace {

constexpr double kPi = std::numbers::pi;

TimeTrackSet mono(std::vector<float> samples, double rate = 24000.0) {
  TimeTrackSet t;
  t.sample_rate = rate;
  t.channels.push_back(std::move(samples));
  return t;
}

std::vector<float> white_noise(size_t n, uint32_t seed) {
  std::mt19937 rng(seed);
  std::normal_distribution<float> gauss(0.0f, 1.0f);
  std::vector<float> x(n);
  for (auto& v : x) v = gauss(rng);
  return x;
}

double db10(double ratio) { return 10.0 * std::log10(ratio); }

}  // namespace

TEST_CASE("frame count matches floor((len - fft)/hop) + 1") {
  StftParams p;
  auto tf = analyze(mono(std::vector<float>(24000, 0.0f)), p);
  CHECK(tf.n_frames == 186);
  CHECK(tf.n_bins == 129);
  CHECK(n_stft_frames(24000, p) == 186);
  for (const auto& v : tf.data) CHECK(std::abs(v) == 0.0f);
}

TEST_CASE("analyze rejects short signals and rate mismatch") {
  StftParams p;
  CHECK_THROWS(analyze(mono(std::vector<float>(100, 0.0f)), p));
  CHECK_THROWS(analyze(mono(std::vector<float>(24000, 0.0f), 16000.0), p));
}

TEST_CASE("params validation enforces the Hann COLA grid") {
  StftParams bad;
  bad.fft_size = 255;
  CHECK_THROWS(bad.validate());
  bad = StftParams{};
  bad.hop = 64;
  CHECK_THROWS(bad.validate());
  CHECK_NOTHROW(StftParams{}.validate());
}

TEST_CASE("impulse at the window center gives a flat frame-0 spectrum") {
  StftParams p;
  std::vector<float> x(4 * p.fft_size, 0.0f);
  x[128] = 1.0f;
  auto tf = analyze(mono(x), p);
  const double w128 = hann_window(p.fft_size)[128];
  CHECK(w128 == doctest::Approx(1.0));
  for (int f = 0; f < tf.n_bins; ++f)
    CHECK(std::abs(tf.at(0, f, 0)) == doctest::Approx(w128).epsilon(1e-5));
}

TEST_CASE("bin-10 sine concentrates energy, matches a direct windowed DFT") {
  StftParams p;
  const double f0 = 10.0 * p.sample_rate / p.fft_size;  // 937.5 Hz
  std::vector<float> x(24000);
  for (size_t n = 0; n < x.size(); ++n)
    x[n] = static_cast<float>(std::sin(2.0 * kPi * f0 * n / p.sample_rate));
  auto tf = analyze(mono(x), p);

  const auto win = hann_window(p.fft_size);
  const int t = 50;  // steady-state frame
  std::vector<double> frame(p.fft_size);
  for (int n = 0; n < p.fft_size; ++n)
    frame[n] = win[n] * x[t * p.hop + n];
  const auto ref = rfft(frame);

  double peak = std::abs(tf.at(t, 10, 0));
  for (int f = 0; f < tf.n_bins; ++f) {
    // analyze matches the direct DFT of the windowed frame
    CHECK(std::abs(std::complex<double>(tf.at(t, f, 0)) - ref[f]) <=
          1e-4 * peak);
    // leakage outside the Hann main lobe is below -60 dB
    if (f < 9 || f > 11) CHECK(std::abs(tf.at(t, f, 0)) <= 1e-3 * peak);
  }
}

TEST_CASE("round-trip interior error below -100 dB on 10 s noise") {
  StftParams p;
  const auto x = white_noise(240000, 7);
  auto y = synthesize(analyze(mono(x), p), p);
  REQUIRE(y.length() >= x.size() - p.fft_size);

  double err = 0.0, ref = 0.0;
  for (size_t n = p.fft_size; n + p.fft_size < x.size(); ++n) {
    const double d = static_cast<double>(y.channels[0][n]) - x[n];
    err += d * d;
    ref += static_cast<double>(x[n]) * x[n];
  }
  CHECK(db10(err / ref) <= -100.0);
}

TEST_CASE("zero tensor synthesizes to silence") {
  StftParams p;
  TFTensor tf(20, p.n_bins(), 1, p);
  auto y = synthesize(tf, p);
  for (float v : y.channels[0]) CHECK(v == 0.0f);
}

TEST_CASE("synthesize rejects inconsistent bin count") {
  StftParams p;
  TFTensor tf(20, 64, 1, p);
  CHECK_THROWS(synthesize(tf, p));
}

TEST_CASE("bin-masked analysis of a bin tone synthesizes the pure tone back") {
  StftParams p;
  const double f0 = 10.0 * p.sample_rate / p.fft_size;
  std::vector<float> x(24000);
  for (size_t n = 0; n < x.size(); ++n)
    x[n] = static_cast<float>(std::cos(2.0 * kPi * f0 * n / p.sample_rate));

  // The windowed DFT of a bin-centered tone lives entirely in bins 9..11,
  // so zeroing everything else must not disturb the reconstruction.
  TFTensor tf = analyze(mono(x), p);
  for (int t = 0; t < tf.n_frames; ++t)
    for (int f = 0; f < tf.n_bins; ++f)
      if (f < 9 || f > 11) tf.at(t, f, 0) = {0.0f, 0.0f};
  auto y = synthesize(tf, p);

  // Project the interior on the analytic tone pair; residual must vanish.
  double c = 0.0, s = 0.0, energy = 0.0;
  const size_t a = p.fft_size, b = y.length() - p.fft_size;
  for (size_t n = a; n < b; ++n) {
    const double ph = 2.0 * kPi * f0 * n / p.sample_rate;
    c += y.channels[0][n] * std::cos(ph);
    s += y.channels[0][n] * std::sin(ph);
    energy += static_cast<double>(y.channels[0][n]) * y.channels[0][n];
  }
  const double fitted = (c * c + s * s) / (0.5 * (b - a));
  REQUIRE(energy > 0.0);
  CHECK(db10(std::abs(energy - fitted) / energy) <= -60.0);
}

TEST_CASE("analysis is linear") {
  StftParams p;
  const auto x = white_noise(24000, 1);
  const auto y = white_noise(24000, 2);
  const float a = 0.7f, b = -1.3f;
  std::vector<float> mix(x.size());
  for (size_t i = 0; i < x.size(); ++i) mix[i] = a * x[i] + b * y[i];

  auto tx = analyze(mono(x), p), ty = analyze(mono(y), p),
       tm = analyze(mono(mix), p);
  double err = 0.0, ref = 0.0;
  for (size_t i = 0; i < tm.data.size(); ++i) {
    const auto expect = double(a) * std::complex<double>(tx.data[i]) +
                        double(b) * std::complex<double>(ty.data[i]);
    err += std::norm(std::complex<double>(tm.data[i]) - expect);
    ref += std::norm(expect);
  }
  CHECK(err / ref <= 1e-10);
}

TEST_CASE("Parseval holds per windowed frame to 1e-9 relative") {
  StftParams p;
  const auto x = white_noise(24000, 3);
  const auto win = hann_window(p.fft_size);
  for (int t : {1, 40, 120}) {
    std::vector<double> frame(p.fft_size);
    double et = 0.0;
    for (int n = 0; n < p.fft_size; ++n) {
      frame[n] = win[n] * x[t * p.hop + n];
      et += frame[n] * frame[n];
    }
    const auto spec = rfft(frame);
    double ef = std::norm(spec.front()) + std::norm(spec.back());
    for (size_t f = 1; f + 1 < spec.size(); ++f) ef += 2.0 * std::norm(spec[f]);
    ef /= p.fft_size;
    CHECK(std::abs(et - ef) / et <= 1e-9);
  }
}

TEST_CASE("wav float32 round trip is exact") {
  const auto path =
      (std::filesystem::temp_directory_path() / "beamlab_rt.wav").string();
  TimeTrackSet t;
  t.sample_rate = 24000.0;
  t.channels = {white_noise(4000, 11), white_noise(4000, 12)};
  write_wav(path, t, true);
  auto r = read_wav(path);
  REQUIRE(r.n_channels() == 2);
  REQUIRE(r.length() == 4000);
  for (int m = 0; m < 2; ++m)
    for (size_t i = 0; i < 4000; ++i)
      CHECK(r.channels[m][i] == t.channels[m][i]);
  std::remove(path.c_str());
}

TEST_CASE("wav reader rejects foreign sample rates unless resampling") {
  const auto path =
      (std::filesystem::temp_directory_path() / "beamlab_48k.wav").string();
  TimeTrackSet t;
  t.sample_rate = 48000.0;
  std::vector<float> x(4800);
  for (size_t n = 0; n < x.size(); ++n)
    x[n] = static_cast<float>(std::sin(2.0 * kPi * 1000.0 * n / 48000.0));
  t.channels = {x};
  write_wav(path, t, true);

  CHECK_THROWS(read_wav(path, 24000.0, false));
  auto r = read_wav(path, 24000.0, true);
  CHECK(r.sample_rate == 24000.0);
  CHECK(std::abs(static_cast<double>(r.length()) - 2400.0) <= 2.0);
  std::remove(path.c_str());
}

TEST_CASE("resampler preserves a tone's frequency") {
  std::vector<float> x(4800);
  for (size_t n = 0; n < x.size(); ++n)
    x[n] = static_cast<float>(std::sin(2.0 * kPi * 1000.0 * n / 48000.0));
  auto y = resample(x, 48000.0, 24000.0);
  REQUIRE(y.size() >= 2300);

  double c = 0.0, s = 0.0, energy = 0.0;
  for (size_t n = 200; n + 200 < y.size(); ++n) {
    const double ph = 2.0 * kPi * 1000.0 * n / 24000.0;
    c += y[n] * std::cos(ph);
    s += y[n] * std::sin(ph);
    energy += static_cast<double>(y[n]) * y[n];
  }
  const double fitted = (c * c + s * s) / (0.5 * (y.size() - 400));
  // linear interpolation leaves a small harmonic-distortion residual
  CHECK(std::abs(energy - fitted) / energy <= 5e-3);
}
