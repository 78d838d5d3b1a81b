#include "beamlab/scene.hpp"

#include <cmath>
#include <numbers>
#include <numeric>
#include <random>
#include <stdexcept>

#include "beamlab/fft.hpp"
#include "beamlab/wav.hpp"

namespace beamlab {

namespace {

constexpr double kPi = std::numbers::pi;

double rms(const std::vector<float>& x) {
  double acc = 0.0;
  for (float v : x) acc += static_cast<double>(v) * v;
  return std::sqrt(acc / std::max<size_t>(1, x.size()));
}

void scale_tracks(TimeTrackSet& t, double s) {
  for (auto& ch : t.channels)
    for (auto& v : ch) v = static_cast<float>(v * s);
}

// Calibrate so the front-left channel has RMS 10^(level_db/20).
void calibrate_front_left(TimeTrackSet& t, double level_db) {
  const double r = rms(t.channels[kRefLeft]);
  if (r <= 0.0) return;
  scale_tracks(t, std::pow(10.0, level_db / 20.0) / r);
}

// Long-term-average speech spectrum approximation: flat 100..500 Hz,
// -9 dB/octave above, steep rolloff below 100 Hz.
double speech_mag(double hz) {
  if (hz < 1.0) return 0.0;
  if (hz < 100.0) return std::pow(hz / 100.0, 2.0);
  if (hz < 500.0) return 1.0;
  return std::pow(500.0 / hz, 1.5);  // -9 dB/octave
}

// Linear-phase speech-shaping FIR from frequency sampling.
std::vector<double> speech_shaping_fir(double fs) {
  const int n = 512;
  const int nb = n / 2 + 1;
  std::vector<std::complex<double>> h(nb);
  for (int k = 0; k < nb; ++k) {
    const double hz = k * fs / n;
    const double delay_phase = -2.0 * kPi * hz * (n / 2) / fs;
    h[k] = speech_mag(hz) *
           std::complex<double>(std::cos(delay_phase), std::sin(delay_phase));
  }
  return irfft(h, n);
}

std::vector<float> speech_shaped_noise(double duration_s, uint32_t seed,
                                       double fs) {
  const size_t n = static_cast<size_t>(duration_s * fs);
  std::mt19937 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::vector<double> white(n);
  for (auto& v : white) v = gauss(rng);
  const auto fir = speech_shaping_fir(fs);
  auto shaped = fft_convolve(white, fir);
  // Drop the FIR group delay so the output aligns with the request.
  std::vector<float> out(n);
  const size_t off = fir.size() / 2;
  for (size_t i = 0; i < n; ++i) out[i] = static_cast<float>(shaped[i + off]);
  return out;
}

uint32_t derive_seed(uint32_t seed, uint32_t salt) {
  uint64_t h = (static_cast<uint64_t>(seed) << 32) | (salt + 0x9E3779B9u);
  h ^= h >> 33;
  h *= 0xff51afd7ed558ccdULL;
  h ^= h >> 33;
  return static_cast<uint32_t>(h);
}

}  // namespace

void ScenarioSpec::validate() const {
  if (duration_s < 2.0) throw std::invalid_argument("duration must be >= 2 s");
  for (double v : interferer_true_degs)
    if (std::abs(v - true_target_deg) < 1e-9)
      throw std::invalid_argument(
          "degenerate scene: target and interferer share an angle");
}

std::vector<float> builtin_speech_source(double duration_s, uint32_t seed,
                                         double sample_rate) {
  auto sig = speech_shaped_noise(duration_s, seed, sample_rate);

  // Syllabic 2-8 Hz envelope: seeded sum of slow cosines, exponentiated.
  std::mt19937 rng(derive_seed(seed, 0xE0));
  std::uniform_real_distribution<double> freq(2.0, 8.0);
  std::uniform_real_distribution<double> phase(0.0, 2.0 * kPi);
  constexpr int kNumComponents = 6;
  std::array<double, kNumComponents> fk, pk;
  for (int k = 0; k < kNumComponents; ++k) {
    fk[k] = freq(rng);
    pk[k] = phase(rng);
  }
  const double norm = 1.0 / std::sqrt(kNumComponents / 2.0);
  for (size_t i = 0; i < sig.size(); ++i) {
    const double t = i / sample_rate;
    double s = 0.0;
    for (int k = 0; k < kNumComponents; ++k)
      s += std::cos(2.0 * kPi * fk[k] * t + pk[k]);
    sig[i] = static_cast<float>(sig[i] * std::exp(0.6 * s * norm));
  }
  const double r = rms(sig);
  for (auto& v : sig) v = static_cast<float>(v / r);
  return sig;
}

TimeTrackSet render_point_source(const DirectivityModel& model,
                                 double theta_deg,
                                 const std::vector<float>& src) {
  const auto irs = model.impulse_responses(theta_deg);
  std::vector<double> x(src.begin(), src.end());
  TimeTrackSet out;
  out.sample_rate = model.params().sample_rate;
  out.channels.resize(kNumMics);
  for (int m = 0; m < kNumMics; ++m) {
    auto y = fft_convolve(x, irs[m]);
    out.channels[m].resize(src.size());
    for (size_t i = 0; i < src.size(); ++i)
      out.channels[m][i] = static_cast<float>(y[i]);
  }
  return out;
}

TimeTrackSet render_diffuse(const DirectivityModel& model, double duration_s,
                            double level_db, uint32_t seed) {
  if (duration_s <= 0) throw std::invalid_argument("duration must be > 0");
  TimeTrackSet sum;
  sum.sample_rate = model.params().sample_rate;
  sum.role = "diffuse";
  const size_t n = static_cast<size_t>(duration_s * sum.sample_rate);
  sum.channels.assign(kNumMics, std::vector<float>(n, 0.0f));
  for (int k = 0; k < 8; ++k) {
    const auto src = speech_shaped_noise(duration_s, derive_seed(seed, 0xD0 + k),
                                         sum.sample_rate);
    const auto tracks = render_point_source(model, 45.0 * k, src);
    for (int m = 0; m < kNumMics; ++m)
      for (size_t i = 0; i < n; ++i) sum.channels[m][i] += tracks.channels[m][i];
  }
  calibrate_front_left(sum, level_db);
  return sum;
}

SceneTracks compose_scene(const ScenarioSpec& spec, const StftParams& params,
                          const ArrayGeometry& geometry) {
  spec.validate();
  Environment env = spec.environment == EnvironmentKind::Reverberant
                        ? Environment::reverberant(spec.seed, spec.t60_s, spec.drr_db)
                        : Environment::anechoic();
  DirectivityModel render_model(geometry, params, env);
  DirectivityModel diffuse_model(geometry, params, Environment::anechoic());

  auto source_signal = [&](size_t index, uint32_t salt) -> std::vector<float> {
    if (index < spec.source_paths.size() && !spec.source_paths[index].empty()) {
      auto wav = read_wav(spec.source_paths[index], params.sample_rate, true);
      auto sig = wav.channels.at(0);
      const size_t want = static_cast<size_t>(spec.duration_s * params.sample_rate);
      sig.resize(want, 0.0f);
      return sig;
    }
    return builtin_speech_source(spec.duration_s, derive_seed(spec.seed, salt),
                                 params.sample_rate);
  };

  SceneTracks scene;
  scene.target_deg = spec.true_target_deg;
  scene.interferer_degs = spec.interferer_true_degs;

  scene.target = render_point_source(render_model, spec.true_target_deg,
                                     source_signal(0, 0xA0));
  scene.target.role = "target";
  calibrate_front_left(scene.target, 0.0);

  for (size_t i = 0; i < spec.interferer_true_degs.size(); ++i) {
    auto t = render_point_source(render_model, spec.interferer_true_degs[i],
                                 source_signal(1 + i, 0xB0 + static_cast<uint32_t>(i)));
    t.role = "interferer";
    calibrate_front_left(t, 0.0);
    scene.interferers.push_back(std::move(t));
  }

  if (spec.diffuse_rel_db.has_value()) {
    scene.diffuse = render_diffuse(diffuse_model, spec.duration_s,
                                   *spec.diffuse_rel_db, derive_seed(spec.seed, 0xC0));
  }

  scene.mixture.sample_rate = params.sample_rate;
  scene.mixture.role = "mixture";
  const size_t n = scene.target.length();
  scene.mixture.channels.assign(kNumMics, std::vector<float>(n, 0.0f));
  for (int m = 0; m < kNumMics; ++m) {
    for (size_t i = 0; i < n; ++i) {
      float acc = scene.target.channels[m][i];
      for (const auto& v : scene.interferers) acc += v.channels[m][i];
      if (scene.diffuse) acc += scene.diffuse->channels[m][i];
      scene.mixture.channels[m][i] = acc;
    }
  }
  return scene;
}

}  // namespace beamlab
