#include "beamlab/directivity.hpp"

#include <cmath>
#include <numbers>
#include <numeric>
#include <random>
#include <stdexcept>

#include "beamlab/fft.hpp"

namespace beamlab {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr int kAnechoicIrLen = 2048;
constexpr int kReverbIrLen = 8192;
constexpr int kCoherentTail = 50;  // samples shared across mics at tail start

double deg2rad(double d) { return d * kPi / 180.0; }

double wrap_angle_diff_deg(double a, double b) {
  double d = std::fmod(std::abs(a - b), 360.0);
  return d > 180.0 ? 360.0 - d : d;
}

uint32_t mix_hash(uint32_t a, uint32_t b) {
  uint64_t h = (static_cast<uint64_t>(a) << 32) | b;
  h ^= h >> 33;
  h *= 0xff51afd7ed558ccdULL;
  h ^= h >> 33;
  h *= 0xc4ceb9fe1a85ec53ULL;
  h ^= h >> 33;
  return static_cast<uint32_t>(h);
}

}  // namespace

Environment Environment::reverberant(uint32_t seed, double t60, double drr) {
  if (t60 <= 0) throw std::invalid_argument("t60 must be > 0");
  Environment e;
  e.kind = EnvironmentKind::Reverberant;
  e.t60_s = t60;
  e.drr_db = drr;
  e.seed = seed;
  return e;
}

Eigen::Vector2d ArrayGeometry::mic_position(int m) const {
  const double ear_az = deg2rad(m < 2 ? left_ear_az_deg : right_ear_az_deg);
  Eigen::Vector2d ear(head_radius * std::cos(ear_az),
                      head_radius * std::sin(ear_az));
  const double dx = (m % 2 == 0 ? 0.5 : -0.5) * mic_spacing;  // front : rear
  return ear + Eigen::Vector2d(dx, 0.0);
}

double ArrayGeometry::mic_normal_deg(int m) const {
  const Eigen::Vector2d p = mic_position(m);
  return std::atan2(p.y(), p.x()) * 180.0 / kPi;
}

double ArrayGeometry::path_length(double theta_deg, int m) const {
  const double a = head_radius;
  const Eigen::Vector2d s(source_distance * std::cos(deg2rad(theta_deg)),
                          source_distance * std::sin(deg2rad(theta_deg)));
  const Eigen::Vector2d p = mic_position(m);
  const double ds = s.norm();
  const double rm = p.norm();
  const double gamma = std::acos(std::clamp(s.dot(p) / (ds * rm), -1.0, 1.0));
  const double arc = gamma - std::acos(std::clamp(a / ds, -1.0, 1.0)) -
                     std::acos(std::clamp(a / rm, -1.0, 1.0));
  if (arc <= 0.0) return (s - p).norm();
  return std::sqrt(std::max(0.0, ds * ds - a * a)) +
         std::sqrt(std::max(0.0, rm * rm - a * a)) + a * arc;
}

double ArrayGeometry::shadow_db(double freq_hz, double theta_deg, int m) const {
  const double delta = wrap_angle_diff_deg(theta_deg, mic_normal_deg(m));
  const double a_max =
      std::min(18.0, 20.0 * std::log10(1.0 + freq_hz / 1500.0));
  return a_max * (1.0 - std::cos(deg2rad(delta))) / 2.0;
}

DirectivityModel::DirectivityModel(ArrayGeometry geometry, StftParams params,
                                   Environment env)
    : geometry_(std::move(geometry)), params_(params), env_(env) {
  params_.validate();
}

// Bulk propagation from the source is common to all channels and carries no
// spatial information; referencing delays to a point just outside the head
// keeps the per-channel delays small so the narrowband STFT model stays
// accurate (large bulk delays cause target self-cancellation).
double DirectivityModel::channel_delay(double path_m) const {
  const double ref =
      std::max(0.0, geometry_.source_distance - 2.0 * geometry_.head_radius);
  return (path_m - ref) / geometry_.speed_of_sound;
}

BinResponse DirectivityModel::anechoic_response(double theta_deg) const {
  const int bins = params_.n_bins();
  BinResponse d(bins, kNumMics);
  for (int m = 0; m < kNumMics; ++m) {
    const double r = geometry_.path_length(theta_deg, m);
    const double tau = channel_delay(r);
    for (int f = 0; f < bins; ++f) {
      const double hz = params_.bin_hz(f);
      const double gain = std::pow(10.0, -geometry_.shadow_db(hz, theta_deg, m) / 20.0);
      const double phase = -2.0 * kPi * hz * tau;
      d(f, m) = gain / r * std::complex<double>(std::cos(phase), std::sin(phase));
    }
  }
  return d;
}

std::array<std::vector<double>, kNumMics> DirectivityModel::anechoic_irs(
    double theta_deg) const {
  const int n = kAnechoicIrLen;
  const int nb = n / 2 + 1;
  const double fs = params_.sample_rate;
  std::array<std::vector<double>, kNumMics> irs;
  std::vector<std::complex<double>> h(nb);
  for (int m = 0; m < kNumMics; ++m) {
    const double r = geometry_.path_length(theta_deg, m);
    const double tau = channel_delay(r);
    for (int k = 0; k < nb; ++k) {
      const double hz = k * fs / n;
      const double gain =
          std::pow(10.0, -geometry_.shadow_db(hz, theta_deg, m) / 20.0);
      const double phase = -2.0 * kPi * hz * tau;
      h[k] = gain / r * std::complex<double>(std::cos(phase), std::sin(phase));
    }
    irs[m] = irfft(h, n);
    // The ifft is circular: the band-limited delay's negative-time sinc tail
    // wraps to the end of the buffer as a spurious long echo. The true
    // response is concentrated in the first few hundred samples, so a smooth
    // fade over the second half removes the wrap-around at negligible cost.
    for (int i = n / 2; i < n; ++i) {
      const double x = static_cast<double>(i - n / 2) / (n / 2);
      irs[m][i] *= 0.5 * (1.0 + std::cos(kPi * x));
    }
  }
  return irs;
}

BinResponse DirectivityModel::response(double theta_deg) const {
  if (theta_deg < 0.0 || theta_deg >= 360.0)
    throw std::invalid_argument("azimuth must be in [0, 360)");
  if (env_.kind == EnvironmentKind::Anechoic)
    return anechoic_response(theta_deg);

  // Reverberant: exact DFT of the impulse response at the bin centers.
  // IR length is a multiple of fft_size, so the values are a strided FFT.
  const auto irs = impulse_responses(theta_deg);
  const int stride = kReverbIrLen / params_.fft_size;
  const int bins = params_.n_bins();
  BinResponse d(bins, kNumMics);
  for (int m = 0; m < kNumMics; ++m) {
    auto spec = rfft(irs[m]);
    for (int f = 0; f < bins; ++f) d(f, m) = spec[f * stride];
  }
  return d;
}

std::array<std::vector<double>, kNumMics> DirectivityModel::impulse_responses(
    double theta_deg) const {
  if (theta_deg < 0.0 || theta_deg >= 360.0)
    throw std::invalid_argument("azimuth must be in [0, 360)");
  auto irs = anechoic_irs(theta_deg);
  if (env_.kind == EnvironmentKind::Anechoic) return irs;

  const double fs = params_.sample_rate;
  const uint32_t angle_key =
      static_cast<uint32_t>(std::llround(theta_deg * 1000.0));

  // Coherent early segment, shared by all mics.
  std::mt19937 rng_common(mix_hash(env_.seed, mix_hash(angle_key, 0xC0FFEE)));
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::array<double, kCoherentTail> common;
  for (auto& c : common) c = gauss(rng_common);

  for (int m = 0; m < kNumMics; ++m) {
    auto& ir = irs[m];
    const double direct_energy =
        std::inner_product(ir.begin(), ir.end(), ir.begin(), 0.0);
    ir.resize(kReverbIrLen, 0.0);

    const double tau = channel_delay(geometry_.path_length(theta_deg, m));
    const int n_start = static_cast<int>(std::lround(tau * fs)) + 1;
    const double decay = -3.0 * std::log(10.0) / (env_.t60_s * fs);

    std::mt19937 rng(mix_hash(env_.seed, mix_hash(angle_key, m + 1)));
    std::vector<double> tail(kReverbIrLen, 0.0);
    double tail_energy = 0.0;
    for (int n = n_start; n < kReverbIrLen; ++n) {
      const int rel = n - n_start;
      const double sample = rel < kCoherentTail ? common[rel] : gauss(rng);
      tail[n] = std::exp(decay * rel) * sample;
      tail_energy += tail[n] * tail[n];
    }
    const double scale =
        std::sqrt(direct_energy / (tail_energy * std::pow(10.0, env_.drr_db / 10.0)));
    for (int n = 0; n < kReverbIrLen; ++n) ir[n] += scale * tail[n];
  }
  return irs;
}

int DirectivitySet::index_of(double theta_deg) const {
  for (int i = 0; i < n_azimuths(); ++i)
    if (std::abs(azimuths_deg[i] - theta_deg) < 1e-9) return i;
  return -1;
}

DirectivitySet DirectivitySet::build(const DirectivityModel& model,
                                     double step_deg) {
  DirectivitySet set;
  for (double az = 0.0; az < 360.0 - 1e-9; az += step_deg) {
    set.azimuths_deg.push_back(az);
    set.responses.push_back(model.response(az));
  }
  return set;
}

}  // namespace beamlab
