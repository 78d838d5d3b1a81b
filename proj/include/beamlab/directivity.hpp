#pragma once

#include <Eigen/Dense>
#include <array>
#include <cstdint>
#include <vector>

#include "beamlab/stft.hpp"

namespace beamlab {

inline constexpr int kNumMics = 4;  // [FL, RL, FR, RR]
inline constexpr int kRefLeft = 0;
inline constexpr int kRefRight = 2;

// Rigid-sphere head with two BTE devices; azimuth is counterclockwise,
// 0 deg = front, 90 deg = left.
struct ArrayGeometry {
  double head_radius = 0.0875;          // m
  double left_ear_az_deg = 100.0;
  double right_ear_az_deg = -100.0;
  double mic_spacing = 0.012;           // front/rear mic distance per ear, m
  double speed_of_sound = 343.0;        // m/s
  double source_distance = 1.0;         // m

  // Mic position in the horizontal plane. m in [0, 4): FL, RL, FR, RR.
  Eigen::Vector2d mic_position(int m) const;
  // Azimuth of the mic's outward normal (its radial direction), degrees.
  double mic_normal_deg(int m) const;
  // Propagation path length from the 1 m source at azimuth theta to mic m,
  // going around the sphere on the occluded side.
  double path_length(double theta_deg, int m) const;
  // Head-shadow attenuation in dB at frequency f for mic m, source at theta.
  double shadow_db(double freq_hz, double theta_deg, int m) const;
};

enum class EnvironmentKind { Anechoic, Reverberant };

struct Environment {
  EnvironmentKind kind = EnvironmentKind::Anechoic;
  double t60_s = 0.150;
  double drr_db = 5.0;
  uint32_t seed = 1;

  static Environment anechoic() { return {}; }
  static Environment reverberant(uint32_t seed = 1, double t60 = 0.150,
                                 double drr = 5.0);
};

// Per-bin complex responses d_m(f, theta) for all four mics.
using BinResponse = Eigen::MatrixXcd;  // n_bins x 4

// Parametric directivity model replacing measured HRTFs. Pure given
// (geometry, params, environment): responses and impulse responses are
// deterministic, reverberant tails are seeded per (seed, angle, mic).
class DirectivityModel {
 public:
  DirectivityModel(ArrayGeometry geometry, StftParams params,
                   Environment env = Environment::anechoic());

  // d(f, theta) at the STFT bin centers. theta in [0, 360).
  BinResponse response(double theta_deg) const;

  // Time-domain impulse responses used to render signals (4 x length).
  std::array<std::vector<double>, kNumMics> impulse_responses(
      double theta_deg) const;

  const ArrayGeometry& geometry() const { return geometry_; }
  const StftParams& params() const { return params_; }
  const Environment& environment() const { return env_; }

  // Channel delay in seconds for a propagation path, referenced to a point
  // just outside the head so bulk delay drops out.
  double channel_delay(double path_m) const;

 private:
  BinResponse anechoic_response(double theta_deg) const;
  std::array<std::vector<double>, kNumMics> anechoic_irs(double theta_deg) const;

  ArrayGeometry geometry_;
  StftParams params_;
  Environment env_;
};

// Responses sampled on an azimuth grid (default 5 deg spacing).
struct DirectivitySet {
  std::vector<double> azimuths_deg;
  std::vector<BinResponse> responses;  // one per azimuth

  int n_azimuths() const { return static_cast<int>(azimuths_deg.size()); }
  int index_of(double theta_deg) const;  // exact grid match, -1 if absent

  static DirectivitySet build(const DirectivityModel& model,
                              double step_deg = 5.0);
};

}  // namespace beamlab
