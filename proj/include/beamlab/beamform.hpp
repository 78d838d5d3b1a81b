#pragma once

#include <Eigen/Dense>
#include <stdexcept>
#include <string>
#include <vector>

#include "beamlab/directivity.hpp"
#include "beamlab/stft.hpp"

namespace beamlab {

using Mat4c = Eigen::Matrix4cd;
using Vec4c = Eigen::Vector4cd;

enum class Side { Left, Right };

inline int ref_channel(Side s) { return s == Side::Left ? kRefLeft : kRefRight; }

struct DesignParams {
  double zeta = 1.0;        // target constraint gain
  double eta = 0.2;         // interferer constraint gain
  double delta_deg = 5.0;   // half-spread of the robust target constraints
  double rho = 0.7;         // partial-noise mix weight
  double loading = 1e-4;    // diagonal loading, relative to trace/M
  double lambda = 0.985;    // covariance forgetting factor
  double warmup_s = 0.25;   // reference-selector fallback at startup
  int update_stride = 1;    // weight recompute cadence in frames
  bool snap_to_grid = true; // snap off-grid design angles instead of rejecting

  void validate() const;
};

struct BinConstraints {
  Eigen::MatrixXcd C;  // M x k
  Eigen::VectorXcd g;  // k
};

struct ConstraintSet {
  std::vector<BinConstraints> bins;
  Side side = Side::Left;
  int k = 0;
  std::string design;
};

struct DegenerateConstraintsError : std::runtime_error {
  explicit DegenerateConstraintsError(int bin)
      : std::runtime_error("degenerate constraints at bin " + std::to_string(bin)),
        bin_index(bin) {}
  int bin_index;
};

// Per-bin Hermitian M x M matrices.
struct BinMatrixSet {
  std::vector<Mat4c> matrices;
  std::string kind;
  double forgetting_factor = 1.0;
};

// Per-bin solved weights of a fixed design.
struct BinWeights {
  std::vector<Vec4c> w;
  Side side = Side::Left;
  std::string design;
};

// Time-varying weights from the adaptive run, stored per (frame, bin).
class WeightTrack {
 public:
  WeightTrack() = default;
  WeightTrack(int frames, int bins, Side side)
      : n_frames(frames), n_bins(bins), side(side),
        data(static_cast<size_t>(frames) * bins * kNumMics) {}

  Vec4c at(int t, int f) const {
    const size_t off = (static_cast<size_t>(t) * n_bins + f) * kNumMics;
    Vec4c w;
    for (int m = 0; m < kNumMics; ++m) w(m) = std::complex<double>(data[off + m]);
    return w;
  }
  void set(int t, int f, const Vec4c& w) {
    const size_t off = (static_cast<size_t>(t) * n_bins + f) * kNumMics;
    for (int m = 0; m < kNumMics; ++m) data[off + m] = std::complex<float>(w(m));
  }

  int n_frames = 0;
  int n_bins = 0;
  Side side = Side::Left;
  std::vector<std::complex<float>> data;
};

// R <- lambda*R + (1-lambda)*y y^H, Hermitian symmetry re-enforced.
Mat4c update_covariance(const Mat4c& r_prev, const Vec4c& y, double lambda);

// Closed-form LCMV solve on the loaded matrix R + loading*(tr(R)/M)*I.
Vec4c lcmv_weights(const Mat4c& r, const Eigen::MatrixXcd& c,
                   const Eigen::VectorXcd& g, double loading_rel,
                   int bin_index = -1);

// Constraint builders; design responses always come from the given
// (anechoic) model at the estimated angles.
ConstraintSet design_bmvdr(const DirectivityModel& model, double target_deg,
                           Side side, const DesignParams& p = {});
ConstraintSet design_robust_tlcmv(const DirectivityModel& model,
                                  double target_deg, Side side,
                                  const DesignParams& p = {});
ConstraintSet design_blcmv(const DirectivityModel& model, double target_deg,
                           const std::vector<double>& interferer_degs,
                           Side side, const DesignParams& p = {});

// Streams per-frame covariance from cov_source and solves both sides'
// weights every update_stride frames. Warm-up frames fall back to the
// reference selector.
struct AdaptiveWeights {
  WeightTrack left;
  WeightTrack right;
  int warmup_frames = 0;
};
AdaptiveWeights run_adaptive(const TFTensor& cov_source,
                             const ConstraintSet& left_cs,
                             const ConstraintSet& right_cs,
                             const DesignParams& p);

// z(f,t) = w^H(f,t) y(f,t); returns a single-channel tensor.
TFTensor apply_weights(const WeightTrack& w, const TFTensor& y);
TFTensor apply_weights(const BinWeights& w, const TFTensor& y);

// z_n = rho*z + (1-rho)*y_ref, complex per bin.
TFTensor bmvdr_partial_noise(const TFTensor& z, const TFTensor& y_ref, double rho);

// Fixed-design solve against a per-bin covariance (for beampatterns).
BinWeights solve_fixed(const BinMatrixSet& r, const ConstraintSet& cs,
                       const DesignParams& p = {});

// BP(f, theta) = |w^H(f) d(f, theta)|^2.
Eigen::MatrixXd beampattern(const BinWeights& w, const DirectivitySet& d_set);

// R_diff(f) = mean over grid azimuths of d d^H.
BinMatrixSet isotropic_diffuse_covariance(const DirectivitySet& d_set);

}  // namespace beamlab
