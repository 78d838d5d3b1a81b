#include "beamlab/beamform.hpp"

#include <cmath>

namespace beamlab {

namespace {

constexpr double kGridStepDeg = 5.0;

double wrap_deg(double a) {
  a = std::fmod(a, 360.0);
  return a < 0.0 ? a + 360.0 : a;
}

double snap_angle(double theta_deg, const DesignParams& p) {
  const double wrapped = wrap_deg(theta_deg);
  const double snapped = wrap_deg(std::round(wrapped / kGridStepDeg) * kGridStepDeg);
  if (!p.snap_to_grid && std::abs(snapped - wrapped) > 1e-9)
    throw std::invalid_argument("design angle off the directivity grid");
  return snapped;
}

Vec4c ref_selector(Side side) {
  Vec4c e = Vec4c::Zero();
  e(ref_channel(side)) = 1.0;
  return e;
}

Mat4c loaded(const Mat4c& r, double loading_rel) {
  const double delta = loading_rel * r.trace().real() / kNumMics;
  return r + delta * Mat4c::Identity();
}

// Shared solve: X = R^-1 C, gram = C^H X, w = X gram^-1 g.
// Verifies the constraint residual and reports degeneracy per bin.
Vec4c solve_from_factor(const Eigen::LDLT<Mat4c>& ldlt,
                        const Eigen::MatrixXcd& c, const Eigen::VectorXcd& g,
                        int bin_index) {
  const Eigen::MatrixXcd x = ldlt.solve(c);
  const Eigen::MatrixXcd gram = c.adjoint() * x;
  const Eigen::VectorXcd q = gram.partialPivLu().solve(g);
  const Vec4c w = x * q;
  const double resid = (c.adjoint() * w - g).norm();
  if (!(resid <= 1e-6 * (1.0 + g.norm())))
    throw DegenerateConstraintsError(bin_index);
  return w;
}

}  // namespace

void DesignParams::validate() const {
  if (!(zeta > 0.0 && zeta <= 1.0)) throw std::invalid_argument("zeta out of range");
  if (!(eta >= 0.0 && eta < 1.0)) throw std::invalid_argument("eta out of range");
  if (!(rho > 0.0 && rho <= 1.0)) throw std::invalid_argument("rho out of range");
  if (!(delta_deg > 0.0)) throw std::invalid_argument("delta must be > 0");
  if (!(lambda > 0.0 && lambda <= 1.0)) throw std::invalid_argument("lambda out of range");
}

Mat4c update_covariance(const Mat4c& r_prev, const Vec4c& y, double lambda) {
  Mat4c r = lambda * r_prev + (1.0 - lambda) * (y * y.adjoint());
  return 0.5 * (r + r.adjoint().eval());
}

Vec4c lcmv_weights(const Mat4c& r, const Eigen::MatrixXcd& c,
                   const Eigen::VectorXcd& g, double loading_rel,
                   int bin_index) {
  const Eigen::LDLT<Mat4c> ldlt(loaded(r, loading_rel));
  return solve_from_factor(ldlt, c, g, bin_index);
}

ConstraintSet design_bmvdr(const DirectivityModel& model, double target_deg,
                           Side side, const DesignParams& p) {
  p.validate();
  const double theta = snap_angle(target_deg, p);
  const BinResponse d = model.response(theta);
  const int bins = model.params().n_bins();
  const int ref = ref_channel(side);

  ConstraintSet cs;
  cs.side = side;
  cs.k = 1;
  cs.design = "bmvdr";
  cs.bins.resize(bins);
  for (int f = 0; f < bins; ++f) {
    cs.bins[f].C = d.row(f).transpose();
    // Solver convention is C^H w = g while z = w^H y, so the distortionless
    // response w^H d = d_ref needs the conjugate here.
    cs.bins[f].g = Eigen::VectorXcd::Constant(1, std::conj(d(f, ref)));
  }
  return cs;
}

ConstraintSet design_robust_tlcmv(const DirectivityModel& model,
                                  double target_deg, Side side,
                                  const DesignParams& p) {
  p.validate();
  const double hi = snap_angle(target_deg + p.delta_deg, p);
  const double lo = snap_angle(target_deg - p.delta_deg, p);
  const BinResponse d_hi = model.response(hi);
  const BinResponse d_lo = model.response(lo);
  const int bins = model.params().n_bins();
  const int ref = ref_channel(side);

  ConstraintSet cs;
  cs.side = side;
  cs.k = 2;
  cs.design = "robust_tlcmv";
  cs.bins.resize(bins);
  for (int f = 0; f < bins; ++f) {
    Eigen::MatrixXcd c(kNumMics, 2);
    c.col(0) = d_hi.row(f).transpose();
    c.col(1) = d_lo.row(f).transpose();
    Eigen::VectorXcd g(2);
    g << std::conj(d_hi(f, ref)), std::conj(d_lo(f, ref));
    cs.bins[f].C = std::move(c);
    cs.bins[f].g = std::move(g);
  }
  return cs;
}

ConstraintSet design_blcmv(const DirectivityModel& model, double target_deg,
                           const std::vector<double>& interferer_degs,
                           Side side, const DesignParams& p) {
  p.validate();
  const int k_interf = static_cast<int>(interferer_degs.size());
  if (k_interf > kNumMics - 2)
    throw std::invalid_argument(
        "BLCMV supports at most M-2 = 2 interferer constraints");

  const double theta = snap_angle(target_deg, p);
  std::vector<BinResponse> d_v;
  for (double a : interferer_degs) d_v.push_back(model.response(snap_angle(a, p)));
  const BinResponse d_x = model.response(theta);
  const int bins = model.params().n_bins();
  const int ref = ref_channel(side);

  ConstraintSet cs;
  cs.side = side;
  cs.k = 1 + k_interf;
  cs.design = "blcmv";
  cs.bins.resize(bins);
  for (int f = 0; f < bins; ++f) {
    Eigen::MatrixXcd c(kNumMics, cs.k);
    Eigen::VectorXcd g(cs.k);
    c.col(0) = d_x.row(f).transpose();
    g(0) = p.zeta * std::conj(d_x(f, ref));
    for (int i = 0; i < k_interf; ++i) {
      c.col(1 + i) = d_v[i].row(f).transpose();
      g(1 + i) = p.eta * std::conj(d_v[i](f, ref));
    }
    cs.bins[f].C = std::move(c);
    cs.bins[f].g = std::move(g);
  }
  return cs;
}

AdaptiveWeights run_adaptive(const TFTensor& cov_source,
                             const ConstraintSet& left_cs,
                             const ConstraintSet& right_cs,
                             const DesignParams& p) {
  p.validate();
  const int frames = cov_source.n_frames;
  const int bins = cov_source.n_bins;
  const int warmup = static_cast<int>(
      std::ceil(p.warmup_s * cov_source.params.sample_rate / cov_source.params.hop));

  AdaptiveWeights out;
  out.left = WeightTrack(frames, bins, Side::Left);
  out.right = WeightTrack(frames, bins, Side::Right);
  out.warmup_frames = warmup;

  const Vec4c e_l = ref_selector(Side::Left);
  const Vec4c e_r = ref_selector(Side::Right);

  std::vector<Mat4c> r(bins, 1e-6 * Mat4c::Identity());
  std::vector<Vec4c> w_l(bins, e_l), w_r(bins, e_r);

  for (int t = 0; t < frames; ++t) {
    const bool in_warmup = t < warmup;
    const bool recompute = !in_warmup && ((t - warmup) % p.update_stride == 0);
    for (int f = 0; f < bins; ++f) {
      Vec4c y;
      for (int m = 0; m < kNumMics; ++m)
        y(m) = std::complex<double>(cov_source.at(t, f, m));
      r[f] = update_covariance(r[f], y, p.lambda);
      if (recompute) {
        const Eigen::LDLT<Mat4c> ldlt(loaded(r[f], p.loading));
        w_l[f] = solve_from_factor(ldlt, left_cs.bins[f].C, left_cs.bins[f].g, f);
        w_r[f] = solve_from_factor(ldlt, right_cs.bins[f].C, right_cs.bins[f].g, f);
      }
      out.left.set(t, f, in_warmup ? e_l : w_l[f]);
      out.right.set(t, f, in_warmup ? e_r : w_r[f]);
    }
  }
  return out;
}

TFTensor apply_weights(const WeightTrack& w, const TFTensor& y) {
  if (y.n_channels != kNumMics || w.n_frames != y.n_frames || w.n_bins != y.n_bins)
    throw std::invalid_argument("weight/tensor shape mismatch");
  TFTensor z(y.n_frames, y.n_bins, 1, y.params);
  for (int t = 0; t < y.n_frames; ++t) {
    for (int f = 0; f < y.n_bins; ++f) {
      std::complex<double> acc = 0.0;
      const size_t off = (static_cast<size_t>(t) * w.n_bins + f) * kNumMics;
      for (int m = 0; m < kNumMics; ++m)
        acc += std::conj(std::complex<double>(w.data[off + m])) *
               std::complex<double>(y.at(t, f, m));
      z.at(t, f, 0) = std::complex<float>(acc);
    }
  }
  return z;
}

TFTensor apply_weights(const BinWeights& w, const TFTensor& y) {
  if (y.n_channels != kNumMics ||
      static_cast<int>(w.w.size()) != y.n_bins)
    throw std::invalid_argument("weight/tensor shape mismatch");
  TFTensor z(y.n_frames, y.n_bins, 1, y.params);
  for (int t = 0; t < y.n_frames; ++t) {
    for (int f = 0; f < y.n_bins; ++f) {
      std::complex<double> acc = 0.0;
      for (int m = 0; m < kNumMics; ++m)
        acc += std::conj(w.w[f](m)) * std::complex<double>(y.at(t, f, m));
      z.at(t, f, 0) = std::complex<float>(acc);
    }
  }
  return z;
}

TFTensor bmvdr_partial_noise(const TFTensor& z, const TFTensor& y_ref,
                             double rho) {
  if (z.n_frames != y_ref.n_frames || z.n_bins != y_ref.n_bins)
    throw std::invalid_argument("track shapes differ");
  TFTensor out(z.n_frames, z.n_bins, 1, z.params);
  for (size_t i = 0; i < out.data.size(); ++i)
    out.data[i] = static_cast<float>(rho) * z.data[i] +
                  static_cast<float>(1.0 - rho) * y_ref.data[i];
  return out;
}

BinWeights solve_fixed(const BinMatrixSet& r, const ConstraintSet& cs,
                       const DesignParams& p) {
  BinWeights out;
  out.side = cs.side;
  out.design = cs.design;
  out.w.resize(r.matrices.size());
  for (size_t f = 0; f < r.matrices.size(); ++f)
    out.w[f] = lcmv_weights(r.matrices[f], cs.bins[f].C, cs.bins[f].g,
                            p.loading, static_cast<int>(f));
  return out;
}

Eigen::MatrixXd beampattern(const BinWeights& w, const DirectivitySet& d_set) {
  const int bins = static_cast<int>(w.w.size());
  Eigen::MatrixXd bp(bins, d_set.n_azimuths());
  for (int a = 0; a < d_set.n_azimuths(); ++a) {
    const BinResponse& d = d_set.responses[a];
    for (int f = 0; f < bins; ++f) {
      const std::complex<double> v = w.w[f].adjoint() * d.row(f).transpose();
      bp(f, a) = std::norm(v);
    }
  }
  return bp;
}

BinMatrixSet isotropic_diffuse_covariance(const DirectivitySet& d_set) {
  const int bins = static_cast<int>(d_set.responses.at(0).rows());
  BinMatrixSet out;
  out.kind = "isotropic-diffuse";
  out.matrices.assign(bins, Mat4c::Zero());
  for (int a = 0; a < d_set.n_azimuths(); ++a) {
    const BinResponse& d = d_set.responses[a];
    for (int f = 0; f < bins; ++f) {
      const Vec4c v = d.row(f).transpose();
      out.matrices[f] += v * v.adjoint();
    }
  }
  for (auto& m : out.matrices) m /= static_cast<double>(d_set.n_azimuths());
  return out;
}

}  // namespace beamlab
