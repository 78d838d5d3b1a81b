#include "beamlab/metrics.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <numbers>
#include <stdexcept>

namespace beamlab {

namespace {

constexpr double kSdrClampDb = 120.0;

TFTensor ref_track(const TFTensor& t, Side side) {
  TFTensor out(t.n_frames, t.n_bins, 1, t.params);
  const int ref = ref_channel(side);
  for (int i = 0; i < t.n_frames; ++i)
    for (int f = 0; f < t.n_bins; ++f) out.at(i, f, 0) = t.at(i, f, ref);
  return out;
}

TFTensor add_tracks(const TFTensor& a, const TFTensor& b) {
  TFTensor out = a;
  for (size_t i = 0; i < out.data.size(); ++i) out.data[i] += b.data[i];
  return out;
}

std::vector<double> auto_psd(const TFTensor& a, const FrameMask& mask) {
  std::vector<double> p(a.n_bins, 0.0);
  for (int t = mask.first; t < mask.last; ++t)
    for (int f = 0; f < a.n_bins; ++f)
      p[f] += std::norm(std::complex<double>(a.at(t, f, 0)));
  for (auto& v : p) v /= std::max(1, mask.count());
  return p;
}

double sum_of(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s;
}

double db10(double num, double den, double floor_ref) {
  const double fl = 1e-12 * floor_ref;
  return 10.0 * std::log10(std::max(num, fl) / std::max(den, fl));
}

}  // namespace

FrameMask steady_frames(int n_frames, int warmup_frames) {
  FrameMask m;
  m.first = std::max(1, warmup_frames);  // skip edge frame 0 and warm-up
  m.last = std::max(m.first, n_frames - 1);
  return m;
}

ShadowOutputs shadow_filter(const SceneTracks& scene,
                            const std::map<std::string, TFTensor>& tensors,
                            const AdaptiveWeights& weights,
                            const PostProc& post) {
  auto tensor = [&](const std::string& key) -> const TFTensor& {
    auto it = tensors.find(key);
    if (it == tensors.end())
      throw std::invalid_argument("missing component tensor: " + key);
    return it->second;
  };

  ShadowOutputs out;
  for (Side side : {Side::Left, Side::Right}) {
    const WeightTrack& w = side == Side::Left ? weights.left : weights.right;
    SideShadow& sh = side == Side::Left ? out.left : out.right;

    TFTensor z_mix = apply_weights(w, tensor("mixture"));

    // Per-bin post-processing transfer recorded from the mixture run;
    // applied identically to every component so additivity is exact.
    std::vector<std::complex<float>> h;
    if (post.kind == PostProc::Kind::ComplexRatio) {
      const TFTensor& num =
          side == Side::Left ? post.ratio_num_left : post.ratio_num_right;
      double mean_pow = 0.0;
      for (const auto& v : z_mix.data) mean_pow += std::norm(v);
      mean_pow /= std::max<size_t>(1, z_mix.data.size());
      const double floor_mag = std::sqrt(1e-12 * mean_pow);
      h.resize(z_mix.data.size());
      for (size_t i = 0; i < h.size(); ++i) {
        const std::complex<double> z(z_mix.data[i]);
        const double mag = std::max(std::abs(z), floor_mag);
        const std::complex<double> denom =
            std::abs(z) > 0.0 ? z / std::abs(z) * mag
                              : std::complex<double>(mag, 0.0);
        h[i] = std::complex<float>(std::complex<double>(num.data[i]) / denom);
      }
    }

    auto process = [&](const TFTensor& component) {
      TFTensor z = apply_weights(w, component);
      switch (post.kind) {
        case PostProc::Kind::None:
          break;
        case PostProc::Kind::PartialNoise:
          z = bmvdr_partial_noise(z, ref_track(component, side), post.rho);
          break;
        case PostProc::Kind::ComplexRatio:
          for (size_t i = 0; i < z.data.size(); ++i) z.data[i] *= h[i];
          break;
      }
      return z;
    };

    sh.target = process(tensor("target"));
    for (size_t i = 0; i < scene.interferers.size(); ++i)
      sh.interferers.push_back(process(tensor("interferer" + std::to_string(i))));
    if (!sh.interferers.empty()) {
      sh.interferer_sum = sh.interferers[0];
      for (size_t i = 1; i < sh.interferers.size(); ++i)
        sh.interferer_sum = add_tracks(sh.interferer_sum, sh.interferers[i]);
    }
    if (scene.diffuse) sh.diffuse = process(tensor("diffuse"));
    sh.mixture = process(tensor("mixture"));
  }
  return out;
}

std::vector<std::complex<double>> long_psd(const TFTensor& a, const TFTensor& b,
                                           const FrameMask& mask) {
  if (a.n_frames != b.n_frames || a.n_bins != b.n_bins)
    throw std::invalid_argument("tracks not aligned");
  if (mask.count() <= 0) throw std::invalid_argument("no frames in mask");
  std::vector<std::complex<double>> p(a.n_bins, 0.0);
  for (int t = mask.first; t < mask.last; ++t)
    for (int f = 0; f < a.n_bins; ++f)
      p[f] += std::complex<double>(a.at(t, f, 0)) *
              std::conj(std::complex<double>(b.at(t, f, 0)));
  for (auto& v : p) v /= mask.count();
  return p;
}

namespace {

// ITF = Gamma_(right,left) / Gamma_(left,left), absent on denominator underflow.
std::vector<std::optional<std::complex<double>>> itf(
    const TFTensor& l, const TFTensor& r, const FrameMask& mask) {
  const auto cross = long_psd(r, l, mask);
  const auto auto_l = long_psd(l, l, mask);
  double mean = 0.0;
  for (const auto& v : auto_l) mean += v.real();
  mean /= std::max<size_t>(1, auto_l.size());
  const double floor = 1e-12 * mean;

  std::vector<std::optional<std::complex<double>>> out(cross.size());
  for (size_t f = 0; f < cross.size(); ++f)
    if (auto_l[f].real() > floor) out[f] = cross[f] / auto_l[f].real();
  return out;
}

double wrap_pi(double a) {
  while (a > std::numbers::pi) a -= 2.0 * std::numbers::pi;
  while (a <= -std::numbers::pi) a += 2.0 * std::numbers::pi;
  return a;
}

}  // namespace

CueCurves itf_cues(const TFTensor& in_l, const TFTensor& in_r,
                   const TFTensor& out_l, const TFTensor& out_r,
                   const FrameMask& mask, int crossover) {
  const auto itf_in = itf(in_l, in_r, mask);
  const auto itf_out = itf(out_l, out_r, mask);
  const int bins = in_l.n_bins;

  CueCurves c;
  c.delta_ild_db.assign(bins, std::nullopt);
  c.delta_ipd_rad.assign(bins, std::nullopt);
  for (int f = 0; f < bins; ++f) {
    if (!itf_in[f] || !itf_out[f]) continue;
    if (std::abs(*itf_in[f]) == 0.0 || std::abs(*itf_out[f]) == 0.0) continue;
    if (f >= crossover) {
      const double ild_in = 10.0 * std::log10(std::norm(*itf_in[f]));
      const double ild_out = 10.0 * std::log10(std::norm(*itf_out[f]));
      c.delta_ild_db[f] = ild_out - ild_in;
    } else {
      c.delta_ipd_rad[f] =
          wrap_pi(std::arg(*itf_out[f]) - std::arg(*itf_in[f]));
    }
  }
  return c;
}

std::vector<std::optional<double>> msc_error(const TFTensor& in_l,
                                             const TFTensor& in_r,
                                             const TFTensor& out_l,
                                             const TFTensor& out_r,
                                             const FrameMask& mask) {
  auto msc = [&](const TFTensor& l, const TFTensor& r)
      -> std::vector<std::optional<double>> {
    const auto cross = long_psd(r, l, mask);
    const auto al = long_psd(l, l, mask);
    const auto ar = long_psd(r, r, mask);
    double mean = 0.0;
    for (const auto& v : al) mean += v.real();
    mean /= std::max<size_t>(1, al.size());
    const double floor = 1e-12 * mean;

    std::vector<std::optional<double>> out(cross.size());
    for (size_t f = 0; f < cross.size(); ++f) {
      const double den = al[f].real() * ar[f].real();
      if (al[f].real() > floor && ar[f].real() > floor)
        out[f] = std::min(1.0, std::norm(cross[f]) / den);
    }
    return out;
  };

  const auto in = msc(in_l, in_r);
  const auto out = msc(out_l, out_r);
  std::vector<std::optional<double>> delta(in.size());
  for (size_t f = 0; f < in.size(); ++f)
    if (in[f] && out[f]) delta[f] = *out[f] - *in[f];
  return delta;
}

GainCurves ratio_gains(const SideShadow& shadow,
                       const std::map<std::string, TFTensor>& tensors,
                       Side side, const FrameMask& mask) {
  auto input_ref = [&](const std::string& key) {
    return ref_track(tensors.at(key), side);
  };
  const bool has_interf = !shadow.interferers.empty();
  const bool has_diffuse = shadow.diffuse.has_value();

  const auto p_zx = auto_psd(shadow.target, mask);
  const auto p_xref = auto_psd(input_ref("target"), mask);
  const double ref_scale = sum_of(p_xref) / p_xref.size();

  std::optional<std::vector<double>> p_zv, p_vref, p_zn, p_nref;
  if (has_interf) {
    p_zv = auto_psd(shadow.interferer_sum, mask);
    TFTensor vin = input_ref("interferer0");
    for (size_t i = 1; i < shadow.interferers.size(); ++i)
      vin = add_tracks(vin, input_ref("interferer" + std::to_string(i)));
    p_vref = auto_psd(vin, mask);
  }
  if (has_diffuse) {
    p_zn = auto_psd(*shadow.diffuse, mask);
    p_nref = auto_psd(input_ref("diffuse"), mask);
  }

  GainCurves g;
  const int bins = static_cast<int>(p_zx.size());
  auto gain_curve = [&](const std::vector<double>& zn_out,
                        const std::vector<double>& n_in) {
    std::vector<double> curve(bins);
    for (int f = 0; f < bins; ++f)
      curve[f] = db10(p_zx[f], zn_out[f], ref_scale) -
                 db10(p_xref[f], n_in[f], ref_scale);
    const double bb = db10(sum_of(p_zx), sum_of(zn_out), ref_scale) -
                      db10(sum_of(p_xref), sum_of(n_in), ref_scale);
    return std::make_pair(curve, bb);
  };

  if (has_interf || has_diffuse) {
    // noise = interferers + diffuse, whichever exist
    std::vector<double> noise_out(bins, 0.0), noise_in(bins, 0.0);
    if (has_interf) {
      TFTensor zsum = shadow.interferer_sum;
      TFTensor insum = input_ref("interferer0");
      for (size_t i = 1; i < shadow.interferers.size(); ++i)
        insum = add_tracks(insum, input_ref("interferer" + std::to_string(i)));
      if (has_diffuse) {
        zsum = add_tracks(zsum, *shadow.diffuse);
        insum = add_tracks(insum, input_ref("diffuse"));
      }
      noise_out = auto_psd(zsum, mask);
      noise_in = auto_psd(insum, mask);
    } else {
      noise_out = *p_zn;
      noise_in = *p_nref;
    }
    auto [curve, bb] = gain_curve(noise_out, noise_in);
    g.snr_gain_db = curve;
    g.snr_gain_bb = bb;
  }
  if (has_interf) {
    auto [curve, bb] = gain_curve(*p_zv, *p_vref);
    g.sir_gain_db = curve;
    g.sir_gain_bb = bb;
  }
  if (has_diffuse) {
    auto [curve, bb] = gain_curve(*p_zn, *p_nref);
    g.sdnr_gain_db = curve;
    g.sdnr_gain_bb = bb;
  }
  return g;
}

DistortionResult distortion(const TFTensor& z_target, const TFTensor& x_ref,
                            const FrameMask& mask) {
  const auto p_x = auto_psd(x_ref, mask);
  const double total = sum_of(p_x);
  if (total <= 0.0) throw std::invalid_argument("silent target");

  TFTensor dist = z_target;
  for (size_t i = 0; i < dist.data.size(); ++i) dist.data[i] -= x_ref.data[i];
  const auto p_d = auto_psd(dist, mask);
  const auto p_z = auto_psd(z_target, mask);
  const double floor = 1e-12 * total / p_x.size();

  DistortionResult r;
  const int bins = static_cast<int>(p_x.size());
  r.sdr_db.resize(bins);
  r.sdmag_db.resize(bins);
  for (int f = 0; f < bins; ++f) {
    r.sdr_db[f] = p_d[f] <= floor
                      ? kSdrClampDb
                      : std::min(kSdrClampDb,
                                 10.0 * std::log10(std::max(p_x[f], floor) / p_d[f]));
    r.sdmag_db[f] = std::abs(10.0 * std::log10(std::max(p_x[f], floor)) -
                             10.0 * std::log10(std::max(p_z[f], floor)));
  }
  const double d_total = sum_of(p_d);
  r.sdr_bb = d_total <= floor ? kSdrClampDb
                              : std::min(kSdrClampDb, 10.0 * std::log10(total / d_total));
  r.sdmag_bb = std::abs(10.0 * std::log10(total) -
                        10.0 * std::log10(std::max(sum_of(p_z), floor)));
  return r;
}

Side better_ear(const std::map<std::string, TFTensor>& tensors,
                const FrameMask& mask) {
  auto snr = [&](Side side) {
    const auto p_x = auto_psd(ref_track(tensors.at("target"), side), mask);
    std::optional<TFTensor> noise;
    for (const auto& [key, tensor] : tensors) {
      if (key == "target" || key == "mixture") continue;
      TFTensor r = ref_track(tensor, side);
      noise = noise ? add_tracks(*noise, r) : std::move(r);
    }
    if (!noise) return std::numeric_limits<double>::infinity();
    const double n = sum_of(auto_psd(*noise, mask));
    return n > 0.0 ? sum_of(p_x) / n : std::numeric_limits<double>::infinity();
  };
  const double l = snr(Side::Left), r = snr(Side::Right);
  return r > l ? Side::Right : Side::Left;  // tie -> left
}

std::optional<double> band_average(const std::vector<std::optional<double>>& curve,
                                   int first_bin, int last_bin) {
  double acc = 0.0;
  int n = 0;
  for (int f = std::max(0, first_bin);
       f < std::min<int>(last_bin, static_cast<int>(curve.size())); ++f) {
    if (curve[f]) {
      acc += *curve[f];
      ++n;
    }
  }
  if (n == 0) return std::nullopt;
  return acc / n;
}

void write_report_csv(const std::string& path,
                      const std::vector<MetricReport>& reports,
                      const StftParams& params) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot write csv: " + path);
  f << "# beamlab metrics v1\n";
  f << "scenario,algorithm,side,metric,bin,value\n";
  auto side_name = [](Side s) { return s == Side::Left ? "left" : "right"; };
  for (const auto& r : reports) {
    const std::string base = r.scenario + "," + r.algorithm + ",";
    const std::string ear = side_name(r.better_ear_side);
    auto row = [&](const std::string& side, const std::string& metric,
                   const std::string& bin, double value) {
      f << r.scenario << ',' << r.algorithm << ',' << side << ',' << metric
        << ',' << bin << ',' << value << '\n';
    };
    auto curve_rows = [&](const std::string& metric,
                          const std::vector<double>& curve) {
      for (size_t i = 0; i < curve.size(); ++i)
        row(ear, metric, std::to_string(i), curve[i]);
    };
    auto opt_curve_rows = [&](const std::string& metric,
                              const std::vector<std::optional<double>>& curve,
                              const std::string& side) {
      for (size_t i = 0; i < curve.size(); ++i)
        if (curve[i]) row(side, metric, std::to_string(i), *curve[i]);
    };

    if (r.gains.snr_gain_bb) row(ear, "snr_gain_db", "broadband", *r.gains.snr_gain_bb);
    if (r.gains.sir_gain_bb) row(ear, "sir_gain_db", "broadband", *r.gains.sir_gain_bb);
    if (r.gains.sdnr_gain_bb) row(ear, "sdnr_gain_db", "broadband", *r.gains.sdnr_gain_bb);
    if (r.gains.snr_gain_db) curve_rows("snr_gain_db", *r.gains.snr_gain_db);
    if (r.gains.sir_gain_db) curve_rows("sir_gain_db", *r.gains.sir_gain_db);
    if (r.gains.sdnr_gain_db) curve_rows("sdnr_gain_db", *r.gains.sdnr_gain_db);
    if (r.target_distortion) {
      row(ear, "sdr_db", "broadband", r.target_distortion->sdr_bb);
      row(ear, "sdmag_db", "broadband", r.target_distortion->sdmag_bb);
      curve_rows("sdr_db", r.target_distortion->sdr_db);
      curve_rows("sdmag_db", r.target_distortion->sdmag_db);
    }
    opt_curve_rows("delta_ild_db", r.interferer_cues.delta_ild_db, "both");
    opt_curve_rows("delta_ipd_rad", r.interferer_cues.delta_ipd_rad, "both");
    opt_curve_rows("delta_msc", r.msc_err, "both");
    if (r.ild_err_bb) row("both", "ild_err_db", "band", *r.ild_err_bb);
    if (r.ipd_err_bb) row("both", "ipd_err_rad", "band", *r.ipd_err_bb);
    if (r.msc_err_bb) row("both", "msc_err", "band", *r.msc_err_bb);
    (void)base;
    (void)params;
  }
}

}  // namespace beamlab
