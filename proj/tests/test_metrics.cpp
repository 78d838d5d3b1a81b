#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <complex>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <numbers>
#include <random>
#include <vector>

#include "beamlab/harness.hpp"
#include "beamlab/metrics.hpp"

using namespace beamlab;
using cf = std::complex<float>;
using cd = std::complex<double>;

namespace {

constexpr double kPi = std::numbers::pi;

TFTensor mono_tensor(int frames, const StftParams& p) {
  return TFTensor(frames, p.n_bins(), 1, p);
}

TFTensor random_mono(int frames, const StftParams& p, uint32_t seed) {
  TFTensor t = mono_tensor(frames, p);
  std::mt19937 rng(seed);
  std::normal_distribution<float> g(0.0f, 1.0f);
  for (auto& v : t.data) v = {g(rng), g(rng)};
  return t;
}

TFTensor scaled(const TFTensor& t, cd c) {
  TFTensor out = t;
  for (auto& v : out.data) v = cf(cd(v) * c);
  return out;
}

}  // namespace

TEST_CASE("steady frames skip the first frame, warm-up, and the last frame") {
  FrameMask m = steady_frames(100, 0);
  CHECK(m.first == 1);
  CHECK(m.last == 99);
  m = steady_frames(100, 47);
  CHECK(m.first == 47);
  CHECK(m.count() == 52);
}

TEST_CASE("long_psd basics") {
  StftParams p;
  TFTensor a = mono_tensor(20, p);
  for (auto& v : a.data) v = {1.0f, 0.0f};
  FrameMask m = steady_frames(20, 0);
  const auto g = long_psd(a, a, m);
  for (const auto& v : g) CHECK(std::abs(v - cd(1.0)) <= 1e-6);

  const TFTensor x = random_mono(200, p, 1);
  const TFTensor y = random_mono(200, p, 2);
  FrameMask m2 = steady_frames(200, 0);
  const auto gxy = long_psd(x, y, m2);
  const auto gyx = long_psd(y, x, m2);
  for (size_t f = 0; f < gxy.size(); ++f)
    CHECK(std::abs(gxy[f] - std::conj(gyx[f])) <= 1e-5);

  const auto gxx = long_psd(x, x, m2);
  double mean = 0.0;
  for (const auto& v : gxx) mean += v.real();
  mean /= gxx.size();
  CHECK(mean == doctest::Approx(2.0).epsilon(5.0 / std::sqrt(198.0)));

  CHECK_THROWS(long_psd(x, y, FrameMask{5, 5}));
}

TEST_CASE("itf cue deltas recover hand-built interaural changes") {
  StftParams p;
  const int xbin = 16;
  const TFTensor src = random_mono(300, p, 5);
  // Rank-one interaural pair: right = 0.5 e^{-j pi/4} * left.
  const TFTensor in_l = src;
  const TFTensor in_r = scaled(src, 0.5 * std::polar(1.0, -kPi / 4.0));
  FrameMask m = steady_frames(300, 0);

  SUBCASE("identity output keeps the cues") {
    const CueCurves c = itf_cues(in_l, in_r, in_l, in_r, m, xbin);
    for (int f = 0; f < p.n_bins(); ++f) {
      if (f >= xbin) {
        REQUIRE(c.delta_ild_db[f].has_value());
        CHECK(std::abs(*c.delta_ild_db[f]) <= 1e-4);
      } else if (c.delta_ipd_rad[f]) {
        CHECK(std::abs(*c.delta_ipd_rad[f]) <= 1e-4);
      }
    }
  }

  SUBCASE("scaling the right output shifts ILD and IPD by the scale") {
    const TFTensor out_r =
        scaled(in_r, 2.0 * std::polar(1.0, kPi / 8.0));
    const CueCurves c = itf_cues(in_l, in_r, in_l, out_r, m, xbin);
    for (int f = 1; f < p.n_bins(); ++f) {
      if (f >= xbin) {
        REQUIRE(c.delta_ild_db[f].has_value());
        CHECK(*c.delta_ild_db[f] ==
              doctest::Approx(20.0 * std::log10(2.0)).epsilon(1e-3));
      } else {
        REQUIRE(c.delta_ipd_rad[f].has_value());
        CHECK(*c.delta_ipd_rad[f] == doctest::Approx(kPi / 8.0).epsilon(1e-3));
      }
    }
  }
}

TEST_CASE("msc error: identical pairs, independent pairs, identity") {
  StftParams p;
  FrameMask m = steady_frames(1200, 0);
  const TFTensor a = random_mono(1200, p, 7);
  const TFTensor b = random_mono(1200, p, 8);

  // in: identical pair (MSC 1); out: identical pair -> delta 0
  auto d0 = msc_error(a, a, b, b, m);
  for (const auto& v : d0)
    if (v) CHECK(std::abs(*v) <= 1e-6);

  // out: independent pair (MSC ~ 0) -> delta ~ -1
  auto d1 = msc_error(a, a, a, b, m);
  for (const auto& v : d1) {
    REQUIRE(v.has_value());
    CHECK(*v == doctest::Approx(-1.0).epsilon(0.02));
  }
}

TEST_CASE("distortion arithmetic: identity, scaling, phase flip") {
  StftParams p;
  const TFTensor x = random_mono(100, p, 9);
  FrameMask m = steady_frames(100, 0);

  const DistortionResult ident = distortion(x, x, m);
  CHECK(ident.sdr_bb == doctest::Approx(120.0));
  CHECK(ident.sdmag_bb == doctest::Approx(0.0).epsilon(1e-6));

  const DistortionResult half = distortion(scaled(x, 0.5), x, m);
  CHECK(half.sdmag_bb == doctest::Approx(6.0206).epsilon(1e-3));
  CHECK(half.sdr_bb == doctest::Approx(6.0206).epsilon(1e-3));

  const DistortionResult flip = distortion(scaled(x, -1.0), x, m);
  CHECK(flip.sdmag_bb == doctest::Approx(0.0).epsilon(1e-5));
  CHECK(flip.sdr_bb == doctest::Approx(-6.0206).epsilon(1e-3));

  TFTensor silent = mono_tensor(100, p);
  CHECK_THROWS(distortion(x, silent, m));
}

TEST_CASE("band_average arithmetic") {
  std::vector<std::optional<double>> curve = {2.0, 4.0};
  CHECK(*band_average(curve, 0, 2) == doctest::Approx(3.0));
  curve = {2.0, std::nullopt, 4.0, 6.0};
  CHECK(*band_average(curve, 0, 4) == doctest::Approx(4.0));
  CHECK(*band_average(curve, 0, 1) == doctest::Approx(2.0));
  CHECK(!band_average(curve, 1, 2).has_value());
}

namespace {

// A tiny synthetic scene in TF domain: target + interferer + diffuse with
// known per-channel responses, for shadow/gain fixtures.
struct ToyScene {
  SceneTracks scene;  // time-domain members unused by shadow_filter
  std::map<std::string, TFTensor> tensors;
  AdaptiveWeights identity;
  int frames = 60;

  explicit ToyScene(const StftParams& p) {
    TFTensor target(frames, p.n_bins(), kNumMics, p);
    TFTensor interf = target, diffuse = target, mixture = target;
    std::mt19937 rng(13);
    std::normal_distribution<float> g(0.0f, 1.0f);
    for (size_t i = 0; i < target.data.size(); ++i) {
      target.data[i] = {g(rng), g(rng)};
      interf.data[i] = {g(rng), g(rng)};
      diffuse.data[i] = {g(rng), g(rng)};
      mixture.data[i] = target.data[i] + interf.data[i] + diffuse.data[i];
    }
    tensors.emplace("target", std::move(target));
    tensors.emplace("interferer0", std::move(interf));
    tensors.emplace("diffuse", std::move(diffuse));
    tensors.emplace("mixture", std::move(mixture));

    scene.interferers.resize(1);  // only the count is consulted
    scene.diffuse.emplace();

    identity.left = WeightTrack(frames, p.n_bins(), Side::Left);
    identity.right = WeightTrack(frames, p.n_bins(), Side::Right);
    Vec4c el = Vec4c::Zero(), er = Vec4c::Zero();
    el(kRefLeft) = 1.0;
    er(kRefRight) = 1.0;
    for (int t = 0; t < frames; ++t)
      for (int f = 0; f < p.n_bins(); ++f) {
        identity.left.set(t, f, el);
        identity.right.set(t, f, er);
      }
  }
};

}  // namespace

TEST_CASE("identity shadow returns the reference-mic components") {
  StftParams p;
  ToyScene toy(p);
  const ShadowOutputs sh =
      shadow_filter(toy.scene, toy.tensors, toy.identity, {});
  const TFTensor& target = toy.tensors.at("target");
  for (int t = 0; t < toy.frames; ++t)
    for (int f = 0; f < p.n_bins(); ++f) {
      CHECK(sh.left.target.at(t, f, 0) == target.at(t, f, kRefLeft));
      CHECK(sh.right.target.at(t, f, 0) == target.at(t, f, kRefRight));
    }
}

TEST_CASE("identity processing yields all-zero gains and distortions") {
  StftParams p;
  ToyScene toy(p);
  const ShadowOutputs sh =
      shadow_filter(toy.scene, toy.tensors, toy.identity, {});
  FrameMask m = steady_frames(toy.frames, 0);
  const GainCurves g = ratio_gains(sh.left, toy.tensors, Side::Left, m);
  REQUIRE(g.snr_gain_bb.has_value());
  REQUIRE(g.sir_gain_bb.has_value());
  REQUIRE(g.sdnr_gain_bb.has_value());
  CHECK(std::abs(*g.snr_gain_bb) <= 1e-5);
  CHECK(std::abs(*g.sir_gain_bb) <= 1e-5);
  CHECK(std::abs(*g.sdnr_gain_bb) <= 1e-5);

  TFTensor ref = mono_tensor(toy.frames, p);
  const TFTensor& target = toy.tensors.at("target");
  for (int t = 0; t < toy.frames; ++t)
    for (int f = 0; f < p.n_bins(); ++f)
      ref.at(t, f, 0) = target.at(t, f, kRefLeft);
  const DistortionResult d = distortion(sh.left.target, ref, m);
  CHECK(d.sdr_bb == doctest::Approx(120.0));
  CHECK(d.sdmag_bb == doctest::Approx(0.0).epsilon(1e-6));
}

TEST_CASE("attenuating the interferer shadow by 0.1 gives +20 dB SIR gain") {
  StftParams p;
  ToyScene toy(p);
  ShadowOutputs sh = shadow_filter(toy.scene, toy.tensors, toy.identity, {});
  for (auto& v : sh.left.interferer_sum.data) v *= 0.1f;
  FrameMask m = steady_frames(toy.frames, 0);
  const GainCurves g = ratio_gains(sh.left, toy.tensors, Side::Left, m);
  CHECK(*g.sir_gain_bb == doctest::Approx(20.0).epsilon(1e-4));
}

TEST_CASE("snr gain matches direct arithmetic on a seeded toy") {
  StftParams p;
  ToyScene toy(p);
  ShadowOutputs sh = shadow_filter(toy.scene, toy.tensors, toy.identity, {});
  // Halve target, keep noise: SNR gain = -6.02 dB by hand.
  for (auto& v : sh.left.target.data) v *= 0.5f;
  FrameMask m = steady_frames(toy.frames, 0);
  const GainCurves g = ratio_gains(sh.left, toy.tensors, Side::Left, m);
  CHECK(*g.snr_gain_bb == doctest::Approx(-6.0206).epsilon(1e-3));
}

TEST_CASE("partial-noise shadow at rho 0 returns reference-mic components") {
  StftParams p;
  ToyScene toy(p);
  PostProc post;
  post.kind = PostProc::Kind::PartialNoise;
  post.rho = 0.0;
  // Use zero weights so only the (1-rho) reference path survives.
  AdaptiveWeights zero;
  zero.left = WeightTrack(toy.frames, p.n_bins(), Side::Left);
  zero.right = WeightTrack(toy.frames, p.n_bins(), Side::Right);
  const ShadowOutputs sh = shadow_filter(toy.scene, toy.tensors, zero, post);
  const TFTensor& diffuse = toy.tensors.at("diffuse");
  for (int t = 0; t < toy.frames; ++t)
    for (int f = 0; f < p.n_bins(); ++f)
      CHECK(sh.left.diffuse->at(t, f, 0) == diffuse.at(t, f, kRefLeft));
}

TEST_CASE("complex-ratio shadow preserves additivity exactly") {
  StftParams p;
  ToyScene toy(p);
  PostProc post;
  post.kind = PostProc::Kind::ComplexRatio;
  // An arbitrary post-processed mixture (here: mixture scaled per bin).
  TFTensor num = mono_tensor(toy.frames, p);
  const TFTensor& mix = toy.tensors.at("mixture");
  for (int t = 0; t < toy.frames; ++t)
    for (int f = 0; f < p.n_bins(); ++f)
      num.at(t, f, 0) = mix.at(t, f, kRefLeft) * cf(0.3f + 0.01f * f, 0.1f);
  post.ratio_num_left = num;
  post.ratio_num_right = num;

  const ShadowOutputs sh = shadow_filter(toy.scene, toy.tensors, toy.identity, post);
  double err = 0.0, ref = 0.0;
  for (size_t i = 0; i < sh.left.mixture.data.size(); ++i) {
    const cd sum = cd(sh.left.target.data[i]) +
                   cd(sh.left.interferer_sum.data[i]) +
                   cd(sh.left.diffuse->data[i]);
    err += std::norm(sum - cd(sh.left.mixture.data[i]));
    ref += std::norm(cd(sh.left.mixture.data[i]));
  }
  CHECK(std::sqrt(err / ref) <= 1e-6);
}

TEST_CASE("better ear follows the input SNR and mirrors with the scene") {
  StftParams p;
  const int frames = 60;
  std::map<std::string, TFTensor> tensors;
  TFTensor target(frames, p.n_bins(), kNumMics, p);
  TFTensor noise = target;
  std::mt19937 rng(17);
  std::normal_distribution<float> g(0.0f, 1.0f);
  for (int t = 0; t < frames; ++t)
    for (int f = 0; f < p.n_bins(); ++f)
      for (int m = 0; m < kNumMics; ++m) {
        const float s = (m == kRefLeft) ? 2.0f : 1.0f;  // louder target left
        target.at(t, f, m) = {s * g(rng), s * g(rng)};
        noise.at(t, f, m) = {g(rng), g(rng)};
      }
  tensors.emplace("target", target);
  tensors.emplace("diffuse", noise);
  FrameMask m = steady_frames(frames, 0);
  CHECK(better_ear(tensors, m) == Side::Left);

  // Mirror: swap left/right channels -> the answer flips.
  auto mirror = [&](const TFTensor& t) {
    TFTensor out = t;
    for (int i = 0; i < frames; ++i)
      for (int f = 0; f < p.n_bins(); ++f) {
        out.at(i, f, 0) = t.at(i, f, 2);
        out.at(i, f, 1) = t.at(i, f, 3);
        out.at(i, f, 2) = t.at(i, f, 0);
        out.at(i, f, 3) = t.at(i, f, 1);
      }
    return out;
  };
  std::map<std::string, TFTensor> mirrored;
  mirrored.emplace("target", mirror(target));
  mirrored.emplace("diffuse", mirror(noise));
  CHECK(better_ear(mirrored, m) == Side::Right);

  // Perfect symmetry ties to the left.
  std::map<std::string, TFTensor> tied;
  tied.emplace("target", mirror(mirror(target)));
  tied.emplace("diffuse", mirror(mirror(noise)));
  CHECK(better_ear(tied, m) == better_ear(tensors, m));
}

TEST_CASE("report csv has the documented schema") {
  StftParams p;
  MetricReport r;
  r.scenario = "unit";
  r.algorithm = "identity";
  r.gains.snr_gain_bb = 1.5;
  r.msc_err_bb = 0.25;
  const auto path =
      (std::filesystem::temp_directory_path() / "beamlab_report.csv").string();
  write_report_csv(path, {r}, p);
  std::ifstream f(path);
  std::string line;
  std::getline(f, line);
  CHECK(line == "# beamlab metrics v1");
  std::getline(f, line);
  CHECK(line == "scenario,algorithm,side,metric,bin,value");
  std::getline(f, line);
  CHECK(line.find("unit,identity,left,snr_gain_db,broadband,1.5") == 0);
  std::remove(path.c_str());
}
