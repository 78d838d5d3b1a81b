#include "beamlab/harness.hpp"

#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace beamlab {

namespace {

TFTensor front_track(const TFTensor& t, Side side) {
  TFTensor out(t.n_frames, t.n_bins, 1, t.params);
  const int ref = ref_channel(side);
  for (int i = 0; i < t.n_frames; ++i)
    for (int f = 0; f < t.n_bins; ++f) out.at(i, f, 0) = t.at(i, f, ref);
  return out;
}

WeightTrack identity_track(int frames, int bins, Side side) {
  WeightTrack w(frames, bins, side);
  Vec4c e = Vec4c::Zero();
  e(ref_channel(side)) = 1.0;
  for (int t = 0; t < frames; ++t)
    for (int f = 0; f < bins; ++f) w.set(t, f, e);
  return w;
}

ScenarioSpec base_scenario(const std::string& name, double target_true,
                           double target_est, std::vector<double> interf_true,
                           std::vector<double> interf_est,
                           std::optional<double> diffuse_db,
                           EnvironmentKind env) {
  ScenarioSpec s;
  s.name = name;
  s.true_target_deg = target_true;
  s.estimated_target_deg = target_est;
  s.interferer_true_degs = std::move(interf_true);
  s.interferer_estimated_degs = std::move(interf_est);
  s.diffuse_rel_db = diffuse_db;
  s.environment = env;
  return s;
}

AlgorithmSpec alg(AlgorithmSpec::Kind k,
                  AlgorithmSpec::CovSource cov = AlgorithmSpec::CovSource::Ry) {
  AlgorithmSpec a;
  a.kind = k;
  a.cov_source = cov;
  return a;
}

}  // namespace

std::string AlgorithmSpec::name() const {
  std::string base;
  switch (kind) {
    case Kind::Identity: base = "identity"; break;
    case Kind::Bmvdr: base = "bmvdr"; break;
    case Kind::BmvdrN: base = "bmvdr_n"; break;
    case Kind::Blcmv: base = "blcmv"; break;
    case Kind::RobustTlcmv: base = "robust_tlcmv"; break;
    case Kind::RobustTlcmvCcmbb: base = "robust_tlcmv_ccmbb"; break;
    case Kind::BmvdrCcmbb: base = "bmvdr_ccmbb"; break;
  }
  if (cov_source == CovSource::Rn) base += "_rn";
  return base;
}

bool AlgorithmSpec::uses_ccmbb() const {
  return kind == Kind::RobustTlcmvCcmbb || kind == Kind::BmvdrCcmbb;
}

AlgorithmSpec AlgorithmSpec::parse(const std::string& name) {
  std::string base = name;
  AlgorithmSpec a;
  if (base.size() > 3 && base.substr(base.size() - 3) == "_rn") {
    a.cov_source = CovSource::Rn;
    base = base.substr(0, base.size() - 3);
  }
  if (base == "identity") a.kind = Kind::Identity;
  else if (base == "bmvdr") a.kind = Kind::Bmvdr;
  else if (base == "bmvdr_n") a.kind = Kind::BmvdrN;
  else if (base == "blcmv") a.kind = Kind::Blcmv;
  else if (base == "robust_tlcmv") a.kind = Kind::RobustTlcmv;
  else if (base == "robust_tlcmv_ccmbb") a.kind = Kind::RobustTlcmvCcmbb;
  else if (base == "bmvdr_ccmbb") a.kind = Kind::BmvdrCcmbb;
  else throw std::invalid_argument("unknown algorithm: " + name);
  return a;
}

std::vector<std::string> preset_names() {
  return {"table1_s1", "table1_s2", "table1_s3", "table1_s4",
          "fig6_sweep", "fig7_ry_vs_rn", "table2_ccmbb",
          "fig10_doa10_anechoic", "fig13_doa10_reverb",
          "fig15_interferer_mismatch_sweep", "fig16_lateral90"};
}

Preset preset(const std::string& name) {
  using K = AlgorithmSpec::Kind;
  using Cov = AlgorithmSpec::CovSource;
  Preset p;

  auto table1 = [&](int idx, double target_true) {
    const std::string nm =
        "table1_s" + std::to_string(idx) + "_t" + std::to_string(static_cast<int>(target_true));
    switch (idx) {
      case 1:
        return base_scenario(nm, target_true, 0.0, {}, {}, 0.0,
                             EnvironmentKind::Anechoic);
      case 2:
        return base_scenario(nm, target_true, 0.0, {225.0}, {225.0}, std::nullopt,
                             EnvironmentKind::Anechoic);
      case 3:
        return base_scenario(nm, target_true, 0.0, {225.0, 90.0}, {225.0, 90.0},
                             std::nullopt, EnvironmentKind::Anechoic);
      default:
        return base_scenario(nm, target_true, 0.0, {225.0, 90.0}, {225.0, 90.0},
                             0.0, EnvironmentKind::Anechoic);
    }
  };

  if (name.rfind("table1_s", 0) == 0 && name.size() == 9) {
    const int idx = name[8] - '0';
    if (idx >= 1 && idx <= 4) {
      p.scenarios = {table1(idx, 0.0), table1(idx, 10.0)};
      p.algorithms = {alg(K::Bmvdr), alg(K::RobustTlcmv)};
      return p;
    }
  }
  if (name == "fig6_sweep") {
    for (int i = 1; i <= 4; ++i)
      for (double t : {0.0, 10.0}) p.scenarios.push_back(table1(i, t));
    p.algorithms = {alg(K::Bmvdr), alg(K::RobustTlcmv)};
    return p;
  }
  if (name == "fig7_ry_vs_rn") {
    p.scenarios = {base_scenario("fig7", 0.0, 0.0, {225.0, 90.0, 180.0}, {},
                                 -14.0, EnvironmentKind::Anechoic)};
    p.algorithms = {alg(K::RobustTlcmv, Cov::Ry), alg(K::RobustTlcmv, Cov::Rn)};
    return p;
  }
  if (name == "table2_ccmbb") {
    p.scenarios = {base_scenario("table2", 0.0, 0.0, {165.0}, {165.0}, -5.0,
                                 EnvironmentKind::Anechoic)};
    p.algorithms = {alg(K::Bmvdr), alg(K::BmvdrN), alg(K::BmvdrCcmbb)};
    return p;
  }
  if (name == "fig10_doa10_anechoic") {
    p.scenarios = {base_scenario("fig10", 10.0, 0.0, {235.0, 100.0},
                                 {225.0, 90.0}, -5.0, EnvironmentKind::Anechoic)};
    p.algorithms = {alg(K::RobustTlcmvCcmbb), alg(K::Blcmv)};
    return p;
  }
  if (name == "fig13_doa10_reverb") {
    p.scenarios = {base_scenario("fig13", 10.0, 0.0, {235.0, 100.0},
                                 {225.0, 90.0}, -5.0, EnvironmentKind::Reverberant)};
    p.algorithms = {alg(K::RobustTlcmvCcmbb), alg(K::Blcmv)};
    return p;
  }
  if (name == "fig15_interferer_mismatch_sweep") {
    for (double d : {0.0, 5.0, 10.0, 15.0, 20.0}) {
      p.scenarios.push_back(base_scenario(
          "fig15_d" + std::to_string(static_cast<int>(d)), 0.0, 0.0,
          {225.0 + d, 90.0 + d}, {225.0, 90.0}, -5.0,
          EnvironmentKind::Reverberant));
    }
    p.algorithms = {alg(K::RobustTlcmvCcmbb), alg(K::Blcmv)};
    return p;
  }
  if (name == "fig16_lateral90") {
    p.scenarios = {base_scenario("fig16", 90.0, 90.0, {225.0, 315.0},
                                 {225.0, 315.0}, -5.0, EnvironmentKind::Reverberant)};
    p.algorithms = {alg(K::RobustTlcmvCcmbb), alg(K::Blcmv)};
    return p;
  }

  std::string msg = "unknown preset '" + name + "'; available:";
  for (const auto& n : preset_names()) msg += " " + n;
  throw std::invalid_argument(msg);
}

ExperimentResult run_experiment(const ScenarioSpec& scenario,
                                const std::vector<AlgorithmSpec>& algorithms,
                                const StftParams& params) {
  scenario.validate();
  const SceneTracks scene = compose_scene(scenario, params);

  std::map<std::string, TFTensor> tensors;
  tensors.emplace("mixture", analyze(scene.mixture, params));
  tensors.emplace("target", analyze(scene.target, params));
  for (size_t i = 0; i < scene.interferers.size(); ++i)
    tensors.emplace("interferer" + std::to_string(i),
                    analyze(scene.interferers[i], params));
  if (scene.diffuse) tensors.emplace("diffuse", analyze(*scene.diffuse, params));

  const DirectivityModel design_model({}, params, Environment::anechoic());
  const TFTensor& mix = tensors.at("mixture");

  ExperimentResult result;
  result.scenario = scenario;
  for (const auto& a : algorithms) {
    AlgorithmRun run;
    run.algorithm = a.name();
    try {
      using K = AlgorithmSpec::Kind;

      AdaptiveWeights weights;
      if (a.kind == K::Identity) {
        weights.left = identity_track(mix.n_frames, mix.n_bins, Side::Left);
        weights.right = identity_track(mix.n_frames, mix.n_bins, Side::Right);
        weights.warmup_frames = 0;
      } else {
        ConstraintSet cs_l, cs_r;
        const double est = scenario.estimated_target_deg;
        switch (a.kind) {
          case K::Bmvdr:
          case K::BmvdrN:
          case K::BmvdrCcmbb:
            cs_l = design_bmvdr(design_model, est, Side::Left, a.design);
            cs_r = design_bmvdr(design_model, est, Side::Right, a.design);
            break;
          case K::RobustTlcmv:
          case K::RobustTlcmvCcmbb:
            cs_l = design_robust_tlcmv(design_model, est, Side::Left, a.design);
            cs_r = design_robust_tlcmv(design_model, est, Side::Right, a.design);
            break;
          case K::Blcmv: {
            if (scenario.interferer_estimated_degs.size() !=
                scenario.interferer_true_degs.size())
              throw std::invalid_argument(
                  "BLCMV requires estimated interferer angles");
            cs_l = design_blcmv(design_model, est,
                                scenario.interferer_estimated_degs, Side::Left,
                                a.design);
            cs_r = design_blcmv(design_model, est,
                                scenario.interferer_estimated_degs, Side::Right,
                                a.design);
            break;
          }
          default:
            break;
        }
        const TFTensor* cov = &mix;
        if (a.cov_source == AlgorithmSpec::CovSource::Rn) {
          auto it = tensors.find("diffuse");
          if (it == tensors.end())
            throw std::invalid_argument("Rn covariance needs a diffuse component");
          cov = &it->second;
        }
        weights = run_adaptive(*cov, cs_l, cs_r, a.design);
      }

      TFTensor z_l = apply_weights(weights.left, mix);
      TFTensor z_r = apply_weights(weights.right, mix);

      PostProc post;
      if (a.kind == K::BmvdrN) {
        post.kind = PostProc::Kind::PartialNoise;
        post.rho = a.design.rho;
        run.output_left = bmvdr_partial_noise(z_l, front_track(mix, Side::Left),
                                              a.design.rho);
        run.output_right = bmvdr_partial_noise(z_r, front_track(mix, Side::Right),
                                               a.design.rho);
      } else if (a.uses_ccmbb()) {
        auto cc = apply_ccmbb(z_l, z_r, front_track(mix, Side::Left),
                              front_track(mix, Side::Right), a.ccmbb);
        post.kind = PostProc::Kind::ComplexRatio;
        post.ratio_num_left = cc.left;
        post.ratio_num_right = cc.right;
        run.output_left = std::move(cc.left);
        run.output_right = std::move(cc.right);
        run.decisions_left = std::move(cc.decisions_left);
        run.decisions_right = std::move(cc.decisions_right);
      } else {
        run.output_left = z_l;
        run.output_right = z_r;
      }

      const ShadowOutputs shadow = shadow_filter(scene, tensors, weights, post);
      const FrameMask mask = steady_frames(mix.n_frames, weights.warmup_frames);

      MetricReport rep;
      rep.scenario = scenario.name;
      rep.algorithm = a.name();
      rep.better_ear_side = better_ear(tensors, mask);
      const SideShadow& sh =
          rep.better_ear_side == Side::Left ? shadow.left : shadow.right;
      rep.gains = ratio_gains(sh, tensors, rep.better_ear_side, mask);
      rep.target_distortion = distortion(
          sh.target, front_track(tensors.at("target"), rep.better_ear_side), mask);

      const int xbin = crossover_bin(a.ccmbb, params);
      if (!scene.interferers.empty()) {
        TFTensor vin_l = front_track(tensors.at("interferer0"), Side::Left);
        TFTensor vin_r = front_track(tensors.at("interferer0"), Side::Right);
        for (size_t i = 1; i < scene.interferers.size(); ++i) {
          const TFTensor& v = tensors.at("interferer" + std::to_string(i));
          TFTensor l = front_track(v, Side::Left), r = front_track(v, Side::Right);
          for (size_t j = 0; j < vin_l.data.size(); ++j) {
            vin_l.data[j] += l.data[j];
            vin_r.data[j] += r.data[j];
          }
        }
        rep.interferer_cues =
            itf_cues(vin_l, vin_r, shadow.left.interferer_sum,
                     shadow.right.interferer_sum, mask, xbin);
        auto abs_curve = [](const std::vector<std::optional<double>>& c) {
          std::vector<std::optional<double>> out(c.size());
          for (size_t i = 0; i < c.size(); ++i)
            if (c[i]) out[i] = std::abs(*c[i]);
          return out;
        };
        rep.ild_err_bb = band_average(abs_curve(rep.interferer_cues.delta_ild_db),
                                      xbin, mix.n_bins);
        rep.ipd_err_bb = band_average(abs_curve(rep.interferer_cues.delta_ipd_rad),
                                      0, xbin);
      }
      if (scene.diffuse) {
        rep.msc_err = msc_error(front_track(tensors.at("diffuse"), Side::Left),
                                front_track(tensors.at("diffuse"), Side::Right),
                                *shadow.left.diffuse, *shadow.right.diffuse, mask);
        std::vector<std::optional<double>> abs_msc(rep.msc_err.size());
        for (size_t i = 0; i < rep.msc_err.size(); ++i)
          if (rep.msc_err[i]) abs_msc[i] = std::abs(*rep.msc_err[i]);
        rep.msc_err_bb = band_average(abs_msc, 0, mix.n_bins);
      }
      run.report = std::move(rep);
    } catch (const std::exception& e) {
      run.failed = true;
      run.error = e.what();
    }
    result.runs.push_back(std::move(run));
  }
  return result;
}

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::vector<double> parse_list(const std::string& v) {
  std::vector<double> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(std::stod(item));
  }
  return out;
}

}  // namespace

ExperimentConfig parse_config(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot open config: " + path);

  ExperimentConfig cfg;
  std::string section;
  AlgorithmSpec current_alg;
  bool have_alg = false;
  auto flush_alg = [&]() {
    if (have_alg) cfg.algorithms.push_back(current_alg);
    have_alg = false;
  };

  std::string line;
  int line_no = 0;
  while (std::getline(f, line)) {
    ++line_no;
    line = trim(line);
    if (line.empty() || line[0] == '#' || line[0] == ';') continue;
    if (line.front() == '[' && line.back() == ']') {
      flush_alg();
      section = trim(line.substr(1, line.size() - 2));
      if (section == "algorithm") {
        current_alg = AlgorithmSpec{};
        have_alg = true;
      } else if (section != "scenario") {
        throw std::runtime_error(path + ":" + std::to_string(line_no) +
                                 ": unknown section [" + section + "]");
      }
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw std::runtime_error(path + ":" + std::to_string(line_no) +
                               ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    const std::string val = trim(line.substr(eq + 1));
    try {
      if (section == "scenario") {
        auto& s = cfg.scenario;
        if (key == "name") s.name = val;
        else if (key == "target_true_deg") s.true_target_deg = std::stod(val);
        else if (key == "target_estimated_deg") s.estimated_target_deg = std::stod(val);
        else if (key == "interferer_true_degs") s.interferer_true_degs = parse_list(val);
        else if (key == "interferer_estimated_degs") s.interferer_estimated_degs = parse_list(val);
        else if (key == "diffuse_rel_db") s.diffuse_rel_db = std::stod(val);
        else if (key == "environment")
          s.environment = val == "reverberant" ? EnvironmentKind::Reverberant
                                               : EnvironmentKind::Anechoic;
        else if (key == "duration_s") s.duration_s = std::stod(val);
        else if (key == "seed") s.seed = static_cast<uint32_t>(std::stoul(val));
        else if (key == "t60_s") s.t60_s = std::stod(val);
        else if (key == "drr_db") s.drr_db = std::stod(val);
        else if (key == "source_path") s.source_paths.push_back(val);
        else throw std::runtime_error(path + ":" + std::to_string(line_no) +
                                      ": unknown scenario key '" + key + "'");
      } else if (section == "algorithm") {
        auto& a = current_alg;
        if (key == "kind") {
          const auto parsed = AlgorithmSpec::parse(val);
          a.kind = parsed.kind;
          if (parsed.cov_source == AlgorithmSpec::CovSource::Rn)
            a.cov_source = parsed.cov_source;
        }
        else if (key == "cov_source")
          a.cov_source = val == "rn" ? AlgorithmSpec::CovSource::Rn
                                      : AlgorithmSpec::CovSource::Ry;
        else if (key == "eta") a.design.eta = std::stod(val);
        else if (key == "zeta") a.design.zeta = std::stod(val);
        else if (key == "delta_deg") a.design.delta_deg = std::stod(val);
        else if (key == "rho") a.design.rho = std::stod(val);
        else if (key == "lambda") a.design.lambda = std::stod(val);
        else if (key == "loading") a.design.loading = std::stod(val);
        else if (key == "update_stride") a.design.update_stride = std::stoi(val);
        else if (key == "mu") a.ccmbb.mu = std::stod(val);
        else if (key == "alpha") a.ccmbb.alpha = std::stod(val);
        else if (key == "crossover_hz") a.ccmbb.crossover_hz = std::stod(val);
        else if (key == "short_window") a.ccmbb.short_window = std::stoi(val);
        else if (key == "long_window") a.ccmbb.long_window = std::stoi(val);
        else throw std::runtime_error(path + ":" + std::to_string(line_no) +
                                      ": unknown algorithm key '" + key + "'");
      } else {
        throw std::runtime_error("key outside a section");
      }
    } catch (const std::invalid_argument&) {
      throw std::runtime_error(path + ":" + std::to_string(line_no) +
                               ": bad value for '" + key + "'");
    }
  }
  flush_alg();
  return cfg;
}

void write_decisions_csv(const std::string& path, const DecisionMap& left,
                         const DecisionMap& right) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot write csv: " + path);
  f << "# beamlab decisions v1\n";
  f << "frame,bin,side,branch\n";
  auto dump = [&](const DecisionMap& dm, const char* side) {
    for (int t = 0; t < dm.n_frames; ++t)
      for (int b = 0; b < dm.n_bins; ++b)
        f << t << ',' << b << ',' << side << ','
          << static_cast<int>(dm.at(t, b)) << '\n';
  };
  dump(left, "left");
  dump(right, "right");
}

}  // namespace beamlab
