// beamlab: scene synthesis, experiment running, beampattern export, and
// report consolidation for the binaural beamforming suite.

#include <CLI11.hpp>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#include "beamlab/harness.hpp"
#include "beamlab/wav.hpp"

namespace fs = std::filesystem;
using namespace beamlab;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitRuntime = 2;
constexpr int kExitAssertion = 3;

struct CommonOpts {
  std::string config_path;
  std::string preset_name;
  std::string out_dir = "out";
  int seed = -1;
  bool force = false;
  int jobs = 1;
};

uint32_t resolve_seed(const CommonOpts& o, uint32_t config_seed) {
  if (o.seed >= 0) return static_cast<uint32_t>(o.seed);
  if (const char* env = std::getenv("BEAMLAB_SEED")) {
    try {
      return static_cast<uint32_t>(std::stoul(env));
    } catch (...) {
      throw std::runtime_error("BEAMLAB_SEED is not an unsigned integer");
    }
  }
  return config_seed;
}

// Scenarios plus algorithm roster resolved from --preset or --config.
struct Job {
  std::vector<ScenarioSpec> scenarios;
  std::vector<AlgorithmSpec> algorithms;
};

Job resolve_job(const CommonOpts& o) {
  if (o.preset_name.empty() == o.config_path.empty())
    throw CLI::ValidationError("exactly one of --preset / --config is required");
  Job j;
  if (!o.preset_name.empty()) {
    Preset p = preset(o.preset_name);
    j.scenarios = std::move(p.scenarios);
    j.algorithms = std::move(p.algorithms);
  } else {
    ExperimentConfig cfg = parse_config(o.config_path);
    if (cfg.scenario.name.empty()) cfg.scenario.name = "scenario";
    j.scenarios = {cfg.scenario};
    j.algorithms = cfg.algorithms;
  }
  for (auto& s : j.scenarios) s.seed = resolve_seed(o, s.seed);
  return j;
}

void ensure_out_dir(const std::string& dir) { fs::create_directories(dir); }

void check_overwrite(const fs::path& p, bool force) {
  if (!force && fs::exists(p))
    throw CLI::ValidationError("refusing to overwrite " + p.string() +
                               " (use --force)");
}

void write_tracks(const fs::path& path, const TimeTrackSet& t, bool force) {
  check_overwrite(path, force);
  write_wav(path.string(), t, /*as_float=*/true);
}

int cmd_synth(const CommonOpts& o) {
  Job job = resolve_job(o);
  ensure_out_dir(o.out_dir);
  StftParams params;
  for (const auto& spec : job.scenarios) {
    const SceneTracks scene = compose_scene(spec, params);
    const fs::path base = fs::path(o.out_dir) / spec.name;
    write_tracks(base.string() + "_mixture.wav", scene.mixture, o.force);
    write_tracks(base.string() + "_target.wav", scene.target, o.force);
    for (size_t i = 0; i < scene.interferers.size(); ++i)
      write_tracks(base.string() + "_interferer" + std::to_string(i) + ".wav",
                   scene.interferers[i], o.force);
    if (scene.diffuse)
      write_tracks(base.string() + "_diffuse.wav", *scene.diffuse, o.force);

    const fs::path manifest = base.string() + "_manifest.txt";
    check_overwrite(manifest, o.force);
    std::ofstream m(manifest);
    m << "scenario = " << spec.name << "\n"
      << "seed = " << spec.seed << "\n"
      << "duration_s = " << spec.duration_s << "\n"
      << "environment = "
      << (spec.environment == EnvironmentKind::Reverberant ? "reverberant"
                                                           : "anechoic")
      << "\n"
      << "target_true_deg = " << spec.true_target_deg << "\n"
      << "target_estimated_deg = " << spec.estimated_target_deg << "\n";
    m << "interferer_true_degs =";
    for (double d : spec.interferer_true_degs) m << " " << d;
    m << "\n";
    if (spec.diffuse_rel_db) m << "diffuse_rel_db = " << *spec.diffuse_rel_db << "\n";
    if (spec.environment == EnvironmentKind::Reverberant)
      m << "t60_s = " << spec.t60_s << "\ndrr_db = " << spec.drr_db << "\n";
    std::cout << "synth " << spec.name << " -> " << base.string() << "_*.wav\n";
  }
  return kExitOk;
}

TimeTrackSet binaural_tracks(const TFTensor& left, const TFTensor& right) {
  TFTensor both(left.n_frames, left.n_bins, 2, left.params);
  for (int t = 0; t < left.n_frames; ++t)
    for (int f = 0; f < left.n_bins; ++f) {
      both.at(t, f, 0) = left.at(t, f, 0);
      both.at(t, f, 1) = right.at(t, f, 0);
    }
  TimeTrackSet out = synthesize(both, left.params);
  out.role = "binaural_output";
  return out;
}

int cmd_run(const CommonOpts& o) {
  Job job = resolve_job(o);
  ensure_out_dir(o.out_dir);
  StftParams params;
  std::vector<MetricReport> reports;
  bool any_failed = false;

  for (const auto& spec : job.scenarios) {
    const ExperimentResult res = run_experiment(spec, job.algorithms, params);
    const fs::path base = fs::path(o.out_dir) / spec.name;
    for (const auto& run : res.runs) {
      if (run.failed) {
        any_failed = true;
        std::cerr << "FAILED " << spec.name << "/" << run.algorithm << ": "
                  << run.error << "\n";
        continue;
      }
      const std::string stem = base.string() + "_" + run.algorithm;
      write_tracks(stem + "_out.wav",
                   binaural_tracks(run.output_left, run.output_right), o.force);
      if (run.decisions_left.n_frames > 0) {
        check_overwrite(stem + "_decisions.csv", o.force);
        write_decisions_csv(stem + "_decisions.csv", run.decisions_left,
                            run.decisions_right);
      }
      reports.push_back(run.report);
      std::cout << "run " << spec.name << "/" << run.algorithm << " ok\n";
    }
  }
  const fs::path csv = fs::path(o.out_dir) / "metrics.csv";
  check_overwrite(csv, o.force);
  write_report_csv(csv.string(), reports, params);
  std::cout << "wrote " << csv.string() << "\n";
  return any_failed ? kExitRuntime : kExitOk;
}

int cmd_beampattern(const CommonOpts& o, const std::vector<std::string>& designs,
                    double target_deg, const std::vector<double>& interferers) {
  ensure_out_dir(o.out_dir);
  StftParams params;
  const DirectivityModel model({}, params, Environment::anechoic());
  const DirectivitySet d_set = DirectivitySet::build(model);
  const BinMatrixSet r_diff = isotropic_diffuse_covariance(d_set);
  DesignParams dp;

  const fs::path csv = fs::path(o.out_dir) / "beampattern.csv";
  check_overwrite(csv, o.force);
  std::ofstream f(csv);
  f << "# beamlab beampattern v1\n";
  f << "design,side,theta_deg,bin,bp\n";
  for (const std::string& name : designs) {
    for (Side side : {Side::Left, Side::Right}) {
      ConstraintSet cs;
      if (name == "bmvdr") cs = design_bmvdr(model, target_deg, side, dp);
      else if (name == "robust_tlcmv")
        cs = design_robust_tlcmv(model, target_deg, side, dp);
      else if (name == "blcmv")
        cs = design_blcmv(model, target_deg, interferers, side, dp);
      else
        throw CLI::ValidationError("unknown design '" + name + "'");
      const BinWeights w = solve_fixed(r_diff, cs, dp);
      const Eigen::MatrixXd bp = beampattern(w, d_set);
      const char* side_name = side == Side::Left ? "left" : "right";
      for (int a = 0; a < d_set.n_azimuths(); ++a)
        for (int b = 0; b < bp.rows(); ++b)
          f << name << ',' << side_name << ',' << d_set.azimuths_deg[a] << ','
            << b << ',' << bp(b, a) << '\n';
    }
  }
  std::cout << "wrote " << csv.string() << "\n";
  return kExitOk;
}

// metrics.csv rows keyed (scenario, algorithm, metric) -> seed-mean of the
// broadband/band value.
struct SummaryTable {
  std::map<std::string, std::pair<double, int>> acc;

  void add(const std::string& key, double v) {
    auto& e = acc[key];
    e.first += v;
    e.second += 1;
  }
  std::optional<double> mean(const std::string& key) const {
    auto it = acc.find(key);
    if (it == acc.end() || it->second.second == 0) return std::nullopt;
    return it->second.first / it->second.second;
  }
};

int cmd_report(const std::vector<std::string>& inputs, const std::string& out_csv) {
  if (inputs.empty()) throw CLI::ValidationError("no input CSVs given");
  SummaryTable table;
  std::vector<std::string> missing;
  for (const auto& path : inputs) {
    std::ifstream f(path);
    if (!f) {
      missing.push_back(path);
      continue;
    }
    std::string line;
    while (std::getline(f, line)) {
      if (line.empty() || line[0] == '#') continue;
      std::stringstream ss(line);
      std::string scenario, algorithm, side, metric, bin, value;
      std::getline(ss, scenario, ',');
      std::getline(ss, algorithm, ',');
      std::getline(ss, side, ',');
      std::getline(ss, metric, ',');
      std::getline(ss, bin, ',');
      std::getline(ss, value, ',');
      if (scenario == "scenario") continue;  // header
      if (bin != "broadband" && bin != "band") continue;
      try {
        table.add(scenario + "/" + algorithm + "/" + metric, std::stod(value));
      } catch (...) {
      }
    }
  }
  if (!missing.empty()) {
    for (const auto& p : missing) std::cerr << "missing input: " << p << "\n";
    return kExitRuntime;
  }

  std::ofstream out;
  if (!out_csv.empty()) {
    out.open(out_csv);
    out << "# beamlab report v1\nscenario,algorithm,metric,mean\n";
  }
  for (const auto& [key, e] : table.acc) {
    const double mean = e.first / e.second;
    std::string k = key;
    for (auto& ch : k)
      if (ch == '/') ch = ',';
    std::cout << key << " = " << mean << "\n";
    if (out.is_open()) out << k << ',' << mean << '\n';
  }

  // Ordering assertions over the seed-mean, evaluated on the groups present.
  bool any_assert = false, all_pass = true;
  auto assert_order = [&](const std::string& label, const char* metric,
                          const std::string& scenario,
                          const std::vector<std::string>& algs_desc) {
    std::vector<double> v;
    for (const auto& a : algs_desc) {
      auto m = table.mean(scenario + "/" + a + "/" + metric);
      if (!m) return;  // group absent from inputs
      v.push_back(*m);
    }
    any_assert = true;
    bool ok = true;
    for (size_t i = 1; i < v.size(); ++i) ok = ok && v[i - 1] > v[i];
    all_pass = all_pass && ok;
    std::cout << (ok ? "PASS " : "FAIL ") << label << " (";
    for (size_t i = 0; i < v.size(); ++i)
      std::cout << (i ? " > " : "") << algs_desc[i] << "=" << v[i];
    std::cout << ")\n";
  };

  assert_order("SNR-gain: bmvdr > bmvdr_ccmbb > bmvdr_n", "snr_gain_db",
               "table2", {"bmvdr", "bmvdr_ccmbb", "bmvdr_n"});
  assert_order("MSC-error: bmvdr > bmvdr_n > bmvdr_ccmbb", "msc_err", "table2",
               {"bmvdr", "bmvdr_n", "bmvdr_ccmbb"});
  assert_order("SDmag: bmvdr > bmvdr_n > bmvdr_ccmbb", "sdmag_db", "table2",
               {"bmvdr", "bmvdr_n", "bmvdr_ccmbb"});

  if (any_assert && !all_pass) return kExitAssertion;
  return kExitOk;
}

int cmd_presets() {
  for (const auto& name : preset_names()) {
    const Preset p = preset(name);
    std::cout << name << ": " << p.scenarios.size() << " scenario(s),";
    for (const auto& a : p.algorithms) std::cout << " " << a.name();
    std::cout << "\n";
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"binaural beamforming experiment suite"};
  app.require_subcommand(1);

  CommonOpts o;
  auto add_common = [&](CLI::App* cmd, bool needs_job) {
    if (needs_job) {
      cmd->add_option("--config", o.config_path, "scenario/algorithm config file");
      cmd->add_option("--preset", o.preset_name, "named experiment preset");
    }
    cmd->add_option("--out", o.out_dir, "output directory");
    cmd->add_option("--seed", o.seed, "seed override (also env BEAMLAB_SEED)");
    cmd->add_flag("--force", o.force, "overwrite existing outputs");
    cmd->add_option("--jobs", o.jobs, "max parallel jobs");
  };

  auto* synth = app.add_subcommand("synth", "render scene component WAVs");
  add_common(synth, true);
  auto* run = app.add_subcommand("run", "run algorithms and emit metrics");
  add_common(run, true);

  auto* bp = app.add_subcommand("beampattern", "export BP(f, theta) CSV");
  std::vector<std::string> bp_designs{"bmvdr", "robust_tlcmv"};
  double bp_target = 0.0;
  std::vector<double> bp_interferers{225.0, 90.0};
  bp->add_option("--design", bp_designs, "designs: bmvdr robust_tlcmv blcmv");
  bp->add_option("--target", bp_target, "design target azimuth (deg)");
  bp->add_option("--interferer", bp_interferers, "BLCMV interferer azimuths");
  add_common(bp, false);

  auto* rep = app.add_subcommand("report", "consolidate metrics CSVs");
  std::vector<std::string> rep_inputs;
  std::string rep_out;
  rep->add_option("inputs", rep_inputs, "metrics CSV paths");
  rep->add_option("--out-csv", rep_out, "write consolidated CSV here");

  app.add_subcommand("presets", "list available presets");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (synth->parsed()) return cmd_synth(o);
    if (run->parsed()) return cmd_run(o);
    if (bp->parsed()) return cmd_beampattern(o, bp_designs, bp_target, bp_interferers);
    if (rep->parsed()) return cmd_report(rep_inputs, rep_out);
    return cmd_presets();
  } catch (const CLI::ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
}
