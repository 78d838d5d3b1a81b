#pragma once

#include <map>
#include <string>
#include <vector>

#include "beamlab/ccmbb.hpp"
#include "beamlab/metrics.hpp"
#include "beamlab/scene.hpp"

namespace beamlab {

struct AlgorithmSpec {
  enum class Kind {
    Identity,
    Bmvdr,
    BmvdrN,
    Blcmv,
    RobustTlcmv,
    RobustTlcmvCcmbb,
    BmvdrCcmbb,
  };
  enum class CovSource { Ry, Rn };

  Kind kind = Kind::RobustTlcmv;
  CovSource cov_source = CovSource::Ry;
  DesignParams design;
  CcmbbParams ccmbb;

  std::string name() const;
  bool uses_ccmbb() const;
  static AlgorithmSpec parse(const std::string& name);
};

struct Preset {
  std::vector<ScenarioSpec> scenarios;
  std::vector<AlgorithmSpec> algorithms;
};

// Named experiment presets mirroring the evaluation suite. Unknown names
// throw with the available list in the message.
Preset preset(const std::string& name);
std::vector<std::string> preset_names();

struct AlgorithmRun {
  std::string algorithm;
  MetricReport report;
  TFTensor output_left;   // post-processed binaural outputs z_m
  TFTensor output_right;
  DecisionMap decisions_left;   // populated for CCMBB variants
  DecisionMap decisions_right;
  bool failed = false;
  std::string error;
};

struct ExperimentResult {
  ScenarioSpec scenario;
  std::vector<AlgorithmRun> runs;
};

// Composes the scene once, then runs each algorithm: adaptive per-frame
// weights from its covariance source, optional post-processor, shadow
// filtering of every component, full metric report. Per-algorithm failures
// are isolated in the result.
ExperimentResult run_experiment(const ScenarioSpec& scenario,
                                const std::vector<AlgorithmSpec>& algorithms,
                                const StftParams& params = {});

// Flat key-value config files with [scenario] / [algorithm] sections.
struct ExperimentConfig {
  ScenarioSpec scenario;
  std::vector<AlgorithmSpec> algorithms;
};
ExperimentConfig parse_config(const std::string& path);

void write_decisions_csv(const std::string& path, const DecisionMap& left,
                         const DecisionMap& right);

}  // namespace beamlab
