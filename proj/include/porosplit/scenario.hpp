#pragma once

// Batch scenarios driven by a JSON configuration. Each run writes its CSV and
// JSON outputs plus a manifest into an output directory and evaluates the
// in-run acceptance gates.

#include "porosplit/timestepper.hpp"

#include <json.hpp>

#include <filesystem>
#include <string>
#include <vector>

namespace porosplit {

enum class ScenarioKind { ContractionStudy, EquivalenceCheck, TimeConvergence, Column };
std::string to_string(ScenarioKind kind);

struct SweepConfig {
  std::vector<double> c0;
  std::vector<double> dt;
  std::vector<double> theta2;
};

struct ConvergenceConfig {
  std::vector<int> steps{8, 16, 32};  // increasing step counts over [0, T]
  /// The reference run uses the coarsest step divided by this factor.
  int reference_factor = 64;
  double min_order = 0.9;

  int reference_steps() const { return steps.empty() ? 0 : steps.front() * reference_factor; }
};

struct ScenarioConfig {
  ScenarioKind kind = ScenarioKind::ContractionStudy;
  int nx = 4, ny = 4;
  double lx = 1.0, ly = 1.0;
  MaterialRecord material;
  ThetaParams theta;  // theta1, theta2, dt
  double final_time = 1.0;
  int checkpoint_every = 0;  // column: dof-wise dump every k steps, 0 for none
  BCSpec bc;
  LoadSpec loads;
  SolverSettings solver;
  CouplingMethod method = CouplingMethod::UndrainedSplit;
  SweepConfig sweep;
  ConvergenceConfig convergence;
  std::string output_dir;
  nlohmann::json source;  // the parsed document, echoed into the manifest

  Mesh mesh() const { return Mesh::rectangle(nx, ny, lx, ly); }
  Problem problem() const;
};

/// Every problem found in the document, each prefixed by its field path
/// (for example "material.c0: must be positive").
std::vector<std::string> validate_scenario(const nlohmann::json& doc);

/// Throws ConfigError listing all problems.
ScenarioConfig parse_scenario(const nlohmann::json& doc);
ScenarioConfig load_scenario(const std::filesystem::path& path);

struct GateResult {
  std::string name;
  bool passed = false;
  std::string detail;
};

struct RunArtifacts {
  std::filesystem::path directory;
  std::vector<std::filesystem::path> files;  // excludes the manifest
  std::filesystem::path manifest;
  std::vector<GateResult> gates;
  nlohmann::json summary;

  bool passed() const;
};

/// An empty out_dir falls back to config.output_dir; ConfigError if both are
/// empty.
RunArtifacts run_scenario(const ScenarioConfig& config, const std::filesystem::path& out_dir);

/// The stage problem a contraction study solves for one (c0, dt, theta2)
/// combination: the first step from rest.
struct StageSetup {
  Problem problem;
  StageRHS rhs;
  double theory_rate = 0;
};
StageSetup first_stage(const ScenarioConfig& config);

}  // namespace porosplit
