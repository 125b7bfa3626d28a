#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "pricelab/harness.hpp"

namespace pricelab {

struct OutputSpec {
  std::string dir = "out";
  std::string format = "csv";  // csv | json
};

struct ConjectureSpec {
  enum class Kind { Zero, FromDesign, Explicit, Symmetric };
  Kind kind = Kind::Zero;
  Matrix matrix;       // Explicit
  double value = 0.0;  // Symmetric: every off-diagonal
};

struct ConjectureSweepSpec {
  enum class Kind { SymmetricValues, ExplicitList };
  Kind kind = Kind::SymmetricValues;
  Vec values;
  std::vector<Matrix> matrices;
};

struct DesignSweepSpec {
  Vec rho_values;
  double q = 0.5;
};

// Validated experiment-plan file. Unknown keys are rejected; error messages
// carry the dotted field path.
struct LoadedPlan {
  LoadedPlan(DemandSystem d, NoiseSpec ns)
      : demand(std::move(d)), noise(std::move(ns)) {}

  int schema_version = 1;
  DemandSystem demand;
  NoiseSpec noise;
  std::optional<ExperimentDesign> design;
  std::optional<DesignSweepSpec> design_sweep;
  ConjectureSpec conjecture;
  std::optional<ConjectureSweepSpec> conjecture_sweep;
  std::optional<SldlConfig> sldl;

  bool has_harness = false;
  int replications = 1;
  TargetSpec target;
  double tail_fraction = 0.5;
  int bootstrap_resamples = 1000;

  SolveOptions solve_options;
  OutputSpec outputs;

  std::string canonical_text;  // sorted-key dump used for the manifest hash

  // Learning rates for equilibrium maps: sldl.u when present, 0.5 otherwise.
  Vec learning_rates() const;
  ConjectureMatrix resolve_conjecture() const;
  std::vector<ConjectureMatrix> resolve_conjecture_path() const;
  // Requires design, sldl and harness sections.
  ExperimentPlan experiment_plan() const;
  // Like experiment_plan(), but a rho sweep may omit the design section;
  // a placeholder design is installed for the sweep to replace per row.
  ExperimentPlan experiment_plan_for_sweep() const;
};

LoadedPlan parse_plan_text(const std::string& text);
LoadedPlan load_plan_file(const std::string& path);

uint64_t fnv1a64(const std::string& text);

}  // namespace pricelab
