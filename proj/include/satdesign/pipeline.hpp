#pragma once

#include <optional>
#include <string>
#include <vector>

#include "satdesign/design.hpp"
#include "satdesign/effects.hpp"
#include "satdesign/exposure.hpp"
#include "satdesign/inclusion.hpp"
#include "satdesign/io.hpp"
#include "satdesign/network.hpp"
#include "satdesign/simharness.hpp"

namespace satdesign {

enum class InclusionChoice { Auto, Exact, MonteCarlo };

struct EstimationConfig {
  std::uint64_t draws = 100000;
  std::uint64_t seed = 1;
  double alpha = 0.05;
  std::vector<EstimatorKind> estimators{EstimatorKind::HT, EstimatorKind::Hajek};
  std::vector<std::string> estimands;  // empty: every standard estimand
  double positivity_floor = 0.01;
  unsigned threads = 0;
  bool exclude_empty_between = false;
  bool positivity_hard = true;
  InclusionChoice inclusion = InclusionChoice::Auto;
  std::uint64_t exact_cap = kDefaultEnumerationCap;
};

struct GridPoint {
  Cutoff cutoff;
  NetworkParams network;
  Json to_json() const;
};

// Run configuration (JSON):
//   {"network": {"threshold_km", "k_max", "m"}, "policy": {...},
//    "exposure": {...}, "psi": {...}?, "estimation": {...},
//    "grid": {"cutoffs": [...], "networks": [{"threshold_km", "k_max"}]}}
struct RunConfig {
  NetworkParams network;
  std::size_t order = 2;
  SaturationPolicy policy;
  ExposureConfig exposure;
  std::optional<SaturationPolicy> psi;
  EstimationConfig estimation;
  std::vector<Cutoff> grid_cutoffs;
  std::vector<NetworkParams> grid_networks;

  // Cartesian product of the grids; a single point when both are empty.
  std::vector<GridPoint> grid_points() const;
  bool has_grid() const { return !grid_cutoffs.empty() || !grid_networks.empty(); }
  Json to_json() const;
  std::string digest() const;
};

RunConfig parse_run_config(const Json& j);
RunConfig load_run_config(const fs::path& path);

struct Stage {
  GridPoint point;
  Network network;
  DependencyGraph graph;
  ExposureConfig exposure;
};

Stage build_stage(const Dataset& data, const RunConfig& config, const GridPoint& point);

// Exact when requested or when the support fits under the cap (auto),
// otherwise Monte Carlo with the configured draws and seed.
InclusionTable compute_inclusion(const RunConfig& config, const Stage& stage);

// Weights for psi = phi from the table, or for the configured psi by Monte
// Carlo.
PolicyWeights compute_weights(const RunConfig& config, const Stage& stage,
                              const InclusionTable& table, bool for_psi);

// Observed treatment vector; every unit must carry a treatment.
std::vector<std::uint8_t> observed_treatment(const Dataset& data, const Network& network);

struct EstimateOutput {
  Json report;
  std::vector<ResultRow> rows;
};

// Runs every grid point end to end on observed data. When `probs` (and
// optionally `weights`) are supplied there must be a single grid point and
// their digests must match the configuration.
EstimateOutput run_estimate(const Dataset& data, const RunConfig& config,
                            const InclusionTable* probs = nullptr,
                            const PolicyWeights* weights = nullptr);

// Degree, positivity and exposure-count diagnostics for each grid point.
Json run_diagnose(const Dataset& data, const RunConfig& config,
                  const InclusionTable* probs = nullptr);

// Simulation scenario (JSON): {"geography", "network", "policy", "exposure",
// "dgp", "replications", "draws", "alpha", "seed", "estimators", "threads",
// "sweep": {"n": [...], "replications"}?}
struct Scenario {
  GeographySpec geography;
  NetworkParams network;
  std::size_t order = 2;
  SaturationPolicy policy;
  ExposureConfig exposure;
  DgpSpec dgp;
  ReplicationOptions replication;
  std::vector<std::size_t> sweep_n;
  std::size_t sweep_replications = 200;

  Json to_json() const;
};

Scenario parse_scenario(const Json& j);
Scenario load_scenario(const fs::path& path);

Json replication_to_json(const ReplicationReport& report);
Json sweep_to_json(const SweepReport& report);

// Full simulation report (truth, replications, and sweep if configured).
Json run_simulation(const Scenario& scenario, bool with_sweep);

// One synthetic observed dataset: geography, one assignment drawn from the
// policy, observed outcome Y_i(d_i) and covariates.
Dataset synthetic_dataset(const Scenario& scenario, std::uint64_t draw);

}  // namespace satdesign
