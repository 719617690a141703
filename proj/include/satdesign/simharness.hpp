#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "satdesign/design.hpp"
#include "satdesign/effects.hpp"
#include "satdesign/estimators.hpp"
#include "satdesign/exposure.hpp"
#include "satdesign/inclusion.hpp"
#include "satdesign/network.hpp"

namespace satdesign {

// Synthetic geography: cluster centers on a square grid with jitter, units
// scattered uniformly in a disc around their center.
struct GeographySpec {
  std::size_t clusters = 80;
  std::vector<std::size_t> sizes{4, 6};  // drawn uniformly per cluster
  double spacing_km = 2.5;
  double jitter_km = 0.5;
  double unit_radius_km = 1.0;
};

Dataset generate_geography(const GeographySpec& spec, std::uint64_t seed);

// Y_i(a,s,h) = mu_i + ta a + ts s + th h + tas a s + tah a h + eps, clamped
// to [-clamp, clamp]. mu_i = mu0 + mu_sd z_i. Covariate k of unit i is
// z_i + covariate_noise_sd e_ik, so covariates predict mu_i.
struct DgpSpec {
  double mu0 = 2.0;
  double mu_sd = 1.0;
  double theta_a = 1.0;
  double theta_s = 0.5;
  double theta_h = 0.25;
  double theta_as = 0.2;
  double theta_ah = 0.1;
  double noise_sd = 0.5;
  bool noise_per_cell = true;  // otherwise one eps_i shared by all cells
  double clamp = 10.0;
  std::size_t covariates = 1;
  double covariate_noise_sd = 0.5;
};

struct PotentialOutcomeTable {
  std::vector<CellArray> y;
  Eigen::MatrixXd covariates;  // n x p
  std::vector<std::string> covariate_names;

  std::size_t size() const { return y.size(); }
};

PotentialOutcomeTable generate_po_table(const Network& network, const DgpSpec& spec,
                                        std::uint64_t seed);

struct TruthRow {
  std::string estimand;
  double value = 0.0;
  bool defined = true;
};

struct TruthReport {
  std::vector<TruthRow> rows;
  const TruthRow* find(const std::string& estimand) const;
};

// Conditional estimands by plain averaging; policy estimands by
// gamma-weighted averaging.
TruthReport compute_truth(const PotentialOutcomeTable& table,
                          std::span<const Estimand> estimands,
                          const PolicyWeights* weights);

struct ReplicationOptions {
  std::size_t replications = 1000;
  std::uint64_t draws = 100000;  // Monte Carlo draws for the inclusion table
  std::vector<EstimatorKind> kinds{EstimatorKind::HT, EstimatorKind::Hajek};
  double alpha = 0.05;
  std::uint64_t seed = 1;
  unsigned threads = 0;
  std::size_t order = 2;
  bool with_policy = true;
  // Use the exact table when the support has at most this many vectors.
  std::uint64_t exact_cap = kDefaultEnumerationCap;
  bool force_mc = false;
  // Restrict the estimand set (empty: every standard estimand).
  std::vector<std::string> estimands;
};

struct ReplicationRow {
  std::string estimand;
  EstimatorKind kind = EstimatorKind::HT;
  double truth = 0.0;
  bool truth_defined = true;
  std::size_t used = 0;        // replications entering the aggregates
  std::size_t exclusions = 0;  // non-estimable replications
  std::size_t degenerate = 0;  // zero-variance intervals, left out of coverage
  double mean = 0.0;
  double bias = 0.0;
  double rmse = 0.0;
  double empirical_variance = 0.0;  // divisor R
  double mean_estimated_variance = 0.0;
  double coverage = 0.0;
  // Non-covering intervals lying wholly below / above the truth.
  std::size_t miss_below = 0;
  std::size_t miss_above = 0;
  // mean estimated variance - empirical variance, and its Monte Carlo SE.
  double conservativeness_margin = 0.0;
  double margin_se = 0.0;
};

struct ReplicationReport {
  std::size_t n = 0;
  std::size_t replications = 0;
  std::uint64_t draws = 0;
  std::uint64_t seed = 0;
  double alpha = 0.05;
  InclusionMode inclusion_mode = InclusionMode::MonteCarlo;
  std::size_t order = 2;
  std::size_t max_degree = 0;
  std::size_t stored_pairs = 0;
  std::size_t uncovered_dependent_pairs = 0;
  std::size_t positivity_violations = 0;
  TruthReport truth;
  std::vector<ReplicationRow> rows;

  const ReplicationRow* find(const std::string& estimand, EstimatorKind kind) const;
};

// Builds the inclusion table (exact if enumerable, otherwise B Monte Carlo
// draws) once, then replays R assignments.
ReplicationReport run_replications(const SaturationPolicy& policy,
                                   const Network& network, const ExposureConfig& cfg,
                                   const PotentialOutcomeTable& table,
                                   const ReplicationOptions& options);

// Same with a caller-built inclusion table.
ReplicationReport run_replications(const SaturationPolicy& policy,
                                   const Network& network, const ExposureConfig& cfg,
                                   const PotentialOutcomeTable& table,
                                   const InclusionTable& inclusion,
                                   const ReplicationOptions& options);

struct SweepCell {
  std::string estimand;
  EstimatorKind kind = EstimatorKind::HT;
  std::vector<double> rmse;  // one per grid point
  double ratio_last_first = 0.0;
};

struct SweepReport {
  std::vector<std::size_t> n_target;
  std::vector<std::size_t> n_realized;
  std::vector<SweepCell> cells;
  // Per grid point: Hajek RMSE <= HT RMSE for every cell mean.
  std::vector<bool> hajek_not_worse;
  // Slope of log RMSE on log n, averaged over Hajek cell means.
  double mean_log_slope = 0.0;
};

// Cell-mean RMSE across a grid of sample sizes (cluster count scaled so the
// expected unit count matches each target).
SweepReport consistency_sweep(const GeographySpec& geography,
                              const NetworkParams& network_params,
                              const SaturationPolicy& policy, const ExposureConfig& cfg,
                              const DgpSpec& dgp, std::span<const std::size_t> n_grid,
                              const ReplicationOptions& options);

}  // namespace satdesign
