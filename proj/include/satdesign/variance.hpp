#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "satdesign/core.hpp"
#include "satdesign/estimators.hpp"
#include "satdesign/inclusion.hpp"

namespace satdesign {

enum class VarianceMethod { Omega, CauchySchwarz, OracleAvar };

std::string to_string(VarianceMethod method);

struct VarianceEstimate {
  double value = 0.0;
  VarianceMethod method = VarianceMethod::Omega;
  bool corrected = false;  // zero-joint-probability bound applied
  bool floored = false;    // negative quadratic form set to 0
  bool heuristic = false;  // covariate-adjusted pseudo-outcome variance
  std::size_t zero_joint_pairs = 0;
  std::size_t pairs_used = 0;
};

// One ordered entry (row i, column j) of a sparse n x n operator.
struct SparseEntry {
  std::uint32_t i;
  std::uint32_t j;
  double value;
};

// Entries in a fixed order: diagonal by unit, then stored pairs in pair order
// with (i, j) immediately followed by (j, i).
struct SparseOperator {
  std::size_t n = 0;
  std::vector<SparseEntry> entries;
};

// Lambda(c): diagonal (1 - pi_i)/pi_i, off-diagonal
// (pi_ij - pi_i pi_j)/(pi_i pi_j). Units with pi_i = 0 never enter the
// estimator and are left out. Unstored pairs are independent, hence 0.
SparseOperator lambda_operator(const InclusionTable& table, Cell cell);

// Lambda(c; c'): diagonal -1, off-diagonal
// (pi_ij(c;c') - pi_i(c) pi_j(c'))/(pi_i(c) pi_j(c')).
SparseOperator lambda_cross_operator(const InclusionTable& table, Cell left,
                                     Cell right);

// Omega(c): (pi_ij - pi_i pi_j)/pi_ij where pi_ij > 0 (diagonal 1 - pi_i),
// plus the list of stored pairs with pi_ij = 0 < pi_i, pi_j.
struct OmegaOperator {
  SparseOperator op;
  std::vector<UnitPair> zero_joint_pairs;
};

OmegaOperator omega_operator(const InclusionTable& table, Cell cell);

// sum over entries of left[i] * value * right[j], in entry order.
double quadratic_form(const SparseOperator& op, std::span<const double> left,
                      std::span<const double> right);

// ---------------------------------------------------------------------------
// Oracle side: needs the full potential-outcome table Y_i(a,s,h).
// ---------------------------------------------------------------------------

// n^-2 Y*' Gamma Lambda Gamma Y*. For the Hajek kind Y* is centered at
// sum gamma Y / sum gamma.
VarianceEstimate oracle_avar(std::span<const CellArray> potential,
                             const InclusionTable& table, Cell cell,
                             EstimatorKind kind, const WeightScheme* gamma = nullptr);

// n^-2 Y*(c)' Gamma(c) Lambda(c; c') Gamma'(c') Y*(c').
double oracle_acov(std::span<const CellArray> potential, const InclusionTable& table,
                   Cell left, const WeightScheme* gamma_left, Cell right,
                   const WeightScheme* gamma_right, EstimatorKind kind);

// ---------------------------------------------------------------------------
// Observed-data estimators.
// ---------------------------------------------------------------------------

// n^-2 Yhat' Gamma Omega Gamma Yhat with Yhat_i = I_i Y_i / pi_i (HT) or
// I_i (Y_i - center) / pi_i (Hajek). Stored pairs with zero joint
// probability contribute gamma_i^2 I_i Y_i^2 / pi_i + gamma_j^2 I_j Y_j^2 / pi_j
// instead (upper bound on the unidentified -2 gamma_i gamma_j Y_i Y_j term).
// Negative totals are floored at 0.
VarianceEstimate estimate_variance_cell(const Observations& obs,
                                        const InclusionTable& table, Cell cell,
                                        EstimatorKind kind,
                                        const WeightScheme* gamma = nullptr);

// Same quadratic form for caller-supplied outcomes (y[i] used where the unit
// is observed in the cell).
VarianceEstimate omega_variance(std::span<const std::uint8_t> cells,
                                std::span<const double> y, const InclusionTable& table,
                                Cell cell, const WeightScheme* gamma = nullptr);

// Omega variance of HT applied to the pseudo-outcomes Y_i - b'X_i.
VarianceEstimate ca_variance(const Observations& obs, const InclusionTable& table,
                             Cell cell, const Eigen::VectorXd& beta,
                             const WeightScheme* gamma = nullptr);

struct SignedSe {
  double weight;
  double se;
};

// (sum_k |w_k| se_k)^2.
VarianceEstimate conservative_contrast_variance(std::span<const SignedSe> components);

struct Interval {
  double lo;
  double hi;
};

// Standard normal quantile, |error| < 1e-12 on (1e-300, 1 - 1e-16).
double normal_quantile(double p);

// point +- z_{alpha/2} sqrt(variance).
Interval confidence_interval(double point, double variance, double alpha);

}  // namespace satdesign
