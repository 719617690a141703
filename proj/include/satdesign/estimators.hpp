#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "satdesign/core.hpp"
#include "satdesign/inclusion.hpp"

namespace satdesign {

enum class EstimatorKind { HT, Hajek, CovariateAdjusted };

std::string to_string(EstimatorKind kind);
EstimatorKind parse_estimator_kind(const std::string& text);

// Observed exposure cells and outcomes, aligned with an InclusionTable.
struct Observations {
  std::vector<std::uint8_t> cells;
  std::vector<double> outcomes;
  Eigen::MatrixXd covariates;  // n x p raw covariates; p may be 0

  std::size_t size() const { return cells.size(); }
  Observations restrict_to(std::span<const std::size_t> keep) const;
};

struct CellMeanEstimate {
  Cell cell;
  EstimatorKind kind = EstimatorKind::HT;
  double value = 0.0;
  std::size_t effective_count = 0;  // sum_i I_i(a,s,h)
  double hajek_denominator = 0.0;   // n^-1 sum_i I_i gamma_i / pi_i
  double gamma_mean = 1.0;          // n^-1 sum_i gamma_i
  bool estimable = true;
  std::vector<std::string> flags;
  Eigen::VectorXd beta;  // covariate-adjusted only: [intercept, slopes...]
};

// n^-1 sum_i I_i gamma_i Y_i / pi_i. gamma defaults to 1. Throws
// PositivityError when an observed unit has pi = 0.
CellMeanEstimate ht_cell_mean(const Observations& obs, const InclusionTable& table,
                              Cell cell, const WeightScheme* gamma = nullptr);

// (n^-1 sum_i gamma_i) * sum_i I_i gamma_i Y_i / pi_i / sum_i I_i gamma_i / pi_i.
// Throws EmptyCellError when the denominator is zero.
CellMeanEstimate hajek_cell_mean(const Observations& obs, const InclusionTable& table,
                                 Cell cell, const WeightScheme* gamma = nullptr);

// Regression-assisted IPW:
//   n^-1 sum_i gamma_i { I_i / pi_i (Y_i - b'X_i) + b'X_i }
// with X_i = [1, centered covariates] and b the minimum-norm least squares
// fit of Y on X among units observed in the cell. Cells with fewer than two
// units fall back to HT and are flagged.
CellMeanEstimate covariate_adjusted_cell_mean(const Observations& obs,
                                              const InclusionTable& table, Cell cell,
                                              const WeightScheme* gamma = nullptr);

// [1, X - column means] over all n units.
Eigen::MatrixXd centered_design(const Observations& obs);

}  // namespace satdesign
