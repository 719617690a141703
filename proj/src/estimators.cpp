#include "satdesign/estimators.hpp"

namespace satdesign {

std::string to_string(EstimatorKind kind) {
  switch (kind) {
    case EstimatorKind::HT: return "ht";
    case EstimatorKind::Hajek: return "haj";
    case EstimatorKind::CovariateAdjusted: return "ca";
  }
  return "?";
}

EstimatorKind parse_estimator_kind(const std::string& text) {
  if (text == "ht") return EstimatorKind::HT;
  if (text == "haj" || text == "hajek") return EstimatorKind::Hajek;
  if (text == "ca") return EstimatorKind::CovariateAdjusted;
  throw ValidationError("unknown estimator '" + text + "' (expected ht, haj or ca)");
}

Observations Observations::restrict_to(std::span<const std::size_t> keep) const {
  Observations out;
  out.covariates.resize(static_cast<Eigen::Index>(keep.size()), covariates.cols());
  for (std::size_t k = 0; k < keep.size(); ++k) {
    out.cells.push_back(cells[keep[k]]);
    out.outcomes.push_back(outcomes[keep[k]]);
    if (covariates.cols() > 0)
      out.covariates.row(static_cast<Eigen::Index>(k)) =
          covariates.row(static_cast<Eigen::Index>(keep[k]));
  }
  return out;
}

namespace {

void check_shapes(const Observations& obs, const InclusionTable& table,
                  const WeightScheme* gamma) {
  if (obs.cells.size() != table.size() || obs.outcomes.size() != table.size())
    throw ValidationError("observations (" + std::to_string(obs.size()) +
                          " units) do not match the inclusion table (" +
                          std::to_string(table.size()) + " units)");
  if (gamma && gamma->size() != table.size())
    throw ValidationError("weight scheme size does not match the inclusion table");
}

struct WeightedSums {
  double numerator = 0.0;    // sum I gamma Y / pi
  double denominator = 0.0;  // sum I gamma / pi
  double gamma_sum = 0.0;
  std::size_t count = 0;
};

WeightedSums weighted_sums(const Observations& obs, const InclusionTable& table,
                           Cell cell, const WeightScheme* gamma) {
  check_shapes(obs, table, gamma);
  const std::size_t c = cell.index();
  WeightedSums sums;
  for (std::size_t i = 0; i < obs.size(); ++i) {
    const double g = gamma ? gamma->at(i, c) : 1.0;
    sums.gamma_sum += g;
    if (obs.cells[i] != c) continue;
    const double pi = table.first(i, c);
    if (!(pi > 0.0))
      throw PositivityError("unit '" + table.unit_ids()[i] + "' is observed in cell " +
                            cell_label(cell) + " which has zero probability");
    ++sums.count;
    sums.numerator += g * obs.outcomes[i] / pi;
    sums.denominator += g / pi;
  }
  return sums;
}

}  // namespace

CellMeanEstimate ht_cell_mean(const Observations& obs, const InclusionTable& table,
                              Cell cell, const WeightScheme* gamma) {
  const WeightedSums sums = weighted_sums(obs, table, cell, gamma);
  const double n = static_cast<double>(obs.size());
  CellMeanEstimate est;
  est.cell = cell;
  est.kind = EstimatorKind::HT;
  est.value = sums.numerator / n;
  est.effective_count = sums.count;
  est.hajek_denominator = sums.denominator / n;
  est.gamma_mean = sums.gamma_sum / n;
  if (sums.count == 0) {
    est.estimable = false;
    est.flags.push_back("empty-cell");
  }
  return est;
}

CellMeanEstimate hajek_cell_mean(const Observations& obs, const InclusionTable& table,
                                 Cell cell, const WeightScheme* gamma) {
  const WeightedSums sums = weighted_sums(obs, table, cell, gamma);
  if (!(sums.denominator > 0.0))
    throw EmptyCellError("cell " + cell_label(cell) +
                         " has no observed units (Hajek denominator is zero)");
  const double n = static_cast<double>(obs.size());
  CellMeanEstimate est;
  est.cell = cell;
  est.kind = EstimatorKind::Hajek;
  est.gamma_mean = sums.gamma_sum / n;
  est.value = est.gamma_mean * sums.numerator / sums.denominator;
  est.effective_count = sums.count;
  est.hajek_denominator = sums.denominator / n;
  return est;
}

Eigen::MatrixXd centered_design(const Observations& obs) {
  const auto n = static_cast<Eigen::Index>(obs.size());
  const Eigen::Index p = obs.covariates.cols();
  Eigen::MatrixXd x(n, p + 1);
  x.col(0).setOnes();
  if (p > 0) {
    if (obs.covariates.rows() != n)
      throw ValidationError("covariate matrix has the wrong number of rows");
    const Eigen::RowVectorXd mean = obs.covariates.colwise().mean();
    x.rightCols(p) = obs.covariates.rowwise() - mean;
  }
  return x;
}

CellMeanEstimate covariate_adjusted_cell_mean(const Observations& obs,
                                              const InclusionTable& table, Cell cell,
                                              const WeightScheme* gamma) {
  check_shapes(obs, table, gamma);
  const std::size_t c = cell.index();
  const Eigen::MatrixXd x = centered_design(obs);
  const Eigen::Index p1 = x.cols();

  std::vector<Eigen::Index> rows;
  for (std::size_t i = 0; i < obs.size(); ++i)
    if (obs.cells[i] == c) rows.push_back(static_cast<Eigen::Index>(i));

  if (rows.size() < 2) {
    CellMeanEstimate est = ht_cell_mean(obs, table, cell, gamma);
    est.kind = EstimatorKind::CovariateAdjusted;
    est.beta = Eigen::VectorXd::Zero(p1);
    est.flags.push_back("ca-fallback-ht");
    return est;
  }

  Eigen::MatrixXd xs(static_cast<Eigen::Index>(rows.size()), p1);
  Eigen::VectorXd ys(static_cast<Eigen::Index>(rows.size()));
  for (std::size_t k = 0; k < rows.size(); ++k) {
    xs.row(static_cast<Eigen::Index>(k)) = x.row(rows[k]);
    ys(static_cast<Eigen::Index>(k)) = obs.outcomes[static_cast<std::size_t>(rows[k])];
  }
  const Eigen::VectorXd beta = xs.completeOrthogonalDecomposition().solve(ys);

  CellMeanEstimate est;
  est.cell = cell;
  est.kind = EstimatorKind::CovariateAdjusted;
  est.beta = beta;
  est.effective_count = rows.size();
  if (static_cast<Eigen::Index>(rows.size()) < p1 + 1)
    est.flags.push_back("ca-small-cell");

  const double n = static_cast<double>(obs.size());
  double total = 0.0, denom = 0.0, gsum = 0.0;
  for (std::size_t i = 0; i < obs.size(); ++i) {
    const double g = gamma ? gamma->at(i, c) : 1.0;
    const double fitted = x.row(static_cast<Eigen::Index>(i)).dot(beta);
    gsum += g;
    total += g * fitted;
    if (obs.cells[i] != c) continue;
    const double pi = table.first(i, c);
    if (!(pi > 0.0))
      throw PositivityError("unit '" + table.unit_ids()[i] + "' is observed in cell " +
                            cell_label(cell) + " which has zero probability");
    total += g * (obs.outcomes[i] - fitted) / pi;
    denom += g / pi;
  }
  est.value = total / n;
  est.hajek_denominator = denom / n;
  est.gamma_mean = gsum / n;
  return est;
}

}  // namespace satdesign
