#include "satdesign/variance.hpp"

#include <cmath>
#include <numbers>

namespace satdesign {

std::string to_string(VarianceMethod method) {
  switch (method) {
    case VarianceMethod::Omega: return "omega";
    case VarianceMethod::CauchySchwarz: return "cauchy-schwarz";
    case VarianceMethod::OracleAvar: return "oracle-avar";
  }
  return "?";
}

SparseOperator lambda_operator(const InclusionTable& table, Cell cell) {
  const std::size_t c = cell.index();
  SparseOperator op;
  op.n = table.size();
  for (std::size_t i = 0; i < table.size(); ++i) {
    const double pi = table.first(i, c);
    if (pi > 0.0)
      op.entries.push_back({static_cast<std::uint32_t>(i),
                            static_cast<std::uint32_t>(i), (1.0 - pi) / pi});
  }
  for (std::size_t p = 0; p < table.pairs().size(); ++p) {
    const auto [i, j] = table.pairs()[p];
    const double pi_i = table.first(i, c);
    const double pi_j = table.first(j, c);
    if (!(pi_i > 0.0 && pi_j > 0.0)) continue;
    const double pij = table.pair_row(p)[c * kNumCells + c];
    const double v = (pij - pi_i * pi_j) / (pi_i * pi_j);
    op.entries.push_back({i, j, v});
    op.entries.push_back({j, i, v});
  }
  return op;
}

SparseOperator lambda_cross_operator(const InclusionTable& table, Cell left,
                                     Cell right) {
  if (left == right) return lambda_operator(table, left);
  const std::size_t cl = left.index(), cr = right.index();
  SparseOperator op;
  op.n = table.size();
  for (std::size_t i = 0; i < table.size(); ++i)
    if (table.first(i, cl) > 0.0 && table.first(i, cr) > 0.0)
      op.entries.push_back({static_cast<std::uint32_t>(i),
                            static_cast<std::uint32_t>(i), -1.0});
  for (std::size_t p = 0; p < table.pairs().size(); ++p) {
    const auto [i, j] = table.pairs()[p];
    const auto& row = table.pair_row(p);
    // (i at left, j at right) and (j at left, i at right).
    const double il = table.first(i, cl), jr = table.first(j, cr);
    if (il > 0.0 && jr > 0.0)
      op.entries.push_back({i, j, (row[cl * kNumCells + cr] - il * jr) / (il * jr)});
    const double jl = table.first(j, cl), ir = table.first(i, cr);
    if (jl > 0.0 && ir > 0.0)
      op.entries.push_back({j, i, (row[cr * kNumCells + cl] - jl * ir) / (jl * ir)});
  }
  return op;
}

OmegaOperator omega_operator(const InclusionTable& table, Cell cell) {
  const std::size_t c = cell.index();
  OmegaOperator out;
  out.op.n = table.size();
  for (std::size_t i = 0; i < table.size(); ++i) {
    const double pi = table.first(i, c);
    if (pi > 0.0)
      out.op.entries.push_back({static_cast<std::uint32_t>(i),
                                static_cast<std::uint32_t>(i), 1.0 - pi});
  }
  for (std::size_t p = 0; p < table.pairs().size(); ++p) {
    const auto [i, j] = table.pairs()[p];
    const double pi_i = table.first(i, c);
    const double pi_j = table.first(j, c);
    if (!(pi_i > 0.0 && pi_j > 0.0)) continue;
    const double pij = table.pair_row(p)[c * kNumCells + c];
    if (pij > 0.0) {
      const double v = (pij - pi_i * pi_j) / pij;
      out.op.entries.push_back({i, j, v});
      out.op.entries.push_back({j, i, v});
    } else {
      out.zero_joint_pairs.push_back(table.pairs()[p]);
    }
  }
  return out;
}

double quadratic_form(const SparseOperator& op, std::span<const double> left,
                      std::span<const double> right) {
  double total = 0.0;
  for (const auto& e : op.entries) total += left[e.i] * e.value * right[e.j];
  return total;
}

namespace {

// gamma_i(c) * Y*_i(c) for every unit.
std::vector<double> weighted_potential(std::span<const CellArray> potential,
                                       std::size_t c, EstimatorKind kind,
                                       const WeightScheme* gamma) {
  const std::size_t n = potential.size();
  std::vector<double> out(n);
  double center = 0.0;
  if (kind == EstimatorKind::Hajek) {
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double g = gamma ? gamma->at(i, c) : 1.0;
      num += g * potential[i][c];
      den += g;
    }
    center = den > 0.0 ? num / den : 0.0;
  }
  for (std::size_t i = 0; i < n; ++i) {
    const double g = gamma ? gamma->at(i, c) : 1.0;
    out[i] = g * (potential[i][c] - center);
  }
  return out;
}

void check_oracle_inputs(std::span<const CellArray> potential,
                         const InclusionTable& table, EstimatorKind kind) {
  if (potential.size() != table.size())
    throw ValidationError("potential-outcome table does not match inclusion table");
  if (kind == EstimatorKind::CovariateAdjusted)
    throw ValidationError("oracle variance is defined for ht and haj only");
  for (const auto& row : potential)
    for (double y : row)
      if (std::isnan(y))
        throw ValidationError("potential-outcome table has missing entries");
}

}  // namespace

VarianceEstimate oracle_avar(std::span<const CellArray> potential,
                             const InclusionTable& table, Cell cell,
                             EstimatorKind kind, const WeightScheme* gamma) {
  check_oracle_inputs(potential, table, kind);
  const auto y = weighted_potential(potential, cell.index(), kind, gamma);
  const SparseOperator op = lambda_operator(table, cell);
  const double n = static_cast<double>(table.size());
  VarianceEstimate out;
  out.method = VarianceMethod::OracleAvar;
  out.value = quadratic_form(op, y, y) / (n * n);
  out.pairs_used = table.pairs().size();
  return out;
}

double oracle_acov(std::span<const CellArray> potential, const InclusionTable& table,
                   Cell left, const WeightScheme* gamma_left, Cell right,
                   const WeightScheme* gamma_right, EstimatorKind kind) {
  check_oracle_inputs(potential, table, kind);
  const auto yl = weighted_potential(potential, left.index(), kind, gamma_left);
  const auto yr = weighted_potential(potential, right.index(), kind, gamma_right);
  const double n = static_cast<double>(table.size());
  return quadratic_form(lambda_cross_operator(table, left, right), yl, yr) / (n * n);
}

VarianceEstimate omega_variance(std::span<const std::uint8_t> cells,
                                std::span<const double> y, const InclusionTable& table,
                                Cell cell, const WeightScheme* gamma) {
  const std::size_t n = table.size();
  const std::size_t c = cell.index();
  if (cells.size() != n || y.size() != n)
    throw ValidationError("variance inputs do not match the inclusion table");

  // gamma_i I_i Y_i / pi_i, and the bound term gamma_i^2 I_i Y_i^2 / pi_i.
  std::vector<double> yhat(n, 0.0);
  std::vector<double> bound(n, 0.0);
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (cells[i] != c) continue;
    const double pi = table.first(i, c);
    if (!(pi > 0.0))
      throw PositivityError("unit '" + table.unit_ids()[i] + "' is observed in cell " +
                            cell_label(cell) + " which has zero probability");
    const double g = gamma ? gamma->at(i, c) : 1.0;
    yhat[i] = g * y[i] / pi;
    bound[i] = g * g * y[i] * y[i] / pi;
    total += yhat[i] * yhat[i] * (1.0 - pi);
  }

  VarianceEstimate out;
  out.method = VarianceMethod::Omega;
  for (std::size_t p = 0; p < table.pairs().size(); ++p) {
    const auto [i, j] = table.pairs()[p];
    const bool oi = cells[i] == c, oj = cells[j] == c;
    if (!oi && !oj) continue;
    const double pi_i = table.first(i, c);
    const double pi_j = table.first(j, c);
    if (!(pi_i > 0.0 && pi_j > 0.0)) continue;
    const double pij = table.pair_row(p)[c * kNumCells + c];
    if (pij > 0.0) {
      if (oi && oj) {
        total += 2.0 * yhat[i] * yhat[j] * (pij - pi_i * pi_j) / pij;
        ++out.pairs_used;
      }
    } else {
      total += bound[i] + bound[j];
      ++out.zero_joint_pairs;
    }
  }
  out.corrected = out.zero_joint_pairs > 0;
  const double nn = static_cast<double>(n) * static_cast<double>(n);
  out.value = total / nn;
  if (out.value < 0.0) {
    out.value = 0.0;
    out.floored = true;
  }
  return out;
}

VarianceEstimate ca_variance(const Observations& obs, const InclusionTable& table,
                             Cell cell, const Eigen::VectorXd& beta,
                             const WeightScheme* gamma) {
  const Eigen::MatrixXd x = centered_design(obs);
  if (beta.size() != x.cols())
    throw ValidationError("coefficient vector does not match the covariate design");
  std::vector<double> pseudo(obs.size());
  for (std::size_t i = 0; i < obs.size(); ++i)
    pseudo[i] = obs.outcomes[i] - x.row(static_cast<Eigen::Index>(i)).dot(beta);
  VarianceEstimate out = omega_variance(obs.cells, pseudo, table, cell, gamma);
  out.heuristic = true;
  return out;
}

VarianceEstimate estimate_variance_cell(const Observations& obs,
                                        const InclusionTable& table, Cell cell,
                                        EstimatorKind kind, const WeightScheme* gamma) {
  switch (kind) {
    case EstimatorKind::HT:
      return omega_variance(obs.cells, obs.outcomes, table, cell, gamma);
    case EstimatorKind::Hajek: {
      const CellMeanEstimate est = hajek_cell_mean(obs, table, cell, gamma);
      const double center = est.gamma_mean > 0.0 ? est.value / est.gamma_mean : 0.0;
      std::vector<double> centered(obs.size());
      for (std::size_t i = 0; i < obs.size(); ++i) centered[i] = obs.outcomes[i] - center;
      return omega_variance(obs.cells, centered, table, cell, gamma);
    }
    case EstimatorKind::CovariateAdjusted: {
      const CellMeanEstimate est = covariate_adjusted_cell_mean(obs, table, cell, gamma);
      return ca_variance(obs, table, cell, est.beta, gamma);
    }
  }
  return {};
}

VarianceEstimate conservative_contrast_variance(std::span<const SignedSe> components) {
  double sum = 0.0;
  for (const auto& c : components) {
    if (!(c.se >= 0.0))
      throw ValidationError("component standard errors must be nonnegative");
    sum += std::abs(c.weight) * c.se;
  }
  VarianceEstimate out;
  out.method = VarianceMethod::CauchySchwarz;
  out.value = sum * sum;
  return out;
}

double normal_quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) {
    if (p == 0.0) return -INFINITY;
    if (p == 1.0) return INFINITY;
    return NAN;
  }
  // Rational approximation (Acklam), then two Halley steps on erfc.
  static constexpr double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                                 -2.759285104469687e+02, 1.383577518672690e+02,
                                 -3.066479806614716e+01, 2.506628277459239e+00};
  static constexpr double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                                 -1.556989798598866e+02, 6.680131188771972e+01,
                                 -1.328068155288572e+01};
  static constexpr double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                                 -2.400758277161838e+00, -2.549732539343734e+00,
                                 4.374664141464968e+00,  2.938163982698783e+00};
  static constexpr double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                                 2.445134137142996e+00, 3.754408661907416e+00};
  constexpr double plow = 0.02425;
  double x;
  if (p < plow) {
    const double q = std::sqrt(-2.0 * std::log(p));
    x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  } else if (p <= 1.0 - plow) {
    const double q = p - 0.5;
    const double r = q * q;
    x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
        (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
  } else {
    const double q = std::sqrt(-2.0 * std::log1p(-p));
    x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }
  for (int iter = 0; iter < 2; ++iter) {
    // Work in the tail closer to the probability to avoid cancellation.
    // e = Phi(x) - p.
    const double e = x < 0 ? 0.5 * std::erfc(-x / std::numbers::sqrt2) - p
                           : (1.0 - p) - 0.5 * std::erfc(x / std::numbers::sqrt2);
    const double u = e * std::sqrt(2.0 * std::numbers::pi) * std::exp(0.5 * x * x);
    x = x - u / (1.0 + 0.5 * x * u);
  }
  return x;
}

Interval confidence_interval(double point, double variance, double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0))
    throw ValidationError("alpha must lie in (0, 1)");
  if (!(variance >= 0.0)) throw ValidationError("variance must be nonnegative");
  const double half = normal_quantile(1.0 - alpha / 2.0) * std::sqrt(variance);
  return {point - half, point + half};
}

}  // namespace satdesign
