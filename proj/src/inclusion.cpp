#include "satdesign/inclusion.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace satdesign {

InclusionTable::InclusionTable(std::vector<std::string> unit_ids,
                               std::vector<CellArray> first,
                               std::vector<UnitPair> pairs,
                               std::vector<PairArray> second, InclusionMeta meta)
    : unit_ids_(std::move(unit_ids)),
      first_(std::move(first)),
      pairs_(std::move(pairs)),
      second_(std::move(second)),
      meta_(std::move(meta)) {
  if (unit_ids_.size() != first_.size() || pairs_.size() != second_.size())
    throw SchemaError("inclusion table: inconsistent sizes");
  index_.reserve(pairs_.size());
  for (std::size_t p = 0; p < pairs_.size(); ++p) {
    const auto [i, j] = pairs_[p];
    if (i >= j || j >= first_.size())
      throw SchemaError("inclusion table: pair must satisfy i < j < n");
    index_.emplace(key(i, j), p);
  }
}

std::optional<std::size_t> InclusionTable::pair_index(std::size_t i,
                                                      std::size_t j) const {
  if (i > j) std::swap(i, j);
  auto it = index_.find(key(i, j));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

double InclusionTable::joint(std::size_t i, std::size_t cell_i, std::size_t j,
                             std::size_t cell_j) const {
  if (i == j) return cell_i == cell_j ? first_[i][cell_i] : 0.0;
  if (i > j) {
    std::swap(i, j);
    std::swap(cell_i, cell_j);
  }
  auto it = index_.find(key(i, j));
  if (it == index_.end()) return first_[i][cell_i] * first_[j][cell_j];
  return second_[it->second][cell_i * kNumCells + cell_j];
}

InclusionTable InclusionTable::restrict_to(std::span<const std::size_t> keep) const {
  std::vector<std::size_t> new_index(size(), std::numeric_limits<std::size_t>::max());
  std::vector<std::string> ids;
  std::vector<CellArray> first;
  for (std::size_t k = 0; k < keep.size(); ++k) {
    new_index[keep[k]] = k;
    ids.push_back(unit_ids_[keep[k]]);
    first.push_back(first_[keep[k]]);
  }
  std::vector<std::pair<UnitPair, PairArray>> rows;
  for (std::size_t p = 0; p < pairs_.size(); ++p) {
    const auto [i, j] = pairs_[p];
    const std::size_t ni = new_index[i], nj = new_index[j];
    if (ni == std::numeric_limits<std::size_t>::max() ||
        nj == std::numeric_limits<std::size_t>::max())
      continue;
    PairArray row = second_[p];
    if (ni > nj) {
      PairArray swapped{};
      for (std::size_t a = 0; a < kNumCells; ++a)
        for (std::size_t b = 0; b < kNumCells; ++b)
          swapped[b * kNumCells + a] = row[a * kNumCells + b];
      row = swapped;
    }
    rows.push_back({{static_cast<std::uint32_t>(std::min(ni, nj)),
                     static_cast<std::uint32_t>(std::max(ni, nj))},
                    row});
  }
  std::sort(rows.begin(), rows.end(),
            [](const auto& x, const auto& y) { return x.first < y.first; });
  std::vector<UnitPair> pairs;
  std::vector<PairArray> second;
  for (auto& [pr, row] : rows) {
    pairs.push_back(pr);
    second.push_back(row);
  }
  return InclusionTable(std::move(ids), std::move(first), std::move(pairs),
                        std::move(second), meta_);
}

void InclusionTable::require_compatible(const std::string& policy_digest,
                                        const std::string& exposure_digest,
                                        const std::string& network_digest,
                                        std::size_t order) const {
  auto check = [](const std::string& what, const std::string& have,
                  const std::string& want) {
    if (have != want)
      throw DigestMismatchError(what + " digest mismatch: probabilities were built with " +
                                have + ", current configuration is " + want);
  };
  check("policy", meta_.policy_digest, policy_digest);
  check("exposure", meta_.exposure_digest, exposure_digest);
  check("network", meta_.network_digest, network_digest);
  if (meta_.order != order)
    throw DigestMismatchError("dependency order mismatch: probabilities use m=" +
                              std::to_string(meta_.order) + ", configuration has m=" +
                              std::to_string(order));
}

namespace {

InclusionMeta base_meta(const SaturationPolicy& policy, const Network& network,
                        const DependencyGraph* graph, const ExposureConfig& cfg) {
  InclusionMeta meta;
  meta.order = graph ? graph->order : 0;
  meta.exposure_mode = cfg.mode;
  meta.policy_digest = policy.digest();
  meta.exposure_digest = cfg.digest();
  meta.network_digest = network.digest();
  return meta;
}

}  // namespace

InclusionTable estimate_inclusion_mc(const SaturationPolicy& policy,
                                     const Network& network,
                                     const DependencyGraph* graph,
                                     const ExposureConfig& cfg,
                                     std::uint64_t draws, std::uint64_t seed,
                                     McOptions options) {
  policy.validate();
  cfg.validate();
  if (draws < 1) throw ValidationError("Monte Carlo draws must be at least 1");
  if (draws > std::numeric_limits<std::uint32_t>::max())
    throw ValidationError("Monte Carlo draws above 2^32-1 are not supported");
  if (graph && graph->size() != network.size())
    throw ValidationError("dependency graph does not match network");

  const std::size_t n = network.size();
  const std::vector<UnitPair> pairs = graph ? graph->pairs : std::vector<UnitPair>{};
  const std::size_t num_pairs = pairs.size();

  const unsigned workers = static_cast<unsigned>(
      std::min<std::uint64_t>(resolve_threads(options.threads), draws));
  std::vector<std::vector<std::uint32_t>> first_counts(workers);
  std::vector<std::vector<std::uint32_t>> pair_counts(workers);

  parallel_chunks(draws, workers, [&](unsigned w, std::size_t begin, std::size_t end) {
    auto& fc = first_counts[w];
    auto& pc = pair_counts[w];
    fc.assign(n * kNumCells, 0);
    pc.assign(num_pairs * kNumCellPairs, 0);
    std::vector<std::uint8_t> assignment(n), cells(n);
    std::vector<std::size_t> sample_scratch, exposure_scratch;
    for (std::size_t b = begin; b < end; ++b) {
      sample_assignment_into(policy, network, seed, b, assignment, sample_scratch);
      compute_cells(assignment, network, cfg, cells, exposure_scratch);
      for (std::size_t i = 0; i < n; ++i) ++fc[i * kNumCells + cells[i]];
      std::uint32_t* row = pc.data();
      for (const auto& [i, j] : pairs) {
        ++row[cells[i] * kNumCells + cells[j]];
        row += kNumCellPairs;
      }
    }
  });

  const double inv = 1.0 / static_cast<double>(draws);
  std::vector<CellArray> first(n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t c = 0; c < kNumCells; ++c) {
      std::uint64_t total = 0;
      for (unsigned w = 0; w < workers; ++w) total += first_counts[w][i * kNumCells + c];
      first[i][c] = static_cast<double>(total) * inv;
    }
  std::vector<PairArray> second(num_pairs);
  for (std::size_t p = 0; p < num_pairs; ++p)
    for (std::size_t k = 0; k < kNumCellPairs; ++k) {
      std::uint64_t total = 0;
      for (unsigned w = 0; w < workers; ++w) total += pair_counts[w][p * kNumCellPairs + k];
      second[p][k] = static_cast<double>(total) * inv;
    }

  InclusionMeta meta = base_meta(policy, network, graph, cfg);
  meta.mode = InclusionMode::MonteCarlo;
  meta.draws = draws;
  meta.seed = seed;
  return InclusionTable(network.unit_ids, std::move(first), pairs,
                        std::move(second), std::move(meta));
}

InclusionTable exact_inclusion(const SaturationPolicy& policy,
                               const Network& network,
                               const DependencyGraph* graph,
                               const ExposureConfig& cfg, std::uint64_t cap) {
  cfg.validate();
  const auto support = enumerate_assignments(policy, network, cap);
  const std::size_t n = network.size();
  const std::vector<UnitPair> pairs = graph ? graph->pairs : std::vector<UnitPair>{};

  std::vector<CellArray> first(n, CellArray{});
  std::vector<PairArray> second(pairs.size(), PairArray{});
  std::vector<std::uint8_t> cells(n);
  std::vector<std::size_t> scratch;
  for (const auto& wa : support) {
    compute_cells(wa.assignment.treatment, network, cfg, cells, scratch);
    for (std::size_t i = 0; i < n; ++i) first[i][cells[i]] += wa.probability;
    for (std::size_t p = 0; p < pairs.size(); ++p) {
      const auto [i, j] = pairs[p];
      second[p][cells[i] * kNumCells + cells[j]] += wa.probability;
    }
  }

  InclusionMeta meta = base_meta(policy, network, graph, cfg);
  meta.mode = InclusionMode::Exact;
  meta.draws = support.size();
  return InclusionTable(network.unit_ids, std::move(first), pairs,
                        std::move(second), std::move(meta));
}

// ---------------------------------------------------------------------------

std::string to_string(WeightKind kind) {
  switch (kind) {
    case WeightKind::DE: return "de";
    case WeightKind::WIE: return "wie";
    case WeightKind::BIE: return "bie";
  }
  return "?";
}

WeightKind parse_weight_kind(const std::string& text) {
  if (text == "de" || text == "DE") return WeightKind::DE;
  if (text == "wie" || text == "WIE") return WeightKind::WIE;
  if (text == "bie" || text == "BIE") return WeightKind::BIE;
  throw ValidationError("unknown weight kind '" + text + "'");
}

std::size_t WeightScheme::flagged_cells() const {
  std::size_t total = 0;
  for (const auto& row : zero_conditioning)
    for (auto f : row) total += f;
  return total;
}

WeightScheme WeightScheme::restrict_to(std::span<const std::size_t> keep) const {
  WeightScheme out = *this;
  out.gamma.clear();
  out.zero_conditioning.clear();
  for (std::size_t i : keep) {
    out.gamma.push_back(gamma[i]);
    out.zero_conditioning.push_back(zero_conditioning[i]);
  }
  return out;
}

const WeightScheme& PolicyWeights::get(WeightKind kind) const {
  switch (kind) {
    case WeightKind::DE: return de;
    case WeightKind::WIE: return wie;
    case WeightKind::BIE: return bie;
  }
  return de;
}

namespace {

// Cells sharing the conditioning event of `cell` under `kind`.
bool same_condition(WeightKind kind, Cell x, Cell y) {
  switch (kind) {
    case WeightKind::DE: return x.a == y.a;
    case WeightKind::WIE: return x.a == y.a && x.s == y.s;
    case WeightKind::BIE: return x.a == y.a && x.h == y.h;
  }
  return false;
}

}  // namespace

WeightScheme derive_policy_weights(const InclusionTable& table, WeightKind kind) {
  WeightScheme ws;
  ws.kind = kind;
  ws.policy_digest = table.meta().policy_digest;
  ws.exposure_digest = table.meta().exposure_digest;
  ws.network_digest = table.meta().network_digest;
  ws.draws = table.meta().draws;
  ws.seed = table.meta().seed;
  ws.gamma.assign(table.size(), CellArray{});
  ws.zero_conditioning.assign(table.size(), {});
  for (std::size_t i = 0; i < table.size(); ++i) {
    const CellArray& pi = table.first_row(i);
    for (std::size_t c = 0; c < kNumCells; ++c) {
      const Cell cell = Cell::from_index(c);
      double denom = 0.0;
      for (std::size_t d = 0; d < kNumCells; ++d)
        if (same_condition(kind, cell, Cell::from_index(d))) denom += pi[d];
      if (denom > 0.0) {
        ws.gamma[i][c] = pi[c] / denom;
      } else {
        ws.gamma[i][c] = 0.0;
        ws.zero_conditioning[i][c] = 1;
      }
    }
  }
  return ws;
}

PolicyWeights derive_policy_weights(const InclusionTable& table) {
  return PolicyWeights{derive_policy_weights(table, WeightKind::DE),
                       derive_policy_weights(table, WeightKind::WIE),
                       derive_policy_weights(table, WeightKind::BIE)};
}

WeightScheme estimate_policy_weights(const SaturationPolicy& psi,
                                     const Network& network,
                                     const ExposureConfig& cfg, WeightKind kind,
                                     std::uint64_t draws, std::uint64_t seed,
                                     McOptions options) {
  const InclusionTable table =
      estimate_inclusion_mc(psi, network, nullptr, cfg, draws, seed, options);
  return derive_policy_weights(table, kind);
}

// ---------------------------------------------------------------------------

namespace {

double quantile_sorted(const std::vector<double>& v, double q) {
  if (v.empty()) return 0.0;
  const double pos = q * static_cast<double>(v.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, v.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return v[lo] + frac * (v[hi] - v[lo]);
}

}  // namespace

PositivityReport positivity_report(const InclusionTable& table, double floor) {
  if (!(floor > 0.0 && floor < 1.0))
    throw ValidationError("positivity floor must lie in (0, 1)");
  PositivityReport report;
  report.floor = floor;
  const std::size_t n = table.size();
  const bool reduced = table.meta().exposure_mode == ExposureMode::Reduced;

  for (std::size_t c = 0; c < kNumCells; ++c) {
    const Cell cell = Cell::from_index(c);
    if (reduced && cell.h == 1) continue;
    std::vector<double> values;
    values.reserve(n);
    CellSummary summary;
    summary.cell = cell;
    double inv_sum = 0.0, inv_max = 0.0, sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double p = table.first(i, c);
      values.push_back(p);
      sum += p;
      if (p < floor) {
        ++summary.below_floor;
        report.violations.push_back({i, cell, p, p == 0.0});
      }
      if (p == 0.0) {
        ++summary.zeros;
      } else {
        inv_sum += 1.0 / p;
        inv_max = std::max(inv_max, 1.0 / p);
      }
    }
    std::sort(values.begin(), values.end());
    summary.min = values.empty() ? 0.0 : values.front();
    summary.max = values.empty() ? 0.0 : values.back();
    summary.q05 = quantile_sorted(values, 0.05);
    summary.q25 = quantile_sorted(values, 0.25);
    summary.median = quantile_sorted(values, 0.5);
    summary.q75 = quantile_sorted(values, 0.75);
    summary.mean = n ? sum / static_cast<double>(n) : 0.0;
    summary.max_weight_share = inv_sum > 0.0 ? inv_max / inv_sum : 0.0;
    report.cells.push_back(summary);
  }

  for (std::size_t i = 0; i < n; ++i) {
    double row = 0.0, a1 = 0.0, s1 = 0.0, h1 = 0.0;
    for (std::size_t c = 0; c < kNumCells; ++c) {
      const double p = table.first(i, c);
      const Cell cell = Cell::from_index(c);
      row += p;
      if (cell.a) a1 += p;
      if (cell.s) s1 += p;
      if (cell.h) h1 += p;
    }
    report.max_row_sum_error = std::max(report.max_row_sum_error, std::abs(row - 1.0));
    report.mean_pr_a1 += a1;
    report.mean_pr_s1 += s1;
    report.mean_pr_h1 += h1;
  }
  if (n > 0) {
    report.mean_pr_a1 /= static_cast<double>(n);
    report.mean_pr_s1 /= static_cast<double>(n);
    report.mean_pr_h1 /= static_cast<double>(n);
  }
  return report;
}

}  // namespace satdesign
