#include "satdesign/simharness.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace satdesign {

namespace {

// derive_seed purposes.
constexpr std::uint64_t kGeographyPurpose = 11;
constexpr std::uint64_t kOutcomePurpose = 12;
constexpr std::uint64_t kInclusionPurpose = 13;
constexpr std::uint64_t kReplicationPurpose = 14;
constexpr std::uint64_t kSweepPurpose = 15;

struct RepCell {
  double point = 0.0;
  double variance = 0.0;
  bool estimable = false;
  bool positivity = false;
  bool covered = false;
  bool below = false;  // interval entirely below the truth
  bool degenerate = false;
};

}  // namespace

Dataset generate_geography(const GeographySpec& spec, std::uint64_t seed) {
  if (spec.clusters == 0) throw ValidationError("geography needs at least one cluster");
  if (spec.sizes.empty()) throw ValidationError("geography needs at least one cluster size");
  for (std::size_t s : spec.sizes)
    if (s == 0) throw ValidationError("cluster sizes must be positive");
  if (!(spec.spacing_km > 0.0) || spec.jitter_km < 0.0 || spec.unit_radius_km < 0.0)
    throw ValidationError("geography distances must be nonnegative (spacing positive)");

  const auto cols = static_cast<std::size_t>(
      std::ceil(std::sqrt(static_cast<double>(spec.clusters))));
  const std::uint64_t base = derive_seed(seed, kGeographyPurpose);
  Dataset data;
  std::size_t next_id = 1;
  for (std::size_t c = 0; c < spec.clusters; ++c) {
    RandomStream rng(base, c, 0);
    const std::size_t size = spec.sizes[rng.below(spec.sizes.size())];
    const double angle0 = 2.0 * std::numbers::pi * rng.uniform();
    const double r0 = spec.jitter_km * std::sqrt(rng.uniform());
    const double cx = static_cast<double>(c % cols) * spec.spacing_km + r0 * std::cos(angle0);
    const double cy = static_cast<double>(c / cols) * spec.spacing_km + r0 * std::sin(angle0);
    for (std::size_t u = 0; u < size; ++u) {
      const double angle = 2.0 * std::numbers::pi * rng.uniform();
      const double r = spec.unit_radius_km * std::sqrt(rng.uniform());
      UnitRecord rec;
      rec.unit_id = std::to_string(next_id++);
      rec.cluster_id = "c" + std::to_string(c + 1);
      rec.x_km = cx + r * std::cos(angle);
      rec.y_km = cy + r * std::sin(angle);
      data.units.push_back(std::move(rec));
    }
  }
  return data;
}

PotentialOutcomeTable generate_po_table(const Network& network, const DgpSpec& spec,
                                        std::uint64_t seed) {
  for (double v : {spec.mu0, spec.mu_sd, spec.theta_a, spec.theta_s, spec.theta_h,
                   spec.theta_as, spec.theta_ah, spec.noise_sd, spec.clamp,
                   spec.covariate_noise_sd})
    if (!std::isfinite(v)) throw ValidationError("outcome model coefficients must be finite");
  if (!(spec.clamp > 0.0)) throw ValidationError("outcome clamp must be positive");

  const std::size_t n = network.size();
  const std::uint64_t base = derive_seed(seed, kOutcomePurpose);
  PotentialOutcomeTable out;
  out.y.resize(n);
  out.covariates.resize(static_cast<Eigen::Index>(n),
                        static_cast<Eigen::Index>(spec.covariates));
  for (std::size_t k = 0; k < spec.covariates; ++k)
    out.covariate_names.push_back("x" + std::to_string(k + 1));

  for (std::size_t i = 0; i < n; ++i) {
    RandomStream rng(base, i, 0);
    const double z = rng.normal();
    const double mu = spec.mu0 + spec.mu_sd * z;
    for (std::size_t k = 0; k < spec.covariates; ++k)
      out.covariates(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) =
          z + spec.covariate_noise_sd * rng.normal();
    const double shared = spec.noise_sd * rng.normal();
    for (std::size_t c = 0; c < kNumCells; ++c) {
      const Cell cl = Cell::from_index(c);
      const double eps = spec.noise_per_cell ? spec.noise_sd * rng.normal() : shared;
      const double y = mu + spec.theta_a * cl.a + spec.theta_s * cl.s +
                       spec.theta_h * cl.h + spec.theta_as * cl.a * cl.s +
                       spec.theta_ah * cl.a * cl.h + eps;
      out.y[i][c] = std::clamp(y, -spec.clamp, spec.clamp);
    }
  }
  return out;
}

const TruthRow* TruthReport::find(const std::string& estimand) const {
  for (const auto& r : rows)
    if (r.estimand == estimand) return &r;
  return nullptr;
}

TruthReport compute_truth(const PotentialOutcomeTable& table,
                          std::span<const Estimand> estimands,
                          const PolicyWeights* weights) {
  TruthReport out;
  for (const auto& e : estimands) {
    const TruthValue t = estimand_truth(e, table.y, weights);
    out.rows.push_back({e.name, t.value, t.defined});
  }
  return out;
}

const ReplicationRow* ReplicationReport::find(const std::string& estimand,
                                              EstimatorKind kind) const {
  for (const auto& r : rows)
    if (r.estimand == estimand && r.kind == kind) return &r;
  return nullptr;
}

ReplicationReport run_replications(const SaturationPolicy& policy,
                                   const Network& network, const ExposureConfig& cfg,
                                   const PotentialOutcomeTable& table,
                                   const ReplicationOptions& options) {
  const DependencyGraph graph = dependency_graph(network, options.order);
  const bool exact = !options.force_mc &&
                     policy_support_size(policy, network) <= options.exact_cap;
  const InclusionTable inclusion =
      exact ? exact_inclusion(policy, network, &graph, cfg, options.exact_cap)
            : estimate_inclusion_mc(policy, network, &graph, cfg, options.draws,
                                    derive_seed(options.seed, kInclusionPurpose),
                                    McOptions{options.threads});
  return run_replications(policy, network, cfg, table, inclusion, options);
}

ReplicationReport run_replications(const SaturationPolicy& policy,
                                   const Network& network, const ExposureConfig& cfg,
                                   const PotentialOutcomeTable& table,
                                   const InclusionTable& inclusion,
                                   const ReplicationOptions& options) {
  if (options.replications == 0) throw ValidationError("replications must be at least 1");
  if (options.kinds.empty()) throw ValidationError("no estimators requested");
  if (table.size() != network.size() || inclusion.size() != network.size())
    throw ValidationError("network, outcome table and inclusion table sizes differ");
  inclusion.require_compatible(policy.digest(), cfg.digest(), network.digest(),
                               inclusion.meta().order);

  const std::size_t n = network.size();
  const DependencyGraph graph =
      dependency_graph(network, std::max<std::size_t>(1, inclusion.meta().order));
  const DegreeReport degrees = degree_diagnostics(network, graph);

  std::vector<Estimand> estimands;
  if (options.estimands.empty()) {
    estimands = all_estimands(cfg.mode, options.with_policy);
  } else {
    for (const auto& name : options.estimands)
      estimands.push_back(parse_estimand(name, cfg.mode));
  }
  bool need_weights = false;
  for (const auto& e : estimands) need_weights = need_weights || e.uses_weights();
  std::optional<PolicyWeights> weights;
  if (need_weights) weights = derive_policy_weights(inclusion);
  const PolicyWeights* wp = weights ? &*weights : nullptr;

  ReplicationReport report;
  report.n = n;
  report.replications = options.replications;
  report.draws = inclusion.meta().draws;
  report.seed = options.seed;
  report.alpha = options.alpha;
  report.inclusion_mode = inclusion.meta().mode;
  report.order = inclusion.meta().order;
  report.max_degree = graph.max_degree;
  report.stored_pairs = inclusion.pairs().size();
  report.uncovered_dependent_pairs = degrees.uncovered_dependent_pairs;
  report.truth = compute_truth(table, estimands, wp);

  const std::size_t slots = estimands.size() * options.kinds.size();
  const std::size_t R = options.replications;
  std::vector<RepCell> results(R * slots);
  std::vector<std::uint8_t> positivity_hit(R, 0);
  const std::uint64_t rep_seed = derive_seed(options.seed, kReplicationPurpose);
  const unsigned workers =
      static_cast<unsigned>(std::min<std::size_t>(resolve_threads(options.threads), R));

  parallel_chunks(R, workers, [&](unsigned, std::size_t begin, std::size_t end) {
    std::vector<std::uint8_t> z(n);
    std::vector<std::size_t> scratch, count_scratch;
    Observations obs;
    obs.cells.resize(n);
    obs.outcomes.resize(n);
    obs.covariates = table.covariates;
    for (std::size_t r = begin; r < end; ++r) {
      sample_assignment_into(policy, network, rep_seed, r, z, scratch);
      compute_cells(z, network, cfg, obs.cells, count_scratch);
      for (std::size_t i = 0; i < n; ++i) obs.outcomes[i] = table.y[i][obs.cells[i]];
      EffectEngine engine(obs, inclusion, EffectOptions{options.alpha, false});
      engine.set_weights(wp);
      for (std::size_t e = 0; e < estimands.size(); ++e) {
        const double truth = report.truth.rows[e].value;
        for (std::size_t k = 0; k < options.kinds.size(); ++k) {
          const EffectEstimate est = engine.evaluate(estimands[e], options.kinds[k]);
          RepCell& cell = results[r * slots + e * options.kinds.size() + k];
          cell.estimable = est.estimable;
          cell.positivity = est.status == "positivity-violation";
          if (cell.positivity) positivity_hit[r] = 1;
          if (!est.estimable) continue;
          cell.point = est.point;
          cell.variance = est.variance;
          cell.degenerate = !(est.variance > 0.0);
          cell.covered = est.ci.lo <= truth && truth <= est.ci.hi;
          cell.below = est.ci.hi < truth;
        }
      }
    }
  });

  for (std::uint8_t hit : positivity_hit) report.positivity_violations += hit;

  for (std::size_t e = 0; e < estimands.size(); ++e) {
    for (std::size_t k = 0; k < options.kinds.size(); ++k) {
      ReplicationRow row;
      row.estimand = estimands[e].name;
      row.kind = options.kinds[k];
      row.truth = report.truth.rows[e].value;
      row.truth_defined = report.truth.rows[e].defined;
      const std::size_t slot = e * options.kinds.size() + k;

      double sum = 0.0, sum_var = 0.0;
      std::size_t covered = 0, nondegenerate = 0;
      for (std::size_t r = 0; r < R; ++r) {
        const RepCell& c = results[r * slots + slot];
        if (!c.estimable) {
          ++row.exclusions;
          continue;
        }
        ++row.used;
        sum += c.point;
        sum_var += c.variance;
        if (c.degenerate) {
          ++row.degenerate;
        } else {
          ++nondegenerate;
          covered += c.covered ? 1 : 0;
          if (!c.covered) ++(c.below ? row.miss_below : row.miss_above);
        }
      }
      if (row.used > 0) {
        const double used = static_cast<double>(row.used);
        row.mean = sum / used;
        row.bias = row.mean - row.truth;
        row.mean_estimated_variance = sum_var / used;
        double ss = 0.0, se2 = 0.0;
        for (std::size_t r = 0; r < R; ++r) {
          const RepCell& c = results[r * slots + slot];
          if (!c.estimable) continue;
          ss += (c.point - row.mean) * (c.point - row.mean);
          se2 += (c.point - row.truth) * (c.point - row.truth);
        }
        row.empirical_variance = ss / used;
        row.rmse = std::sqrt(se2 / used);
        row.conservativeness_margin = row.mean_estimated_variance - row.empirical_variance;
        // Per-replication terms d_r = vhat_r - (x_r - xbar)^2 average to the margin.
        double dd = 0.0;
        for (std::size_t r = 0; r < R; ++r) {
          const RepCell& c = results[r * slots + slot];
          if (!c.estimable) continue;
          const double d = c.variance - (c.point - row.mean) * (c.point - row.mean) -
                           row.conservativeness_margin;
          dd += d * d;
        }
        row.margin_se = row.used > 1 ? std::sqrt(dd / (used - 1.0) / used) : 0.0;
        row.coverage = nondegenerate > 0
                           ? static_cast<double>(covered) / static_cast<double>(nondegenerate)
                           : 0.0;
      }
      report.rows.push_back(std::move(row));
    }
  }
  return report;
}

SweepReport consistency_sweep(const GeographySpec& geography,
                              const NetworkParams& network_params,
                              const SaturationPolicy& policy, const ExposureConfig& cfg,
                              const DgpSpec& dgp, std::span<const std::size_t> n_grid,
                              const ReplicationOptions& options) {
  if (n_grid.empty()) throw ValidationError("sample-size grid is empty");
  for (std::size_t g = 1; g < n_grid.size(); ++g)
    if (n_grid[g] <= n_grid[g - 1])
      throw ValidationError("sample-size grid must be strictly ascending");

  double mean_size = 0.0;
  for (std::size_t s : geography.sizes) mean_size += static_cast<double>(s);
  mean_size /= static_cast<double>(geography.sizes.size());

  ReplicationOptions opts = options;
  opts.with_policy = false;
  opts.kinds = {EstimatorKind::HT, EstimatorKind::Hajek};
  opts.estimands.clear();
  for (const auto& e : cell_mean_estimands(cfg.mode)) opts.estimands.push_back(e.name);

  SweepReport out;
  std::vector<ReplicationReport> reports;
  for (std::size_t g = 0; g < n_grid.size(); ++g) {
    GeographySpec spec = geography;
    spec.clusters = std::max<std::size_t>(
        1, static_cast<std::size_t>(std::lround(static_cast<double>(n_grid[g]) / mean_size)));
    const std::uint64_t seed = derive_seed(options.seed, kSweepPurpose + 16 * g);
    const Dataset data = generate_geography(spec, seed);
    const Network net = build_network(data, network_params);
    const PotentialOutcomeTable po = generate_po_table(net, dgp, seed);
    opts.seed = seed;
    reports.push_back(run_replications(policy, net, cfg, po, opts));
    out.n_target.push_back(n_grid[g]);
    out.n_realized.push_back(net.size());
  }

  for (const auto& name : opts.estimands) {
    for (EstimatorKind kind : opts.kinds) {
      SweepCell cell;
      cell.estimand = name;
      cell.kind = kind;
      for (const auto& rep : reports) cell.rmse.push_back(rep.find(name, kind)->rmse);
      cell.ratio_last_first =
          cell.rmse.front() > 0.0 ? cell.rmse.back() / cell.rmse.front() : 0.0;
      out.cells.push_back(std::move(cell));
    }
  }

  for (std::size_t g = 0; g < reports.size(); ++g) {
    bool ok = true;
    for (const auto& name : opts.estimands)
      ok = ok && reports[g].find(name, EstimatorKind::Hajek)->rmse <=
                     reports[g].find(name, EstimatorKind::HT)->rmse;
    out.hajek_not_worse.push_back(ok);
  }

  if (reports.size() >= 2) {
    double slope_sum = 0.0;
    std::size_t slope_count = 0;
    for (const auto& cell : out.cells) {
      if (cell.kind != EstimatorKind::Hajek) continue;
      double mx = 0, my = 0;
      const double k = static_cast<double>(cell.rmse.size());
      bool finite = true;
      for (std::size_t g = 0; g < cell.rmse.size(); ++g) {
        if (!(cell.rmse[g] > 0.0)) finite = false;
        mx += std::log(static_cast<double>(out.n_realized[g]));
        my += cell.rmse[g] > 0.0 ? std::log(cell.rmse[g]) : 0.0;
      }
      if (!finite) continue;
      mx /= k;
      my /= k;
      double sxy = 0, sxx = 0;
      for (std::size_t g = 0; g < cell.rmse.size(); ++g) {
        const double dx = std::log(static_cast<double>(out.n_realized[g])) - mx;
        sxy += dx * (std::log(cell.rmse[g]) - my);
        sxx += dx * dx;
      }
      if (sxx > 0.0) {
        slope_sum += sxy / sxx;
        ++slope_count;
      }
    }
    out.mean_log_slope = slope_count ? slope_sum / static_cast<double>(slope_count) : 0.0;
  }
  return out;
}

}  // namespace satdesign
