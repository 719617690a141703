#include "satdesign/pipeline.hpp"

#include <algorithm>
#include <cmath>

namespace satdesign {

namespace {

constexpr std::uint64_t kPsiPurpose = 21;
constexpr std::uint64_t kSyntheticPurpose = 22;

template <typename T>
T get_or(const Json& j, const char* key, T fallback) {
  if (!j.is_object() || !j.contains(key) || j[key].is_null()) return fallback;
  try {
    return j[key].get<T>();
  } catch (const Json::exception&) {
    throw SchemaError(std::string("config field '") + key + "' has the wrong type");
  }
}

NetworkParams network_from_json(const Json& j, NetworkParams base = {}) {
  base.threshold_km = get_or(j, "threshold_km", base.threshold_km);
  base.k_max = get_or(j, "k_max", base.k_max);
  if (!(base.threshold_km > 0.0)) throw ValidationError("threshold_km must be positive");
  return base;
}

std::vector<EstimatorKind> estimators_from_json(const Json& j) {
  std::vector<EstimatorKind> out;
  if (j.is_string()) {
    std::string text = j.get<std::string>();
    std::size_t start = 0;
    while (start <= text.size()) {
      const std::size_t comma = text.find(',', start);
      const std::string part =
          text.substr(start, comma == std::string::npos ? std::string::npos : comma - start);
      if (!part.empty()) out.push_back(parse_estimator_kind(part));
      if (comma == std::string::npos) break;
      start = comma + 1;
    }
  } else if (j.is_array()) {
    for (const auto& e : j) out.push_back(parse_estimator_kind(e.get<std::string>()));
  } else {
    throw SchemaError("estimators must be a list or a comma-separated string");
  }
  if (out.empty()) throw ValidationError("no estimators requested");
  return out;
}

Json estimators_to_json(const std::vector<EstimatorKind>& kinds) {
  Json out = Json::array();
  for (auto k : kinds) out.push_back(to_string(k));
  return out;
}

SaturationPolicy default_policy() {
  SaturationPolicy p;
  p.levels = {{"high", 0.5, {WithinRule::Kind::FixedFraction, 2.0 / 3.0}},
              {"low", 0.5, {WithinRule::Kind::FixedFraction, 1.0 / 3.0}}};
  return p;
}

std::vector<std::string> inclusion_estimands(const RunConfig& config, bool with_psi) {
  std::vector<std::string> names;
  if (!config.estimation.estimands.empty()) return config.estimation.estimands;
  for (const auto& e : all_estimands(config.exposure.mode, true)) names.push_back(e.name);
  if (with_psi)
    for (const auto& e : policy_estimands(config.exposure.mode, "psi"))
      names.push_back(e.name);
  return names;
}

Json counts_to_json(const CellCounts& counts) {
  Json cells = Json::object();
  for (Cell c : counts.reported_cells()) cells[cell_label(c)] = counts.counts[c.index()];
  return {{"cells", cells},
          {"within_degenerate", counts.within_degenerate},
          {"between_degenerate", counts.between_degenerate}};
}

Json meta_to_json(const InclusionMeta& meta) {
  return {{"mode", meta.mode == InclusionMode::Exact ? "exact" : "mc"},
          {"draws", meta.draws},
          {"seed", meta.seed},
          {"order", meta.order},
          {"policy_digest", meta.policy_digest},
          {"exposure_digest", meta.exposure_digest},
          {"network_digest", meta.network_digest}};
}

}  // namespace

Json GridPoint::to_json() const {
  return {{"cutoff", cutoff.to_string()},
          {"threshold_km", network.threshold_km},
          {"k_max", network.k_max}};
}

std::vector<GridPoint> RunConfig::grid_points() const {
  const std::vector<Cutoff> cutoffs =
      grid_cutoffs.empty() ? std::vector<Cutoff>{exposure.cutoff} : grid_cutoffs;
  const std::vector<NetworkParams> nets =
      grid_networks.empty() ? std::vector<NetworkParams>{network} : grid_networks;
  std::vector<GridPoint> out;
  for (const auto& n : nets)
    for (const auto& c : cutoffs) out.push_back({c, n});
  return out;
}

Json RunConfig::to_json() const {
  Json j;
  j["schema"] = kSchemaVersion;
  j["network"] = {{"threshold_km", network.threshold_km},
                  {"k_max", network.k_max},
                  {"m", order}};
  j["policy"] = policy_to_json(policy);
  j["exposure"] = exposure_to_json(exposure);
  if (psi) j["psi"] = policy_to_json(*psi);
  const auto& e = estimation;
  j["estimation"] = {
      {"draws", e.draws},
      {"seed", e.seed},
      {"alpha", e.alpha},
      {"estimators", estimators_to_json(e.estimators)},
      {"estimands", e.estimands},
      {"positivity_floor", e.positivity_floor},
      {"exclude_empty_between", e.exclude_empty_between},
      {"positivity_hard", e.positivity_hard},
      {"inclusion", e.inclusion == InclusionChoice::Auto    ? "auto"
                    : e.inclusion == InclusionChoice::Exact ? "exact"
                                                            : "mc"},
      {"exact_cap", e.exact_cap}};
  Json cutoffs = Json::array();
  for (const auto& c : grid_cutoffs) cutoffs.push_back(c.to_string());
  Json nets = Json::array();
  for (const auto& n : grid_networks)
    nets.push_back({{"threshold_km", n.threshold_km}, {"k_max", n.k_max}});
  j["grid"] = {{"cutoffs", cutoffs}, {"networks", nets}};
  return j;
}

std::string RunConfig::digest() const {
  // Thread count is left out: it never changes results.
  return digest_of(to_json().dump());
}

RunConfig parse_run_config(const Json& j) {
  if (!j.is_object()) throw SchemaError("run configuration must be a JSON object");
  RunConfig cfg;
  if (j.contains("schema") && j["schema"] != kSchemaVersion)
    throw SchemaError("unsupported configuration schema " + j["schema"].dump());
  if (j.contains("network")) {
    cfg.network = network_from_json(j["network"]);
    cfg.order = get_or<std::size_t>(j["network"], "m", cfg.order);
  }
  if (cfg.order < 1) throw ValidationError("dependency order m must be at least 1");
  cfg.policy = j.contains("policy") ? policy_from_json(j["policy"]) : default_policy();
  cfg.exposure = exposure_from_json(j.value("exposure", Json()));
  if (j.contains("psi") && !j["psi"].is_null()) cfg.psi = policy_from_json(j["psi"]);

  if (j.contains("estimation")) {
    const Json& e = j["estimation"];
    auto& est = cfg.estimation;
    est.draws = get_or(e, "draws", est.draws);
    est.seed = get_or(e, "seed", est.seed);
    est.alpha = get_or(e, "alpha", est.alpha);
    if (e.contains("estimators")) est.estimators = estimators_from_json(e["estimators"]);
    if (e.contains("estimands")) {
      const Json& list = e["estimands"];
      if (list.is_string() && list.get<std::string>() != "all")
        est.estimands = {list.get<std::string>()};
      else if (list.is_array())
        est.estimands = list.get<std::vector<std::string>>();
    }
    est.positivity_floor = get_or(e, "positivity_floor", est.positivity_floor);
    est.threads = get_or(e, "threads", est.threads);
    est.exclude_empty_between = get_or(e, "exclude_empty_between", est.exclude_empty_between);
    est.positivity_hard = get_or(e, "positivity_hard", est.positivity_hard);
    est.exact_cap = get_or(e, "exact_cap", est.exact_cap);
    const std::string inc = get_or<std::string>(e, "inclusion", "auto");
    if (inc == "auto")
      est.inclusion = InclusionChoice::Auto;
    else if (inc == "exact")
      est.inclusion = InclusionChoice::Exact;
    else if (inc == "mc")
      est.inclusion = InclusionChoice::MonteCarlo;
    else
      throw SchemaError("estimation.inclusion must be auto, exact or mc");
    if (est.draws < 1) throw ValidationError("draws must be at least 1");
    if (!(est.alpha > 0.0 && est.alpha < 1.0)) throw ValidationError("alpha must lie in (0, 1)");
  }

  if (j.contains("grid") && !j["grid"].is_null()) {
    const Json& g = j["grid"];
    if (g.contains("cutoffs"))
      for (const auto& c : g["cutoffs"])
        cfg.grid_cutoffs.push_back(c.is_string() ? Cutoff::parse(c.get<std::string>())
                                                 : Cutoff::from_double(c.get<double>()));
    if (g.contains("networks"))
      for (const auto& n : g["networks"])
        cfg.grid_networks.push_back(network_from_json(n, cfg.network));
  }
  return cfg;
}

RunConfig load_run_config(const fs::path& path) {
  try {
    return parse_run_config(Json::parse(read_text(path)));
  } catch (const Json::exception& e) {
    throw SchemaError(path.string() + ": " + e.what());
  }
}

Stage build_stage(const Dataset& data, const RunConfig& config, const GridPoint& point) {
  Stage stage;
  stage.point = point;
  stage.network = build_network(data, point.network);
  stage.graph = dependency_graph(stage.network, config.order);
  stage.exposure = config.exposure;
  stage.exposure.cutoff = point.cutoff;
  stage.exposure.validate();
  return stage;
}

InclusionTable compute_inclusion(const RunConfig& config, const Stage& stage) {
  const auto& est = config.estimation;
  bool exact = est.inclusion == InclusionChoice::Exact;
  if (est.inclusion == InclusionChoice::Auto)
    exact = policy_support_size(config.policy, stage.network) <= est.exact_cap;
  if (exact)
    return exact_inclusion(config.policy, stage.network, &stage.graph, stage.exposure,
                           est.inclusion == InclusionChoice::Exact
                               ? std::max(est.exact_cap, policy_support_size(
                                                             config.policy, stage.network))
                               : est.exact_cap);
  return estimate_inclusion_mc(config.policy, stage.network, &stage.graph, stage.exposure,
                               est.draws, est.seed, McOptions{est.threads});
}

PolicyWeights compute_weights(const RunConfig& config, const Stage& stage,
                              const InclusionTable& table, bool for_psi) {
  if (!for_psi) return derive_policy_weights(table);
  if (!config.psi) throw ValidationError("no psi policy configured");
  const auto& est = config.estimation;
  const std::uint64_t seed = derive_seed(est.seed, kPsiPurpose);
  const InclusionTable psi_table = estimate_inclusion_mc(
      *config.psi, stage.network, nullptr, stage.exposure, est.draws, seed,
      McOptions{est.threads});
  return derive_policy_weights(psi_table);
}

std::vector<std::uint8_t> observed_treatment(const Dataset& data, const Network& network) {
  std::vector<std::uint8_t> z(network.size(), 0);
  for (std::size_t i = 0; i < network.size(); ++i) {
    const auto idx = data.index_of(network.unit_ids[i]);
    if (!idx || !data.units[*idx].treatment)
      throw ValidationError("unit '" + network.unit_ids[i] + "' has no treatment value");
    z[i] = static_cast<std::uint8_t>(*data.units[*idx].treatment);
  }
  return z;
}

EstimateOutput run_estimate(const Dataset& data, const RunConfig& config,
                            const InclusionTable* probs, const PolicyWeights* weights) {
  const auto points = config.grid_points();
  if ((probs || weights) && points.size() != 1)
    throw ValidationError("precomputed probabilities cannot be combined with a grid");
  if (data.outcome_names.empty()) throw ValidationError("units file has no outcome column");

  EstimateOutput out;
  out.report["schema"] = kSchemaVersion;
  out.report["config_digest"] = config.digest();
  out.report["config"] = config.to_json();
  Json grid_reports = Json::array();

  for (const auto& point : points) {
    const Stage stage = build_stage(data, config, point);
    std::optional<InclusionTable> computed;
    if (!probs) computed = compute_inclusion(config, stage);
    const InclusionTable& full_table = probs ? *probs : *computed;
    full_table.require_compatible(config.policy.digest(), stage.exposure.digest(),
                                  stage.network.digest(), config.order);

    const std::vector<std::uint8_t> z = observed_treatment(data, stage.network);
    const ExposureMatrix exposures = compute_exposures(z, stage.network, stage.exposure);

    // Policy weights: phi from the table, psi from the config or a weights dir.
    const PolicyWeights phi_full = derive_policy_weights(full_table);
    std::optional<PolicyWeights> psi_full;
    if (weights)
      psi_full = *weights;
    else if (config.psi)
      psi_full = compute_weights(config, stage, full_table, true);

    std::vector<std::size_t> keep;
    for (std::size_t i = 0; i < stage.network.size(); ++i)
      if (!config.estimation.exclude_empty_between || !stage.network.geo[i].empty())
        keep.push_back(i);
    const bool restricted = keep.size() != stage.network.size();
    if (keep.empty()) throw ValidationError("no units left after excluding empty G_i");

    const InclusionTable table = restricted ? full_table.restrict_to(keep) : full_table;
    const PolicyWeights phi =
        restricted ? PolicyWeights{phi_full.de.restrict_to(keep), phi_full.wie.restrict_to(keep),
                                   phi_full.bie.restrict_to(keep)}
                   : phi_full;
    std::optional<PolicyWeights> psi;
    if (psi_full) {
      if (psi_full->de.size() != stage.network.size())
        throw ValidationError("policy weights do not match the number of units");
      psi = restricted ? PolicyWeights{psi_full->de.restrict_to(keep),
                                       psi_full->wie.restrict_to(keep),
                                       psi_full->bie.restrict_to(keep)}
                       : *psi_full;
    }

    std::vector<Estimand> estimands;
    for (const auto& name : inclusion_estimands(config, psi.has_value()))
      estimands.push_back(parse_estimand(name, stage.exposure.mode));

    Observations obs;
    obs.cells.resize(keep.size());
    obs.outcomes.resize(keep.size());
    obs.covariates.resize(static_cast<Eigen::Index>(keep.size()),
                          static_cast<Eigen::Index>(data.covariate_names.size()));
    std::vector<std::size_t> record(keep.size());
    for (std::size_t k = 0; k < keep.size(); ++k) {
      const std::size_t i = keep[k];
      obs.cells[k] = exposures.cells[i];
      record[k] = *data.index_of(stage.network.unit_ids[i]);
      const auto& covs = data.units[record[k]].covariates;
      for (std::size_t c = 0; c < covs.size(); ++c)
        obs.covariates(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(c)) = covs[c];
    }

    Json point_report;
    point_report["grid"] = point.to_json();
    point_report["network_digest"] = stage.network.digest();
    point_report["policy_digest"] = config.policy.digest();
    point_report["exposure_digest"] = stage.exposure.digest();
    point_report["inclusion"] = meta_to_json(full_table.meta());
    point_report["units"] = stage.network.size();
    point_report["units_used"] = keep.size();
    point_report["exposure_counts"] = counts_to_json(cell_counts(exposures));
    point_report["positivity"] =
        positivity_to_json(positivity_report(table, config.estimation.positivity_floor), table);
    Json results = Json::array();

    EffectOptions options{config.estimation.alpha, config.estimation.positivity_hard};
    for (std::size_t o = 0; o < data.outcome_names.size(); ++o) {
      const std::string& outcome = data.outcome_names[o];
      for (std::size_t k = 0; k < keep.size(); ++k) {
        const double y = data.units[record[k]].outcomes[o];
        if (std::isnan(y))
          throw ValidationError("unit '" + stage.network.unit_ids[keep[k]] +
                                "' is missing outcome '" + outcome + "'");
        obs.outcomes[k] = y;
      }
      for (EstimatorKind kind : config.estimation.estimators) {
        EffectEngine engine(obs, table, options);
        engine.set_weights(&phi);
        std::optional<EffectEngine> psi_engine;
        if (psi) {
          psi_engine.emplace(obs, table, options);
          psi_engine->set_weights(&*psi);
        }
        for (const auto& estimand : estimands) {
          const bool wants_psi = estimand.name.size() > 4 &&
                                 estimand.name.compare(estimand.name.size() - 4, 4, "_psi") == 0;
          if (wants_psi && !psi_engine)
            throw ValidationError("estimand '" + estimand.name + "' needs a psi policy");
          EffectEstimate est =
              wants_psi ? psi_engine->evaluate(estimand, kind) : engine.evaluate(estimand, kind);
          Json ej = effect_to_json(est);
          ej["outcome"] = outcome;
          results.push_back(ej);
          out.rows.push_back({point.to_json(), outcome, std::move(est)});
        }
      }
    }
    point_report["results"] = results;
    grid_reports.push_back(point_report);
  }
  out.report["grid_points"] = grid_reports;
  return out;
}

Json run_diagnose(const Dataset& data, const RunConfig& config, const InclusionTable* probs) {
  const auto points = config.grid_points();
  if (probs && points.size() != 1)
    throw ValidationError("precomputed probabilities cannot be combined with a grid");
  Json out;
  out["schema"] = kSchemaVersion;
  out["config_digest"] = config.digest();
  Json grid = Json::array();
  for (const auto& point : points) {
    const Stage stage = build_stage(data, config, point);
    std::optional<InclusionTable> computed;
    if (!probs) computed = compute_inclusion(config, stage);
    const InclusionTable& table = probs ? *probs : *computed;
    table.require_compatible(config.policy.digest(), stage.exposure.digest(),
                             stage.network.digest(), config.order);
    Json pj;
    pj["grid"] = point.to_json();
    pj["network_digest"] = stage.network.digest();
    pj["inclusion"] = meta_to_json(table.meta());
    pj["degree"] = degree_to_json(degree_diagnostics(stage.network, stage.graph));
    pj["positivity"] =
        positivity_to_json(positivity_report(table, config.estimation.positivity_floor), table);
    pj["policy_hazards"] = policy_hazards(config.policy, stage.network);
    bool have_treatment = true;
    for (const auto& u : data.units) have_treatment = have_treatment && u.treatment.has_value();
    if (have_treatment) {
      const auto z = observed_treatment(data, stage.network);
      pj["exposure_counts"] =
          counts_to_json(cell_counts(compute_exposures(z, stage.network, stage.exposure)));
    }
    grid.push_back(pj);
  }
  out["grid_points"] = grid;
  return out;
}

// ---------------------------------------------------------------------------

Json Scenario::to_json() const {
  Json sizes = geography.sizes;
  const auto& r = replication;
  return {{"schema", kSchemaVersion},
          {"geography",
           {{"clusters", geography.clusters},
            {"sizes", sizes},
            {"spacing_km", geography.spacing_km},
            {"jitter_km", geography.jitter_km},
            {"unit_radius_km", geography.unit_radius_km}}},
          {"network",
           {{"threshold_km", network.threshold_km}, {"k_max", network.k_max}, {"m", order}}},
          {"policy", policy_to_json(policy)},
          {"exposure", exposure_to_json(exposure)},
          {"dgp",
           {{"mu0", dgp.mu0},
            {"mu_sd", dgp.mu_sd},
            {"theta_a", dgp.theta_a},
            {"theta_s", dgp.theta_s},
            {"theta_h", dgp.theta_h},
            {"theta_as", dgp.theta_as},
            {"theta_ah", dgp.theta_ah},
            {"noise_sd", dgp.noise_sd},
            {"noise_per_cell", dgp.noise_per_cell},
            {"clamp", dgp.clamp},
            {"covariates", dgp.covariates},
            {"covariate_noise_sd", dgp.covariate_noise_sd}}},
          {"replications", r.replications},
          {"draws", r.draws},
          {"alpha", r.alpha},
          {"seed", r.seed},
          {"estimators", estimators_to_json(r.kinds)},
          {"with_policy", r.with_policy},
          {"sweep", {{"n", sweep_n}, {"replications", sweep_replications}}}};
}

Scenario parse_scenario(const Json& j) {
  if (!j.is_object()) throw SchemaError("scenario must be a JSON object");
  if (j.contains("schema") && j["schema"] != kSchemaVersion)
    throw SchemaError("unsupported scenario schema " + j["schema"].dump());
  Scenario s;
  if (j.contains("geography")) {
    const Json& g = j["geography"];
    s.geography.clusters = get_or(g, "clusters", s.geography.clusters);
    s.geography.sizes = get_or(g, "sizes", s.geography.sizes);
    s.geography.spacing_km = get_or(g, "spacing_km", s.geography.spacing_km);
    s.geography.jitter_km = get_or(g, "jitter_km", s.geography.jitter_km);
    s.geography.unit_radius_km = get_or(g, "unit_radius_km", s.geography.unit_radius_km);
  }
  if (j.contains("network")) {
    s.network = network_from_json(j["network"]);
    s.order = get_or<std::size_t>(j["network"], "m", s.order);
  }
  s.policy = j.contains("policy") ? policy_from_json(j["policy"]) : default_policy();
  s.exposure = exposure_from_json(j.value("exposure", Json()));
  if (j.contains("dgp")) {
    const Json& d = j["dgp"];
    auto& g = s.dgp;
    g.mu0 = get_or(d, "mu0", g.mu0);
    g.mu_sd = get_or(d, "mu_sd", g.mu_sd);
    g.theta_a = get_or(d, "theta_a", g.theta_a);
    g.theta_s = get_or(d, "theta_s", g.theta_s);
    g.theta_h = get_or(d, "theta_h", g.theta_h);
    g.theta_as = get_or(d, "theta_as", g.theta_as);
    g.theta_ah = get_or(d, "theta_ah", g.theta_ah);
    g.noise_sd = get_or(d, "noise_sd", g.noise_sd);
    g.noise_per_cell = get_or(d, "noise_per_cell", g.noise_per_cell);
    g.clamp = get_or(d, "clamp", g.clamp);
    g.covariates = get_or(d, "covariates", g.covariates);
    g.covariate_noise_sd = get_or(d, "covariate_noise_sd", g.covariate_noise_sd);
  }
  auto& r = s.replication;
  r.replications = get_or(j, "replications", r.replications);
  r.draws = get_or(j, "draws", r.draws);
  r.alpha = get_or(j, "alpha", r.alpha);
  r.seed = get_or(j, "seed", r.seed);
  r.threads = get_or(j, "threads", r.threads);
  r.with_policy = get_or(j, "with_policy", r.with_policy);
  r.order = s.order;
  if (j.contains("estimators")) r.kinds = estimators_from_json(j["estimators"]);
  if (j.contains("sweep") && !j["sweep"].is_null()) {
    s.sweep_n = get_or(j["sweep"], "n", s.sweep_n);
    s.sweep_replications = get_or(j["sweep"], "replications", s.sweep_replications);
  }
  if (r.replications < 1) throw ValidationError("replications must be at least 1");
  if (r.draws < 1) throw ValidationError("draws must be at least 1");
  return s;
}

Scenario load_scenario(const fs::path& path) {
  try {
    return parse_scenario(Json::parse(read_text(path)));
  } catch (const Json::exception& e) {
    throw SchemaError(path.string() + ": " + e.what());
  }
}

Json replication_to_json(const ReplicationReport& report) {
  Json rows = Json::array();
  for (const auto& r : report.rows)
    rows.push_back({{"estimand", r.estimand},
                    {"estimator", to_string(r.kind)},
                    {"truth", r.truth},
                    {"truth_defined", r.truth_defined},
                    {"used", r.used},
                    {"exclusions", r.exclusions},
                    {"degenerate", r.degenerate},
                    {"mean", r.mean},
                    {"bias", r.bias},
                    {"rmse", r.rmse},
                    {"empirical_variance", r.empirical_variance},
                    {"mean_estimated_variance", r.mean_estimated_variance},
                    {"coverage", r.coverage},
                    {"miss_below", r.miss_below},
                    {"miss_above", r.miss_above},
                    {"conservativeness_margin", r.conservativeness_margin},
                    {"margin_se", r.margin_se}});
  Json truth = Json::array();
  for (const auto& t : report.truth.rows)
    truth.push_back({{"estimand", t.estimand}, {"value", t.value}, {"defined", t.defined}});
  return {{"n", report.n},
          {"replications", report.replications},
          {"draws", report.draws},
          {"seed", report.seed},
          {"alpha", report.alpha},
          {"inclusion_mode", report.inclusion_mode == InclusionMode::Exact ? "exact" : "mc"},
          {"order", report.order},
          {"max_degree", report.max_degree},
          {"stored_pairs", report.stored_pairs},
          {"uncovered_dependent_pairs", report.uncovered_dependent_pairs},
          {"positivity_violations", report.positivity_violations},
          {"truth", truth},
          {"rows", rows}};
}

Json sweep_to_json(const SweepReport& report) {
  Json cells = Json::array();
  for (const auto& c : report.cells)
    cells.push_back({{"estimand", c.estimand},
                     {"estimator", to_string(c.kind)},
                     {"rmse", c.rmse},
                     {"ratio_last_first", c.ratio_last_first}});
  Json ordering = Json::array();
  for (bool b : report.hajek_not_worse) ordering.push_back(b);
  return {{"n_target", report.n_target},
          {"n_realized", report.n_realized},
          {"cells", cells},
          {"hajek_not_worse", ordering},
          {"mean_log_slope", report.mean_log_slope}};
}

Json run_simulation(const Scenario& scenario, bool with_sweep) {
  const Dataset geo = generate_geography(scenario.geography, scenario.replication.seed);
  const Network net = build_network(geo, scenario.network);
  const PotentialOutcomeTable po = generate_po_table(net, scenario.dgp, scenario.replication.seed);
  const ReplicationReport rep =
      run_replications(scenario.policy, net, scenario.exposure, po, scenario.replication);
  Json out;
  out["schema"] = kSchemaVersion;
  out["scenario"] = scenario.to_json();
  out["scenario_digest"] = digest_of(scenario.to_json().dump());
  out["network_digest"] = net.digest();
  out["policy_digest"] = scenario.policy.digest();
  out["exposure_digest"] = scenario.exposure.digest();
  out["report"] = replication_to_json(rep);
  if (with_sweep && !scenario.sweep_n.empty()) {
    ReplicationOptions opts = scenario.replication;
    opts.replications = scenario.sweep_replications;
    const SweepReport sweep = consistency_sweep(scenario.geography, scenario.network,
                                                scenario.policy, scenario.exposure,
                                                scenario.dgp, scenario.sweep_n, opts);
    out["sweep"] = sweep_to_json(sweep);
  }
  return out;
}

Dataset synthetic_dataset(const Scenario& scenario, std::uint64_t draw) {
  Dataset data = generate_geography(scenario.geography, scenario.replication.seed);
  const Network net = build_network(data, scenario.network);
  const PotentialOutcomeTable po = generate_po_table(net, scenario.dgp, scenario.replication.seed);
  const AssignmentVector z = sample_assignment(
      scenario.policy, net, derive_seed(scenario.replication.seed, kSyntheticPurpose), draw);
  const ExposureMatrix ex = compute_exposures(z.treatment, net, scenario.exposure);
  data.outcome_names = {"outcome"};
  data.covariate_names = po.covariate_names;
  for (std::size_t i = 0; i < net.size(); ++i) {
    UnitRecord& u = data.units[*data.index_of(net.unit_ids[i])];
    u.treatment = z.treatment[i];
    u.outcomes = {po.y[i][ex.cells[i]]};
    u.covariates.clear();
    for (Eigen::Index k = 0; k < po.covariates.cols(); ++k)
      u.covariates.push_back(po.covariates(static_cast<Eigen::Index>(i), k));
  }
  return data;
}

}  // namespace satdesign
