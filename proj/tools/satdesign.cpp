// satdesign: command-line front end for the estimation pipeline.

#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "satdesign/pipeline.hpp"

using namespace satdesign;

namespace {

struct Common {
  std::string units;
  std::string distances;
  std::string config;
};

void add_common(CLI::App* cmd, Common& c, bool units_required = true) {
  auto* u = cmd->add_option("--units", c.units, "Units CSV (unit_id, cluster_id, x_km, y_km, ...)");
  if (units_required) u->required();
  u->check(CLI::ExistingFile);
  cmd->add_option("--distances", c.distances, "Optional distance CSV (unit_i, unit_j, dist_km)")
      ->check(CLI::ExistingFile);
  cmd->add_option("--config", c.config, "Run configuration JSON")->check(CLI::ExistingFile);
}

Dataset load_data(const Common& c) {
  Dataset data = read_units_csv(c.units);
  if (!c.distances.empty()) read_distances_csv(c.distances, data);
  return data;
}

RunConfig load_config(const Common& c) {
  return c.config.empty() ? parse_run_config(Json::object()) : load_run_config(c.config);
}

void emit(const std::string& out, const std::string& text) {
  if (out.empty() || out == "-")
    std::cout << text;
  else
    write_text(out, text);
}

// Splits on commas outside parentheses, so "DE(0,1),WIE(1,0,0)" has two parts.
std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::string part;
  int depth = 0;
  for (char ch : text) {
    if (ch == '(') ++depth;
    if (ch == ')') --depth;
    if (ch == ',' && depth == 0) {
      if (!part.empty()) out.push_back(part);
      part.clear();
    } else if (ch != ' ') {
      part += ch;
    }
  }
  if (!part.empty()) out.push_back(part);
  return out;
}

int fail(const std::string& what, int code) {
  std::cerr << "satdesign: " << what << "\n";
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Design-based estimation for randomized saturation experiments with "
               "within- and between-cluster interference.\nExit status: 0 ok, 2 invalid "
               "input, 3 positivity failure, 4 digest mismatch."};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(kSchemaVersion));

  // network
  Common net_c;
  std::string net_out;
  std::optional<double> net_threshold;
  std::optional<std::size_t> net_k;
  auto* net = app.add_subcommand("network", "Build G_i and the dependency graph; write JSON");
  add_common(net, net_c);
  net->add_option("--threshold-km", net_threshold, "Override the distance threshold");
  net->add_option("--k-max", net_k, "Override the neighbor cap");
  net->add_option("--out", net_out, "Output JSON (default stdout)");

  // assign
  Common asg_c;
  std::string asg_out;
  std::uint64_t asg_seed = 1, asg_draw = 0;
  auto* asg = app.add_subcommand("assign", "Draw one assignment from the policy");
  add_common(asg, asg_c);
  asg->add_option("--seed", asg_seed, "Seed");
  asg->add_option("--draw", asg_draw, "Draw index within the seed's stream");
  asg->add_option("--out", asg_out, "Output CSV (default stdout)");

  // exposures
  Common exp_c;
  std::string exp_out, exp_assignment;
  auto* exp = app.add_subcommand("exposures", "Compute (A, S, H) for the observed treatment");
  add_common(exp, exp_c);
  exp->add_option("--assignment", exp_assignment, "Assignment CSV (unit_id, treatment)")
      ->check(CLI::ExistingFile);
  exp->add_option("--out", exp_out, "Output CSV (default stdout)");

  // probs
  Common pr_c;
  std::string pr_out;
  std::optional<std::uint64_t> pr_draws, pr_seed;
  bool pr_exact = false, pr_mc = false;
  auto* pr = app.add_subcommand("probs", "Estimate or enumerate inclusion probabilities");
  add_common(pr, pr_c);
  pr->add_option("--draws", pr_draws, "Monte Carlo draws B");
  pr->add_option("--seed", pr_seed, "Monte Carlo seed");
  pr->add_flag("--exact", pr_exact, "Enumerate the policy support");
  pr->add_flag("--mc", pr_mc, "Force Monte Carlo");
  pr->add_option("--out", pr_out, "Output directory")->required();

  // weights
  Common wt_c;
  std::string wt_out, wt_probs;
  bool wt_psi = false;
  auto* wt = app.add_subcommand("weights", "Policy weights gamma (phi from probs, or psi)");
  add_common(wt, wt_c);
  wt->add_option("--probs", wt_probs, "Inclusion directory (for psi = phi)");
  wt->add_flag("--psi", wt_psi, "Use the configured psi policy (Monte Carlo)");
  wt->add_option("--out", wt_out, "Output directory")->required();

  // estimate
  Common est_c;
  std::string est_out, est_csv, est_probs, est_weights, est_estimands, est_estimator;
  std::optional<double> est_alpha;
  auto* est = app.add_subcommand("estimate", "Estimate cell means and effects with CIs");
  add_common(est, est_c);
  est->add_option("--probs", est_probs, "Precomputed inclusion directory");
  est->add_option("--weights", est_weights, "Policy weights directory for psi estimands");
  est->add_option("--estimands", est_estimands, "all, or a comma-separated list");
  est->add_option("--estimator", est_estimator, "Comma-separated: ht,haj,ca");
  est->add_option("--alpha", est_alpha, "Interval level alpha");
  est->add_option("--out", est_out, "Output JSON (default stdout)");
  est->add_option("--csv", est_csv, "Also write a flat CSV");

  // diagnose
  Common dg_c;
  std::string dg_out, dg_probs;
  auto* dg = app.add_subcommand("diagnose", "Degree, positivity and overlap diagnostics");
  add_common(dg, dg_c);
  dg->add_option("--probs", dg_probs, "Precomputed inclusion directory");
  dg->add_option("--out", dg_out, "Output JSON (default stdout)");

  // simulate
  std::string sim_scenario, sim_out;
  bool sim_sweep = false;
  std::optional<std::size_t> sim_r;
  auto* sim = app.add_subcommand("simulate", "Replicate the design on a synthetic scenario");
  sim->add_option("--scenario", sim_scenario, "Scenario JSON")->required()->check(CLI::ExistingFile);
  sim->add_option("--replications", sim_r, "Override R");
  sim->add_flag("--sweep", sim_sweep, "Also run the sample-size sweep");
  sim->add_option("--out", sim_out, "Output JSON (default stdout)");

  // generate
  std::string gen_scenario, gen_out;
  std::uint64_t gen_draw = 0;
  auto* gen = app.add_subcommand("generate", "Write one synthetic observed units CSV");
  gen->add_option("--scenario", gen_scenario, "Scenario JSON")->required()->check(CLI::ExistingFile);
  gen->add_option("--draw", gen_draw, "Assignment draw index");
  gen->add_option("--out", gen_out, "Output CSV (default stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*net) {
      Dataset data = load_data(net_c);
      RunConfig cfg = load_config(net_c);
      if (net_threshold) cfg.network.threshold_km = *net_threshold;
      if (net_k) cfg.network.k_max = *net_k;
      const Network network = build_network(data, cfg.network);
      const DependencyGraph graph = dependency_graph(network, cfg.order);
      Json j = network_to_json(network, &graph);
      j["degree"] = degree_to_json(degree_diagnostics(network, graph));
      emit(net_out, j.dump(1) + "\n");
    } else if (*asg) {
      const Dataset data = load_data(asg_c);
      const RunConfig cfg = load_config(asg_c);
      const Network network = build_network(data, cfg.network);
      emit(asg_out, assignment_csv(network, sample_assignment(cfg.policy, network, asg_seed,
                                                               asg_draw)));
    } else if (*exp) {
      Dataset data = load_data(exp_c);
      const RunConfig cfg = load_config(exp_c);
      if (!exp_assignment.empty()) {
        const CsvTable csv = read_csv(exp_assignment);
        const std::size_t cu = csv.column("unit_id"), ct = csv.column("treatment");
        for (const auto& row : csv.rows) {
          const auto idx = data.index_of(row[cu]);
          if (!idx) throw SchemaError(exp_assignment + ": unknown unit '" + row[cu] + "'");
          if (row[ct] != "0" && row[ct] != "1")
            throw SchemaError(exp_assignment + ": treatment must be 0 or 1 for unit '" +
                              row[cu] + "'");
          data.units[*idx].treatment = row[ct] == "1" ? 1 : 0;
        }
      }
      const Network network = build_network(data, cfg.network);
      const auto z = observed_treatment(data, network);
      emit(exp_out, exposures_csv(network, compute_exposures(z, network, cfg.exposure)));
    } else if (*pr) {
      const Dataset data = load_data(pr_c);
      RunConfig cfg = load_config(pr_c);
      if (pr_exact && pr_mc) return fail("--exact and --mc are mutually exclusive", 2);
      if (pr_draws) cfg.estimation.draws = *pr_draws;
      if (pr_seed) cfg.estimation.seed = *pr_seed;
      if (pr_exact) cfg.estimation.inclusion = InclusionChoice::Exact;
      if (pr_mc) cfg.estimation.inclusion = InclusionChoice::MonteCarlo;
      if (cfg.has_grid()) return fail("probs takes a single grid point; drop the grid block", 2);
      const Stage stage = build_stage(data, cfg, cfg.grid_points().front());
      write_inclusion_dir(pr_out, compute_inclusion(cfg, stage));
    } else if (*wt) {
      const Dataset data = load_data(wt_c);
      const RunConfig cfg = load_config(wt_c);
      const Stage stage = build_stage(data, cfg, cfg.grid_points().front());
      if (wt_psi) {
        write_weights_dir(wt_out, compute_weights(cfg, stage, InclusionTable{}, true),
                          stage.network.unit_ids);
      } else {
        if (wt_probs.empty()) return fail("weights needs --probs or --psi", 2);
        const InclusionTable table = read_inclusion_dir(wt_probs);
        table.require_compatible(cfg.policy.digest(), stage.exposure.digest(),
                                 stage.network.digest(), cfg.order);
        write_weights_dir(wt_out, derive_policy_weights(table), table.unit_ids());
      }
    } else if (*est) {
      const Dataset data = load_data(est_c);
      RunConfig cfg = load_config(est_c);
      if (!est_estimands.empty() && est_estimands != "all")
        cfg.estimation.estimands = split_list(est_estimands);
      if (!est_estimator.empty()) {
        cfg.estimation.estimators.clear();
        for (const auto& k : split_list(est_estimator))
          cfg.estimation.estimators.push_back(parse_estimator_kind(k));
      }
      if (est_alpha) cfg.estimation.alpha = *est_alpha;
      std::optional<InclusionTable> probs;
      std::optional<PolicyWeights> weights;
      if (!est_probs.empty()) probs = read_inclusion_dir(est_probs);
      if (!est_weights.empty()) weights = read_weights_dir(est_weights);
      const EstimateOutput out = run_estimate(data, cfg, probs ? &*probs : nullptr,
                                              weights ? &*weights : nullptr);
      emit(est_out, out.report.dump(1) + "\n");
      if (!est_csv.empty()) write_text(est_csv, results_csv(out.rows));
    } else if (*dg) {
      const Dataset data = load_data(dg_c);
      const RunConfig cfg = load_config(dg_c);
      std::optional<InclusionTable> probs;
      if (!dg_probs.empty()) probs = read_inclusion_dir(dg_probs);
      emit(dg_out, run_diagnose(data, cfg, probs ? &*probs : nullptr).dump(1) + "\n");
    } else if (*sim) {
      Scenario scenario = load_scenario(sim_scenario);
      if (sim_r) scenario.replication.replications = *sim_r;
      emit(sim_out, run_simulation(scenario, sim_sweep).dump(1) + "\n");
    } else if (*gen) {
      const Scenario scenario = load_scenario(gen_scenario);
      emit(gen_out, units_csv(synthetic_dataset(scenario, gen_draw)));
    }
  } catch (const Error& e) {
    return fail(e.what(), e.exit_code());
  } catch (const std::exception& e) {
    return fail(e.what(), 1);
  }
  return 0;
}
