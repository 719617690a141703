#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "satdesign/design.hpp"
#include "satdesign/effects.hpp"
#include "satdesign/exposure.hpp"
#include "satdesign/inclusion.hpp"
#include "satdesign/network.hpp"

namespace satdesign {

using Json = nlohmann::json;
namespace fs = std::filesystem;

// Minimal CSV: comma separated, optional double quotes, '#' lines skipped.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  std::size_t column(const std::string& name) const;  // throws SchemaError
  bool has(const std::string& name) const;
};

CsvTable read_csv(const fs::path& path);
void write_text(const fs::path& path, const std::string& text);
std::string read_text(const fs::path& path);

// Units file: unit_id, cluster_id, x_km, y_km, [treatment], [outcome or
// outcome_*], [x1..xp]. Coordinates may be blank when a distance file is given.
Dataset read_units_csv(const fs::path& path);
std::string units_csv(const Dataset& data);

// Distance file: unit_i, unit_j, dist_km.
void read_distances_csv(const fs::path& path, Dataset& data);

Json network_to_json(const Network& network, const DependencyGraph* graph);

// Policy block: {"levels": [{"label", "prob", "rule": {"kind", "value"}}]}.
// Rule values may be numbers or "p/q" strings.
SaturationPolicy policy_from_json(const Json& j);
Json policy_to_json(const SaturationPolicy& policy);

// Exposure block: {"cutoff", "mode", "empty_within", "empty_between"}.
ExposureConfig exposure_from_json(const Json& j);
Json exposure_to_json(const ExposureConfig& cfg);

std::string assignment_csv(const Network& network, const AssignmentVector& z);
std::string exposures_csv(const Network& network, const ExposureMatrix& exposures);

// Inclusion directory: meta.json, first_order.csv, second_order.csv (rows
// with nonzero probability; meta.json lists every stored pair).
void write_inclusion_dir(const fs::path& dir, const InclusionTable& table);
InclusionTable read_inclusion_dir(const fs::path& dir);

// Weights directory: meta.json plus de.csv, wie.csv, bie.csv.
void write_weights_dir(const fs::path& dir, const PolicyWeights& weights,
                       const std::vector<std::string>& unit_ids);
PolicyWeights read_weights_dir(const fs::path& dir);

Json positivity_to_json(const PositivityReport& report, const InclusionTable& table);
Json degree_to_json(const DegreeReport& report);

// One estimate with its context columns.
struct ResultRow {
  Json grid = Json::object();
  std::string outcome;
  EffectEstimate estimate;
};

Json effect_to_json(const EffectEstimate& e);
std::string results_csv(const std::vector<ResultRow>& rows);

}  // namespace satdesign
