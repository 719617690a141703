#include "satdesign/io.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <unordered_map>

namespace satdesign {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  bool quoted = false;
  for (std::size_t k = 0; k < line.size(); ++k) {
    const char ch = line[k];
    if (quoted) {
      if (ch == '"' && k + 1 < line.size() && line[k + 1] == '"') {
        field += '"';
        ++k;
      } else if (ch == '"') {
        quoted = false;
      } else {
        field += ch;
      }
    } else if (ch == '"') {
      quoted = true;
    } else if (ch == ',') {
      out.push_back(trim(field));
      field.clear();
    } else {
      field += ch;
    }
  }
  out.push_back(trim(field));
  return out;
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char ch : s) {
    if (ch == '"') out += '"';
    out += ch;
  }
  return out + "\"";
}

double parse_double(const std::string& text, const std::string& where) {
  try {
    std::size_t used = 0;
    const double v = std::stod(text, &used);
    if (used != text.size()) throw std::invalid_argument(text);
    return v;
  } catch (const std::exception&) {
    throw SchemaError(where + ": '" + text + "' is not a number");
  }
}

int parse_bit(const std::string& text, const std::string& where) {
  if (text == "0") return 0;
  if (text == "1") return 1;
  throw SchemaError(where + ": expected 0 or 1, got '" + text + "'");
}

bool is_covariate_column(const std::string& name) {
  if (name.size() < 2 || name[0] != 'x') return false;
  for (std::size_t k = 1; k < name.size(); ++k)
    if (!std::isdigit(static_cast<unsigned char>(name[k]))) return false;
  return true;
}

bool is_outcome_column(const std::string& name) {
  return name == "outcome" || name.rfind("outcome_", 0) == 0;
}

Json read_json(const fs::path& path) {
  try {
    return Json::parse(read_text(path));
  } catch (const Json::exception& e) {
    throw SchemaError(path.string() + ": invalid JSON (" + e.what() + ")");
  }
}

void require_schema(const Json& j, const fs::path& path) {
  if (!j.is_object() || !j.contains("schema") || j["schema"] != kSchemaVersion)
    throw SchemaError(path.string() + ": missing or unsupported schema version (expected " +
                      std::string(kSchemaVersion) + ")");
}

double rule_value(const Json& v) {
  if (v.is_number()) return v.get<double>();
  if (v.is_string()) return Cutoff::parse(v.get<std::string>()).value();
  throw SchemaError("policy rule value must be a number or a \"p/q\" string");
}

std::string cells_header() { return "a,s,h"; }

std::string cell_fields(Cell c) {
  return std::to_string(c.a) + "," + std::to_string(c.s) + "," + std::to_string(c.h);
}

std::size_t cell_from_fields(const std::vector<std::string>& row, std::size_t a,
                             std::size_t s, std::size_t h, const std::string& where) {
  return Cell{static_cast<std::uint8_t>(parse_bit(row[a], where)),
              static_cast<std::uint8_t>(parse_bit(row[s], where)),
              static_cast<std::uint8_t>(parse_bit(row[h], where))}
      .index();
}

std::unordered_map<std::string, std::size_t> id_index(const std::vector<std::string>& ids) {
  std::unordered_map<std::string, std::size_t> out;
  for (std::size_t i = 0; i < ids.size(); ++i) out.emplace(ids[i], i);
  return out;
}

std::size_t lookup(const std::unordered_map<std::string, std::size_t>& index,
                   const std::string& id, const std::string& where) {
  auto it = index.find(id);
  if (it == index.end()) throw SchemaError(where + ": unknown unit '" + id + "'");
  return it->second;
}

}  // namespace

// ---------------------------------------------------------------------------

std::size_t CsvTable::column(const std::string& name) const {
  for (std::size_t k = 0; k < header.size(); ++k)
    if (header[k] == name) return k;
  throw SchemaError("missing column '" + name + "'");
}

bool CsvTable::has(const std::string& name) const {
  for (const auto& h : header)
    if (h == name) return true;
  return false;
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open '" + path.string() + "'");
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ValidationError("cannot write '" + path.string() + "'");
  out << text;
}

CsvTable read_csv(const fs::path& path) {
  std::istringstream in(read_text(path));
  CsvTable table;
  std::string line;
  std::size_t line_no = 0;
  bool have_header = false;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    auto fields = split_csv_line(line);
    if (!have_header) {
      table.header = std::move(fields);
      have_header = true;
      continue;
    }
    if (fields.size() != table.header.size())
      throw SchemaError(path.string() + " line " + std::to_string(line_no) + ": expected " +
                        std::to_string(table.header.size()) + " fields, found " +
                        std::to_string(fields.size()));
    table.rows.push_back(std::move(fields));
  }
  if (!have_header) throw SchemaError(path.string() + ": empty file");
  return table;
}

Dataset read_units_csv(const fs::path& path) {
  const CsvTable csv = read_csv(path);
  const std::string where = path.string();
  const std::size_t c_id = csv.column("unit_id");
  const std::size_t c_cluster = csv.column("cluster_id");
  const bool has_xy = csv.has("x_km") && csv.has("y_km");
  const bool has_treat = csv.has("treatment");

  Dataset data;
  std::vector<std::size_t> cov_cols, out_cols;
  for (std::size_t k = 0; k < csv.header.size(); ++k) {
    const std::string& h = csv.header[k];
    if (h == "unit_id" || h == "cluster_id" || h == "x_km" || h == "y_km" ||
        h == "treatment")
      continue;
    if (is_covariate_column(h)) {
      cov_cols.push_back(k);
      data.covariate_names.push_back(h);
    } else if (is_outcome_column(h)) {
      out_cols.push_back(k);
      data.outcome_names.push_back(h);
    } else {
      throw SchemaError(where + ": unexpected column '" + h + "'");
    }
  }

  for (std::size_t r = 0; r < csv.rows.size(); ++r) {
    const auto& row = csv.rows[r];
    const std::string at = where + " row " + std::to_string(r + 1);
    UnitRecord u;
    u.unit_id = row[c_id];
    u.cluster_id = row[c_cluster];
    if (u.unit_id.empty()) throw SchemaError(at + ": empty unit_id");
    if (u.cluster_id.empty()) throw SchemaError(at + ": unit '" + u.unit_id + "' has no cluster_id");
    if (has_xy) {
      const auto& xs = row[csv.column("x_km")];
      const auto& ys = row[csv.column("y_km")];
      if (!xs.empty()) u.x_km = parse_double(xs, at + " x_km");
      if (!ys.empty()) u.y_km = parse_double(ys, at + " y_km");
    }
    if (has_treat) {
      const auto& t = row[csv.column("treatment")];
      if (!t.empty()) u.treatment = parse_bit(t, at + " treatment");
    }
    for (std::size_t k : cov_cols) u.covariates.push_back(parse_double(row[k], at + " " + csv.header[k]));
    for (std::size_t k : out_cols)
      u.outcomes.push_back(row[k].empty() ? std::numeric_limits<double>::quiet_NaN()
                                          : parse_double(row[k], at + " " + csv.header[k]));
    data.units.push_back(std::move(u));
  }
  return data;
}

std::string units_csv(const Dataset& data) {
  std::ostringstream os;
  os << "# schema " << kSchemaVersion << "\n";
  os << "unit_id,cluster_id,x_km,y_km,treatment";
  for (const auto& n : data.outcome_names) os << "," << n;
  for (const auto& n : data.covariate_names) os << "," << n;
  os << "\n";
  for (const auto& u : data.units) {
    os << csv_field(u.unit_id) << "," << csv_field(u.cluster_id) << ","
       << (u.x_km ? format_double(*u.x_km) : "") << ","
       << (u.y_km ? format_double(*u.y_km) : "") << ","
       << (u.treatment ? std::to_string(*u.treatment) : "");
    for (double y : u.outcomes) os << "," << (std::isnan(y) ? "" : format_double(y));
    for (double x : u.covariates) os << "," << format_double(x);
    os << "\n";
  }
  return os.str();
}

void read_distances_csv(const fs::path& path, Dataset& data) {
  const CsvTable csv = read_csv(path);
  const std::size_t ci = csv.column("unit_i"), cj = csv.column("unit_j"),
                    cd = csv.column("dist_km");
  DistanceTable table;
  std::unordered_map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < data.units.size(); ++i) index.emplace(data.units[i].unit_id, i);
  for (std::size_t r = 0; r < csv.rows.size(); ++r) {
    const auto& row = csv.rows[r];
    const std::string at = path.string() + " row " + std::to_string(r + 1);
    const std::size_t i = lookup(index, row[ci], at);
    const std::size_t j = lookup(index, row[cj], at);
    const double d = parse_double(row[cd], at + " dist_km");
    if (d < 0.0) throw SchemaError(at + ": negative distance");
    table.set(i, j, d);
  }
  data.distances = std::move(table);
}

Json network_to_json(const Network& network, const DependencyGraph* graph) {
  Json j;
  j["schema"] = kSchemaVersion;
  j["network_digest"] = network.digest();
  j["build_params"] = {{"threshold_km", network.params.threshold_km},
                       {"k_max", network.params.k_max}};
  Json clusters = Json::array();
  for (std::size_t c = 0; c < network.num_clusters(); ++c) {
    Json members = Json::array();
    for (std::size_t i : network.members[c]) members.push_back(network.unit_ids[i]);
    clusters.push_back({{"cluster_id", network.cluster_ids[c]}, {"members", members}});
  }
  j["clusters"] = clusters;
  Json units = Json::array();
  for (std::size_t i = 0; i < network.size(); ++i) {
    Json geo = Json::array();
    for (std::size_t g : network.geo[i]) geo.push_back(network.unit_ids[g]);
    units.push_back({{"unit_id", network.unit_ids[i]},
                     {"cluster_id", network.cluster_ids[network.cluster_of[i]]},
                     {"geo_neighbors", geo}});
  }
  j["units"] = units;
  if (graph) {
    j["dependency"] = {{"order", graph->order},
                       {"max_degree", graph->max_degree},
                       {"pairs", graph->pairs.size()}};
  }
  return j;
}

SaturationPolicy policy_from_json(const Json& j) {
  if (!j.is_object() || !j.contains("levels") || !j["levels"].is_array())
    throw SchemaError("policy block needs a \"levels\" array");
  SaturationPolicy policy;
  for (const auto& lv : j["levels"]) {
    SaturationLevel level;
    level.label = lv.value("label", "level" + std::to_string(policy.levels.size() + 1));
    if (!lv.contains("prob") || !lv.contains("rule"))
      throw SchemaError("policy level '" + level.label + "' needs \"prob\" and \"rule\"");
    level.prob = rule_value(lv["prob"]);
    const Json& rule = lv["rule"];
    const std::string kind = rule.value("kind", "");
    if (kind == "fixed" || kind == "fixed_fraction")
      level.rule.kind = WithinRule::Kind::FixedFraction;
    else if (kind == "bernoulli")
      level.rule.kind = WithinRule::Kind::Bernoulli;
    else
      throw SchemaError("policy level '" + level.label +
                        "': rule kind must be \"fixed\" or \"bernoulli\"");
    if (!rule.contains("value"))
      throw SchemaError("policy level '" + level.label + "': rule needs a value");
    level.rule.value = rule_value(rule["value"]);
    policy.levels.push_back(std::move(level));
  }
  policy.validate();
  return policy;
}

Json policy_to_json(const SaturationPolicy& policy) {
  Json levels = Json::array();
  for (const auto& lv : policy.levels)
    levels.push_back(
        {{"label", lv.label},
         {"prob", lv.prob},
         {"rule",
          {{"kind", lv.rule.kind == WithinRule::Kind::FixedFraction ? "fixed" : "bernoulli"},
           {"value", lv.rule.value}}}});
  return {{"levels", levels}};
}

ExposureConfig exposure_from_json(const Json& j) {
  ExposureConfig cfg;
  if (j.is_null()) return cfg;
  if (!j.is_object()) throw SchemaError("exposure block must be an object");
  if (j.contains("cutoff")) {
    const Json& c = j["cutoff"];
    cfg.cutoff = c.is_string() ? Cutoff::parse(c.get<std::string>())
                               : Cutoff::from_double(c.get<double>());
  }
  const std::string mode = j.value("mode", "full");
  if (mode == "full")
    cfg.mode = ExposureMode::Full;
  else if (mode == "reduced")
    cfg.mode = ExposureMode::Reduced;
  else
    throw SchemaError("exposure mode must be \"full\" or \"reduced\"");
  cfg.empty_within = static_cast<std::uint8_t>(j.value("empty_within", 0));
  cfg.empty_between = static_cast<std::uint8_t>(j.value("empty_between", 0));
  cfg.validate();
  return cfg;
}

Json exposure_to_json(const ExposureConfig& cfg) {
  return {{"cutoff", cfg.cutoff.to_string()},
          {"mode", cfg.mode == ExposureMode::Full ? "full" : "reduced"},
          {"empty_within", cfg.empty_within},
          {"empty_between", cfg.empty_between}};
}

std::string assignment_csv(const Network& network, const AssignmentVector& z) {
  std::ostringstream os;
  os << "# schema " << kSchemaVersion << "\nunit_id,treatment\n";
  for (std::size_t i = 0; i < network.size(); ++i)
    os << csv_field(network.unit_ids[i]) << "," << static_cast<int>(z.treatment[i]) << "\n";
  return os.str();
}

std::string exposures_csv(const Network& network, const ExposureMatrix& exposures) {
  std::ostringstream os;
  os << "# schema " << kSchemaVersion << "\n";
  os << "unit_id,a,s,h,within_degenerate,between_degenerate\n";
  for (std::size_t i = 0; i < network.size(); ++i)
    os << csv_field(network.unit_ids[i]) << "," << cell_fields(exposures.at(i)) << ","
       << static_cast<int>(exposures.within_degenerate[i]) << ","
       << static_cast<int>(exposures.between_degenerate[i]) << "\n";
  return os.str();
}

// ---------------------------------------------------------------------------

void write_inclusion_dir(const fs::path& dir, const InclusionTable& table) {
  fs::create_directories(dir);
  const auto& meta = table.meta();
  const auto& ids = table.unit_ids();
  Json m;
  m["schema"] = kSchemaVersion;
  m["mode"] = meta.mode == InclusionMode::Exact ? "exact" : "mc";
  m["draws"] = meta.draws;
  m["seed"] = meta.seed;
  m["order"] = meta.order;
  m["exposure_mode"] = meta.exposure_mode == ExposureMode::Full ? "full" : "reduced";
  m["policy_digest"] = meta.policy_digest;
  m["exposure_digest"] = meta.exposure_digest;
  m["network_digest"] = meta.network_digest;
  m["units"] = ids;
  Json pairs = Json::array();
  for (const auto& [i, j] : table.pairs()) pairs.push_back({ids[i], ids[j]});
  m["pairs"] = pairs;
  write_text(dir / "meta.json", m.dump(1) + "\n");

  std::ostringstream first;
  first << "unit_id," << cells_header() << ",prob\n";
  for (std::size_t i = 0; i < table.size(); ++i)
    for (std::size_t c = 0; c < kNumCells; ++c)
      first << csv_field(ids[i]) << "," << cell_fields(Cell::from_index(c)) << ","
            << format_double(table.first(i, c)) << "\n";
  write_text(dir / "first_order.csv", first.str());

  std::ostringstream second;
  second << "unit_i,unit_j,a,s,h,a2,s2,h2,prob\n";
  for (std::size_t p = 0; p < table.pairs().size(); ++p) {
    const auto [i, j] = table.pairs()[p];
    const auto& row = table.pair_row(p);
    for (std::size_t ci = 0; ci < kNumCells; ++ci)
      for (std::size_t cj = 0; cj < kNumCells; ++cj) {
        const double v = row[ci * kNumCells + cj];
        if (v == 0.0) continue;
        second << csv_field(ids[i]) << "," << csv_field(ids[j]) << ","
               << cell_fields(Cell::from_index(ci)) << ","
               << cell_fields(Cell::from_index(cj)) << "," << format_double(v) << "\n";
      }
  }
  write_text(dir / "second_order.csv", second.str());
}

InclusionTable read_inclusion_dir(const fs::path& dir) {
  const fs::path meta_path = dir / "meta.json";
  const Json m = read_json(meta_path);
  require_schema(m, meta_path);
  InclusionMeta meta;
  try {
    meta.mode = m.at("mode") == "exact" ? InclusionMode::Exact : InclusionMode::MonteCarlo;
    meta.draws = m.at("draws").get<std::uint64_t>();
    meta.seed = m.at("seed").get<std::uint64_t>();
    meta.order = m.at("order").get<std::size_t>();
    meta.exposure_mode =
        m.at("exposure_mode") == "reduced" ? ExposureMode::Reduced : ExposureMode::Full;
    meta.policy_digest = m.at("policy_digest").get<std::string>();
    meta.exposure_digest = m.at("exposure_digest").get<std::string>();
    meta.network_digest = m.at("network_digest").get<std::string>();
  } catch (const Json::exception& e) {
    throw SchemaError(meta_path.string() + ": " + e.what());
  }
  const auto ids = m.at("units").get<std::vector<std::string>>();
  const auto index = id_index(ids);

  std::vector<UnitPair> pairs;
  for (const auto& p : m.at("pairs")) {
    auto i = lookup(index, p.at(0).get<std::string>(), meta_path.string());
    auto j = lookup(index, p.at(1).get<std::string>(), meta_path.string());
    if (i > j) std::swap(i, j);
    pairs.emplace_back(static_cast<std::uint32_t>(i), static_cast<std::uint32_t>(j));
  }

  std::vector<CellArray> first(ids.size(), CellArray{});
  {
    const fs::path path = dir / "first_order.csv";
    const CsvTable csv = read_csv(path);
    const std::size_t cu = csv.column("unit_id"), ca = csv.column("a"), cs = csv.column("s"),
                      ch = csv.column("h"), cp = csv.column("prob");
    for (const auto& row : csv.rows) {
      const std::size_t i = lookup(index, row[cu], path.string());
      first[i][cell_from_fields(row, ca, cs, ch, path.string())] =
          parse_double(row[cp], path.string());
    }
  }

  std::vector<PairArray> second(pairs.size(), PairArray{});
  {
    std::unordered_map<std::uint64_t, std::size_t> pair_of;
    for (std::size_t p = 0; p < pairs.size(); ++p)
      pair_of.emplace((static_cast<std::uint64_t>(pairs[p].first) << 32) | pairs[p].second, p);
    const fs::path path = dir / "second_order.csv";
    const CsvTable csv = read_csv(path);
    const std::size_t cui = csv.column("unit_i"), cuj = csv.column("unit_j");
    const std::size_t ca = csv.column("a"), cs = csv.column("s"), ch = csv.column("h");
    const std::size_t ca2 = csv.column("a2"), cs2 = csv.column("s2"), ch2 = csv.column("h2");
    const std::size_t cp = csv.column("prob");
    for (const auto& row : csv.rows) {
      std::size_t i = lookup(index, row[cui], path.string());
      std::size_t j = lookup(index, row[cuj], path.string());
      std::size_t ci = cell_from_fields(row, ca, cs, ch, path.string());
      std::size_t cj = cell_from_fields(row, ca2, cs2, ch2, path.string());
      if (i > j) {
        std::swap(i, j);
        std::swap(ci, cj);
      }
      auto it = pair_of.find((static_cast<std::uint64_t>(i) << 32) | j);
      if (it == pair_of.end())
        throw SchemaError(path.string() + ": pair (" + row[cui] + ", " + row[cuj] +
                          ") is not listed in meta.json");
      second[it->second][ci * kNumCells + cj] = parse_double(row[cp], path.string());
    }
  }
  return InclusionTable(ids, std::move(first), std::move(pairs), std::move(second),
                        std::move(meta));
}

void write_weights_dir(const fs::path& dir, const PolicyWeights& weights,
                       const std::vector<std::string>& unit_ids) {
  fs::create_directories(dir);
  const WeightScheme& ref = weights.de;
  Json m;
  m["schema"] = kSchemaVersion;
  m["policy_digest"] = ref.policy_digest;
  m["exposure_digest"] = ref.exposure_digest;
  m["network_digest"] = ref.network_digest;
  m["draws"] = ref.draws;
  m["seed"] = ref.seed;
  m["units"] = unit_ids;
  write_text(dir / "meta.json", m.dump(1) + "\n");
  for (const WeightScheme* w : {&weights.de, &weights.wie, &weights.bie}) {
    std::ostringstream os;
    os << "unit_id," << cells_header() << ",gamma,zero_conditioning\n";
    for (std::size_t i = 0; i < w->size(); ++i)
      for (std::size_t c = 0; c < kNumCells; ++c)
        os << csv_field(unit_ids.at(i)) << "," << cell_fields(Cell::from_index(c)) << ","
           << format_double(w->at(i, c)) << ","
           << static_cast<int>(w->zero_conditioning[i][c]) << "\n";
    write_text(dir / (to_string(w->kind) + ".csv"), os.str());
  }
}

PolicyWeights read_weights_dir(const fs::path& dir) {
  const fs::path meta_path = dir / "meta.json";
  const Json m = read_json(meta_path);
  require_schema(m, meta_path);
  const auto ids = m.at("units").get<std::vector<std::string>>();
  const auto index = id_index(ids);
  PolicyWeights out;
  for (WeightKind kind : {WeightKind::DE, WeightKind::WIE, WeightKind::BIE}) {
    WeightScheme& w = kind == WeightKind::DE    ? out.de
                      : kind == WeightKind::WIE ? out.wie
                                                : out.bie;
    w.kind = kind;
    w.gamma.assign(ids.size(), CellArray{});
    w.zero_conditioning.assign(ids.size(), {});
    try {
      w.policy_digest = m.at("policy_digest").get<std::string>();
      w.exposure_digest = m.at("exposure_digest").get<std::string>();
      w.network_digest = m.at("network_digest").get<std::string>();
      w.draws = m.at("draws").get<std::uint64_t>();
      w.seed = m.at("seed").get<std::uint64_t>();
    } catch (const Json::exception& e) {
      throw SchemaError(meta_path.string() + ": " + e.what());
    }
    const fs::path path = dir / (to_string(kind) + ".csv");
    const CsvTable csv = read_csv(path);
    const std::size_t cu = csv.column("unit_id"), ca = csv.column("a"), cs = csv.column("s"),
                      ch = csv.column("h"), cg = csv.column("gamma"),
                      cz = csv.column("zero_conditioning");
    for (const auto& row : csv.rows) {
      const std::size_t i = lookup(index, row[cu], path.string());
      const std::size_t c = cell_from_fields(row, ca, cs, ch, path.string());
      w.gamma[i][c] = parse_double(row[cg], path.string());
      w.zero_conditioning[i][c] = static_cast<std::uint8_t>(parse_bit(row[cz], path.string()));
    }
  }
  return out;
}

// ---------------------------------------------------------------------------

Json positivity_to_json(const PositivityReport& report, const InclusionTable& table) {
  Json j;
  j["floor"] = report.floor;
  j["mean_pr_a1"] = report.mean_pr_a1;
  j["mean_pr_s1"] = report.mean_pr_s1;
  j["mean_pr_h1"] = report.mean_pr_h1;
  j["max_row_sum_error"] = report.max_row_sum_error;
  Json cells = Json::array();
  for (const auto& c : report.cells)
    cells.push_back({{"cell", cell_label(c.cell)},
                     {"min", c.min},
                     {"q05", c.q05},
                     {"q25", c.q25},
                     {"median", c.median},
                     {"mean", c.mean},
                     {"q75", c.q75},
                     {"max", c.max},
                     {"below_floor", c.below_floor},
                     {"zeros", c.zeros},
                     {"max_weight_share", c.max_weight_share}});
  j["cells"] = cells;
  Json v = Json::array();
  for (const auto& x : report.violations)
    v.push_back({{"unit_id", table.unit_ids()[x.unit]},
                 {"cell", cell_label(x.cell)},
                 {"prob", x.prob},
                 {"structural_zero", x.structural_zero}});
  j["violations"] = v;
  return j;
}

Json degree_to_json(const DegreeReport& report) {
  Json hist = Json::object();
  for (const auto& [deg, count] : report.histogram) hist[std::to_string(deg)] = count;
  return {{"max_degree", report.max_degree},
          {"histogram", hist},
          {"isolated_units", report.isolated_units.size()},
          {"empty_geo_units", report.empty_geo_units.size()},
          {"uncovered_dependent_pairs", report.uncovered_dependent_pairs}};
}

Json effect_to_json(const EffectEstimate& e) {
  Json comps = Json::array();
  for (const auto& c : e.components) {
    Json cj = {{"cell", cell_label(c.cell)},
               {"sign", c.sign},
               {"value", c.value},
               {"variance", c.variance},
               {"count", c.count},
               {"corrected", c.corrected},
               {"floored", c.floored},
               {"skipped", c.skipped}};
    if (c.weight) cj["weight"] = to_string(*c.weight);
    comps.push_back(cj);
  }
  return {{"estimand", e.estimand},
          {"estimator", to_string(e.kind)},
          {"point", e.point},
          {"variance", e.variance},
          {"se", e.se},
          {"ci_lo", e.ci.lo},
          {"ci_hi", e.ci.hi},
          {"alpha", e.alpha},
          {"method", to_string(e.method)},
          {"estimable", e.estimable},
          {"status", e.status},
          {"flags", e.flags},
          {"components", comps}};
}

std::string results_csv(const std::vector<ResultRow>& rows) {
  std::vector<std::string> grid_keys;
  for (const auto& r : rows)
    for (auto it = r.grid.begin(); it != r.grid.end(); ++it)
      if (std::find(grid_keys.begin(), grid_keys.end(), it.key()) == grid_keys.end())
        grid_keys.push_back(it.key());
  std::ostringstream os;
  os << "# schema " << kSchemaVersion << "\n";
  os << "estimand,estimator,outcome,point,se,ci_lo,ci_hi,flags";
  for (const auto& k : grid_keys) os << "," << k;
  os << "\n";
  for (const auto& r : rows) {
    const auto& e = r.estimate;
    std::string flags;
    if (!e.estimable) flags = e.status;
    for (const auto& f : e.flags) flags += (flags.empty() ? "" : ";") + f;
    os << csv_field(e.estimand) << "," << to_string(e.kind) << "," << csv_field(r.outcome)
       << ",";
    if (e.estimable)
      os << format_double(e.point) << "," << format_double(e.se) << ","
         << format_double(e.ci.lo) << "," << format_double(e.ci.hi);
    else
      os << ",,,";
    os << "," << csv_field(flags);
    for (const auto& k : grid_keys) {
      os << ",";
      if (r.grid.contains(k)) {
        const Json& v = r.grid[k];
        os << csv_field(v.is_string() ? v.get<std::string>() : v.dump());
      }
    }
    os << "\n";
  }
  return os.str();
}

}  // namespace satdesign
