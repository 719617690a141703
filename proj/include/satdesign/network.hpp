#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

namespace satdesign {

struct UnitRecord {
  std::string unit_id;
  std::string cluster_id;
  std::optional<double> x_km;
  std::optional<double> y_km;
  std::vector<double> covariates;
  std::optional<int> treatment;
  // Aligned with Dataset::outcome_names; NaN marks a missing value.
  std::vector<double> outcomes;
};

// Symmetric pairwise distances keyed by unit index. Lookups for pairs that
// were never supplied return nullopt.
class DistanceTable {
 public:
  void set(std::size_t i, std::size_t j, double dist_km);
  std::optional<double> get(std::size_t i, std::size_t j) const;
  std::size_t size() const { return table_.size(); }

 private:
  static std::uint64_t key(std::size_t i, std::size_t j);
  std::unordered_map<std::uint64_t, double> table_;
};

struct Dataset {
  std::vector<UnitRecord> units;
  std::vector<std::string> covariate_names;
  std::vector<std::string> outcome_names;
  std::optional<DistanceTable> distances;

  std::optional<std::size_t> index_of(const std::string& unit_id) const;
};

struct NetworkParams {
  double threshold_km = 4.0;
  std::size_t k_max = 3;
};

// Cluster partition plus the directed cross-cluster neighbor lists G_i.
// Immutable after construction.
struct Network {
  std::vector<std::string> unit_ids;
  std::vector<std::string> cluster_ids;           // one per cluster
  std::vector<std::size_t> cluster_of;            // unit -> cluster index
  std::vector<std::vector<std::size_t>> members;  // cluster -> units
  std::vector<std::vector<std::size_t>> geo;      // unit -> G_i
  NetworkParams params;

  std::size_t size() const { return unit_ids.size(); }
  std::size_t num_clusters() const { return members.size(); }
  std::size_t peers(std::size_t i) const {
    return members[cluster_of[i]].size() - 1;
  }
  std::string digest() const;
};

// Orders unit ids numerically when both are integers, lexicographically
// otherwise.
bool unit_id_less(const std::string& lhs, const std::string& rhs);

// Builds G_i as the (at most k_max) nearest units outside i's cluster within
// threshold_km, ties broken by unit id. Throws SchemaError on duplicate ids or
// missing positions.
Network build_network(const Dataset& data, const NetworkParams& params);

// Assembles a network from explicit cluster labels and neighbor lists (unit
// indices). Validates the cross-cluster invariant.
Network make_network(std::vector<std::string> unit_ids,
                     const std::vector<std::string>& cluster_labels,
                     std::vector<std::vector<std::size_t>> geo,
                     NetworkParams params = {});

// Symmetrized base adjacency (same cluster, or geo neighbor in either
// direction) and its m-hop closure.
struct DependencyGraph {
  std::size_t order = 1;
  // closure[i]: sorted units j != i reachable from i in <= order steps.
  std::vector<std::vector<std::size_t>> closure;
  // All unordered closure pairs (i < j), sorted.
  std::vector<std::pair<std::uint32_t, std::uint32_t>> pairs;
  std::size_t max_degree = 0;

  std::size_t size() const { return closure.size(); }
  bool adjacent(std::size_t i, std::size_t j) const;
};

// Base adjacency lists K (without self loops), sorted.
std::vector<std::vector<std::size_t>> base_adjacency(const Network& network);

DependencyGraph dependency_graph(const Network& network, std::size_t m);

struct DegreeReport {
  std::size_t max_degree = 0;
  std::map<std::size_t, std::size_t> histogram;  // degree -> unit count
  std::vector<std::size_t> isolated_units;        // no dependency neighbors
  std::vector<std::size_t> empty_geo_units;       // G_i empty
  // Unit pairs whose exposures share a cluster (so are dependent under any
  // cluster-independent design) but fall outside the closure.
  std::size_t uncovered_dependent_pairs = 0;
};

DegreeReport degree_diagnostics(const Network& network,
                                const DependencyGraph& graph);

}  // namespace satdesign
