#include "satdesign/network.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <limits>
#include <set>
#include <sstream>
#include <unordered_set>

#include "satdesign/core.hpp"

namespace satdesign {

void DistanceTable::set(std::size_t i, std::size_t j, double dist_km) {
  table_[key(i, j)] = dist_km;
}

std::optional<double> DistanceTable::get(std::size_t i, std::size_t j) const {
  auto it = table_.find(key(i, j));
  if (it == table_.end()) return std::nullopt;
  return it->second;
}

std::uint64_t DistanceTable::key(std::size_t i, std::size_t j) {
  if (i > j) std::swap(i, j);
  return (static_cast<std::uint64_t>(i) << 32) | static_cast<std::uint64_t>(j);
}

std::optional<std::size_t> Dataset::index_of(const std::string& unit_id) const {
  for (std::size_t i = 0; i < units.size(); ++i)
    if (units[i].unit_id == unit_id) return i;
  return std::nullopt;
}

namespace {

bool all_digits(const std::string& s) {
  return !s.empty() && s.size() < 19 &&
         std::all_of(s.begin(), s.end(),
                     [](unsigned char c) { return std::isdigit(c) != 0; });
}

}  // namespace

bool unit_id_less(const std::string& lhs, const std::string& rhs) {
  if (all_digits(lhs) && all_digits(rhs)) return std::stoll(lhs) < std::stoll(rhs);
  return lhs < rhs;
}

std::string Network::digest() const {
  std::ostringstream os;
  os << "network|" << format_double(params.threshold_km) << '|' << params.k_max
     << '|';
  for (std::size_t i = 0; i < size(); ++i) {
    os << unit_ids[i] << ':' << cluster_ids[cluster_of[i]] << ':';
    for (std::size_t j : geo[i]) os << unit_ids[j] << ',';
    os << ';';
  }
  return digest_of(os.str());
}

namespace {

struct Partition {
  std::vector<std::string> cluster_ids;
  std::vector<std::size_t> cluster_of;
  std::vector<std::vector<std::size_t>> members;
};

// Clusters are numbered in order of first appearance.
Partition partition(const std::vector<std::string>& labels) {
  Partition p;
  std::unordered_map<std::string, std::size_t> index;
  p.cluster_of.resize(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i) {
    auto [it, inserted] = index.emplace(labels[i], p.cluster_ids.size());
    if (inserted) {
      p.cluster_ids.push_back(labels[i]);
      p.members.emplace_back();
    }
    p.cluster_of[i] = it->second;
    p.members[it->second].push_back(i);
  }
  return p;
}

}  // namespace

Network build_network(const Dataset& data, const NetworkParams& params) {
  if (!(params.threshold_km > 0.0))
    throw ValidationError("network threshold_km must be positive");
  const std::size_t n = data.units.size();

  std::unordered_set<std::string> seen;
  std::vector<std::string> labels;
  labels.reserve(n);
  for (const auto& u : data.units) {
    if (u.unit_id.empty()) throw SchemaError("unit with empty unit_id");
    if (!seen.insert(u.unit_id).second)
      throw SchemaError("duplicate unit_id '" + u.unit_id + "'");
    if (u.cluster_id.empty())
      throw SchemaError("unit '" + u.unit_id + "' has no cluster_id");
    if (!data.distances && (!u.x_km || !u.y_km))
      throw SchemaError("unit '" + u.unit_id +
                        "' has no coordinates and no distance table was given");
    labels.push_back(u.cluster_id);
  }

  Partition part = partition(labels);
  Network net;
  net.params = params;
  net.unit_ids.reserve(n);
  for (const auto& u : data.units) net.unit_ids.push_back(u.unit_id);
  net.cluster_ids = std::move(part.cluster_ids);
  net.cluster_of = std::move(part.cluster_of);
  net.members = std::move(part.members);
  net.geo.assign(n, {});

  auto distance = [&](std::size_t i, std::size_t j) -> std::optional<double> {
    if (data.distances) {
      if (auto d = data.distances->get(i, j)) return d;
    }
    const auto& a = data.units[i];
    const auto& b = data.units[j];
    if (a.x_km && a.y_km && b.x_km && b.y_km)
      return std::hypot(*a.x_km - *b.x_km, *a.y_km - *b.y_km);
    return std::nullopt;
  };

  std::vector<std::pair<double, std::size_t>> candidates;
  for (std::size_t i = 0; i < n && params.k_max > 0; ++i) {
    candidates.clear();
    for (std::size_t j = 0; j < n; ++j) {
      if (net.cluster_of[j] == net.cluster_of[i]) continue;
      auto d = distance(i, j);
      if (d && *d <= params.threshold_km) candidates.emplace_back(*d, j);
    }
    std::sort(candidates.begin(), candidates.end(),
              [&](const auto& x, const auto& y) {
                if (x.first != y.first) return x.first < y.first;
                return unit_id_less(net.unit_ids[x.second],
                                    net.unit_ids[y.second]);
              });
    const std::size_t keep = std::min(candidates.size(), params.k_max);
    for (std::size_t c = 0; c < keep; ++c)
      net.geo[i].push_back(candidates[c].second);
  }
  return net;
}

Network make_network(std::vector<std::string> unit_ids,
                     const std::vector<std::string>& cluster_labels,
                     std::vector<std::vector<std::size_t>> geo,
                     NetworkParams params) {
  const std::size_t n = unit_ids.size();
  if (cluster_labels.size() != n || geo.size() != n)
    throw SchemaError("make_network: inconsistent input sizes");
  Partition part = partition(cluster_labels);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j : geo[i]) {
      if (j >= n) throw SchemaError("make_network: neighbor index out of range");
      if (part.cluster_of[j] == part.cluster_of[i])
        throw SchemaError("geo neighbor of '" + unit_ids[i] +
                          "' lies in its own cluster");
    }
  Network net;
  net.unit_ids = std::move(unit_ids);
  net.cluster_ids = std::move(part.cluster_ids);
  net.cluster_of = std::move(part.cluster_of);
  net.members = std::move(part.members);
  net.geo = std::move(geo);
  net.params = params;
  return net;
}

bool DependencyGraph::adjacent(std::size_t i, std::size_t j) const {
  if (i == j) return true;
  const auto& row = closure[i];
  return std::binary_search(row.begin(), row.end(), j);
}

std::vector<std::vector<std::size_t>> base_adjacency(const Network& network) {
  const std::size_t n = network.size();
  std::vector<std::vector<std::size_t>> adj(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j : network.members[network.cluster_of[i]])
      if (j != i) adj[i].push_back(j);
    for (std::size_t j : network.geo[i]) {
      adj[i].push_back(j);
      adj[j].push_back(i);
    }
  }
  for (auto& row : adj) {
    std::sort(row.begin(), row.end());
    row.erase(std::unique(row.begin(), row.end()), row.end());
  }
  return adj;
}

DependencyGraph dependency_graph(const Network& network, std::size_t m) {
  if (m < 1) throw ValidationError("dependency order m must be at least 1");
  const std::size_t n = network.size();
  const auto adj = base_adjacency(network);

  DependencyGraph graph;
  graph.order = m;
  graph.closure.assign(n, {});

  // Depth-limited BFS from every unit.
  std::vector<std::size_t> depth(n, std::numeric_limits<std::size_t>::max());
  std::vector<std::size_t> frontier, next, touched;
  for (std::size_t src = 0; src < n; ++src) {
    frontier.assign(1, src);
    depth[src] = 0;
    touched.assign(1, src);
    for (std::size_t d = 1; d <= m && !frontier.empty(); ++d) {
      next.clear();
      for (std::size_t u : frontier)
        for (std::size_t v : adj[u])
          if (depth[v] == std::numeric_limits<std::size_t>::max()) {
            depth[v] = d;
            next.push_back(v);
            touched.push_back(v);
          }
      frontier.swap(next);
    }
    auto& row = graph.closure[src];
    for (std::size_t v : touched)
      if (v != src) row.push_back(v);
    std::sort(row.begin(), row.end());
    for (std::size_t v : touched)
      depth[v] = std::numeric_limits<std::size_t>::max();

    graph.max_degree = std::max(graph.max_degree, row.size());
    for (std::size_t v : row)
      if (v > src)
        graph.pairs.emplace_back(static_cast<std::uint32_t>(src),
                                 static_cast<std::uint32_t>(v));
  }
  return graph;
}

DegreeReport degree_diagnostics(const Network& network,
                                const DependencyGraph& graph) {
  DegreeReport report;
  report.max_degree = graph.max_degree;
  const std::size_t n = graph.size();
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t deg = graph.closure[i].size();
    ++report.histogram[deg];
    if (deg == 0) report.isolated_units.push_back(i);
    if (i < network.size() && network.geo[i].empty())
      report.empty_geo_units.push_back(i);
  }

  // Exposure footprint of a unit: its own cluster plus the clusters of G_i.
  std::vector<std::vector<std::size_t>> touching(network.num_clusters());
  for (std::size_t i = 0; i < network.size(); ++i) {
    std::set<std::size_t> footprint{network.cluster_of[i]};
    for (std::size_t j : network.geo[i]) footprint.insert(network.cluster_of[j]);
    for (std::size_t c : footprint) touching[c].push_back(i);
  }
  std::set<std::pair<std::size_t, std::size_t>> uncovered;
  for (const auto& units : touching)
    for (std::size_t x = 0; x < units.size(); ++x)
      for (std::size_t y = x + 1; y < units.size(); ++y)
        if (!graph.adjacent(units[x], units[y]))
          uncovered.emplace(std::min(units[x], units[y]),
                            std::max(units[x], units[y]));
  report.uncovered_dependent_pairs = uncovered.size();
  return report;
}

}  // namespace satdesign
