#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <set>
#include <vector>

#include "oracle.hpp"
#include "satdesign/network.hpp"

using namespace satdesign;

namespace {

UnitRecord unit(std::string id, std::string cluster, double x, double y) {
  UnitRecord u;
  u.unit_id = std::move(id);
  u.cluster_id = std::move(cluster);
  u.x_km = x;
  u.y_km = y;
  return u;
}

// Random layout: `clusters` groups of 1..4 units in a 10 km square.
Dataset random_dataset(std::mt19937_64& rng, std::size_t clusters) {
  std::uniform_real_distribution<double> pos(0.0, 10.0);
  std::uniform_int_distribution<int> size(1, 4);
  Dataset d;
  int id = 1;
  for (std::size_t c = 0; c < clusters; ++c) {
    const double cx = pos(rng), cy = pos(rng);
    for (int k = size(rng); k > 0; --k, ++id)
      d.units.push_back(unit(std::to_string(id), "c" + std::to_string(c),
                             cx + pos(rng) / 10, cy + pos(rng) / 10));
  }
  return d;
}

// All-pairs hop distances over K by Floyd-Warshall.
std::vector<std::vector<std::size_t>> hops(const Network& net) {
  const std::size_t n = net.size(), inf = std::numeric_limits<std::size_t>::max() / 4;
  std::vector<std::vector<std::size_t>> d(n, std::vector<std::size_t>(n, inf));
  for (std::size_t i = 0; i < n; ++i) {
    d[i][i] = 0;
    for (std::size_t j = 0; j < n; ++j)
      if (j != i && net.cluster_of[i] == net.cluster_of[j]) d[i][j] = 1;
    for (std::size_t j : net.geo[i]) d[i][j] = d[j][i] = 1;
  }
  for (std::size_t k = 0; k < n; ++k)
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j)
        d[i][j] = std::min(d[i][j], d[i][k] + d[k][j]);
  return d;
}

}  // namespace

TEST_CASE("one cluster has no geographic neighbors") {
  Dataset d;
  d.units = {unit("1", "A", 0, 0), unit("2", "A", 1, 0), unit("3", "A", 0, 1)};
  const Network net = build_network(d, {4.0, 3});
  for (const auto& g : net.geo) CHECK(g.empty());
  CHECK(net.num_clusters() == 1);
  CHECK(net.peers(0) == 2);
}

TEST_CASE("three-unit distance example") {
  Dataset d;
  d.units = {unit("u1", "A", 0, 0), unit("u2", "B", 1, 0), unit("u3", "B", 10, 0)};
  const Network net = build_network(d, {4.0, 3});
  CHECK(net.geo[0] == std::vector<std::size_t>{1});
  CHECK(net.geo[1] == std::vector<std::size_t>{0});
  CHECK(net.geo[2].empty());
}

TEST_CASE("D1 neighbor lists match brute-force distances") {
  const Dataset d = oracle::d1_dataset();
  const Network net = build_network(d, {4.0, 3});
  for (std::size_t i = 0; i < 6; ++i) {
    std::vector<std::size_t> expect;
    for (std::size_t j = 0; j < 6; ++j) {
      if (d.units[j].cluster_id == d.units[i].cluster_id) continue;
      const double dx = *d.units[i].x_km - *d.units[j].x_km;
      const double dy = *d.units[i].y_km - *d.units[j].y_km;
      if (dx * dx + dy * dy <= 16.0) expect.push_back(j);
    }
    CHECK(net.geo[i] == expect);
  }
  CHECK(net.geo[2] == std::vector<std::size_t>{3});
  CHECK(net.geo[3] == std::vector<std::size_t>{2});
}

TEST_CASE("threshold is inclusive and k_max keeps the nearest") {
  Dataset d;
  d.units = {unit("1", "A", 0, 0), unit("2", "B", 4, 0), unit("3", "B", 3, 0),
             unit("4", "B", 1, 0), unit("5", "B", 4.0001, 0)};
  const Network net = build_network(d, {4.0, 2});
  CHECK(net.geo[0] == std::vector<std::size_t>{3, 2});
  const Network all = build_network(d, {4.0, 10});
  CHECK(all.geo[0] == std::vector<std::size_t>{3, 2, 1});
}

TEST_CASE("distance ties are broken by numeric unit id") {
  Dataset d;
  d.units = {unit("1", "A", 0, 0), unit("10", "B", 1, 0), unit("2", "B", -1, 0),
             unit("3", "B", 0, 1)};
  const Network net = build_network(d, {4.0, 2});
  CHECK(net.geo[0] == std::vector<std::size_t>{2, 3});
  CHECK(unit_id_less("2", "10"));
  CHECK(unit_id_less("a10", "a2"));
}

TEST_CASE("k_max = 0 leaves only cluster adjacency") {
  std::mt19937_64 rng(5);
  const Dataset d = random_dataset(rng, 10);
  const Network net = build_network(d, {100.0, 0});
  for (const auto& g : net.geo) CHECK(g.empty());
  const DependencyGraph g = dependency_graph(net, 3);
  for (std::size_t i = 0; i < net.size(); ++i)
    for (std::size_t j : g.closure[i]) CHECK(net.cluster_of[i] == net.cluster_of[j]);
}

TEST_CASE("explicit distance table overrides coordinates") {
  Dataset d;
  d.units = {unit("1", "A", 0, 0), unit("2", "B", 100, 0)};
  d.distances.emplace();
  d.distances->set(0, 1, 2.0);
  const Network net = build_network(d, {4.0, 3});
  CHECK(net.geo[0] == std::vector<std::size_t>{1});
}

TEST_CASE("schema problems are rejected") {
  Dataset dup;
  dup.units = {unit("1", "A", 0, 0), unit("1", "B", 1, 0)};
  CHECK_THROWS_AS(build_network(dup, {}), SchemaError);
  Dataset nopos;
  nopos.units = {unit("1", "A", 0, 0), unit("2", "B", 1, 0)};
  nopos.units[1].x_km.reset();
  CHECK_THROWS_AS(build_network(nopos, {}), SchemaError);
  CHECK_THROWS(make_network({"1", "2"}, {"A", "A"}, {{1}, {}}));
}

TEST_CASE("three-cluster chain closure") {
  // x1-y1 and y1-z1 are the only geo edges.
  const Network net = make_network({"x1", "x2", "y1", "y2", "z1", "z2"},
                                   {"X", "X", "Y", "Y", "Z", "Z"},
                                   {{2}, {}, {0, 4}, {}, {2}, {}});
  const DependencyGraph g1 = dependency_graph(net, 1);
  CHECK(g1.adjacent(2, 0));
  CHECK(g1.adjacent(2, 4));
  CHECK_FALSE(g1.adjacent(0, 4));
  CHECK_FALSE(g1.adjacent(1, 5));
  const DependencyGraph g2 = dependency_graph(net, 2);
  CHECK(g2.adjacent(0, 4));
  CHECK_FALSE(g2.adjacent(1, 5));  // x2 -> x1 -> y1 -> z1 -> z2 is 4 hops
  CHECK(dependency_graph(net, 4).adjacent(1, 5));
}

TEST_CASE("D1 closure and degrees") {
  const Network net = build_network(oracle::d1_dataset(), {4.0, 3});
  const DependencyGraph g2 = dependency_graph(net, 2);
  const auto d = hops(net);
  for (std::size_t i = 0; i < 6; ++i)
    for (std::size_t j = 0; j < 6; ++j)
      if (i != j) CHECK(g2.adjacent(i, j) == (d[i][j] <= 2));
  // Units 1,2 and 5,6 are three hops apart (1-3-4-5), so m = 2 leaves
  // four pairs out; every pair is in the closure from m = 3.
  CHECK(g2.pairs.size() == 11);
  CHECK_FALSE(g2.adjacent(0, 4));
  CHECK(g2.adjacent(0, 3));
  CHECK(g2.max_degree == 5);
  CHECK(dependency_graph(net, 3).pairs.size() == 15);

  const DependencyGraph g1 = dependency_graph(net, 1);
  const DegreeReport r = degree_diagnostics(net, g1);
  CHECK(r.max_degree == 3);
  CHECK(r.empty_geo_units == std::vector<std::size_t>{0, 1, 4, 5});
  CHECK(r.isolated_units.empty());
}

TEST_CASE("degree edge cases") {
  const Network singles = make_network({"1", "2", "3"}, {"A", "B", "C"}, {{}, {}, {}});
  const DegreeReport r0 = degree_diagnostics(singles, dependency_graph(singles, 2));
  CHECK(r0.max_degree == 0);
  CHECK(r0.isolated_units.size() == 3);

  for (std::size_t q : {1u, 2u, 5u}) {
    std::vector<std::string> ids, labels;
    for (std::size_t k = 0; k < q; ++k) {
      ids.push_back(std::to_string(k + 1));
      labels.push_back("A");
    }
    const Network one = make_network(ids, labels, std::vector<std::vector<std::size_t>>(q));
    CHECK(degree_diagnostics(one, dependency_graph(one, 1)).max_degree == q - 1);
  }
}

TEST_CASE("closure properties on random networks") {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 20; ++trial) {
    const Dataset d = random_dataset(rng, 8);
    const Network net = build_network(d, {2.0, 1 + static_cast<std::size_t>(trial % 4)});
    const auto dist = hops(net);
    std::vector<std::vector<std::size_t>> prev;
    for (std::size_t m = 1; m <= 4; ++m) {
      const DependencyGraph g = dependency_graph(net, m);
      std::size_t max_deg = 0;
      for (std::size_t i = 0; i < net.size(); ++i) {
        max_deg = std::max(max_deg, g.closure[i].size());
        CHECK(std::is_sorted(g.closure[i].begin(), g.closure[i].end()));
        for (std::size_t j = 0; j < net.size(); ++j) {
          if (i == j) continue;
          const bool adj = g.adjacent(i, j);
          CHECK(adj == g.adjacent(j, i));
          CHECK(adj == (dist[i][j] <= m));
        }
        if (!prev.empty())
          CHECK(std::includes(g.closure[i].begin(), g.closure[i].end(), prev[i].begin(),
                              prev[i].end()));
      }
      CHECK(g.max_degree == max_deg);
      std::size_t pair_count = 0;
      for (const auto& c : g.closure) pair_count += c.size();
      CHECK(g.pairs.size() * 2 == pair_count);
      prev = g.closure;
    }
  }
}

TEST_CASE("uncovered dependent pairs vanish at m = 3") {
  std::mt19937_64 rng(23);
  for (int trial = 0; trial < 10; ++trial) {
    const Network net = build_network(random_dataset(rng, 10), {3.0, 3});
    // Dependent: the cluster footprints {own} u {clusters of G_i} intersect.
    auto footprint = [&](std::size_t i) {
      std::set<std::size_t> f{net.cluster_of[i]};
      for (std::size_t j : net.geo[i]) f.insert(net.cluster_of[j]);
      return f;
    };
    for (std::size_t m = 1; m <= 3; ++m) {
      const DependencyGraph g = dependency_graph(net, m);
      std::size_t missing = 0;
      for (std::size_t i = 0; i < net.size(); ++i)
        for (std::size_t j = i + 1; j < net.size(); ++j) {
          const auto fi = footprint(i), fj = footprint(j);
          std::vector<std::size_t> both;
          std::set_intersection(fi.begin(), fi.end(), fj.begin(), fj.end(),
                                std::back_inserter(both));
          if (!both.empty() && !g.adjacent(i, j)) ++missing;
        }
      CHECK(degree_diagnostics(net, g).uncovered_dependent_pairs == missing);
      if (m == 3) CHECK(missing == 0);
    }
  }
}

TEST_CASE("network digest tracks parameters and lists") {
  const Dataset d = oracle::d1_dataset();
  CHECK(build_network(d, {4.0, 3}).digest() == build_network(d, {4.0, 3}).digest());
  CHECK(build_network(d, {4.0, 3}).digest() != build_network(d, {6.0, 3}).digest());
}
