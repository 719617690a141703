#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "oracle.hpp"
#include "satdesign/estimators.hpp"
#include "satdesign/inclusion.hpp"
#include "satdesign/network.hpp"

namespace helpers {

using namespace satdesign;

// First-order-only table (every pair independent).
inline InclusionTable table_from(const std::vector<CellArray>& first) {
  std::vector<std::string> ids;
  for (std::size_t i = 0; i < first.size(); ++i) ids.push_back(std::to_string(i + 1));
  return InclusionTable(ids, first, {}, {}, InclusionMeta{});
}

// Unit i sits in `cells[i]`, observed outcome y[i]; no covariates.
inline Observations observe(const std::vector<int>& cells, const std::vector<double>& y) {
  Observations o;
  for (int c : cells) o.cells.push_back(static_cast<std::uint8_t>(c));
  o.outcomes = y;
  o.covariates.resize(static_cast<Eigen::Index>(cells.size()), 0);
  return o;
}

// Observed data under one support draw of a potential-outcome table.
inline Observations observe(const std::vector<int>& cells, const std::vector<CellArray>& po) {
  std::vector<double> y;
  for (std::size_t i = 0; i < cells.size(); ++i) y.push_back(po[i][cells[i]]);
  return observe(cells, y);
}

struct D1Fixture {
  Network net = build_network(oracle::d1_dataset(), {4.0, 3});
  DependencyGraph graph = dependency_graph(net, 2);
  SaturationPolicy policy = oracle::d1_policy();
  ExposureConfig cfg;
  InclusionTable table = exact_inclusion(policy, net, &graph, cfg);
  oracle::Support ref = oracle::support(oracle::d1_layout(), oracle::d1_levels(), 1, 2);
};

// Mean over units with pi_i(cell) > 0 scaled by 1/n (the HT expectation).
inline double supported_mean(const std::vector<CellArray>& po, const InclusionTable& t,
                             int cell) {
  double s = 0;
  for (std::size_t i = 0; i < po.size(); ++i)
    if (t.first(i, cell) > 0) s += po[i][cell];
  return s / static_cast<double>(po.size());
}

inline double plain_mean(const std::vector<CellArray>& po, int cell) {
  double s = 0;
  for (const auto& row : po) s += row[cell];
  return s / static_cast<double>(po.size());
}

inline bool fully_supported(const InclusionTable& t, int cell) {
  for (std::size_t i = 0; i < t.size(); ++i)
    if (!(t.first(i, cell) > 0)) return false;
  return true;
}

}  // namespace helpers
