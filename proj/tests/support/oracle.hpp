#pragma once

// Brute-force reference implementations used by the tests. Nothing here calls
// into the library's design, exposure or inclusion code: assignments are
// enumerated with bitmasks and exposures are recomputed from the definitions.

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "satdesign/core.hpp"
#include "satdesign/design.hpp"
#include "satdesign/network.hpp"

namespace oracle {

using satdesign::CellArray;

struct Layout {
  std::vector<std::size_t> cluster_of;
  std::vector<std::vector<std::size_t>> geo;  // G_i
  std::size_t clusters = 0;

  std::size_t size() const { return cluster_of.size(); }
};

// Pure two-level-or-more saturation law, described without the library types.
struct Level {
  double prob;
  bool bernoulli;  // false: fixed fraction, round half up
  double value;
};

struct Draw {
  std::vector<int> z;
  double prob;
};

inline int popcount(unsigned m) {
  int c = 0;
  for (; m; m &= m - 1) ++c;
  return c;
}

inline std::size_t fixed_count(double f, std::size_t n) {
  return static_cast<std::size_t>(std::floor(f * static_cast<double>(n) + 0.5 + 1e-12));
}

// Every assignment with positive probability (duplicates merged implicitly
// by construction: each (level, subset) combination is listed once).
inline std::vector<Draw> enumerate(const Layout& L, const std::vector<Level>& levels) {
  std::vector<std::vector<std::size_t>> members(L.clusters);
  for (std::size_t i = 0; i < L.size(); ++i) members[L.cluster_of[i]].push_back(i);

  // Per cluster: list of (mask, prob).
  std::vector<std::vector<std::pair<unsigned, double>>> options(L.clusters);
  for (std::size_t c = 0; c < L.clusters; ++c) {
    const std::size_t n = members[c].size();
    for (const Level& lv : levels) {
      for (unsigned m = 0; m < (1u << n); ++m) {
        double p = 0.0;
        if (lv.bernoulli) {
          const int k = popcount(m);
          p = std::pow(lv.value, k) * std::pow(1.0 - lv.value, static_cast<int>(n) - k);
        } else {
          const std::size_t k = fixed_count(lv.value, n);
          if (static_cast<std::size_t>(popcount(m)) != k) continue;
          double subsets = 1.0;
          for (std::size_t t = 0; t < k; ++t)
            subsets = subsets * static_cast<double>(n - t) / static_cast<double>(t + 1);
          p = 1.0 / subsets;
        }
        if (p > 0) options[c].push_back({m, lv.prob * p});
      }
    }
  }

  std::vector<Draw> out;
  std::vector<std::size_t> pick(L.clusters, 0);
  while (true) {
    Draw d;
    d.z.assign(L.size(), 0);
    d.prob = 1.0;
    for (std::size_t c = 0; c < L.clusters; ++c) {
      const auto& [mask, p] = options[c][pick[c]];
      d.prob *= p;
      for (std::size_t t = 0; t < members[c].size(); ++t)
        d.z[members[c][t]] = (mask >> t) & 1u;
    }
    out.push_back(std::move(d));
    std::size_t c = 0;
    while (c < L.clusters && ++pick[c] == options[c].size()) pick[c++] = 0;
    if (c == L.clusters) break;
  }
  return out;
}

// Literal exposure definition with cutoff num/den and zero conventions.
inline std::vector<int> exposures(const Layout& L, const std::vector<int>& z, long num,
                                  long den, int empty_s = 0, int empty_h = 0) {
  std::vector<int> cells(L.size());
  for (std::size_t i = 0; i < L.size(); ++i) {
    long peers = 0, treated = 0;
    for (std::size_t j = 0; j < L.size(); ++j)
      if (j != i && L.cluster_of[j] == L.cluster_of[i]) {
        ++peers;
        treated += z[j];
      }
    const int s = peers == 0 ? empty_s : (treated * den > num * peers ? 1 : 0);
    long g = static_cast<long>(L.geo[i].size()), gt = 0;
    for (std::size_t j : L.geo[i]) gt += z[j];
    const int h = g == 0 ? empty_h : (gt * den > num * g ? 1 : 0);
    cells[i] = z[i] * 4 + s * 2 + h;
  }
  return cells;
}

struct Support {
  std::vector<std::vector<int>> cells;  // per draw, per unit
  std::vector<double> prob;
};

inline Support support(const Layout& L, const std::vector<Level>& levels, long num,
                       long den, int empty_s = 0, int empty_h = 0) {
  Support s;
  for (const Draw& d : enumerate(L, levels)) {
    s.cells.push_back(exposures(L, d.z, num, den, empty_s, empty_h));
    s.prob.push_back(d.prob);
  }
  return s;
}

inline double pi(const Support& s, std::size_t i, int cell) {
  double p = 0;
  for (std::size_t r = 0; r < s.prob.size(); ++r)
    if (s.cells[r][i] == cell) p += s.prob[r];
  return p;
}

inline double joint(const Support& s, std::size_t i, int ci, std::size_t j, int cj) {
  double p = 0;
  for (std::size_t r = 0; r < s.prob.size(); ++r)
    if (s.cells[r][i] == ci && s.cells[r][j] == cj) p += s.prob[r];
  return p;
}

// E over the support of f(draw index).
template <class F>
double expect(const Support& s, F&& f) {
  double e = 0;
  for (std::size_t r = 0; r < s.prob.size(); ++r) e += s.prob[r] * f(r);
  return e;
}

template <class F>
double variance(const Support& s, F&& f) {
  const double m = expect(s, f);
  return expect(s, [&](std::size_t r) {
    const double d = f(r) - m;
    return d * d;
  });
}

// Design D1: two clusters of three, unit 3 and unit 4 (indices 2, 3) are the
// only cross-cluster pair within 4 km.
inline Layout d1_layout() {
  Layout L;
  L.cluster_of = {0, 0, 0, 1, 1, 1};
  L.geo = {{}, {}, {3}, {2}, {}, {}};
  L.clusters = 2;
  return L;
}

inline std::vector<Level> d1_levels() {
  return {{0.5, false, 2.0 / 3.0}, {0.5, false, 1.0 / 3.0}};
}

inline satdesign::Dataset d1_dataset() {
  satdesign::Dataset d;
  const double xs[6] = {0, 0, 2, 5, 7, 7};
  const double ys[6] = {0, 1, 0, 0, 0, 1};
  for (int i = 0; i < 6; ++i) {
    satdesign::UnitRecord u;
    u.unit_id = std::to_string(i + 1);
    u.cluster_id = i < 3 ? "A" : "B";
    u.x_km = xs[i];
    u.y_km = ys[i];
    d.units.push_back(u);
  }
  return d;
}

inline satdesign::SaturationPolicy d1_policy() {
  using satdesign::WithinRule;
  satdesign::SaturationPolicy p;
  p.levels = {{"high", 0.5, {WithinRule::Kind::FixedFraction, 2.0 / 3.0}},
              {"low", 0.5, {WithinRule::Kind::FixedFraction, 1.0 / 3.0}}};
  return p;
}

// Y_i(a,s,h) = mu_i + ta a + ts s + th h + tas a s.
inline std::vector<CellArray> linear_table(const std::vector<double>& mu, double ta,
                                           double ts, double th, double tas = 0.0) {
  std::vector<CellArray> y(mu.size());
  for (std::size_t i = 0; i < mu.size(); ++i)
    for (int c = 0; c < 8; ++c) {
      const int a = c >> 2, s = (c >> 1) & 1, h = c & 1;
      y[i][c] = mu[i] + ta * a + ts * s + th * h + tas * a * s;
    }
  return y;
}

}  // namespace oracle
