#include <doctest.h>

#include <algorithm>
#include <numeric>
#include <random>
#include <vector>

#include "oracle.hpp"
#include "satdesign/design.hpp"
#include "satdesign/exposure.hpp"
#include "satdesign/network.hpp"

using namespace satdesign;

namespace {

ExposureConfig half() { return ExposureConfig{}; }

Network d1() { return build_network(oracle::d1_dataset(), {4.0, 3}); }

// Random clusters with random cross-cluster lists (k up to 3).
Network random_network(std::mt19937_64& rng, std::size_t clusters) {
  std::uniform_int_distribution<int> size(1, 4), k(0, 3);
  std::vector<std::string> ids, labels;
  for (std::size_t c = 0; c < clusters; ++c)
    for (int s = size(rng); s > 0; --s) {
      ids.push_back(std::to_string(ids.size() + 1));
      labels.push_back("c" + std::to_string(c));
    }
  std::vector<std::vector<std::size_t>> geo(ids.size());
  std::uniform_int_distribution<std::size_t> pick(0, ids.size() - 1);
  for (std::size_t i = 0; i < ids.size(); ++i)
    for (int t = k(rng); t > 0; --t) {
      const std::size_t j = pick(rng);
      if (labels[j] != labels[i] && std::find(geo[i].begin(), geo[i].end(), j) == geo[i].end())
        geo[i].push_back(j);
    }
  return make_network(ids, labels, geo);
}

oracle::Layout layout_of(const Network& net) {
  return {net.cluster_of, net.geo, net.num_clusters()};
}

}  // namespace

TEST_CASE("cutoff parsing and strict comparison") {
  CHECK(Cutoff::parse("1/3") == Cutoff{1, 3});
  CHECK(Cutoff::parse("0.5") == Cutoff{1, 2});
  CHECK(Cutoff::parse("0.3333333333") == Cutoff{1, 3});
  CHECK(Cutoff::parse("2/4") == Cutoff{1, 2});
  CHECK_THROWS(Cutoff::parse("1/0"));
  CHECK_THROWS(Cutoff::parse("abc"));
  const Cutoff c{1, 2};
  CHECK_FALSE(c.exceeded_by(1, 2));
  CHECK(c.exceeded_by(2, 3));
  CHECK_FALSE(Cutoff{2, 3}.exceeded_by(2, 3));
}

TEST_CASE("within-cluster arithmetic on one cluster of three") {
  const Network net = make_network({"1", "2", "3"}, {"A", "A", "A"}, {{}, {}, {}});
  const std::vector<std::uint8_t> z{1, 1, 0};
  const ExposureMatrix e = compute_exposures(z, net, half());
  CHECK(e.at(0).s == 0);  // peers {2,3}: 1/2 is not above 1/2
  CHECK(e.at(2).s == 1);  // peers {1,2}: 1
  CHECK(e.at(0).a == 1);
  CHECK(e.at(2).a == 0);
}

TEST_CASE("geographic exposure from a single neighbor") {
  const Network net = d1();
  std::vector<std::uint8_t> z(6, 0);
  z[3] = 1;
  CHECK(compute_exposures(z, net, half()).at(2).h == 1);
}

TEST_CASE("D1 hand-checked assignment") {
  // cluster 1 treats {2,3}, cluster 2 treats {5}
  const std::vector<std::uint8_t> z{0, 1, 1, 0, 1, 0};
  const ExposureMatrix e = compute_exposures(z, d1(), half());
  CHECK(e.at(0) == Cell{0, 1, 0});
  CHECK(e.at(1) == Cell{1, 0, 0});
  CHECK(e.at(2) == Cell{1, 0, 0});
  CHECK(e.at(3) == Cell{0, 0, 1});
  CHECK(e.at(4) == Cell{1, 0, 0});
  CHECK(e.at(5) == Cell{0, 0, 0});
  const CellCounts cc = cell_counts(e);
  CHECK(cc.counts[Cell{0, 1, 0}.index()] == 1);
  CHECK(cc.counts[Cell{1, 0, 0}.index()] == 3);
  CHECK(cc.counts[Cell{0, 0, 1}.index()] == 1);
  CHECK(cc.counts[Cell{0, 0, 0}.index()] == 1);
  CHECK(cc.between_degenerate == 4);
  CHECK(cc.within_degenerate == 0);
}

TEST_CASE("all treated puts every unit in (1,1,.)") {
  const Network net = d1();
  const std::vector<std::uint8_t> z(6, 1);
  const CellCounts cc = cell_counts(compute_exposures(z, net, half()));
  CHECK(cc.counts[Cell{1, 1, 0}.index()] + cc.counts[Cell{1, 1, 1}.index()] == 6);
}

TEST_CASE("singleton clusters take the within convention") {
  const Network net = make_network({"1", "2", "3"}, {"A", "B", "C"}, {{}, {}, {}});
  const std::vector<std::uint8_t> z{1, 0, 1};
  for (std::uint8_t conv : {0, 1}) {
    ExposureConfig cfg;
    cfg.empty_within = conv;
    const ExposureMatrix e = compute_exposures(z, net, cfg);
    for (std::size_t i = 0; i < 3; ++i) {
      CHECK(e.at(i).s == conv);
      CHECK(e.within_degenerate[i] == 1);
    }
    CHECK(cell_counts(e).within_degenerate == 3);
  }
}

TEST_CASE("exposures match the literal definition on random networks") {
  std::mt19937_64 rng(3);
  std::bernoulli_distribution coin(0.5);
  const std::vector<Cutoff> cutoffs{{1, 3}, {1, 2}, {2, 3}};
  for (int trial = 0; trial < 50; ++trial) {
    const Network net = random_network(rng, 6);
    std::vector<std::uint8_t> z(net.size());
    std::vector<int> zi(net.size());
    for (std::size_t i = 0; i < z.size(); ++i) zi[i] = z[i] = coin(rng);
    for (const Cutoff& c : cutoffs)
      for (std::uint8_t es : {0, 1})
        for (std::uint8_t eh : {0, 1}) {
          ExposureConfig cfg;
          cfg.cutoff = c;
          cfg.empty_within = es;
          cfg.empty_between = eh;
          const ExposureMatrix e = compute_exposures(z, net, cfg);
          const auto ref = oracle::exposures(layout_of(net), zi, c.num, c.den, es, eh);
          for (std::size_t i = 0; i < net.size(); ++i) CHECK(e.cells[i] == ref[i]);
        }
  }
}

TEST_CASE("raising the cutoff never switches an indicator on") {
  std::mt19937_64 rng(8);
  std::bernoulli_distribution coin(0.5);
  const std::vector<Cutoff> ladder{{1, 10}, {1, 4}, {1, 3}, {1, 2}, {2, 3}, {3, 4}, {9, 10}};
  for (int trial = 0; trial < 40; ++trial) {
    const Network net = random_network(rng, 5);
    std::vector<std::uint8_t> z(net.size());
    for (auto& t : z) t = coin(rng);
    std::vector<std::uint8_t> prev;
    for (const Cutoff& c : ladder) {
      ExposureConfig cfg;
      cfg.cutoff = c;
      const ExposureMatrix e = compute_exposures(z, net, cfg);
      if (!prev.empty())
        for (std::size_t i = 0; i < net.size(); ++i) {
          const Cell now = e.at(i), before = Cell::from_index(prev[i]);
          CHECK(now.s <= before.s);
          CHECK(now.h <= before.h);
          CHECK(now.a == before.a);
        }
      prev = e.cells;
    }
  }
}

TEST_CASE("relabeling units permutes exposures") {
  std::mt19937_64 rng(13);
  std::bernoulli_distribution coin(0.5);
  for (int trial = 0; trial < 20; ++trial) {
    const Network net = random_network(rng, 5);
    const std::size_t n = net.size();
    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);  // new index k holds old unit perm[k]
    std::vector<std::size_t> inv(n);
    for (std::size_t k = 0; k < n; ++k) inv[perm[k]] = k;
    std::vector<std::string> ids(n), labels(n);
    std::vector<std::vector<std::size_t>> geo(n);
    std::vector<std::uint8_t> z(n), zp(n);
    for (std::size_t i = 0; i < n; ++i) z[i] = coin(rng);
    for (std::size_t k = 0; k < n; ++k) {
      const std::size_t old = perm[k];
      ids[k] = net.unit_ids[old];
      labels[k] = net.cluster_ids[net.cluster_of[old]];
      for (std::size_t j : net.geo[old]) geo[k].push_back(inv[j]);
      zp[k] = z[old];
    }
    const Network permuted = make_network(ids, labels, geo);
    const ExposureMatrix a = compute_exposures(z, net, half());
    const ExposureMatrix b = compute_exposures(zp, permuted, half());
    for (std::size_t k = 0; k < n; ++k) CHECK(b.cells[k] == a.cells[perm[k]]);
  }
}

TEST_CASE("reduced mode keeps the (A,S) coordinates") {
  std::mt19937_64 rng(21);
  std::bernoulli_distribution coin(0.5);
  for (int trial = 0; trial < 30; ++trial) {
    const Network net = random_network(rng, 6);
    std::vector<std::uint8_t> z(net.size());
    for (auto& t : z) t = coin(rng);
    ExposureConfig reduced;
    reduced.mode = ExposureMode::Reduced;
    const ExposureMatrix f = compute_exposures(z, net, half());
    const ExposureMatrix r = compute_exposures(z, net, reduced);
    CHECK(r.mode == ExposureMode::Reduced);
    for (std::size_t i = 0; i < net.size(); ++i) {
      CHECK(r.at(i).a == f.at(i).a);
      CHECK(r.at(i).s == f.at(i).s);
      CHECK(r.at(i).h == 0);
    }
    CHECK(cell_counts(r).reported_cells().size() == 4);
  }
  CHECK(cell_counts(compute_exposures(std::vector<std::uint8_t>(6, 0), d1(), half()))
            .reported_cells()
            .size() == 8);
}

TEST_CASE("hot-loop kernel agrees with compute_exposures") {
  std::mt19937_64 rng(31);
  std::bernoulli_distribution coin(0.4);
  const Network net = random_network(rng, 12);
  std::vector<std::uint8_t> z(net.size()), cells(net.size());
  std::vector<std::size_t> scratch;
  for (int r = 0; r < 20; ++r) {
    for (auto& t : z) t = coin(rng);
    compute_cells(z, net, half(), cells, scratch);
    CHECK(cells == compute_exposures(z, net, half()).cells);
  }
}

TEST_CASE("exposure config validation and digest") {
  ExposureConfig cfg;
  CHECK_NOTHROW(cfg.validate());
  cfg.cutoff = Cutoff{3, 2};
  CHECK_THROWS_AS(cfg.validate(), ValidationError);
  ExposureConfig a, b;
  b.cutoff = Cutoff{1, 3};
  CHECK(a.digest() != b.digest());
  CHECK(a.digest() == ExposureConfig{}.digest());
}
