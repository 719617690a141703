#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "helpers.hpp"
#include "oracle.hpp"
#include "satdesign/estimators.hpp"

using namespace satdesign;
using helpers::observe;
using helpers::table_from;

namespace {

constexpr Cell k000{0, 0, 0};

CellArray at000(double p) {
  CellArray r{};
  r[0] = p;
  r[1] = 1 - p;
  return r;
}

std::vector<CellArray> random_po(std::mt19937_64& rng, std::size_t n, double shift = 0) {
  std::normal_distribution<double> z(0, 1);
  std::vector<CellArray> y(n);
  for (auto& row : y)
    for (double& v : row) v = shift + z(rng);
  return y;
}

}  // namespace

TEST_CASE("estimator names") {
  CHECK(parse_estimator_kind("ht") == EstimatorKind::HT);
  CHECK(parse_estimator_kind("hajek") == EstimatorKind::Hajek);
  CHECK(parse_estimator_kind("ca") == EstimatorKind::CovariateAdjusted);
  CHECK(to_string(EstimatorKind::Hajek) == "haj");
  CHECK_THROWS_AS(parse_estimator_kind("ols"), ValidationError);
}

TEST_CASE("HT arithmetic on two units") {
  const InclusionTable t = table_from({at000(0.5), at000(0.5)});
  const auto obs = observe({0, 0}, std::vector<double>{2, 4});
  const CellMeanEstimate e = ht_cell_mean(obs, t, k000);
  CHECK(e.value == doctest::Approx(6.0));
  CHECK(e.effective_count == 2);
  CHECK(e.hajek_denominator == doctest::Approx(2.0));
}

TEST_CASE("constant pi equal to the cell share gives the plain mean") {
  // Four units, two in the cell, pi = 1/2.
  const InclusionTable t = table_from(std::vector<CellArray>(4, at000(0.5)));
  const auto obs = observe({0, 1, 0, 1}, std::vector<double>{2, 9, 4, 9});
  CHECK(ht_cell_mean(obs, t, k000).value == doctest::Approx(3.0));
}

TEST_CASE("Hajek with constant pi is the observed mean") {
  const InclusionTable t = table_from({at000(0.3), at000(0.3), at000(0.3)});
  CHECK(hajek_cell_mean(observe({0, 0, 1}, std::vector<double>{2, 4, 100}), t, k000).value ==
        doctest::Approx(3.0));
  CHECK(hajek_cell_mean(observe({1, 0, 1}, std::vector<double>{2, 7, 100}), t, k000).value ==
        doctest::Approx(7.0));
}

TEST_CASE("zero probabilities and empty cells") {
  CellArray zero{};
  zero[1] = 1.0;
  const InclusionTable t = table_from({zero, at000(0.5)});
  CHECK_THROWS_AS(ht_cell_mean(observe({0, 0}, std::vector<double>{1, 1}), t, k000),
                  PositivityError);
  const auto none = observe({1, 1}, std::vector<double>{1, 1});
  CHECK_THROWS_AS(hajek_cell_mean(none, t, k000), EmptyCellError);
  const CellMeanEstimate ht = ht_cell_mean(none, t, k000);
  CHECK_FALSE(ht.estimable);
  CHECK(ht.value == 0.0);
}

TEST_CASE("HT expectation over the D1 support") {
  helpers::D1Fixture d;
  std::mt19937_64 rng(4);
  for (int trial = 0; trial < 5; ++trial) {
    const auto po = random_po(rng, 6, trial);
    for (int c = 0; c < 8; ++c) {
      const double e = oracle::expect(d.ref, [&](std::size_t r) {
        return ht_cell_mean(observe(d.ref.cells[r], po), d.table, Cell::from_index(c)).value;
      });
      CHECK(std::abs(e - helpers::supported_mean(po, d.table, c)) < 1e-12);
      if (helpers::fully_supported(d.table, c))
        CHECK(std::abs(e - helpers::plain_mean(po, c)) < 1e-12);
      const double den = oracle::expect(d.ref, [&](std::size_t r) {
        return ht_cell_mean(observe(d.ref.cells[r], po), d.table, Cell::from_index(c))
            .hajek_denominator;
      });
      double supported = 0;
      for (std::size_t i = 0; i < 6; ++i) supported += d.table.first(i, c) > 0;
      CHECK(std::abs(den - supported / 6.0) < 1e-12);
    }
  }
}

TEST_CASE("HT expectation on random enumerable designs") {
  std::mt19937_64 rng(17);
  std::uniform_int_distribution<int> size(1, 3);
  for (int trial = 0; trial < 10; ++trial) {
    oracle::Layout L;
    std::vector<std::string> ids, labels;
    for (std::size_t c = 0; c < 3; ++c)
      for (int s = size(rng); s > 0; --s) {
        ids.push_back(std::to_string(ids.size() + 1));
        labels.push_back("c" + std::to_string(c));
        L.cluster_of.push_back(c);
      }
    L.clusters = 3;
    L.geo.assign(ids.size(), {});
    for (std::size_t i = 0; i < ids.size(); ++i)
      for (std::size_t j = 0; j < ids.size(); ++j)
        if (L.cluster_of[j] == (L.cluster_of[i] + 1) % 3 && (i + j + trial) % 2 == 0)
          L.geo[i].push_back(j);
    const Network net = make_network(ids, labels, L.geo);
    SaturationPolicy p;
    p.levels = {{"b", 0.4, {WithinRule::Kind::Bernoulli, 0.6}},
                {"f", 0.6, {WithinRule::Kind::FixedFraction, 0.5}}};
    const std::vector<oracle::Level> lv{{0.4, true, 0.6}, {0.6, false, 0.5}};
    const InclusionTable t = exact_inclusion(p, net, nullptr, {});
    const oracle::Support s = oracle::support(L, lv, 1, 2);
    const auto po = random_po(rng, ids.size(), 1.5);
    for (int c = 0; c < 8; ++c) {
      const double e = oracle::expect(s, [&](std::size_t r) {
        return ht_cell_mean(observe(s.cells[r], po), t, Cell::from_index(c)).value;
      });
      CHECK(std::abs(e - helpers::supported_mean(po, t, c)) < 1e-10);
    }
  }
}

TEST_CASE("Hajek is more stable than HT on D1") {
  helpers::D1Fixture d;
  std::mt19937_64 rng(99);
  const auto po = oracle::linear_table({2.0, 2.5, 1.8, 2.2, 2.9, 1.6}, 1.0, 0.5, 0.25);
  std::uniform_int_distribution<std::size_t> pick(0, d.ref.prob.size() - 1);
  for (int c = 0; c < 8; ++c) {
    if (!helpers::fully_supported(d.table, c)) continue;
    const double truth = helpers::plain_mean(po, c);
    double err_ht = 0, err_haj = 0;
    int used = 0;
    for (int r = 0; r < 1000; ++r) {
      const auto obs = observe(d.ref.cells[pick(rng)], po);
      const CellMeanEstimate ht = ht_cell_mean(obs, d.table, Cell::from_index(c));
      if (!ht.estimable) continue;
      ++used;
      err_ht += std::abs(ht.value - truth);
      err_haj += std::abs(hajek_cell_mean(obs, d.table, Cell::from_index(c)).value - truth);
    }
    REQUIRE(used > 0);
    CHECK(err_haj < err_ht);
  }
}

TEST_CASE("location and scale behaviour") {
  helpers::D1Fixture d;
  std::mt19937_64 rng(5);
  const auto po = random_po(rng, 6);
  const double kappa = 3.25, lambda = -1.7;
  for (std::size_t r = 0; r < d.ref.prob.size(); r += 5) {
    const auto base = observe(d.ref.cells[r], po);
    auto shifted = base, scaled = base;
    for (double& y : shifted.outcomes) y += kappa;
    for (double& y : scaled.outcomes) y *= lambda;
    for (int c = 0; c < 8; ++c) {
      const Cell cell = Cell::from_index(c);
      const auto ht = ht_cell_mean(base, d.table, cell);
      if (!ht.estimable) continue;
      const double haj = hajek_cell_mean(base, d.table, cell).value;
      CHECK(hajek_cell_mean(shifted, d.table, cell).value == doctest::Approx(haj + kappa));
      CHECK(hajek_cell_mean(scaled, d.table, cell).value == doctest::Approx(lambda * haj));
      CHECK(ht_cell_mean(scaled, d.table, cell).value == doctest::Approx(lambda * ht.value));
      // HT shifts by kappa * (n^-1 sum I / pi), which is not kappa in general.
      CHECK(ht_cell_mean(shifted, d.table, cell).value ==
            doctest::Approx(ht.value + kappa * ht.hajek_denominator));
    }
  }
}

TEST_CASE("gamma weights enter HT and Hajek linearly") {
  const InclusionTable t = table_from({at000(0.5), at000(0.25), at000(0.5)});
  WeightScheme g;
  g.gamma = {CellArray{0.5}, CellArray{2.0}, CellArray{1.0}};
  g.zero_conditioning.assign(3, {});
  const auto obs = observe({0, 0, 1}, std::vector<double>{2, 4, 7});
  CHECK(ht_cell_mean(obs, t, k000, &g).value ==
        doctest::Approx((0.5 * 2 / 0.5 + 2.0 * 4 / 0.25) / 3));
  const double ratio = (0.5 * 2 / 0.5 + 2.0 * 4 / 0.25) / (0.5 / 0.5 + 2.0 / 0.25);
  const CellMeanEstimate haj = hajek_cell_mean(obs, t, k000, &g);
  CHECK(haj.gamma_mean == doctest::Approx(3.5 / 3));
  CHECK(haj.value == doctest::Approx(3.5 / 3 * ratio));
}

TEST_CASE("covariate adjustment with an uninformative covariate") {
  const InclusionTable t = table_from(std::vector<CellArray>(6, at000(0.4)));
  auto obs = observe({0, 0, 0, 0, 1, 1}, std::vector<double>{1, 3, 1, 3, 50, 60});
  obs.covariates.resize(6, 1);
  obs.covariates << 0, 0, 1, 1, 7, -3;
  const CellMeanEstimate ca = covariate_adjusted_cell_mean(obs, t, k000);
  CHECK(std::abs(ca.beta(1)) < 1e-12);
  CHECK(ca.value == doctest::Approx(hajek_cell_mean(obs, t, k000).value));
}

TEST_CASE("covariate adjustment with no covariates") {
  const InclusionTable t = table_from({at000(0.5), at000(0.2), at000(0.4), at000(0.9)});
  const auto obs = observe({0, 0, 1, 0}, std::vector<double>{2, 5, 9, 1});
  const CellMeanEstimate ca = covariate_adjusted_cell_mean(obs, t, k000);
  const double b = (2 + 5 + 1) / 3.0;
  const double handmade = ((2 - b) / 0.5 + (5 - b) / 0.2 + (1 - b) / 0.9) / 4 + b;
  CHECK(ca.beta.size() == 1);
  CHECK(ca.beta(0) == doctest::Approx(b));
  CHECK(ca.value == doctest::Approx(handmade));
}

TEST_CASE("covariate adjustment is exact for noiseless linear outcomes") {
  helpers::D1Fixture d;
  const std::vector<double> x{0.3, -0.2, 0.8, -0.5, 0.1, -0.4};
  std::vector<CellArray> po(6);
  for (std::size_t i = 0; i < 6; ++i)
    for (int c = 0; c < 8; ++c) po[i][c] = 0.5 * c + (1.0 + 0.1 * c) * x[i];
  for (std::size_t r = 0; r < d.ref.prob.size(); ++r) {
    auto obs = observe(d.ref.cells[r], po);
    obs.covariates.resize(6, 1);
    for (int i = 0; i < 6; ++i) obs.covariates(i, 0) = x[i];
    for (int c = 0; c < 8; ++c) {
      int count = 0;
      for (int cell : d.ref.cells[r]) count += cell == c;
      if (count < 2) continue;
      const auto ca = covariate_adjusted_cell_mean(obs, d.table, Cell::from_index(c));
      CHECK(ca.value == doctest::Approx(helpers::plain_mean(po, c)).epsilon(1e-10));
    }
  }
}

TEST_CASE("covariate adjustment falls back to HT on tiny cells") {
  const InclusionTable t = table_from({at000(0.5), at000(0.5)});
  auto obs = observe({0, 1}, std::vector<double>{3, 4});
  obs.covariates.resize(2, 1);
  obs.covariates << 1, 2;
  const auto ca = covariate_adjusted_cell_mean(obs, t, k000);
  CHECK(ca.value == doctest::Approx(3.0));
  CHECK(std::find(ca.flags.begin(), ca.flags.end(), "ca-fallback-ht") != ca.flags.end());
}

TEST_CASE("reduced mode matches full mode without geography") {
  const Dataset data = oracle::d1_dataset();
  const Network full = build_network(data, {4.0, 3});
  const Network none = build_network(data, {4.0, 0});
  ExposureConfig reduced;
  reduced.mode = ExposureMode::Reduced;
  const auto tr = exact_inclusion(oracle::d1_policy(), full, nullptr, reduced);
  const auto tf = exact_inclusion(oracle::d1_policy(), none, nullptr, {});
  for (std::size_t i = 0; i < 6; ++i) CHECK(tr.first_row(i) == tf.first_row(i));
  std::mt19937_64 rng(1);
  const auto po = random_po(rng, 6);
  for (std::uint64_t draw = 0; draw < 20; ++draw) {
    const auto z = sample_assignment(oracle::d1_policy(), full, 3, draw);
    const auto er = compute_exposures(z.treatment, full, reduced);
    const auto ef = compute_exposures(z.treatment, none, {});
    CHECK(er.cells == ef.cells);
    std::vector<int> cells(er.cells.begin(), er.cells.end());
    const auto obs = observe(cells, po);
    for (int c : {0, 2, 4, 6})
      CHECK(ht_cell_mean(obs, tr, Cell::from_index(c)).value ==
            ht_cell_mean(obs, tf, Cell::from_index(c)).value);
  }
}

TEST_CASE("observation restriction") {
  auto obs = observe({0, 1, 2}, std::vector<double>{1, 2, 3});
  obs.covariates.resize(3, 1);
  obs.covariates << 10, 20, 30;
  const std::vector<std::size_t> keep{2, 0};
  const Observations r = obs.restrict_to(keep);
  CHECK(r.cells == std::vector<std::uint8_t>{2, 0});
  CHECK(r.outcomes == std::vector<double>{3, 1});
  CHECK(r.covariates(0, 0) == 30);
}
