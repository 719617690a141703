#include <doctest.h>

#include <atomic>
#include <cmath>
#include <set>
#include <vector>

#include "satdesign/core.hpp"

using namespace satdesign;

TEST_CASE("cell packing round trips") {
  for (std::size_t idx = 0; idx < kNumCells; ++idx) {
    const Cell c = Cell::from_index(idx);
    CHECK(c.index() == idx);
    CHECK(c.a * 4 + c.s * 2 + c.h == static_cast<int>(idx));
  }
  CHECK(cell_label(Cell{1, 0, 1}) == "(1,0,1)");
}

TEST_CASE("digest is FNV-1a 64") {
  CHECK(digest_of("") == "cbf29ce484222325");
  CHECK(digest_of("a") == "af63dc4c8601ec8c");
  CHECK(digest_of("abc") != digest_of("acb"));
}

TEST_CASE("random streams are keyed and reproducible") {
  RandomStream a(42, 1, 2), b(42, 1, 2), c(42, 2, 1), d(43, 1, 2);
  std::vector<std::uint64_t> xa, xb;
  for (int k = 0; k < 8; ++k) {
    xa.push_back(a.next_u64());
    xb.push_back(b.next_u64());
  }
  CHECK(xa == xb);
  CHECK(c.next_u64() != xa[0]);
  CHECK(d.next_u64() != xa[0]);
}

TEST_CASE("uniform, below and normal have the right moments") {
  RandomStream r(7, 0, 0);
  const int n = 200000;
  double su = 0, sn = 0, sn2 = 0;
  std::vector<int> counts(6, 0);
  for (int k = 0; k < n; ++k) {
    const double u = r.uniform();
    REQUIRE(u >= 0.0);
    REQUIRE(u < 1.0);
    su += u;
    ++counts[r.below(6)];
    const double z = r.normal();
    sn += z;
    sn2 += z * z;
  }
  CHECK(su / n == doctest::Approx(0.5).epsilon(0.01));
  CHECK(std::abs(sn / n) < 0.01);
  CHECK(sn2 / n == doctest::Approx(1.0).epsilon(0.02));
  // 4-sigma binomial band per face.
  const double p = 1.0 / 6.0, sd = std::sqrt(n * p * (1 - p));
  for (int c : counts) CHECK(std::abs(c - n * p) < 4 * sd);
}

TEST_CASE("derived seeds differ by purpose") {
  std::set<std::uint64_t> seen;
  for (std::uint64_t purpose = 0; purpose < 64; ++purpose)
    seen.insert(derive_seed(99, purpose));
  CHECK(seen.size() == 64);
  CHECK(derive_seed(99, 3) == derive_seed(99, 3));
}

TEST_CASE("format_double round trips") {
  for (double v : {0.0, 1.0, -2.5, 1.0 / 3.0, 1e-300, 6.02214076e23}) {
    CHECK(std::stod(format_double(v)) == v);
  }
  CHECK(format_double(0.5) == "0.5");
}

TEST_CASE("parallel_chunks covers every index exactly once") {
  for (unsigned workers : {1u, 3u, 8u}) {
    std::vector<std::atomic<int>> hits(1001);
    parallel_chunks(hits.size(), workers, [&](unsigned, std::size_t b, std::size_t e) {
      for (std::size_t i = b; i < e; ++i) ++hits[i];
    });
    for (auto& h : hits) CHECK(h.load() == 1);
  }
  CHECK(resolve_threads(0) >= 1);
  CHECK(resolve_threads(5) == 5);
}

TEST_CASE("error classes carry exit codes") {
  CHECK(SchemaError("x").exit_code() == 2);
  CHECK(ValidationError("x").exit_code() == 2);
  CHECK(EnumerationCapError("x").exit_code() == 2);
  CHECK(PositivityError("x").exit_code() == 3);
  CHECK(EmptyCellError("x").exit_code() == 3);
  CHECK(DigestMismatchError("x").exit_code() == 4);
}
