#include <algorithm>
#include <atomic>
#include <cmath>
#include <set>
#include <stdexcept>
#include <vector>

#include "cmiknn/rng.hpp"
#include "cmiknn/util.hpp"
#include "doctest.h"

using namespace cmiknn;

TEST_SUITE_BEGIN("rng");

TEST_CASE("identical seeds give identical streams") {
  Rng a(42), b(42);
  for (int i = 0; i < 100; ++i) CHECK(a.next_u64() == b.next_u64());
}

TEST_CASE("fork depends only on seed and tag, not on parent position") {
  Rng fresh(42);
  const std::uint64_t expected = fresh.fork(7).next_u64();

  Rng advanced(42);
  for (int i = 0; i < 10; ++i) advanced.next_u64();
  CHECK(advanced.fork(7).next_u64() == expected);

  // distinct tags give distinct streams
  CHECK(Rng(42).fork(8).next_u64() != expected);
}

TEST_CASE("uniform lies in [0,1) and has the right mean") {
  Rng rng(1);
  double sum = 0.0;
  const int n = 100000;
  for (int i = 0; i < n; ++i) {
    const double u = rng.uniform();
    REQUIRE(u >= 0.0);
    REQUIRE(u < 1.0);
    sum += u;
  }
  CHECK(sum / n == doctest::Approx(0.5).epsilon(0.01));
}

TEST_CASE("below is in range and covers small supports") {
  Rng rng(3);
  std::set<std::uint64_t> seen;
  for (int i = 0; i < 1000; ++i) {
    const std::uint64_t v = rng.below(7);
    REQUIRE(v < 7);
    seen.insert(v);
  }
  CHECK(seen.size() == 7);
}

TEST_CASE("gaussian moments") {
  Rng rng(5);
  const int n = 200000;
  double sum = 0.0, sum2 = 0.0;
  for (int i = 0; i < n; ++i) {
    const double g = rng.gaussian();
    sum += g;
    sum2 += g * g;
  }
  const double mean = sum / n;
  const double var = sum2 / n - mean * mean;
  CHECK(std::abs(mean) < 0.01);
  CHECK(var == doctest::Approx(1.0).epsilon(0.02));
}

TEST_CASE("sample_without_replacement draws distinct in-range indices") {
  Rng rng(9);
  const auto picks = sample_without_replacement(100, 30, rng);
  REQUIRE(picks.size() == 30);
  std::set<std::uint32_t> uniq(picks.begin(), picks.end());
  CHECK(uniq.size() == 30);
  for (auto p : picks) CHECK(p < 100);

  // exhaustive draw is a permutation
  Rng rng2(9);
  const auto all = sample_without_replacement(10, 10, rng2);
  std::set<std::uint32_t> full(all.begin(), all.end());
  CHECK(full.size() == 10);
}

TEST_CASE("shuffle_indices permutes in place") {
  std::vector<std::uint32_t> items = {0, 1, 2, 3, 4, 5, 6, 7};
  const auto original = items;
  Rng rng(11);
  shuffle_indices(items, rng);
  auto sorted = items;
  std::sort(sorted.begin(), sorted.end());
  CHECK(sorted == original);
}

TEST_SUITE_END();

TEST_SUITE_BEGIN("util");

TEST_CASE("sha256 known vectors") {
  CHECK(sha256_hex(std::string("abc")) ==
        "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
  CHECK(sha256_hex(std::string("")) ==
        "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
}

TEST_CASE("format_double round-trips exactly") {
  for (double v : {0.0, 1.0, -1.5, 3.141592653589793, 1e-300, 6.02214076e23,
                   0.1, -0.3333333333333333}) {
    CHECK(std::stod(format_double(v)) == v);
  }
}

TEST_CASE("parallel_for covers every index exactly once") {
  const std::size_t count = 1000;
  std::vector<std::atomic<int>> hits(count);
  parallel_for(count, 4, [&](std::size_t i) { hits[i].fetch_add(1); });
  for (const auto& h : hits) CHECK(h.load() == 1);
}

TEST_CASE("parallel_for propagates exceptions") {
  CHECK_THROWS_AS(parallel_for(8, 2,
                               [](std::size_t i) {
                                 if (i == 5) throw std::runtime_error("boom");
                               }),
                  std::runtime_error);
}

TEST_CASE("split_csv_line") {
  const auto cells = split_csv_line("a,b,,1.5");
  REQUIRE(cells.size() == 4);
  CHECK(cells[0] == "a");
  CHECK(cells[2] == "");
  CHECK(cells[3] == "1.5");
}

TEST_SUITE_END();
