#include <algorithm>
#include <cmath>
#include <set>
#include <vector>

#include "cmiknn/gaussian_chain.hpp"
#include "cmiknn/resample.hpp"
#include "doctest.h"

using namespace cmiknn;

namespace {

Dataset line_dataset() {
  // d=1, z spread so nearest-neighbor structure is obvious:
  // z = (0, 1, 10, 11), x = (100, 101, 102, 103), y = (7, 8, 9, 10)
  Dataset ds(RoleDims{1, 1, 1}, 4);
  const double zs[] = {0.0, 1.0, 10.0, 11.0};
  for (std::size_t i = 0; i < 4; ++i) {
    ds.x(i)[0] = 100.0 + static_cast<double>(i);
    ds.y(i)[0] = 7.0 + static_cast<double>(i);
    ds.z(i)[0] = zs[i];
  }
  return ds;
}

Dataset random_chain(std::size_t n, int d, std::uint64_t seed) {
  GaussianChainConfig cfg;
  cfg.sigma_x = 2;
  cfg.sigma_y = 1;
  cfg.sigma_z = 3;
  cfg.dim = d;
  return sample_gaussian_chain(cfg, n, seed);
}

}  // namespace

TEST_SUITE_BEGIN("resample");

TEST_CASE("joint batch draws without replacement with label 1") {
  const Dataset ds = random_chain(40, 2, 5);
  Rng rng(1);
  const LabeledBatch batch = joint_batch(ds, 40, rng);
  CHECK(batch.label == 1);
  CHECK(batch.origin == BatchOrigin::joint);
  REQUIRE(batch.size() == 40);

  // b = n exhausts the dataset: every source sample appears exactly once
  std::multiset<double> src, got;
  for (std::size_t i = 0; i < 40; ++i) {
    src.insert(ds.x(i)[0]);
    got.insert(batch.samples.x(i)[0]);
  }
  CHECK(src == got);

  Rng rng2(2);
  CHECK(joint_batch(ds, 0, rng2).size() == 0);
  CHECK_THROWS(joint_batch(ds, 41, rng2));
}

TEST_CASE("forced isolation set on the line example") {
  // center = index 0 (z=0); complement z-values {1, 10, 11}; two nearest are
  // indices 1 and 2, so the batch borrows x_1 and x_2 against (y_0, z_0)
  const Dataset ds = line_dataset();
  const LabeledBatch batch = isolated_knn_batch_with_centers(ds, {0}, 2);
  CHECK(batch.label == 0);
  CHECK(batch.origin == BatchOrigin::isolated_knn);
  REQUIRE(batch.size() == 2);
  CHECK(batch.samples.x(0)[0] == 101.0);
  CHECK(batch.samples.x(1)[0] == 102.0);
  for (std::size_t s = 0; s < 2; ++s) {
    CHECK(batch.samples.y(s)[0] == 7.0);
    CHECK(batch.samples.z(s)[0] == 0.0);
  }
  REQUIRE(batch.isolation.has_value());
  CHECK(batch.isolation->centers == std::vector<std::uint32_t>{0});
  CHECK(batch.isolation->x_sources == std::vector<std::uint32_t>{1, 2});
}

TEST_CASE("m=1 k=1 emits one sample borrowed from outside the set") {
  const Dataset ds = line_dataset();
  Rng rng(3);
  const LabeledBatch batch = isolated_knn_batch(ds, 1, 1, rng);
  REQUIRE(batch.size() == 1);
  REQUIRE(batch.isolation.has_value());
  CHECK(batch.isolation->x_sources[0] != batch.isolation->centers[0]);
}

TEST_CASE("isolation property and neighbor certificate on random data") {
  const std::size_t n = 400;
  const Dataset ds = random_chain(n, 3, 17);
  Rng rng(23);
  const std::size_t m = 50, k = 4;
  const LabeledBatch batch = isolated_knn_batch(ds, m, k, rng);
  REQUIRE(batch.size() == m * k);
  REQUIRE(batch.isolation.has_value());
  const auto& iso = *batch.isolation;
  const std::set<std::uint32_t> centers(iso.centers.begin(),
                                        iso.centers.end());
  REQUIRE(centers.size() == m);

  auto z_dist2 = [&](std::uint32_t a, std::uint32_t bidx) {
    double s = 0.0;
    for (int c = 0; c < ds.dims().z; ++c) {
      const double diff = ds.z(a)[c] - ds.z(bidx)[c];
      s += diff * diff;
    }
    return s;
  };

  for (std::size_t s = 0; s < batch.size(); ++s) {
    const std::uint32_t center = iso.centers[s / k];
    const std::uint32_t donor = iso.x_sources[s];
    // x never comes from inside the isolation set
    CHECK(centers.count(donor) == 0);
    // emitted sample is (x_donor, y_center, z_center)
    CHECK(std::equal(batch.samples.x(s).begin(), batch.samples.x(s).end(),
                     ds.x(donor).begin()));
    CHECK(std::equal(batch.samples.y(s).begin(), batch.samples.y(s).end(),
                     ds.y(center).begin()));
    CHECK(std::equal(batch.samples.z(s).begin(), batch.samples.z(s).end(),
                     ds.z(center).begin()));
  }

  // neighbor certificate: donors are the k nearest, so no outsider beats the
  // farthest donor (spot-check a few centers by brute force)
  for (std::size_t ci : {std::size_t{0}, std::size_t{17}, std::size_t{49}}) {
    const std::uint32_t center = iso.centers[ci];
    double worst = 0.0;
    std::set<std::uint32_t> donors;
    for (std::size_t j = 0; j < k; ++j) {
      const std::uint32_t donor = iso.x_sources[ci * k + j];
      donors.insert(donor);
      worst = std::max(worst, z_dist2(center, donor));
    }
    for (std::uint32_t cand = 0; cand < n; ++cand)
      if (!centers.count(cand) && !donors.count(cand))
        CHECK(z_dist2(center, cand) >= worst);
  }
}

TEST_CASE("brute and kdtree isolation agree") {
  const Dataset ds = random_chain(300, 2, 31);
  std::vector<std::uint32_t> centers;
  for (std::uint32_t i = 0; i < 40; ++i) centers.push_back(i * 7);
  const LabeledBatch a = isolated_knn_batch_with_centers(ds, centers, 3,
                                                          IndexKind::brute);
  const LabeledBatch b = isolated_knn_batch_with_centers(ds, centers, 3,
                                                          IndexKind::kdtree);
  REQUIRE(a.size() == b.size());
  CHECK(a.isolation->x_sources == b.isolation->x_sources);
}

TEST_CASE("isolated batch rejects infeasible m and k") {
  const Dataset ds = line_dataset();  // n = 4
  Rng rng(1);
  CHECK_THROWS(isolated_knn_batch(ds, 2, 3, rng));  // k > n - m
  CHECK_THROWS(isolated_knn_batch(ds, 0, 1, rng));
  CHECK_THROWS(isolated_knn_batch(ds, 1, 0, rng));
  CHECK_THROWS(isolated_knn_batch_with_centers(ds, {0, 0}, 1));  // dup center
  CHECK_THROWS(isolated_knn_batch_with_centers(ds, {9}, 1));     // range
}

TEST_CASE("midiff xz batch pairs independent draws and drops y") {
  const Dataset ds = random_chain(50, 2, 41);
  Rng rng(2);
  const LabeledBatch batch = midiff_product_batch_xz(ds, 50, rng);
  CHECK(batch.label == 0);
  CHECK(batch.origin == BatchOrigin::midiff_xz);
  CHECK(batch.samples.dims().y == 0);
  REQUIRE(batch.size() == 50);

  // b = n: both marginals are permutations of the source columns
  std::multiset<double> src_x, got_x, src_z, got_z;
  for (std::size_t i = 0; i < 50; ++i) {
    src_x.insert(ds.x(i)[0]);
    got_x.insert(batch.samples.x(i)[0]);
    src_z.insert(ds.z(i)[0]);
    got_z.insert(batch.samples.z(i)[0]);
  }
  CHECK(src_x == got_x);
  CHECK(src_z == got_z);
}

TEST_CASE("midiff xyz batch keeps (y,z) co-indexed") {
  const Dataset ds = random_chain(60, 1, 43);
  Rng rng(4);
  const LabeledBatch batch = midiff_product_batch_xyz(ds, 30, rng);
  CHECK(batch.origin == BatchOrigin::midiff_xyz);
  REQUIRE(batch.size() == 30);
  // every emitted (y,z) matches some source row exactly
  for (std::size_t s = 0; s < 30; ++s) {
    bool found = false;
    for (std::size_t i = 0; i < 60 && !found; ++i)
      found = batch.samples.y(s)[0] == ds.y(i)[0] &&
              batch.samples.z(s)[0] == ds.z(i)[0];
    CHECK(found);
  }
}

TEST_CASE("schedule arithmetic") {
  // fixed k = 2 with a 40000-sample budget: m = 20000, b' = 40000 = b
  const BatchSchedule fixed =
      schedule_from_n(40000, 0.1, ScheduleMode::fixed_k, 2);
  CHECK(fixed.k == 2);
  CHECK(fixed.m == 20000);
  CHECK(fixed.b == 40000);
  CHECK(fixed.b_prime == 40000);
  CHECK(fixed.p1() == doctest::Approx(0.5));

  // theory mode: k = ceil(n^(1/2 + eps0)); n = 1e4, eps0 = 0.1 -> 252,
  // and m is lifted to k when the budget floor falls below it
  const BatchSchedule theory =
      schedule_from_n(10000, 0.1, ScheduleMode::theory);
  CHECK(theory.k == 252);
  CHECK(theory.m == 252);
  CHECK(theory.b_prime == 252 * 252);

  // infeasible: k larger than anything m can support
  CHECK_THROWS(schedule_from_n(10, 0.1, ScheduleMode::fixed_k, 8));
}

TEST_CASE("schedule respects explicit batch targets") {
  const BatchSchedule s =
      schedule_from_n(40000, 0.1, ScheduleMode::fixed_k, 4, 10000);
  CHECK(s.b == 10000);
  CHECK(s.m == 2500);
  CHECK(s.b_prime == 10000);
}

TEST_SUITE_END();
