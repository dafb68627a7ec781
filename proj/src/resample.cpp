#include "cmiknn/resample.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace cmiknn {
namespace {

void copy_role(std::span<const double> from, std::span<double> to) {
  std::copy(from.begin(), from.end(), to.begin());
}

}  // namespace

LabeledBatch joint_batch(const Dataset& dataset, std::size_t b, Rng& rng) {
  const std::size_t n = dataset.size();
  if (b > n) throw std::invalid_argument("joint_batch: b exceeds dataset size");

  auto picks = sample_without_replacement(static_cast<std::uint32_t>(n),
                                          static_cast<std::uint32_t>(b), rng);
  LabeledBatch batch{Dataset(dataset.dims(), b), 1, BatchOrigin::joint, {}};
  for (std::size_t s = 0; s < b; ++s) {
    const std::size_t i = picks[s];
    copy_role(dataset.x(i), batch.samples.x(s));
    copy_role(dataset.y(i), batch.samples.y(s));
    copy_role(dataset.z(i), batch.samples.z(s));
  }
  return batch;
}

LabeledBatch isolated_knn_batch_with_centers(
    const Dataset& dataset, const std::vector<std::uint32_t>& centers,
    std::size_t k, IndexKind index_kind) {
  const std::size_t n = dataset.size();
  const std::size_t m = centers.size();
  if (m == 0) throw std::invalid_argument("isolated_knn_batch: m must be >= 1");
  if (k == 0) throw std::invalid_argument("isolated_knn_batch: k must be >= 1");
  if (m >= n || k > n - m)
    throw std::invalid_argument(
        "isolated_knn_batch: k exceeds n - m (not enough neighbor donors)");

  std::vector<char> in_set(n, 0);
  for (std::uint32_t c : centers) {
    if (c >= n)
      throw std::invalid_argument("isolated_knn_batch: center out of range");
    if (in_set[c])
      throw std::invalid_argument("isolated_knn_batch: duplicate center");
    in_set[c] = 1;
  }

  // Neighbor index over the z-values of everything outside the isolation set.
  const int dz = dataset.dims().z;
  std::vector<double> donor_z;
  donor_z.reserve((n - m) * static_cast<std::size_t>(dz));
  std::vector<std::uint32_t> donor_ids;
  donor_ids.reserve(n - m);
  for (std::uint32_t j = 0; j < n; ++j) {
    if (in_set[j]) continue;
    const auto zj = dataset.z(j);
    donor_z.insert(donor_z.end(), zj.begin(), zj.end());
    donor_ids.push_back(j);
  }
  const auto index = NeighborIndex::build(std::move(donor_z), dz,
                                          std::move(donor_ids), index_kind);

  LabeledBatch batch{Dataset(dataset.dims(), m * k), 0,
                     BatchOrigin::isolated_knn, {}};
  IsolationRecord record{m, k, centers, {}};
  record.x_sources.reserve(m * k);
  std::size_t s = 0;
  for (std::uint32_t i : centers) {
    const auto neighbors = index.query(dataset.z(i), k);
    for (std::uint32_t j : neighbors) {
      copy_role(dataset.x(j), batch.samples.x(s));
      copy_role(dataset.y(i), batch.samples.y(s));
      copy_role(dataset.z(i), batch.samples.z(s));
      record.x_sources.push_back(j);
      ++s;
    }
  }
  batch.isolation = std::move(record);
  return batch;
}

LabeledBatch isolated_knn_batch(const Dataset& dataset, std::size_t m,
                                std::size_t k, Rng& rng,
                                IndexKind index_kind) {
  const std::size_t n = dataset.size();
  if (m == 0) throw std::invalid_argument("isolated_knn_batch: m must be >= 1");
  if (m >= n || k > n - m)
    throw std::invalid_argument(
        "isolated_knn_batch: k exceeds n - m (not enough neighbor donors)");
  const auto centers = sample_without_replacement(
      static_cast<std::uint32_t>(n), static_cast<std::uint32_t>(m), rng);
  return isolated_knn_batch_with_centers(dataset, centers, k, index_kind);
}

LabeledBatch midiff_product_batch_xz(const Dataset& dataset, std::size_t b,
                                     Rng& rng) {
  const std::size_t n = dataset.size();
  if (b > n)
    throw std::invalid_argument("midiff_product_batch_xz: b exceeds dataset");
  const auto xi = sample_without_replacement(static_cast<std::uint32_t>(n),
                                             static_cast<std::uint32_t>(b), rng);
  const auto zi = sample_without_replacement(static_cast<std::uint32_t>(n),
                                             static_cast<std::uint32_t>(b), rng);
  RoleDims dims = dataset.dims();
  dims.y = 0;  // pair batch: no y role
  LabeledBatch batch{Dataset(dims, b), 0, BatchOrigin::midiff_xz, {}};
  for (std::size_t s = 0; s < b; ++s) {
    copy_role(dataset.x(xi[s]), batch.samples.x(s));
    copy_role(dataset.z(zi[s]), batch.samples.z(s));
  }
  return batch;
}

LabeledBatch midiff_product_batch_xyz(const Dataset& dataset, std::size_t b,
                                      Rng& rng) {
  const std::size_t n = dataset.size();
  if (b > n)
    throw std::invalid_argument("midiff_product_batch_xyz: b exceeds dataset");
  const auto xi = sample_without_replacement(static_cast<std::uint32_t>(n),
                                             static_cast<std::uint32_t>(b), rng);
  const auto yzi = sample_without_replacement(
      static_cast<std::uint32_t>(n), static_cast<std::uint32_t>(b), rng);
  LabeledBatch batch{Dataset(dataset.dims(), b), 0, BatchOrigin::midiff_xyz, {}};
  for (std::size_t s = 0; s < b; ++s) {
    copy_role(dataset.x(xi[s]), batch.samples.x(s));
    copy_role(dataset.y(yzi[s]), batch.samples.y(s));
    copy_role(dataset.z(yzi[s]), batch.samples.z(s));
  }
  return batch;
}

BatchSchedule schedule_from_n(std::size_t n, double epsilon_0,
                              ScheduleMode mode, std::size_t fixed_k,
                              std::size_t b_target) {
  if (n < 2) throw std::invalid_argument("schedule_from_n: n too small");
  if (b_target == 0) b_target = n;

  BatchSchedule s;
  s.n = n;
  s.epsilon_0 = epsilon_0;
  s.mode = mode;
  s.b = std::min(b_target, n);

  if (mode == ScheduleMode::theory) {
    if (epsilon_0 <= 0.0)
      throw std::invalid_argument("schedule_from_n: epsilon_0 must be > 0");
    const double kf =
        std::ceil(std::pow(static_cast<double>(n), 0.5 + epsilon_0));
    s.k = static_cast<std::size_t>(kf);
    s.m = std::max(s.k, b_target / s.k);
  } else {
    if (fixed_k == 0)
      throw std::invalid_argument("schedule_from_n: fixed k must be >= 1");
    s.k = fixed_k;
    s.m = b_target / s.k;
  }

  if (s.k < 1 || s.m < s.k || s.m + s.k > n)
    throw std::invalid_argument(
        "schedule_from_n: infeasible ordering, need k <= m <= n - k");
  s.b_prime = s.m * s.k;
  return s;
}

}  // namespace cmiknn
