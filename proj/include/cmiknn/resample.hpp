#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "cmiknn/dataset.hpp"
#include "cmiknn/knn.hpp"
#include "cmiknn/rng.hpp"

namespace cmiknn {

enum class BatchOrigin { joint, isolated_knn, midiff_xz, midiff_xyz };

/// How an isolated-resampling batch was assembled: the isolation set and, per
/// emitted sample, the index its x-component was borrowed from. Kept so tests
/// can assert the isolation property (x never comes from inside the set).
struct IsolationRecord {
  std::size_t m = 0;
  std::size_t k = 0;
  std::vector<std::uint32_t> centers;    // the isolation set, in draw order
  std::vector<std::uint32_t> x_sources;  // x-donor dataset index per sample
};

/// Samples plus the classification label they carry during training:
/// q=1 for draws from the observed joint distribution, q=0 for synthesized
/// product-distribution draws. MI-difference pair batches drop one role by
/// giving it dimension zero, so every batch flattens cleanly to classifier
/// inputs.
struct LabeledBatch {
  Dataset samples;
  int label = 0;
  BatchOrigin origin = BatchOrigin::joint;
  std::optional<IsolationRecord> isolation;

  std::size_t size() const { return samples.size(); }
};

/// b triples picked uniformly without replacement, label 1.
LabeledBatch joint_batch(const Dataset& dataset, std::size_t b, Rng& rng);

/// Core product-batch synthesis: draws an isolation set of m indices, then for
/// each member i finds the k nearest z-neighbors among the indices outside the
/// set and emits (x_j, y_i, z_i) for each such neighbor j. The borrowed x is
/// approximately a draw from p(x | z_i) while (y_i, z_i) keeps the observed
/// joint of (Y, Z), so the batch mimics p(x|z) p(y,z). Size m*k, label 0.
/// Requires m >= 1, k >= 1, k <= n - m.
LabeledBatch isolated_knn_batch(const Dataset& dataset, std::size_t m,
                                std::size_t k, Rng& rng,
                                IndexKind index_kind = IndexKind::kdtree);

/// Same synthesis with the isolation set given explicitly (deterministic;
/// used by tests and exposed for reproducibility audits).
LabeledBatch isolated_knn_batch_with_centers(
    const Dataset& dataset, const std::vector<std::uint32_t>& centers,
    std::size_t k, IndexKind index_kind = IndexKind::kdtree);

/// Product batch for the MI-difference baseline term I(X;Z): pairs (x_i, z_j)
/// with the two index sets drawn independently without replacement. The y role
/// has dimension 0. Label 0.
LabeledBatch midiff_product_batch_xz(const Dataset& dataset, std::size_t b,
                                     Rng& rng);

/// Product batch for the MI-difference term I(X;Y,Z): triples (x_i, y_j, z_j)
/// with x drawn independently of the co-indexed (y, z) pair. Label 0.
LabeledBatch midiff_product_batch_xyz(const Dataset& dataset, std::size_t b,
                                      Rng& rng);

enum class ScheduleMode { theory, fixed_k };

/// Batch sizes for one trial on n available samples. Always satisfies
/// k <= m <= n - k and b_prime = m * k.
struct BatchSchedule {
  std::size_t n = 0;
  std::size_t k = 0;
  std::size_t m = 0;
  std::size_t b = 0;        // joint batch size
  std::size_t b_prime = 0;  // product batch size, m * k
  double epsilon_0 = 0.0;
  ScheduleMode mode = ScheduleMode::fixed_k;

  double p1() const {
    return static_cast<double>(b) / static_cast<double>(b + b_prime);
  }
};

/// theory mode: k = ceil(n^(1/2 + epsilon_0)), m = max(k, floor(b_target/k)).
/// fixed_k mode: k given, m = floor(b_target/k) so the product batch roughly
/// matches the joint batch (the classifier prior stays near 1/2).
/// b_target defaults to n when passed as 0. b is min(b_target, n).
/// Throws if the resulting sizes cannot satisfy k <= m <= n - k.
BatchSchedule schedule_from_n(std::size_t n, double epsilon_0,
                              ScheduleMode mode, std::size_t fixed_k = 0,
                              std::size_t b_target = 0);

}  // namespace cmiknn
