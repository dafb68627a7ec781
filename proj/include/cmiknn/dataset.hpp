#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "cmiknn/rng.hpp"

namespace cmiknn {

enum class Role { X, Y, Z };

struct RoleDims {
  int x = 0;
  int y = 0;
  int z = 0;

  int total() const { return x + y + z; }
  int of(Role r) const { return r == Role::X ? x : (r == Role::Y ? y : z); }
  bool operator==(const RoleDims&) const = default;
};

/// n samples of real-vector triples (x, y, z), stored as three row-major
/// matrices. All x vectors share dimension dims.x; likewise y and z.
class Dataset {
 public:
  Dataset() = default;  // empty dataset: zero dims, zero samples
  Dataset(RoleDims dims, std::size_t n);

  std::size_t size() const { return n_; }
  RoleDims dims() const { return dims_; }

  std::span<double> x(std::size_t i) { return row<double>(xs_, dims_.x, i); }
  std::span<double> y(std::size_t i) { return row<double>(ys_, dims_.y, i); }
  std::span<double> z(std::size_t i) { return row<double>(zs_, dims_.z, i); }
  std::span<const double> x(std::size_t i) const {
    return row<const double>(xs_, dims_.x, i);
  }
  std::span<const double> y(std::size_t i) const {
    return row<const double>(ys_, dims_.y, i);
  }
  std::span<const double> z(std::size_t i) const {
    return row<const double>(zs_, dims_.z, i);
  }

  std::span<const double> role(Role r, std::size_t i) const {
    return r == Role::X ? x(i) : (r == Role::Y ? y(i) : z(i));
  }
  std::span<double> role(Role r, std::size_t i) {
    return r == Role::X ? x(i) : (r == Role::Y ? y(i) : z(i));
  }

  /// Seed and description of how the samples came to be, for report echoes.
  std::uint64_t seed = 0;
  std::string provenance;

 private:
  template <typename T, typename V>
  static std::span<T> row(V& store, int dim, std::size_t i) {
    return std::span<T>(store.data() + i * static_cast<std::size_t>(dim),
                        static_cast<std::size_t>(dim));
  }

  RoleDims dims_;
  std::size_t n_ = 0;
  std::vector<double> xs_, ys_, zs_;
};

/// Disjoint random partition into (train, test) with |train| =
/// floor(train_fraction * n). Both parts must be non-empty.
std::pair<Dataset, Dataset> split_dataset(const Dataset& dataset,
                                          double train_fraction, Rng& rng);

/// A contiguous coordinate range taken from one role of a source dataset.
struct RoleSlice {
  Role source;
  int begin = 0;
  int len = 0;
};

/// Builds a dataset whose roles are concatenations of coordinate slices of the
/// source. Used to re-target the estimator, e.g. I(X;Z|Y) or split-Y terms.
Dataset recompose(const Dataset& source, const std::vector<RoleSlice>& x_sel,
                  const std::vector<RoleSlice>& y_sel,
                  const std::vector<RoleSlice>& z_sel);

/// CSV schema: header x_0..x_{dx-1},y_0..y_{dy-1},z_0..z_{dz-1}, one row per
/// sample, doubles printed with 17 significant digits (exact round trip).
void write_dataset_csv(const Dataset& dataset, const std::string& path);
Dataset read_dataset_csv(const std::string& path);

}  // namespace cmiknn
