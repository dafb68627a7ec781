#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace cmiknn {

enum class IndexKind { brute, kdtree };

/// Static nearest-neighbor index over a point set that remembers each point's
/// index in the originating dataset. Queries return the k nearest original
/// indices ordered by (Euclidean distance, original index) ascending; ties in
/// distance always break toward the smaller original index, so results do not
/// depend on insertion order. Immutable after build; concurrent queries are
/// safe.
class NeighborIndex {
 public:
  /// points: row-major, points.size() == original_indices.size() * dim.
  static NeighborIndex build(std::vector<double> points, int dim,
                             std::vector<std::uint32_t> original_indices,
                             IndexKind kind);

  /// k nearest original indices for the query point. k must be <= size().
  std::vector<std::uint32_t> query(std::span<const double> query_point,
                                   std::size_t k) const;

  std::size_t size() const { return original_.size(); }
  int dim() const { return dim_; }
  IndexKind kind() const { return kind_; }

  /// Tree depth (0 for a single leaf or a brute index); structural check only.
  int depth() const { return depth_; }

 private:
  NeighborIndex() = default;

  struct Node {
    int axis = -1;             // -1 marks a leaf
    double split = 0.0;
    std::uint32_t child[2] = {0, 0};
    std::uint32_t begin = 0, end = 0;  // leaf range into order_
  };

  static constexpr std::size_t kLeafSize = 16;

  std::uint32_t build_node(std::uint32_t begin, std::uint32_t end, int level);
  const double* point(std::uint32_t local) const {
    return points_.data() + static_cast<std::size_t>(local) * dim_;
  }

  IndexKind kind_ = IndexKind::brute;
  int dim_ = 0;
  int depth_ = 0;
  std::vector<double> points_;
  std::vector<std::uint32_t> original_;
  std::vector<std::uint32_t> order_;  // permutation of local ids (kdtree)
  std::vector<Node> nodes_;
  std::uint32_t root_ = 0;
};

}  // namespace cmiknn
