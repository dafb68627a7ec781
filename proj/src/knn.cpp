#include "cmiknn/knn.hpp"

#include <algorithm>
#include <limits>
#include <queue>
#include <stdexcept>

namespace cmiknn {
namespace {

// Single shared distance routine so brute and kdtree searches compare
// bit-identical values.
double sq_dist(const double* a, const double* b, int dim) {
  double s = 0.0;
  for (int d = 0; d < dim; ++d) {
    const double diff = a[d] - b[d];
    s += diff * diff;
  }
  return s;
}

struct Cand {
  double d2;
  std::uint32_t orig;
  // Max-heap ordering: the lexicographically largest (d2, orig) sits on top.
  bool operator<(const Cand& o) const {
    if (d2 != o.d2) return d2 < o.d2;
    return orig < o.orig;
  }
};

}  // namespace

NeighborIndex NeighborIndex::build(std::vector<double> points, int dim,
                                   std::vector<std::uint32_t> original_indices,
                                   IndexKind kind) {
  if (dim <= 0) throw std::invalid_argument("NeighborIndex: dim must be positive");
  if (original_indices.empty())
    throw std::invalid_argument("NeighborIndex: point set is empty");
  if (points.size() != original_indices.size() * static_cast<std::size_t>(dim))
    throw std::invalid_argument(
        "NeighborIndex: points buffer does not match count * dim");

  NeighborIndex idx;
  idx.kind_ = kind;
  idx.dim_ = dim;
  idx.points_ = std::move(points);
  idx.original_ = std::move(original_indices);
  if (kind == IndexKind::kdtree) {
    const auto n = static_cast<std::uint32_t>(idx.original_.size());
    idx.order_.resize(n);
    for (std::uint32_t i = 0; i < n; ++i) idx.order_[i] = i;
    idx.nodes_.reserve(2 * (n / kLeafSize + 1));
    idx.root_ = idx.build_node(0, n, 0);
  }
  return idx;
}

std::uint32_t NeighborIndex::build_node(std::uint32_t begin, std::uint32_t end,
                                        int level) {
  depth_ = std::max(depth_, level);
  const std::uint32_t id = static_cast<std::uint32_t>(nodes_.size());
  nodes_.emplace_back();
  if (end - begin <= kLeafSize) {
    nodes_[id].begin = begin;
    nodes_[id].end = end;
    return id;
  }

  // Split on the coordinate with the widest spread over this range.
  std::vector<double> lo(dim_, std::numeric_limits<double>::infinity());
  std::vector<double> hi(dim_, -std::numeric_limits<double>::infinity());
  for (std::uint32_t i = begin; i < end; ++i) {
    const double* p = point(order_[i]);
    for (int d = 0; d < dim_; ++d) {
      lo[d] = std::min(lo[d], p[d]);
      hi[d] = std::max(hi[d], p[d]);
    }
  }
  int axis = 0;
  double spread = hi[0] - lo[0];
  for (int d = 1; d < dim_; ++d) {
    if (hi[d] - lo[d] > spread) {
      spread = hi[d] - lo[d];
      axis = d;
    }
  }

  const std::uint32_t mid = begin + (end - begin) / 2;
  std::nth_element(order_.begin() + begin, order_.begin() + mid,
                   order_.begin() + end,
                   [&](std::uint32_t a, std::uint32_t b) {
                     return point(a)[axis] < point(b)[axis];
                   });
  const double split = point(order_[mid])[axis];

  const std::uint32_t left = build_node(begin, mid, level + 1);
  const std::uint32_t right = build_node(mid, end, level + 1);
  nodes_[id].axis = axis;
  nodes_[id].split = split;
  nodes_[id].child[0] = left;
  nodes_[id].child[1] = right;
  return id;
}

std::vector<std::uint32_t> NeighborIndex::query(
    std::span<const double> query_point, std::size_t k) const {
  if (static_cast<int>(query_point.size()) != dim_)
    throw std::invalid_argument("NeighborIndex::query: wrong dimension");
  if (k == 0) return {};
  if (k > size())
    throw std::invalid_argument(
        "NeighborIndex::query: k exceeds number of indexed points");

  const double* q = query_point.data();
  std::priority_queue<Cand> best;
  auto offer = [&](std::uint32_t local) {
    Cand c{sq_dist(q, point(local), dim_), original_[local]};
    if (best.size() < k) {
      best.push(c);
    } else if (c < best.top()) {
      best.pop();
      best.push(c);
    }
  };

  if (kind_ == IndexKind::brute) {
    const auto n = static_cast<std::uint32_t>(size());
    for (std::uint32_t i = 0; i < n; ++i) offer(i);
  } else {
    // Iterative depth-first descent, nearer child first. A far subtree is
    // skipped only when its separating plane is strictly farther than the
    // current k-th candidate: on exact ties it is still searched, because an
    // equally distant point with a smaller original index must win.
    std::vector<std::uint32_t> stack;
    stack.push_back(root_);
    while (!stack.empty()) {
      const Node& node = nodes_[stack.back()];
      stack.pop_back();
      if (node.axis < 0) {
        for (std::uint32_t i = node.begin; i < node.end; ++i) offer(order_[i]);
        continue;
      }
      const double gap = q[node.axis] - node.split;
      const int near = gap < 0.0 ? 0 : 1;
      const bool visit_far = best.size() < k || gap * gap <= best.top().d2;
      if (visit_far) stack.push_back(node.child[1 - near]);
      stack.push_back(node.child[near]);
    }
  }

  std::vector<Cand> out;
  out.reserve(best.size());
  while (!best.empty()) {
    out.push_back(best.top());
    best.pop();
  }
  std::vector<std::uint32_t> result(out.size());
  for (std::size_t i = 0; i < out.size(); ++i)
    result[i] = out[out.size() - 1 - i].orig;
  return result;
}

}  // namespace cmiknn
