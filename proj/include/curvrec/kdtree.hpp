#pragma once

#include <algorithm>
#include <limits>
#include <span>
#include <stdexcept>
#include <vector>

#include "curvrec/geometry.hpp"

namespace curvrec {

enum class Metric { l1, l2 };

inline double point_distance(const Vec3& a, const Vec3& b, Metric m) {
  return m == Metric::l2 ? (a - b).norm() : (a - b).cwiseAbs().sum();
}

/// Static kd-tree over 3D points with exact nearest-neighbor queries. The
/// per-axis split bound is a valid lower bound for both L1 and L2, so both
/// metrics share the same traversal.
class KdTree {
 public:
  KdTree() = default;

  explicit KdTree(std::span<const Vec3> points) {
    if (points.empty()) throw std::invalid_argument("KdTree needs at least one point");
    pts_.assign(points.begin(), points.end());
    idx_.resize(pts_.size());
    for (std::size_t i = 0; i < idx_.size(); ++i) idx_[i] = static_cast<int>(i);
    root_ = build(0, static_cast<int>(pts_.size()));
    // reorder points to match leaf ranges
    std::vector<Vec3> tmp(pts_.size());
    for (std::size_t i = 0; i < idx_.size(); ++i) tmp[i] = pts_[idx_[i]];
    pts_.swap(tmp);
  }

  std::size_t size() const { return pts_.size(); }

  struct Hit {
    int index = -1;
    double distance = std::numeric_limits<double>::infinity();
  };

  /// Exact nearest neighbor; `exclude` skips one original index.
  Hit nearest(const Vec3& q, Metric metric = Metric::l2, int exclude = -1) const {
    Hit best;
    search(root_, q, metric, exclude, 1, &best, nullptr);
    return best;
  }

  /// Distance to the k-th nearest point (1-based), optionally excluding one
  /// original index. Euclidean metric.
  double kth_distance(const Vec3& q, int k, int exclude = -1) const {
    if (k < 1) throw std::invalid_argument("k must be at least 1");
    std::vector<double> heap;
    heap.reserve(k);
    Hit unused;
    search(root_, q, Metric::l2, exclude, k, &unused, &heap);
    if (static_cast<int>(heap.size()) < k)
      throw std::invalid_argument("k exceeds the number of candidate points");
    return heap.front();
  }

 private:
  struct Node {
    double split = 0.0;
    int axis = -1;  // -1 marks a leaf
    int left = -1, right = -1;
    int begin = 0, end = 0;
  };

  static constexpr int kLeafSize = 16;

  int build(int begin, int end) {
    Node node;
    node.begin = begin;
    node.end = end;
    if (end - begin <= kLeafSize) {
      nodes_.push_back(node);
      return static_cast<int>(nodes_.size()) - 1;
    }
    Vec3 lo = pts_[idx_[begin]], hi = lo;
    for (int i = begin + 1; i < end; ++i) {
      lo = lo.cwiseMin(pts_[idx_[i]]);
      hi = hi.cwiseMax(pts_[idx_[i]]);
    }
    int axis = 0;
    (hi - lo).maxCoeff(&axis);
    const int mid = begin + (end - begin) / 2;
    std::nth_element(idx_.begin() + begin, idx_.begin() + mid, idx_.begin() + end,
                     [&](int a, int b) { return pts_[a][axis] < pts_[b][axis]; });
    node.axis = axis;
    node.split = pts_[idx_[mid]][axis];
    const int self = static_cast<int>(nodes_.size());
    nodes_.push_back(node);
    const int l = build(begin, mid);
    const int r = build(mid, end);
    nodes_[self].left = l;
    nodes_[self].right = r;
    return self;
  }

  // Shared traversal: if heap != nullptr maintains the k smallest distances
  // as a max-heap, otherwise tracks the single best hit.
  void search(int node_id, const Vec3& q, Metric metric, int exclude, int k, Hit* best,
              std::vector<double>* heap) const {
    const Node& node = nodes_[node_id];
    if (node.axis < 0) {
      for (int i = node.begin; i < node.end; ++i) {
        if (idx_[i] == exclude) continue;
        const double d = point_distance(q, pts_[i], metric);
        if (heap) {
          if (static_cast<int>(heap->size()) < k) {
            heap->push_back(d);
            std::push_heap(heap->begin(), heap->end());
          } else if (d < heap->front()) {
            std::pop_heap(heap->begin(), heap->end());
            heap->back() = d;
            std::push_heap(heap->begin(), heap->end());
          }
        } else if (d < best->distance) {
          best->distance = d;
          best->index = idx_[i];
        }
      }
      return;
    }
    const double gap = q[node.axis] - node.split;
    const int near = gap < 0.0 ? node.left : node.right;
    const int far = gap < 0.0 ? node.right : node.left;
    search(near, q, metric, exclude, k, best, heap);
    const double bound =
        heap ? (static_cast<int>(heap->size()) < k ? std::numeric_limits<double>::infinity()
                                                   : heap->front())
             : best->distance;
    if (std::abs(gap) < bound) search(far, q, metric, exclude, k, best, heap);
  }

  std::vector<Node> nodes_;
  std::vector<Vec3> pts_;  // reordered to leaf layout
  std::vector<int> idx_;   // leaf slot -> original index
  int root_ = -1;
};

}  // namespace curvrec
