#pragma once

// Exact 3D nearest-neighbor tree. Ties on squared distance resolve to the
// lowest point index so results are interchangeable with an index-ordered
// brute-force scan.

#include <algorithm>
#include <numeric>
#include <vector>

#include "sgslam/core/types.hpp"

namespace sgslam {

class KdTree3 {
 public:
  explicit KdTree3(std::vector<Vec3> points) : pts_(std::move(points)) {
    if (pts_.empty()) {
      throw Error(ErrorCode::kEmptyInput, "KdTree3: empty point set");
    }
    std::vector<int> idx(pts_.size());
    std::iota(idx.begin(), idx.end(), 0);
    nodes_.reserve(pts_.size());
    root_ = build(idx, 0, int(idx.size()), 0);
  }

  /// Index of the nearest point and its squared distance.
  std::pair<int, double> nearest(const Vec3& q) const {
    Best best;
    search(root_, q, best);
    return {best.index, best.dist2};
  }

  const std::vector<Vec3>& points() const { return pts_; }

 private:
  struct Node {
    int point = -1;
    int axis = 0;
    int left = -1;
    int right = -1;
  };
  struct Best {
    int index = -1;
    double dist2 = std::numeric_limits<double>::infinity();
  };

  int build(std::vector<int>& idx, int lo, int hi, int depth) {
    if (lo >= hi) return -1;
    const int axis = depth % 3;
    const int mid = (lo + hi) / 2;
    std::nth_element(idx.begin() + lo, idx.begin() + mid, idx.begin() + hi,
                     [&](int a, int b) {
                       if (pts_[a][axis] != pts_[b][axis])
                         return pts_[a][axis] < pts_[b][axis];
                       return a < b;
                     });
    Node n;
    n.point = idx[mid];
    n.axis = axis;
    const int self = int(nodes_.size());
    nodes_.push_back(n);
    nodes_[self].left = build(idx, lo, mid, depth + 1);
    nodes_[self].right = build(idx, mid + 1, hi, depth + 1);
    return self;
  }

  void search(int node, const Vec3& q, Best& best) const {
    if (node < 0) return;
    const Node& n = nodes_[node];
    const double d2 = (pts_[n.point] - q).squaredNorm();
    if (d2 < best.dist2 || (d2 == best.dist2 && n.point < best.index)) {
      best.dist2 = d2;
      best.index = n.point;
    }
    const double delta = q[n.axis] - pts_[n.point][n.axis];
    const int near = delta <= 0 ? n.left : n.right;
    const int far = delta <= 0 ? n.right : n.left;
    search(near, q, best);
    // Visit the far side on exact plane-distance ties so index tie-breaking
    // sees every minimal-distance candidate.
    if (delta * delta <= best.dist2) search(far, q, best);
  }

  std::vector<Vec3> pts_;
  std::vector<Node> nodes_;
  int root_ = -1;
};

}  // namespace sgslam
