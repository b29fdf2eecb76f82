#pragma once

// Evaluation suite: trajectory ATE with optional rigid alignment,
// reconstruction accuracy/completeness/Chamfer, mesh-vertex label-transfer
// mIoU, radius/box object F1, per-layer scene-graph scores, and the
// normalized graph-edit similarity.

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <tuple>
#include <vector>

#include <Eigen/SVD>

#include "sgslam/core/aabox.hpp"
#include "sgslam/core/image.hpp"
#include "sgslam/core/types.hpp"
#include "sgslam/eval/kdtree.hpp"
#include "sgslam/io/ply.hpp"
#include "sgslam/io/trajectory_csv.hpp"
#include "sgslam/map/scene_graph.hpp"

namespace sgslam {

// ---------------------------------------------------------------------------
// Trajectory error
// ---------------------------------------------------------------------------

enum class Alignment { kNone, kRigid };

/// Nearest-timestamp association; pairs of (estimate index, reference index).
inline std::vector<std::pair<size_t, size_t>> associate_trajectories(
    const Trajectory& est, const Trajectory& ref, double tolerance) {
  std::vector<std::pair<size_t, size_t>> pairs;
  size_t j = 0;
  for (size_t i = 0; i < est.size(); ++i) {
    while (j + 1 < ref.size() &&
           std::abs(ref[j + 1].timestamp - est[i].timestamp) <=
               std::abs(ref[j].timestamp - est[i].timestamp)) {
      ++j;
    }
    if (!ref.empty() &&
        std::abs(ref[j].timestamp - est[i].timestamp) <= tolerance) {
      pairs.emplace_back(i, j);
    }
  }
  return pairs;
}

/// Closed-form least-squares rigid transform (no scale) mapping src onto dst.
inline Pose umeyama_rigid(const std::vector<Vec3>& src,
                          const std::vector<Vec3>& dst) {
  if (src.size() != dst.size() || src.size() < 3) {
    throw Error(ErrorCode::kEmptyInput,
                "umeyama_rigid: need at least 3 paired points");
  }
  Vec3 mu_s = Vec3::Zero(), mu_d = Vec3::Zero();
  for (size_t i = 0; i < src.size(); ++i) {
    mu_s += src[i];
    mu_d += dst[i];
  }
  mu_s /= double(src.size());
  mu_d /= double(src.size());
  Mat3 h = Mat3::Zero();
  for (size_t i = 0; i < src.size(); ++i) {
    h += (dst[i] - mu_d) * (src[i] - mu_s).transpose();
  }
  Eigen::JacobiSVD<Mat3> svd(h, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Mat3 d = Mat3::Identity();
  if ((svd.matrixU() * svd.matrixV().transpose()).determinant() < 0) {
    d(2, 2) = -1.0;
  }
  Mat3 r = svd.matrixU() * d * svd.matrixV().transpose();
  return Pose(r, mu_d - r * mu_s);
}

/// Translational residual norms after association (and optional alignment),
/// in estimate order.
inline std::vector<double> ate_residuals(const Trajectory& est,
                                         const Trajectory& ref,
                                         Alignment align,
                                         double tolerance = 0.02) {
  auto pairs = associate_trajectories(est, ref, tolerance);
  if (pairs.empty()) {
    throw Error(ErrorCode::kEmptyInput, "ate: no associated pose pairs");
  }
  Pose t_align;
  if (align == Alignment::kRigid) {
    if (pairs.size() < 3) {
      throw Error(ErrorCode::kEmptyInput,
                  "ate: rigid alignment needs >= 3 associated pairs");
    }
    std::vector<Vec3> src, dst;
    for (auto [i, j] : pairs) {
      src.push_back(est[i].pose.translation);
      dst.push_back(ref[j].pose.translation);
    }
    t_align = umeyama_rigid(src, dst);
  }
  std::vector<double> out;
  out.reserve(pairs.size());
  for (auto [i, j] : pairs) {
    out.push_back(
        (t_align * est[i].pose.translation - ref[j].pose.translation).norm());
  }
  return out;
}

inline double ate_rmse(const Trajectory& est, const Trajectory& ref,
                       Alignment align, double tolerance = 0.02) {
  auto res = ate_residuals(est, ref, align, tolerance);
  double acc = 0.0;
  for (double r : res) acc += r * r;
  return std::sqrt(acc / double(res.size()));
}

// ---------------------------------------------------------------------------
// Reconstruction quality
// ---------------------------------------------------------------------------

struct ReconQuality {
  double accuracy = 0.0;      // mean nn distance pred -> gt
  double completeness = 0.0;  // mean nn distance gt -> pred
  double chamfer = 0.0;       // arithmetic mean of the two
};

inline double mean_nn_distance(const std::vector<Vec3>& from,
                               const std::vector<Vec3>& to) {
  if (from.empty() || to.empty()) {
    throw Error(ErrorCode::kEmptyInput, "recon_quality: empty point set");
  }
  KdTree3 tree(to);
  double acc = 0.0;
  for (const auto& p : from) {
    acc += std::sqrt(tree.nearest(p).second);
  }
  return acc / double(from.size());
}

inline ReconQuality recon_quality(const std::vector<Vec3>& pred,
                                  const std::vector<Vec3>& gt) {
  ReconQuality q;
  q.accuracy = mean_nn_distance(pred, gt);
  q.completeness = mean_nn_distance(gt, pred);
  q.chamfer = 0.5 * (q.accuracy + q.completeness);
  return q;
}

// ---------------------------------------------------------------------------
// Mesh-vertex label transfer mIoU
// ---------------------------------------------------------------------------

struct MeshIoU {
  std::vector<double> per_class;  // NaN for classes absent on both sides
  double mean = 0.0;
};

/// Each labeled gt point takes the label of its nearest predicted point;
/// unlabeled gt points are ignored.
inline MeshIoU mesh_label_miou(const LabeledCloud& pred, const LabeledCloud& gt,
                               int n_classes) {
  if (pred.size() == 0) {
    throw Error(ErrorCode::kEmptyInput, "mesh_label_miou: empty prediction");
  }
  KdTree3 tree(pred.points);
  std::vector<int64_t> tp(n_classes, 0), fp(n_classes, 0), fn(n_classes, 0);
  size_t labeled = 0;
  for (size_t i = 0; i < gt.size(); ++i) {
    if (gt.labels[i] == kInvalidLabel || int(gt.labels[i]) >= n_classes) continue;
    ++labeled;
    const uint16_t assigned = pred.labels[size_t(tree.nearest(gt.points[i]).first)];
    if (assigned == gt.labels[i]) {
      ++tp[gt.labels[i]];
    } else {
      ++fn[gt.labels[i]];
      if (int(assigned) < n_classes) ++fp[assigned];
    }
  }
  if (labeled == 0) {
    throw Error(ErrorCode::kEmptyInput, "mesh_label_miou: no labeled gt points");
  }
  MeshIoU out;
  out.per_class.assign(n_classes, std::nan(""));
  double sum = 0.0;
  int counted = 0;
  for (int c = 0; c < n_classes; ++c) {
    const int64_t denom = tp[c] + fp[c] + fn[c];
    if (denom == 0) continue;
    out.per_class[c] = double(tp[c]) / double(denom);
    sum += out.per_class[c];
    ++counted;
  }
  out.mean = counted == 0 ? 0.0 : sum / double(counted);
  return out;
}

// ---------------------------------------------------------------------------
// Object-level F1
// ---------------------------------------------------------------------------

struct F1Result {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  int tp = 0, fp = 0, fn = 0;
  std::vector<std::pair<int, int>> matches;  // (pred index, gt index)
};

inline F1Result f1_from_counts(int tp, int fp, int fn) {
  F1Result r;
  r.tp = tp;
  r.fp = fp;
  r.fn = fn;
  r.precision = tp + fp == 0 ? 0.0 : double(tp) / double(tp + fp);
  r.recall = tp + fn == 0 ? 0.0 : double(tp) / double(tp + fn);
  r.f1 = (r.precision + r.recall) == 0.0
             ? 0.0
             : 2.0 * r.precision * r.recall / (r.precision + r.recall);
  return r;
}

/// Greedy one-to-one same-class matching by ascending center distance;
/// a match within radius r is a true positive.
inline F1Result radius_f1(const std::vector<SceneGraphNode>& pred,
                          const std::vector<SceneGraphNode>& gt, double r) {
  if (r <= 0) {
    throw Error(ErrorCode::kDomainViolation, "radius_f1: radius must be > 0");
  }
  std::vector<std::tuple<double, int, int>> cands;
  for (size_t i = 0; i < pred.size(); ++i) {
    for (size_t j = 0; j < gt.size(); ++j) {
      if (pred[i].cls != gt[j].cls) continue;
      const double d = (pred[i].centroid - gt[j].centroid).norm();
      if (d <= r) cands.emplace_back(d, int(i), int(j));
    }
  }
  std::sort(cands.begin(), cands.end());
  std::vector<bool> used_p(pred.size(), false), used_g(gt.size(), false);
  F1Result out;
  for (auto& [d, i, j] : cands) {
    if (used_p[i] || used_g[j]) continue;
    used_p[i] = used_g[j] = true;
    out.matches.emplace_back(i, j);
  }
  const int tp = int(out.matches.size());
  F1Result counts = f1_from_counts(tp, int(pred.size()) - tp, int(gt.size()) - tp);
  counts.matches = std::move(out.matches);
  return counts;
}

/// Greedy one-to-one same-class matching by descending 3D box IoU; a true
/// positive requires IoU >= threshold.
inline F1Result box_f1(const std::vector<SceneGraphNode>& pred,
                       const std::vector<SceneGraphNode>& gt,
                       double iou_thresh) {
  std::vector<std::tuple<double, int, int>> cands;
  for (size_t i = 0; i < pred.size(); ++i) {
    for (size_t j = 0; j < gt.size(); ++j) {
      if (pred[i].cls != gt[j].cls) continue;
      const double iou = pred[i].box.iou(gt[j].box);
      if (iou >= iou_thresh) cands.emplace_back(-iou, int(i), int(j));
    }
  }
  std::sort(cands.begin(), cands.end());
  std::vector<bool> used_p(pred.size(), false), used_g(gt.size(), false);
  std::vector<std::pair<int, int>> matches;
  for (auto& [niou, i, j] : cands) {
    if (used_p[i] || used_g[j]) continue;
    used_p[i] = used_g[j] = true;
    matches.emplace_back(i, j);
  }
  const int tp = int(matches.size());
  F1Result counts = f1_from_counts(tp, int(pred.size()) - tp, int(gt.size()) - tp);
  counts.matches = std::move(matches);
  return counts;
}

// ---------------------------------------------------------------------------
// Scene-graph matching, edit distance, and layer scores
// ---------------------------------------------------------------------------

struct GraphMatchConfig {
  double object_radius = 0.5;  // same-class object center matching (m)
  double place_radius = 0.5;   // place node matching / coverage (m)
  double epsilon = 1e-9;       // edit-similarity denominator guard
};

struct GraphNodeMatching {
  std::map<int, int> pred_to_ref;  // node id -> node id, class-consistent
  int substitutions = 0;           // spatially matched, class mismatch
  int unmatched_pred = 0;
  int unmatched_ref = 0;
};

inline GraphNodeMatching match_graph_nodes(const SceneGraph& pred,
                                           const SceneGraph& ref,
                                           const GraphMatchConfig& cfg) {
  GraphNodeMatching m;

  auto greedy = [&](const std::vector<const SceneGraphNode*>& p,
                    const std::vector<const SceneGraphNode*>& g,
                    auto score_fn, bool same_class,
                    std::vector<const SceneGraphNode*>* leftover_p = nullptr,
                    std::vector<const SceneGraphNode*>* leftover_g = nullptr,
                    bool count_substitution = false) {
    std::vector<std::tuple<double, int, int>> cands;
    for (size_t i = 0; i < p.size(); ++i) {
      for (size_t j = 0; j < g.size(); ++j) {
        if (same_class && p[i]->cls != g[j]->cls) continue;
        double s;
        if (!score_fn(*p[i], *g[j], &s)) continue;
        cands.emplace_back(s, int(i), int(j));
      }
    }
    std::sort(cands.begin(), cands.end());
    std::vector<bool> up(p.size(), false), ug(g.size(), false);
    for (auto& [s, i, j] : cands) {
      if (up[i] || ug[j]) continue;
      up[i] = ug[j] = true;
      if (count_substitution) {
        ++m.substitutions;
      } else {
        m.pred_to_ref[p[i]->id] = g[j]->id;
      }
    }
    for (size_t i = 0; i < p.size(); ++i) {
      if (!up[i]) {
        if (leftover_p) leftover_p->push_back(p[i]);
        else ++m.unmatched_pred;
      }
    }
    for (size_t j = 0; j < g.size(); ++j) {
      if (!ug[j]) {
        if (leftover_g) leftover_g->push_back(g[j]);
        else ++m.unmatched_ref;
      }
    }
  };

  // Building layer: a single root each; pair them directly.
  auto pb = pred.layer_nodes(GraphLayer::kBuilding);
  auto gb = ref.layer_nodes(GraphLayer::kBuilding);
  size_t paired = std::min(pb.size(), gb.size());
  for (size_t i = 0; i < paired; ++i) m.pred_to_ref[pb[i]->id] = gb[i]->id;
  m.unmatched_pred += int(pb.size() - paired);
  m.unmatched_ref += int(gb.size() - paired);

  // Rooms by footprint overlap (largest overlap first).
  greedy(pred.layer_nodes(GraphLayer::kRoom), ref.layer_nodes(GraphLayer::kRoom),
         [](const SceneGraphNode& a, const SceneGraphNode& b, double* s) {
           const double area = a.box.overlap_area_xy(b.box);
           if (area <= 0.0) return false;
           *s = -area;
           return true;
         },
         false);

  // Places by center distance, class-free.
  greedy(pred.layer_nodes(GraphLayer::kPlace), ref.layer_nodes(GraphLayer::kPlace),
         [&](const SceneGraphNode& a, const SceneGraphNode& b, double* s) {
           const double d = (a.centroid - b.centroid).norm();
           if (d > cfg.place_radius) return false;
           *s = d;
           return true;
         },
         false);

  // Objects: same-class matching first, then a spatial-only pass whose
  // pairs count as class substitutions.
  std::vector<const SceneGraphNode*> rest_p, rest_g;
  greedy(pred.layer_nodes(GraphLayer::kObject),
         ref.layer_nodes(GraphLayer::kObject),
         [&](const SceneGraphNode& a, const SceneGraphNode& b, double* s) {
           const double d = (a.centroid - b.centroid).norm();
           if (d > cfg.object_radius) return false;
           *s = d;
           return true;
         },
         true, &rest_p, &rest_g);
  greedy(rest_p, rest_g,
         [&](const SceneGraphNode& a, const SceneGraphNode& b, double* s) {
           const double d = (a.centroid - b.centroid).norm();
           if (d > cfg.object_radius) return false;
           *s = d;
           return true;
         },
         false, nullptr, nullptr, true);

  return m;
}

struct GraphEditResult {
  int d_v = 0;
  int d_e = 0;
  double s_sg = 0.0;
  GraphNodeMatching matching;
};

namespace metrics_detail {

// Canonical key for an edge with node ids already mapped; adjacency and
// traversability are undirected.
inline std::tuple<int, int, int> edge_key(int a, int b, Relation rel) {
  if (rel == Relation::kAdjacent || rel == Relation::kTraversable) {
    if (a > b) std::swap(a, b);
  }
  return {int(rel), a, b};
}

}  // namespace metrics_detail

/// Normalized graph-edit similarity with equally weighted node and edge
/// edits: insertions, deletions, and class/relation substitutions.
inline GraphEditResult graph_similarity(const SceneGraph& pred,
                                        const SceneGraph& ref,
                                        const GraphMatchConfig& cfg = {}) {
  GraphEditResult out;
  out.matching = match_graph_nodes(pred, ref, cfg);
  out.d_v = out.matching.substitutions + out.matching.unmatched_pred +
            out.matching.unmatched_ref;

  // Translate pred edges into ref ids; edges with an unmatched endpoint are
  // insertions by definition.
  using metrics_detail::edge_key;
  std::multiset<std::tuple<int, int, int>> ref_exact;
  std::multiset<std::pair<int, int>> ref_pairs;
  for (const auto& e : ref.edges) {
    ref_exact.insert(edge_key(e.src, e.dst, e.relation));
    auto [rel, a, b] = edge_key(e.src, e.dst, e.relation);
    ref_pairs.insert({a, b});
  }
  int pred_unmatched = 0;
  std::vector<std::pair<int, int>> pred_pair_leftovers;
  for (const auto& e : pred.edges) {
    auto is = out.matching.pred_to_ref.find(e.src);
    auto id = out.matching.pred_to_ref.find(e.dst);
    if (is == out.matching.pred_to_ref.end() ||
        id == out.matching.pred_to_ref.end()) {
      ++pred_unmatched;
      continue;
    }
    auto key = edge_key(is->second, id->second, e.relation);
    auto it = ref_exact.find(key);
    if (it != ref_exact.end()) {
      ref_exact.erase(it);
      auto [rel, a, b] = key;
      ref_pairs.erase(ref_pairs.find({a, b}));
    } else {
      pred_pair_leftovers.push_back({std::get<1>(key), std::get<2>(key)});
    }
  }
  // Relation substitutions: leftover pred edges that connect a node pair
  // still carrying an unmatched ref edge.
  int substitutions = 0;
  for (const auto& pr : pred_pair_leftovers) {
    auto it = ref_pairs.find(pr);
    if (it != ref_pairs.end()) {
      ref_pairs.erase(it);
      ++substitutions;
    } else {
      ++pred_unmatched;
    }
  }
  const int ref_unmatched = int(ref_pairs.size());
  out.d_e = pred_unmatched + ref_unmatched + substitutions;

  const double denom = double(pred.nodes.size() + ref.nodes.size() +
                              pred.edges.size() + ref.edges.size()) +
                       cfg.epsilon;
  out.s_sg = 1.0 - double(out.d_v + out.d_e) / denom;
  return out;
}

struct LayerScores {
  F1Result node_f1;
  double object_room_accuracy = 0.0;
  F1Result room_f1;
  F1Result place_coverage_f1;
  F1Result relation_f1;
};

inline std::vector<SceneGraphNode> copy_layer(const SceneGraph& g, GraphLayer l) {
  std::vector<SceneGraphNode> out;
  for (const auto& n : g.nodes) {
    if (n.layer == l) out.push_back(n);
  }
  return out;
}

inline LayerScores layer_f1s(const SceneGraph& pred, const SceneGraph& ref,
                             const GraphMatchConfig& cfg = {}) {
  LayerScores out;
  auto pred_obj = copy_layer(pred, GraphLayer::kObject);
  auto ref_obj = copy_layer(ref, GraphLayer::kObject);
  out.node_f1 = radius_f1(pred_obj, ref_obj, cfg.object_radius);

  GraphNodeMatching matching = match_graph_nodes(pred, ref, cfg);

  // Object-room accuracy over the same-class matched object pairs.
  int correct = 0, total = 0;
  for (auto [pi, gi] : out.node_f1.matches) {
    ++total;
    const int pred_room = pred.contains_parent(pred_obj[pi].id);
    const int ref_room = ref.contains_parent(ref_obj[gi].id);
    auto it = pred_room >= 0 ? matching.pred_to_ref.find(pred_room)
                             : matching.pred_to_ref.end();
    if (it != matching.pred_to_ref.end() && it->second == ref_room) ++correct;
  }
  out.object_room_accuracy =
      total == 0 ? (ref_obj.empty() ? 1.0 : 0.0) : double(correct) / total;

  // Room F1 via footprint-overlap matching.
  {
    int tp = 0;
    auto pr = copy_layer(pred, GraphLayer::kRoom);
    auto rr = copy_layer(ref, GraphLayer::kRoom);
    for (const auto& n : pr) {
      auto it = matching.pred_to_ref.find(n.id);
      if (it != matching.pred_to_ref.end()) ++tp;
    }
    out.room_f1 = f1_from_counts(tp, int(pr.size()) - tp, int(rr.size()) - tp);
  }

  // Place coverage: any-neighbor coverage in both directions.
  {
    auto pp = copy_layer(pred, GraphLayer::kPlace);
    auto rp = copy_layer(ref, GraphLayer::kPlace);
    int covered_ref = 0, covered_pred = 0;
    for (const auto& g : rp) {
      for (const auto& p : pp) {
        if ((p.centroid - g.centroid).norm() <= cfg.place_radius) {
          ++covered_ref;
          break;
        }
      }
    }
    for (const auto& p : pp) {
      for (const auto& g : rp) {
        if ((p.centroid - g.centroid).norm() <= cfg.place_radius) {
          ++covered_pred;
          break;
        }
      }
    }
    const double prec = pp.empty() ? 0.0 : double(covered_pred) / pp.size();
    const double rec = rp.empty() ? 0.0 : double(covered_ref) / rp.size();
    out.place_coverage_f1.precision = prec;
    out.place_coverage_f1.recall = rec;
    out.place_coverage_f1.f1 =
        prec + rec == 0 ? 0.0 : 2 * prec * rec / (prec + rec);
  }

  // Structural relation F1 over contains/adjacent/supports edges between
  // matched nodes.
  {
    using metrics_detail::edge_key;
    auto structural = [](Relation r) {
      return r == Relation::kContains || r == Relation::kAdjacent ||
             r == Relation::kSupports;
    };
    std::multiset<std::tuple<int, int, int>> ref_edges;
    int ref_total = 0;
    for (const auto& e : ref.edges) {
      if (!structural(e.relation)) continue;
      ++ref_total;
      ref_edges.insert(edge_key(e.src, e.dst, e.relation));
    }
    int pred_total = 0, tp = 0;
    for (const auto& e : pred.edges) {
      if (!structural(e.relation)) continue;
      ++pred_total;
      auto is = matching.pred_to_ref.find(e.src);
      auto id = matching.pred_to_ref.find(e.dst);
      if (is == matching.pred_to_ref.end() || id == matching.pred_to_ref.end()) {
        continue;
      }
      auto it = ref_edges.find(edge_key(is->second, id->second, e.relation));
      if (it != ref_edges.end()) {
        ref_edges.erase(it);
        ++tp;
      }
    }
    out.relation_f1 = f1_from_counts(tp, pred_total - tp, ref_total - tp);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Point-to-point ICP utility (pre-alignment helper, not a metric)
// ---------------------------------------------------------------------------

inline Pose icp_point_to_point(const std::vector<Vec3>& src,
                               const std::vector<Vec3>& dst, int iterations = 20) {
  if (src.size() < 3 || dst.size() < 3) {
    throw Error(ErrorCode::kEmptyInput, "icp: need at least 3 points per set");
  }
  KdTree3 tree(dst);
  Pose t;
  std::vector<Vec3> moved = src;
  for (int it = 0; it < iterations; ++it) {
    std::vector<Vec3> matched(moved.size());
    for (size_t i = 0; i < moved.size(); ++i) {
      matched[i] = dst[size_t(tree.nearest(moved[i]).first)];
    }
    Pose step = umeyama_rigid(moved, matched);
    t = step * t;
    for (auto& p : moved) p = step * p;
    if (log_se3(step).vector().norm() < 1e-10) break;
  }
  return t;
}

}  // namespace sgslam
