#pragma once

// Multi-task training losses with analytic gradients: scale-invariant log
// depth loss, cross-entropy, cosine distance, binary cross-entropy, the
// depth-normal / semantic-edge consistency penalties, and uncertainty-based
// task weighting. Gradients are exposed so they can be checked against
// central finite differences.

#include <cmath>

#include "sgslam/core/geometry.hpp"
#include "sgslam/core/image.hpp"
#include "sgslam/core/types.hpp"

namespace sgslam {

/// Scale-invariant logarithmic depth loss over valid (positive) depths:
/// mean(g^2) - lambda * mean(g)^2 with g = ln(pred) - ln(ref).
/// At lambda = 1 the loss is exactly invariant to a common positive scale.
inline double loss_silog(const VecX& pred, const VecX& ref, double lambda,
                         VecX* grad_pred = nullptr) {
  const Eigen::Index n = pred.size();
  if (n == 0) {
    throw Error(ErrorCode::kEmptyInput, "loss_silog: empty valid mask");
  }
  if (ref.size() != n) {
    throw Error(ErrorCode::kDomainViolation, "loss_silog: size mismatch");
  }
  if (pred.minCoeff() <= 0.0 || ref.minCoeff() <= 0.0) {
    throw Error(ErrorCode::kDomainViolation, "loss_silog: depths must be > 0");
  }
  VecX g = pred.array().log() - ref.array().log();
  const double mean_sq = g.squaredNorm() / double(n);
  const double mean = g.mean();
  if (grad_pred) {
    grad_pred->resize(n);
    const double c = 2.0 / double(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      (*grad_pred)[i] = c * (g[i] - lambda * mean) / pred[i];
    }
  }
  return mean_sq - lambda * mean * mean;
}

/// Cross-entropy between predicted distributions (rows) and target
/// distributions (rows); zero exactly when the target is one-hot and matched.
inline double loss_ce(const MatX& pred, const MatX& target,
                      MatX* grad_pred = nullptr) {
  if (pred.rows() == 0) {
    throw Error(ErrorCode::kEmptyInput, "loss_ce: no instances");
  }
  if (pred.rows() != target.rows() || pred.cols() != target.cols()) {
    throw Error(ErrorCode::kDomainViolation, "loss_ce: shape mismatch");
  }
  for (Eigen::Index r = 0; r < pred.rows(); ++r) {
    if (pred.row(r).minCoeff() <= 0.0 ||
        std::abs(pred.row(r).sum() - 1.0) > 1e-6) {
      throw Error(ErrorCode::kNonSimplex, "loss_ce: pred row is not a simplex");
    }
    if (target.row(r).minCoeff() < 0.0 ||
        std::abs(target.row(r).sum() - 1.0) > 1e-6) {
      throw Error(ErrorCode::kNonSimplex, "loss_ce: target row is not a simplex");
    }
  }
  const double inv_n = 1.0 / double(pred.rows());
  double total = 0.0;
  if (grad_pred) grad_pred->setZero(pred.rows(), pred.cols());
  for (Eigen::Index r = 0; r < pred.rows(); ++r) {
    for (Eigen::Index c = 0; c < pred.cols(); ++c) {
      const double t = target(r, c);
      if (t > 0.0) {
        total -= t * std::log(pred(r, c));
        if (grad_pred) (*grad_pred)(r, c) = -t / pred(r, c) * inv_n;
      }
    }
  }
  return total * inv_n;
}

/// Mean cosine distance 1 - cos(pred, target) over rows; inputs need not be
/// pre-normalized, the loss normalizes internally.
inline double loss_cosine(const MatX& pred, const MatX& target,
                          MatX* grad_pred = nullptr) {
  if (pred.rows() == 0) {
    throw Error(ErrorCode::kEmptyInput, "loss_cosine: no instances");
  }
  if (pred.rows() != target.rows() || pred.cols() != target.cols()) {
    throw Error(ErrorCode::kDomainViolation, "loss_cosine: shape mismatch");
  }
  const double inv_n = 1.0 / double(pred.rows());
  double total = 0.0;
  if (grad_pred) grad_pred->setZero(pred.rows(), pred.cols());
  for (Eigen::Index r = 0; r < pred.rows(); ++r) {
    const VecX p = pred.row(r).transpose();
    const VecX t = target.row(r).transpose();
    const double np = p.norm(), nt = t.norm();
    if (np <= 0.0 || nt <= 0.0) {
      throw Error(ErrorCode::kDomainViolation, "loss_cosine: zero vector");
    }
    const double cosv = p.dot(t) / (np * nt);
    total += 1.0 - cosv;
    if (grad_pred) {
      VecX g = -(t / (np * nt) - (p.dot(t) / (np * np * np * nt)) * p);
      grad_pred->row(r) = (g * inv_n).transpose();
    }
  }
  return total * inv_n;
}

/// Mean binary cross-entropy; predictions strictly inside (0, 1), targets in
/// [0, 1].
inline double loss_bce(const VecX& pred, const VecX& target,
                       VecX* grad_pred = nullptr) {
  const Eigen::Index n = pred.size();
  if (n == 0) {
    throw Error(ErrorCode::kEmptyInput, "loss_bce: no instances");
  }
  if (target.size() != n) {
    throw Error(ErrorCode::kDomainViolation, "loss_bce: size mismatch");
  }
  if (pred.minCoeff() <= 0.0 || pred.maxCoeff() >= 1.0 ||
      target.minCoeff() < 0.0 || target.maxCoeff() > 1.0) {
    throw Error(ErrorCode::kDomainViolation,
                "loss_bce: pred must be in (0,1), target in [0,1]");
  }
  double total = 0.0;
  if (grad_pred) grad_pred->resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    total -= target[i] * std::log(pred[i]) +
             (1.0 - target[i]) * std::log(1.0 - pred[i]);
    if (grad_pred) {
      (*grad_pred)[i] = (pred[i] - target[i]) /
                        (pred[i] * (1.0 - pred[i])) / double(n);
    }
  }
  return total / double(n);
}

/// Normals derived from depth by central differences on the backprojected
/// point grid, oriented toward the camera. Border and invalid-neighborhood
/// pixels yield a zero vector.
inline Image<Vec3> normals_from_depth(const DepthMap& depth,
                                      const CameraIntrinsics& k) {
  Image<Vec3> out(depth.width, depth.height, Vec3::Zero());
  auto point = [&](int x, int y) {
    return backproject(Vec2(x, y), double(depth.at(x, y)), k);
  };
  for (int y = 1; y + 1 < depth.height; ++y) {
    for (int x = 1; x + 1 < depth.width; ++x) {
      if (!depth_valid(depth.at(x, y)) || !depth_valid(depth.at(x - 1, y)) ||
          !depth_valid(depth.at(x + 1, y)) || !depth_valid(depth.at(x, y - 1)) ||
          !depth_valid(depth.at(x, y + 1))) {
        continue;
      }
      Vec3 tx = point(x + 1, y) - point(x - 1, y);
      Vec3 ty = point(x, y + 1) - point(x, y - 1);
      Vec3 n = tx.cross(ty);
      const double len = n.norm();
      if (len < 1e-12) continue;
      n /= len;
      if (n.dot(point(x, y)) > 0.0) n = -n;  // face the camera
      out.at(x, y) = n;
    }
  }
  return out;
}

/// Depth-normal consistency: mean L1 difference between depth-derived normals
/// and the given normal field over interior pixels where both are defined.
inline double loss_consistency_depth_normal(const DepthMap& depth,
                                            const Image<Vec3>& normals,
                                            const CameraIntrinsics& k) {
  if (!normals.same_shape(depth.width, depth.height)) {
    throw Error(ErrorCode::kDomainViolation, "loss_consistency: shape mismatch");
  }
  Image<Vec3> derived = normals_from_depth(depth, k);
  double total = 0.0;
  int count = 0;
  for (int y = 1; y + 1 < depth.height; ++y) {
    for (int x = 1; x + 1 < depth.width; ++x) {
      const Vec3& nd = derived.at(x, y);
      const Vec3& ng = normals.at(x, y);
      if (nd.isZero() || ng.isZero()) continue;
      total += (nd - ng).cwiseAbs().sum();
      ++count;
    }
  }
  return count == 0 ? 0.0 : total / double(count);
}

/// A pixel is a semantic edge iff any 4-neighbor carries a different label.
inline Image<uint8_t> semantic_edges(const LabelMap& labels) {
  Image<uint8_t> out(labels.width, labels.height, 0);
  for (int y = 0; y < labels.height; ++y) {
    for (int x = 0; x < labels.width; ++x) {
      const uint16_t c = labels.at(x, y);
      const bool edge =
          (x > 0 && labels.at(x - 1, y) != c) ||
          (x + 1 < labels.width && labels.at(x + 1, y) != c) ||
          (y > 0 && labels.at(x, y - 1) != c) ||
          (y + 1 < labels.height && labels.at(x, y + 1) != c);
      out.at(x, y) = edge ? 1 : 0;
    }
  }
  return out;
}

/// Semantic-edge consistency: mean |sigmoid(edge logits) - edge(labels)|.
inline double loss_consistency_semantic_edge(const Image<float>& edge_logits,
                                             const LabelMap& labels) {
  if (!labels.same_shape(edge_logits.width, edge_logits.height)) {
    throw Error(ErrorCode::kDomainViolation, "loss_consistency: shape mismatch");
  }
  Image<uint8_t> edges = semantic_edges(labels);
  double total = 0.0;
  for (size_t i = 0; i < edge_logits.size(); ++i) {
    const double s = 1.0 / (1.0 + std::exp(-double(edge_logits.data[i])));
    total += std::abs(s - double(edges.data[i]));
  }
  return total / double(edge_logits.size());
}

/// Per-task loss values with learned log-uncertainty parameters.
struct TaskLossState {
  VecX losses;     // L_a, fixed inputs here
  VecX log_sigma;  // s_a = ln(sigma_a), the free parameters
};

struct UncertaintyWeightedResult {
  double total = 0.0;
  VecX grad_log_sigma;  // d total / d s_a
  VecX grad_sigma;      // d total / d sigma_a
};

/// Sum_a ( L_a / (2 sigma_a^2) + ln sigma_a ), stationary at sigma_a^2 = L_a.
inline UncertaintyWeightedResult loss_uncertainty_weighted(
    const TaskLossState& state) {
  if (state.losses.size() != state.log_sigma.size()) {
    throw Error(ErrorCode::kDomainViolation,
                "loss_uncertainty_weighted: size mismatch");
  }
  UncertaintyWeightedResult out;
  const Eigen::Index n = state.losses.size();
  out.grad_log_sigma.resize(n);
  out.grad_sigma.resize(n);
  for (Eigen::Index a = 0; a < n; ++a) {
    const double s = state.log_sigma[a];
    const double sigma = std::exp(s);
    out.total += state.losses[a] * std::exp(-2.0 * s) * 0.5 + s;
    out.grad_log_sigma[a] = -state.losses[a] * std::exp(-2.0 * s) + 1.0;
    out.grad_sigma[a] = (-state.losses[a] / (sigma * sigma) + 1.0) / sigma;
  }
  return out;
}

}  // namespace sgslam
