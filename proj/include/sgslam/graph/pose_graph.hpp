#pragma once

// Keyframe pose graph over VIO odometry edges plus optional loop-closure
// constraints, optimized by damped Gauss-Newton on SE(3) with node 0
// anchored. Loop proposal is a pure revisit diagnostic; the acceptance hook
// synthesizes the relative-pose measurement from ground truth plus noise.

#include <vector>

#include <Eigen/SparseCholesky>
#include <Eigen/SparseCore>

#include "sgslam/core/geometry.hpp"
#include "sgslam/core/rng.hpp"
#include "sgslam/io/trajectory_csv.hpp"

namespace sgslam {

struct PoseGraphEdge {
  int i = -1;
  int j = -1;
  Pose measurement;  // relative pose, maps j-frame points into i-frame
  Mat6 sqrt_info = Mat6::Identity();
};

struct PoseGraph {
  std::vector<double> timestamps;
  std::vector<Pose> nodes;              // current variable values
  std::vector<PoseGraphEdge> odometry;  // consecutive chain
  std::vector<PoseGraphEdge> loops;
};

struct OdometryNoise {
  double rot_sigma = 0.005;  // rad
  double trans_sigma = 0.01;  // m

  Mat6 sqrt_info() const {
    Mat6 m = Mat6::Zero();
    for (int i = 0; i < 3; ++i) {
      m(i, i) = 1.0 / rot_sigma;
      m(3 + i, 3 + i) = 1.0 / trans_sigma;
    }
    return m;
  }
};

/// Left-invariant edge residual Log(z^(-1) T_i^(-1) T_j).
inline Twist edge_residual(const PoseGraphEdge& e, const Pose& ti,
                           const Pose& tj) {
  return log_se3(e.measurement.inverse() * (ti.inverse() * tj));
}

/// One odometry edge per consecutive keyframe pair, measured from the
/// estimates themselves; nodes start at the estimates, so all residuals are
/// zero by construction.
inline PoseGraph build_graph(const Trajectory& odometry,
                             const OdometryNoise& noise = {}) {
  if (odometry.size() < 2) {
    throw Error(ErrorCode::kEmptyInput, "build_graph: need >= 2 keyframes");
  }
  PoseGraph g;
  for (const auto& tp : odometry) {
    g.timestamps.push_back(tp.timestamp);
    g.nodes.push_back(tp.pose);
  }
  const Mat6 sqrt_info = noise.sqrt_info();
  for (size_t i = 0; i + 1 < odometry.size(); ++i) {
    PoseGraphEdge e;
    e.i = int(i);
    e.j = int(i + 1);
    e.measurement = odometry[i].pose.inverse() * odometry[i + 1].pose;
    e.sqrt_info = sqrt_info;
    g.odometry.push_back(e);
  }
  return g;
}

struct LoopCandidate {
  int p = -1;
  int q = -1;
  double distance = 0.0;  // estimated-trajectory distance at proposal
  bool accepted = false;
  Pose measurement;  // filled when accepted
};

/// Revisit diagnostic: every keyframe pair whose estimated positions lie
/// within `radius` and whose indices are at least `min_separation` apart.
inline std::vector<LoopCandidate> propose_loops(const Trajectory& estimate,
                                                double radius,
                                                int min_separation) {
  if (radius <= 0) {
    throw Error(ErrorCode::kDomainViolation, "propose_loops: radius must be > 0");
  }
  std::vector<LoopCandidate> out;
  for (size_t p = 0; p < estimate.size(); ++p) {
    for (size_t q = p + size_t(min_separation); q < estimate.size(); ++q) {
      const double d = (estimate[p].pose.translation -
                        estimate[q].pose.translation)
                           .norm();
      if (d <= radius) {
        out.push_back({int(p), int(q), d, false, Pose()});
      }
    }
  }
  return out;
}

/// Stand-in acceptance: a candidate is accepted when the ground-truth
/// distance confirms the revisit; its measurement is the ground-truth
/// relative pose perturbed by the given noise.
inline void accept_loops(std::vector<LoopCandidate>& candidates,
                         const Trajectory& ground_truth, double gt_radius,
                         double rot_sigma, double trans_sigma, uint64_t seed) {
  std::mt19937_64 rng = make_rng(seed, RngStream::kLoopEdgeNoise);
  std::normal_distribution<double> gauss(0.0, 1.0);
  for (auto& c : candidates) {
    if (c.p >= int(ground_truth.size()) || c.q >= int(ground_truth.size())) {
      continue;
    }
    const Pose& tp = ground_truth[size_t(c.p)].pose;
    const Pose& tq = ground_truth[size_t(c.q)].pose;
    if ((tp.translation - tq.translation).norm() > gt_radius) continue;
    c.accepted = true;
    Twist noise;
    noise.angular = rot_sigma * Vec3(gauss(rng), gauss(rng), gauss(rng));
    noise.linear = trans_sigma * Vec3(gauss(rng), gauss(rng), gauss(rng));
    c.measurement = tp.inverse() * tq * exp_se3(noise);
  }
}

inline void add_loop_edges(PoseGraph& graph,
                           const std::vector<LoopCandidate>& candidates,
                           double rot_sigma, double trans_sigma) {
  Mat6 sqrt_info = Mat6::Zero();
  for (int i = 0; i < 3; ++i) {
    sqrt_info(i, i) = 1.0 / std::max(rot_sigma, 1e-9);
    sqrt_info(3 + i, 3 + i) = 1.0 / std::max(trans_sigma, 1e-9);
  }
  for (const auto& c : candidates) {
    if (!c.accepted) continue;
    graph.loops.push_back({c.p, c.q, c.measurement, sqrt_info});
  }
}

struct OptimizeResult {
  int iterations = 0;
  bool converged = false;
  double initial_cost = 0.0;
  double final_cost = 0.0;
  std::vector<double> cost_history;  // accepted iterations only
};

inline double graph_cost(const PoseGraph& g) {
  double cost = 0.0;
  auto add = [&](const PoseGraphEdge& e) {
    const Twist r = edge_residual(e, g.nodes[size_t(e.i)], g.nodes[size_t(e.j)]);
    cost += (e.sqrt_info * r.vector()).squaredNorm();
  };
  for (const auto& e : g.odometry) add(e);
  for (const auto& e : g.loops) add(e);
  return 0.5 * cost;
}

/// Damped Gauss-Newton with node 0 anchored; damping multiplies by 10 on a
/// rejected step and divides by 10 on an accepted one.
inline OptimizeResult optimize(PoseGraph& graph, int max_iters = 50,
                               double step_tol = 1e-10) {
  const int n = int(graph.nodes.size());
  if (n < 2) {
    throw Error(ErrorCode::kEmptyInput, "optimize: need >= 2 nodes");
  }
  const int dim = 6 * (n - 1);  // node 0 fixed

  OptimizeResult result;
  result.initial_cost = graph_cost(graph);
  result.cost_history.push_back(result.initial_cost);
  double lambda = 1e-4;
  double cost = result.initial_cost;

  std::vector<PoseGraphEdge*> edges;
  for (auto& e : graph.odometry) edges.push_back(&e);
  for (auto& e : graph.loops) edges.push_back(&e);

  for (int iter = 0; iter < max_iters; ++iter) {
    std::vector<Eigen::Triplet<double>> triplets;
    VecX g = VecX::Zero(dim);
    for (const PoseGraphEdge* e : edges) {
      const Pose& ti = graph.nodes[size_t(e->i)];
      const Pose& tj = graph.nodes[size_t(e->j)];
      const Twist r = edge_residual(*e, ti, tj);
      const Mat6 jr_inv = se3_right_jacobian_inverse(r);
      const Mat6 jj = e->sqrt_info * jr_inv;
      const Mat6 ji = -jj * adjoint_se3(tj.inverse() * ti);
      const Vec6 wr = e->sqrt_info * r.vector();

      const int ci = 6 * (e->i - 1);
      const int cj = 6 * (e->j - 1);
      auto add_block = [&](int row0, int col0, const Mat6& m) {
        for (int a = 0; a < 6; ++a) {
          for (int b = 0; b < 6; ++b) {
            if (m(a, b) != 0.0) triplets.emplace_back(row0 + a, col0 + b, m(a, b));
          }
        }
      };
      if (e->i > 0) {
        add_block(ci, ci, ji.transpose() * ji);
        g.segment<6>(ci) += ji.transpose() * wr;
      }
      if (e->j > 0) {
        add_block(cj, cj, jj.transpose() * jj);
        g.segment<6>(cj) += jj.transpose() * wr;
      }
      if (e->i > 0 && e->j > 0) {
        add_block(ci, cj, ji.transpose() * jj);
        add_block(cj, ci, jj.transpose() * ji);
      }
    }

    Eigen::SparseMatrix<double> h(dim, dim);
    h.setFromTriplets(triplets.begin(), triplets.end());

    bool accepted = false;
    for (int attempt = 0; attempt < 8 && !accepted; ++attempt) {
      Eigen::SparseMatrix<double> damped = h;
      for (int i = 0; i < dim; ++i) {
        damped.coeffRef(i, i) = h.coeff(i, i) * (1.0 + lambda) + 1e-12;
      }
      Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> solver(damped);
      if (solver.info() != Eigen::Success) {
        lambda *= 10.0;
        continue;
      }
      const VecX step = solver.solve(-g);

      std::vector<Pose> backup = graph.nodes;
      for (int node = 1; node < n; ++node) {
        graph.nodes[size_t(node)] =
            graph.nodes[size_t(node)] *
            exp_se3(Twist::from_vector(step.segment<6>(6 * (node - 1))));
      }
      const double new_cost = graph_cost(graph);
      if (new_cost <= cost) {
        accepted = true;
        cost = new_cost;
        result.cost_history.push_back(cost);
        lambda = std::max(lambda / 10.0, 1e-12);
        ++result.iterations;
        if (step.norm() < step_tol) {
          result.converged = true;
        }
      } else {
        graph.nodes = backup;
        lambda *= 10.0;
      }
    }
    if (!accepted || result.converged || cost < 1e-18) {
      result.converged = result.converged || cost < 1e-18 || !accepted;
      break;
    }
  }
  result.final_cost = cost;
  return result;
}

}  // namespace sgslam
