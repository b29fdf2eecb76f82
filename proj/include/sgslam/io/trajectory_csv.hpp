#pragma once

// Trajectory interchange: CSV rows `timestamp,tx,ty,tz,qx,qy,qz,qw`.

#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "sgslam/core/geometry.hpp"

namespace sgslam {

struct TimedPose {
  double timestamp = 0.0;
  Pose pose;
};

using Trajectory = std::vector<TimedPose>;

inline void write_trajectory_csv(const std::string& path, const Trajectory& traj) {
  std::ofstream out(path);
  if (!out) {
    throw Error(ErrorCode::kIoError, "cannot open for write: " + path);
  }
  out << "timestamp,tx,ty,tz,qx,qy,qz,qw\n";
  char buf[256];
  for (const auto& tp : traj) {
    const Quat& q = tp.pose.rotation;
    const Vec3& t = tp.pose.translation;
    std::snprintf(buf, sizeof(buf),
                  "%.9f,%.9f,%.9f,%.9f,%.12f,%.12f,%.12f,%.12f\n", tp.timestamp,
                  t.x(), t.y(), t.z(), q.x(), q.y(), q.z(), q.w());
    out << buf;
  }
}

inline Trajectory read_trajectory_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw Error(ErrorCode::kIoError, "cannot open trajectory csv: " + path);
  }
  Trajectory traj;
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (first && line.rfind("timestamp", 0) == 0) {
      first = false;
      continue;
    }
    first = false;
    std::istringstream ss(line);
    std::string tok;
    double v[8];
    for (int i = 0; i < 8; ++i) {
      if (!std::getline(ss, tok, ',')) {
        throw Error(ErrorCode::kParseError, "bad trajectory row: " + line);
      }
      v[i] = std::stod(tok);
    }
    TimedPose tp;
    tp.timestamp = v[0];
    tp.pose = Pose(Quat(v[7], v[4], v[5], v[6]), Vec3(v[1], v[2], v[3]));
    traj.push_back(tp);
  }
  return traj;
}

}  // namespace sgslam
