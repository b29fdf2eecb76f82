#pragma once

// Labeled point clouds and their PLY (ascii) form: x, y, z floats plus an
// integer class id per vertex.

#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "sgslam/core/types.hpp"

namespace sgslam {

struct LabeledCloud {
  std::vector<Vec3> points;
  std::vector<uint16_t> labels;  // kInvalidLabel marks unlabeled points

  size_t size() const { return points.size(); }
};

inline void write_ply(const std::string& path, const LabeledCloud& cloud) {
  if (cloud.points.size() != cloud.labels.size()) {
    throw Error(ErrorCode::kDomainViolation, "write_ply: size mismatch");
  }
  std::ofstream out(path);
  if (!out) {
    throw Error(ErrorCode::kIoError, "cannot open for write: " + path);
  }
  out << "ply\nformat ascii 1.0\n";
  out << "element vertex " << cloud.points.size() << "\n";
  out << "property float x\nproperty float y\nproperty float z\n";
  out << "property int class\n";
  out << "end_header\n";
  char buf[128];
  for (size_t i = 0; i < cloud.points.size(); ++i) {
    std::snprintf(buf, sizeof(buf), "%.6f %.6f %.6f %d\n", cloud.points[i].x(),
                  cloud.points[i].y(), cloud.points[i].z(),
                  int(cloud.labels[i]));
    out << buf;
  }
}

inline LabeledCloud read_ply(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw Error(ErrorCode::kIoError, "cannot open ply: " + path);
  }
  std::string line;
  size_t count = 0;
  bool header_done = false;
  while (std::getline(in, line)) {
    if (line.rfind("element vertex", 0) == 0) {
      count = std::stoul(line.substr(15));
    }
    if (line == "end_header") {
      header_done = true;
      break;
    }
  }
  if (!header_done) {
    throw Error(ErrorCode::kParseError, "ply: missing end_header in " + path);
  }
  LabeledCloud cloud;
  cloud.points.reserve(count);
  cloud.labels.reserve(count);
  for (size_t i = 0; i < count; ++i) {
    if (!std::getline(in, line)) {
      throw Error(ErrorCode::kParseError, "ply: truncated vertex list");
    }
    std::istringstream ss(line);
    double x, y, z;
    int cls;
    if (!(ss >> x >> y >> z >> cls)) {
      throw Error(ErrorCode::kParseError, "ply: bad vertex row: " + line);
    }
    cloud.points.emplace_back(x, y, z);
    cloud.labels.push_back(uint16_t(cls));
  }
  return cloud;
}

}  // namespace sgslam
