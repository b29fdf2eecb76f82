#pragma once

// On-disk packet stream: one little-endian binary record per frame plus
// meta.json, trajectory_gt.csv, and scene_graph_ref.json.
//
// Frame record layout (all little-endian):
//   char[8]  magic "SGPK0001"
//   f64      timestamp
//   i32 i32  width, height
//   f32[w*h] depth (0 = invalid)
//   u16[w*h] labels (0xFFFF = invalid)
//   i32      keypoint count
//     per keypoint: f64 px, f64 py, i64 landmark id, i32 dim, f32[dim] desc
//   i32      imu sample count
//     per sample: f64 t, f64[3] gyro, f64[3] accel
//   f64[3]   gt position, f64[4] gt quaternion (x, y, z, w)

#include <cstring>
#include <filesystem>
#include <fstream>

#include <nlohmann/json.hpp>

#include "sgslam/io/trajectory_csv.hpp"
#include "sgslam/sim/simulator.hpp"

namespace sgslam {

namespace packet_detail {

inline constexpr char kMagic[8] = {'S', 'G', 'P', 'K', '0', '0', '0', '1'};

template <typename T>
void put(std::ostream& out, const T& v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T get(std::istream& in) {
  T v;
  in.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!in) {
    throw Error(ErrorCode::kParseError, "packet record truncated");
  }
  return v;
}

}  // namespace packet_detail

inline void write_packet(const std::string& path, const FramePacket& pkt) {
  using namespace packet_detail;
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw Error(ErrorCode::kIoError, "cannot open for write: " + path);
  }
  out.write(kMagic, 8);
  put(out, pkt.timestamp);
  put(out, int32_t(pkt.depth.width));
  put(out, int32_t(pkt.depth.height));
  out.write(reinterpret_cast<const char*>(pkt.depth.data.data()),
            std::streamsize(pkt.depth.size() * sizeof(float)));
  out.write(reinterpret_cast<const char*>(pkt.labels.data.data()),
            std::streamsize(pkt.labels.size() * sizeof(uint16_t)));
  put(out, int32_t(pkt.keypoints.size()));
  for (const auto& kp : pkt.keypoints) {
    put(out, kp.pixel.x());
    put(out, kp.pixel.y());
    put(out, int64_t(kp.landmark_id));
    put(out, int32_t(kp.descriptor.size()));
    for (int i = 0; i < kp.descriptor.size(); ++i) {
      put(out, float(kp.descriptor[i]));
    }
  }
  put(out, int32_t(pkt.imu_window.size()));
  for (const auto& s : pkt.imu_window) {
    put(out, s.t);
    for (int i = 0; i < 3; ++i) put(out, s.gyro[i]);
    for (int i = 0; i < 3; ++i) put(out, s.accel[i]);
  }
  for (int i = 0; i < 3; ++i) put(out, pkt.gt_pose.translation[i]);
  put(out, pkt.gt_pose.rotation.x());
  put(out, pkt.gt_pose.rotation.y());
  put(out, pkt.gt_pose.rotation.z());
  put(out, pkt.gt_pose.rotation.w());
}

inline FramePacket read_packet(const std::string& path) {
  using namespace packet_detail;
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw Error(ErrorCode::kIoError, "cannot open packet: " + path);
  }
  char magic[8];
  in.read(magic, 8);
  if (!in || std::memcmp(magic, kMagic, 8) != 0) {
    throw Error(ErrorCode::kParseError, "bad packet magic in " + path);
  }
  FramePacket pkt;
  pkt.timestamp = get<double>(in);
  const int32_t w = get<int32_t>(in);
  const int32_t h = get<int32_t>(in);
  if (w <= 0 || h <= 0 || w > 1 << 14 || h > 1 << 14) {
    throw Error(ErrorCode::kParseError, "bad packet dimensions");
  }
  pkt.depth = DepthMap(w, h);
  in.read(reinterpret_cast<char*>(pkt.depth.data.data()),
          std::streamsize(pkt.depth.size() * sizeof(float)));
  pkt.labels = LabelMap(w, h);
  in.read(reinterpret_cast<char*>(pkt.labels.data.data()),
          std::streamsize(pkt.labels.size() * sizeof(uint16_t)));
  const int32_t n_kp = get<int32_t>(in);
  for (int32_t i = 0; i < n_kp; ++i) {
    KeypointObs kp;
    const double px = get<double>(in);
    const double py = get<double>(in);
    kp.pixel = Vec2(px, py);
    kp.landmark_id = get<int64_t>(in);
    const int32_t dim = get<int32_t>(in);
    kp.descriptor.resize(dim);
    for (int32_t d = 0; d < dim; ++d) kp.descriptor[d] = get<float>(in);
    pkt.keypoints.push_back(std::move(kp));
  }
  const int32_t n_imu = get<int32_t>(in);
  for (int32_t i = 0; i < n_imu; ++i) {
    ImuSample s;
    s.t = get<double>(in);
    for (int k = 0; k < 3; ++k) s.gyro[k] = get<double>(in);
    for (int k = 0; k < 3; ++k) s.accel[k] = get<double>(in);
    pkt.imu_window.push_back(s);
  }
  Vec3 t;
  for (int i = 0; i < 3; ++i) t[i] = get<double>(in);
  const double qx = get<double>(in), qy = get<double>(in), qz = get<double>(in),
               qw = get<double>(in);
  pkt.gt_pose = Pose(Quat(qw, qx, qy, qz), t, "body", "world");
  return pkt;
}

inline std::string packet_filename(int index) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "frame_%06d.bin", index);
  return buf;
}

inline nlohmann::ordered_json scene_to_json(const SceneSpec& spec) {
  nlohmann::ordered_json j;
  j["rooms"] = nlohmann::ordered_json::array();
  for (const auto& r : spec.rooms) {
    j["rooms"].push_back({{"id", r.id},
                          {"min", {r.min.x(), r.min.y()}},
                          {"max", {r.max.x(), r.max.y()}},
                          {"height", r.height},
                          {"floor_z", r.floor_z}});
  }
  j["objects"] = nlohmann::ordered_json::array();
  for (const auto& o : spec.objects) {
    j["objects"].push_back(
        {{"class", o.cls},
         {"room", o.room_id},
         {"min", {o.box.min.x(), o.box.min.y(), o.box.min.z()}},
         {"max", {o.box.max.x(), o.box.max.y(), o.box.max.z()}}});
  }
  j["agents"] = nlohmann::ordered_json::array();
  for (const auto& a : spec.agents) {
    nlohmann::ordered_json wp = nlohmann::ordered_json::array();
    for (const auto& w : a.waypoints) wp.push_back({w.x(), w.y()});
    j["agents"].push_back({{"class", a.cls},
                           {"speed", a.speed},
                           {"size", {a.size.x(), a.size.y(), a.size.z()}},
                           {"waypoints", wp}});
  }
  j["label_set"] = spec.label_set;
  j["dynamic_classes"] =
      std::vector<std::string>(spec.dynamic_classes.begin(),
                               spec.dynamic_classes.end());
  j["wall_thickness"] = spec.wall_thickness;
  j["door_width"] = spec.door_width;
  j["door_height"] = spec.door_height;
  return j;
}

inline SceneSpec scene_from_json(const nlohmann::json& j) {
  SceneSpec spec;
  for (const auto& jr : j.at("rooms")) {
    RoomSpec r;
    r.id = jr.at("id").get<int>();
    r.min = Vec2(jr.at("min")[0], jr.at("min")[1]);
    r.max = Vec2(jr.at("max")[0], jr.at("max")[1]);
    r.height = jr.at("height").get<double>();
    r.floor_z = jr.at("floor_z").get<double>();
    spec.rooms.push_back(r);
  }
  for (const auto& jo : j.at("objects")) {
    ObjectSpec o;
    o.cls = jo.at("class").get<std::string>();
    o.room_id = jo.at("room").get<int>();
    o.box =
        AABox(Vec3(jo.at("min")[0], jo.at("min")[1], jo.at("min")[2]),
              Vec3(jo.at("max")[0], jo.at("max")[1], jo.at("max")[2]));
    spec.objects.push_back(o);
  }
  for (const auto& ja : j.at("agents")) {
    AgentSpec a;
    a.cls = ja.at("class").get<std::string>();
    a.speed = ja.at("speed").get<double>();
    a.size = Vec3(ja.at("size")[0], ja.at("size")[1], ja.at("size")[2]);
    for (const auto& w : ja.at("waypoints")) {
      a.waypoints.emplace_back(w[0].get<double>(), w[1].get<double>());
    }
    spec.agents.push_back(a);
  }
  spec.label_set = j.at("label_set").get<std::vector<std::string>>();
  spec.dynamic_classes.clear();
  for (const auto& c : j.at("dynamic_classes")) {
    spec.dynamic_classes.insert(c.get<std::string>());
  }
  spec.wall_thickness = j.at("wall_thickness").get<double>();
  spec.door_width = j.at("door_width").get<double>();
  spec.door_height = j.at("door_height").get<double>();
  return spec;
}

/// Writes the full stream: per-frame records, meta.json, the (re-expressed)
/// scene, ground-truth trajectory, and the reference scene graph.
inline void write_stream(const std::string& dir, const SimStream& stream) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  for (size_t i = 0; i < stream.packets.size(); ++i) {
    write_packet(dir + "/" + packet_filename(int(i)), stream.packets[i]);
  }
  write_trajectory_csv(dir + "/trajectory_gt.csv", stream.gt_trajectory);

  nlohmann::ordered_json meta;
  meta["frame_count"] = stream.packets.size();
  meta["frame_rate"] = stream.config.frame_rate;
  meta["imu_rate"] = stream.config.imu_rate;
  meta["duration"] = stream.config.duration;
  meta["max_range"] = stream.config.max_range;
  const CameraIntrinsics& k = stream.config.intrinsics;
  meta["intrinsics"] = {{"fx", k.fx}, {"fy", k.fy}, {"cx", k.cx},
                        {"cy", k.cy}, {"width", k.width}, {"height", k.height}};
  meta["initial_velocity"] = {stream.initial_velocity.x(),
                              stream.initial_velocity.y(),
                              stream.initial_velocity.z()};
  meta["gravity"] = {kGravity.x(), kGravity.y(), kGravity.z()};
  meta["label_set"] = stream.scene.label_set;
  meta["dynamic_classes"] = std::vector<std::string>(
      stream.scene.dynamic_classes.begin(), stream.scene.dynamic_classes.end());
  meta["seed"] = stream.noise.seed;
  std::ofstream meta_out(dir + "/meta.json");
  meta_out << meta.dump(2) << "\n";

  std::ofstream graph_out(dir + "/scene_graph_ref.json");
  graph_out << to_json(stream.reference_graph).dump(2) << "\n";

  std::ofstream scene_out(dir + "/scene.json");
  scene_out << scene_to_json(stream.scene).dump(2) << "\n";
}

/// Reconstructs a full in-memory stream from a packet directory.
inline SimStream load_stream(const std::string& dir) {
  SimStream stream;
  const StreamMeta meta = read_stream_meta(dir);
  stream.config.intrinsics = meta.intrinsics;
  stream.config.frame_rate = meta.frame_rate;
  stream.config.imu_rate = meta.imu_rate;
  stream.config.duration = meta.duration;
  stream.config.max_range = meta.max_range;
  stream.initial_velocity = meta.initial_velocity;
  stream.noise.seed = meta.seed;

  {
    std::ifstream in(dir + "/scene.json");
    if (!in) {
      throw Error(ErrorCode::kIoError, "missing scene.json in " + dir);
    }
    stream.scene = scene_from_json(nlohmann::json::parse(in));
  }
  {
    std::ifstream in(dir + "/scene_graph_ref.json");
    if (!in) {
      throw Error(ErrorCode::kIoError, "missing scene_graph_ref.json in " + dir);
    }
    stream.reference_graph = scene_graph_from_json(nlohmann::json::parse(in));
  }
  stream.gt_trajectory = read_trajectory_csv(dir + "/trajectory_gt.csv");
  for (size_t i = 0; i < meta.frame_count; ++i) {
    stream.packets.push_back(read_packet(dir + "/" + packet_filename(int(i))));
  }
  if (stream.packets.size() != stream.gt_trajectory.size()) {
    throw Error(ErrorCode::kParseError,
                "packet count does not match ground-truth trajectory");
  }
  return stream;
}

struct StreamMeta {
  size_t frame_count = 0;
  double frame_rate = 0, imu_rate = 0, duration = 0, max_range = 30.0;
  CameraIntrinsics intrinsics;
  Vec3 initial_velocity = Vec3::Zero();
  std::vector<std::string> label_set;
  std::set<std::string> dynamic_classes;
  uint64_t seed = 0;
};

inline StreamMeta read_stream_meta(const std::string& dir) {
  std::ifstream in(dir + "/meta.json");
  if (!in) {
    throw Error(ErrorCode::kIoError, "missing meta.json in " + dir);
  }
  nlohmann::json j = nlohmann::json::parse(in);
  StreamMeta m;
  m.frame_count = j.at("frame_count").get<size_t>();
  m.frame_rate = j.at("frame_rate").get<double>();
  m.imu_rate = j.at("imu_rate").get<double>();
  m.duration = j.at("duration").get<double>();
  m.max_range = j.value("max_range", 30.0);
  auto ji = j.at("intrinsics");
  m.intrinsics = CameraIntrinsics(ji.at("fx"), ji.at("fy"), ji.at("cx"),
                                  ji.at("cy"), ji.at("width"), ji.at("height"));
  auto v = j.at("initial_velocity");
  m.initial_velocity = Vec3(v[0], v[1], v[2]);
  m.label_set = j.at("label_set").get<std::vector<std::string>>();
  for (const auto& c : j.at("dynamic_classes")) {
    m.dynamic_classes.insert(c.get<std::string>());
  }
  m.seed = j.at("seed").get<uint64_t>();
  return m;
}

}  // namespace sgslam
