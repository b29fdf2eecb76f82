#pragma once

// Shared scene builders for the test suites.

#include "sgslam/sim/simulator.hpp"

namespace sgslam::testing {

/// 6x4 m room with two objects, camera-friendly.
inline SceneSpec one_room_scene() {
  SceneSpec spec;
  RoomSpec r;
  r.id = 0;
  r.min = Vec2(0, 0);
  r.max = Vec2(6, 4);
  r.height = 2.5;
  spec.rooms.push_back(r);

  ObjectSpec chair;
  chair.cls = "chair";
  chair.room_id = 0;
  chair.box = AABox(Vec3(1.0, 0.8, 0.0), Vec3(1.5, 1.3, 0.9));
  spec.objects.push_back(chair);

  ObjectSpec table;
  table.cls = "table";
  table.room_id = 0;
  table.box = AABox(Vec3(4.2, 2.6, 0.0), Vec3(5.2, 3.4, 0.75));
  spec.objects.push_back(table);

  spec.finalize_labels();
  spec.validate();
  return spec;
}

/// Two rooms joined by a doorway on the shared x = 6 wall; objects in both.
inline SceneSpec two_room_scene() {
  SceneSpec spec;
  RoomSpec a;
  a.id = 0;
  a.min = Vec2(0, 0);
  a.max = Vec2(6, 4);
  a.height = 2.5;
  spec.rooms.push_back(a);

  RoomSpec b;
  b.id = 1;
  b.min = Vec2(6, 0);
  b.max = Vec2(10, 4);
  b.height = 2.5;
  spec.rooms.push_back(b);

  ObjectSpec chair;
  chair.cls = "chair";
  chair.room_id = 0;
  chair.box = AABox(Vec3(0.8, 0.6, 0.0), Vec3(1.3, 1.1, 0.9));
  spec.objects.push_back(chair);

  ObjectSpec table;
  table.cls = "table";
  table.room_id = 0;
  table.box = AABox(Vec3(4.4, 3.0, 0.0), Vec3(5.4, 3.7, 0.75));
  spec.objects.push_back(table);

  ObjectSpec monitor;  // stacked on the table: supports edge material
  monitor.cls = "monitor";
  monitor.room_id = 0;
  monitor.box = AABox(Vec3(4.7, 3.2, 0.75), Vec3(5.1, 3.5, 1.1));
  spec.objects.push_back(monitor);

  ObjectSpec sofa;
  sofa.cls = "sofa";
  sofa.room_id = 1;
  sofa.box = AABox(Vec3(8.6, 0.6, 0.0), Vec3(9.6, 2.0, 0.8));
  spec.objects.push_back(sofa);

  spec.finalize_labels();
  spec.validate();
  return spec;
}

/// Adds a walking person crossing the first room.
inline void add_agent(SceneSpec& spec, double speed = 0.6) {
  AgentSpec person;
  person.cls = "person";
  person.speed = speed;
  person.waypoints = {Vec2(2.0, 0.9), Vec2(5.0, 2.9), Vec2(2.0, 2.9)};
  spec.agents.push_back(person);
  spec.label_set.clear();
  spec.finalize_labels();
  spec.validate();
}

}  // namespace sgslam::testing
