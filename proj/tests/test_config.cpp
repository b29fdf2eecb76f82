#include <catch2/catch_amalgamated.hpp>

#include "sgslam/io/config.hpp"

using namespace sgslam;

static const char* kSample = R"(
# run configuration
[run]
seed = 7
duration = 10.5
label = "demo"
flags = [true, false]

[vio.gates]
tau_omega = 0.8
tau_pi = 2.0

[[scene.rooms]]
id = 0
min = [0.0, 0.0]
max = [6.0, 4.0]

[[scene.rooms]]
id = 1
min = [6.0, 0.0]
max = [10.0, 4.0]

[[scene.objects]]
class = "chair"
box = [[1.0, 1.0, 0.0], [1.5, 1.5, 0.9]]
)";

TEST_CASE("config parses sections, scalars and arrays") {
  ConfigTable cfg = parse_config(kSample);
  CHECK(cfg.get_int("run.seed", -1) == 7);
  CHECK(cfg.get_double("run.duration", 0) == 10.5);
  CHECK(cfg.get_string("run.label", "") == "demo");
  CHECK(cfg.get_double("vio.gates.tau_omega", 0) == 0.8);
  CHECK(cfg.get_double("vio.gates.tau_pi", 0) == 2.0);

  auto rooms = cfg.table_array("scene.rooms");
  REQUIRE(rooms.size() == 2);
  CHECK(rooms[1]->get_int("id", -1) == 1);
  auto mx = rooms[1]->find("max")->as_double_array();
  REQUIRE(mx.size() == 2);
  CHECK(mx[0] == 10.0);

  auto objects = cfg.table_array("scene.objects");
  REQUIRE(objects.size() == 1);
  const ConfigValue* box = objects[0]->find("box");
  REQUIRE(box != nullptr);
  REQUIRE(box->as_array().size() == 2);
  CHECK(box->as_array()[1].as_array()[2].as_double() == 0.9);
}

TEST_CASE("config defaults and overrides") {
  ConfigTable cfg = parse_config(kSample);
  CHECK(cfg.get_double("vio.gates.absent", 1.25) == 1.25);
  apply_override(cfg, "vio.gates.tau_omega=0.5");
  apply_override(cfg, "run.new_key=\"hello\"");
  CHECK(cfg.get_double("vio.gates.tau_omega", 0) == 0.5);
  CHECK(cfg.get_string("run.new_key", "") == "hello");
}

TEST_CASE("config reports malformed lines with line numbers") {
  CHECK_THROWS_AS(parse_config("[run\nseed = 1"), Error);
  CHECK_THROWS_AS(parse_config("seed 1"), Error);
  CHECK_THROWS_AS(parse_config("seed = [1, 2"), Error);
  try {
    parse_config("\n\nbad line here");
    FAIL("expected parse error");
  } catch (const Error& e) {
    CHECK(std::string(e.what()).find("line 3") != std::string::npos);
    CHECK(e.code() == ErrorCode::kParseError);
  }
}

TEST_CASE("booleans and empty arrays") {
  ConfigTable cfg = parse_config("a = true\nb = false\nc = []\n");
  CHECK(cfg.get_bool("a", false));
  CHECK(!cfg.get_bool("b", true));
  CHECK(cfg.find("c")->as_array().empty());
}
