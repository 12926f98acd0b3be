#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <fstream>
#include <sstream>

#include "dynfl/generators.hpp"
#include "dynfl/harness.hpp"
#include "dynfl/io.hpp"

using namespace dynfl;

TEST_CASE("dense metric JSON round-trip") {
  const Instance inst = gen_random(5, 0, 0.0, MetricKind::ShortestPath, 3);
  const json j = metric_to_json(inst.metric);
  const MetricSpace back = metric_from_json(j);
  REQUIRE(back.size() == 5);
  for (int a = 0; a < 5; ++a)
    for (int b = 0; b < 5; ++b) REQUIRE(back.dist(a, b) == inst.metric.dist(a, b));
}

TEST_CASE("star metric JSON round-trip keeps the symbolic form") {
  const MetricSpace star = MetricSpace::star(1000000, 0.5);
  const json j = metric_to_json(star);
  REQUIRE(j.contains("star"));
  const MetricSpace back = metric_from_json(j);
  REQUIRE(back.is_star());
  REQUIRE(back.star_leaves() == 1000000);
  REQUIRE(back.star_eps() == 0.5);
}

TEST_CASE("metric JSON validation") {
  REQUIRE_THROWS_AS(metric_from_json(json{{"n", 3}}), Error);
  REQUIRE_THROWS_AS(
      metric_from_json(json{{"n", 3}, {"dist", {{0.0, 1.0}, {1.0, 0.0}}}}),
      Error);
  // Malformed matrices go through full metric validation.
  REQUIRE_THROWS_AS(
      metric_from_json(json{{"dist", {{0.0, 1.0}, {2.0, 0.0}}}}), Error);
}

TEST_CASE("instance JSON round-trip") {
  const Instance inst = gen_claim3(3);
  const json j = instance_to_json(inst);
  REQUIRE(j.at("q").get<int>() == inst.stream.length());
  REQUIRE(j.at("reassign").get<std::string>() == "fifo");

  const Instance back = instance_from_json(j);
  REQUIRE(back.stream.length() == inst.stream.length());
  REQUIRE(back.reassign_hint == ReassignOrder::Fifo);
  for (int i = 0; i < inst.stream.length(); ++i) {
    REQUIRE(back.stream.events[i].kind == inst.stream.events[i].kind);
    REQUIRE(back.stream.events[i].client == inst.stream.events[i].client);
    REQUIRE(back.stream.events[i].location == inst.stream.events[i].location);
  }
}

TEST_CASE("instance JSON rejects inconsistencies") {
  json j = instance_to_json(gen_claim3(2));
  SECTION("q mismatch") {
    j["q"] = 3;
    REQUIRE_THROWS_AS(instance_from_json(j), Error);
  }
  SECTION("unknown op") {
    j["events"][0]["op"] = "frobnicate";
    REQUIRE_THROWS_AS(instance_from_json(j), Error);
  }
  SECTION("unknown reassign order") {
    j["reassign"] = "sometimes";
    REQUIRE_THROWS_AS(instance_from_json(j), Error);
  }
  SECTION("invalid stream") {
    j["events"].push_back({{"op", "del"}, {"id", 424242}});
    j["q"] = j["events"].size();
    REQUIRE_THROWS_AS(instance_from_json(j), Error);
  }
}

TEST_CASE("instance file save and load") {
  const std::string path = "io_test_instance.json";
  const Instance inst = gen_random(6, 40, 0.25, MetricKind::UnitSquare, 12);
  save_instance(inst, path);
  const Instance back = load_instance(path);
  REQUIRE(back.stream.length() == 40);
  REQUIRE(back.metric.size() == 6);
  std::remove(path.c_str());
  REQUIRE_THROWS_AS(load_instance("does_not_exist.json"), Error);
}

TEST_CASE("trace dump is one parseable object per line") {
  const Instance inst = gen_random(6, 50, 0.3, MetricKind::UnitSquare, 9);
  PolicyConfig cfg;
  cfg.algorithm = Algorithm::MStar;
  const RunResult r = run(inst, cfg, 2);
  std::ostringstream os;
  dump_trace(r.trace, os);

  std::istringstream is(os.str());
  std::string line;
  std::size_t lines = 0;
  while (std::getline(is, line)) {
    const json j = json::parse(line);
    REQUIRE(j.contains("kind"));
    ++lines;
  }
  REQUIRE(lines == r.trace.records().size());
}

TEST_CASE("tree JSON carries the structure") {
  const Hst t = Hst::build(normalize(MetricSpace::star(6, 0.5), 16), 4);
  const json j = hst_to_json(t);
  REQUIRE(j.at("depth").get<int>() == 4);
  REQUIRE(j.at("points").get<int>() == 7);
  REQUIRE(j.at("nodes").size() == t.nodes().size());
  // Exactly one node per point carries a leaf payload.
  int leaves = 0;
  for (const auto& n : j.at("nodes"))
    if (n.contains("point")) ++leaves;
  REQUIRE(leaves == 7);
}
