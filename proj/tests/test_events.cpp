#include <catch2/catch_amalgamated.hpp>

#include "dynfl/error.hpp"
#include "dynfl/events.hpp"

using namespace dynfl;

namespace {
Event ins(int c, int at) { return {Event::Kind::Insert, c, at}; }
Event del(int c) { return {Event::Kind::Delete, c, -1}; }
}  // namespace

TEST_CASE("validate accepts insert-delete-reuse-free streams") {
  EventStream s{{ins(0, 0), ins(1, 1), del(0), ins(2, 0), del(2)}};
  REQUIRE_NOTHROW(s.validate(2));
  REQUIRE(s.length() == 5);
}

TEST_CASE("validate rejects malformed streams") {
  SECTION("double insert") {
    EventStream s{{ins(0, 0), ins(0, 1)}};
    REQUIRE_THROWS_AS(s.validate(2), Error);
  }
  SECTION("delete before insert") {
    EventStream s{{del(3)}};
    REQUIRE_THROWS_AS(s.validate(2), Error);
  }
  SECTION("double delete") {
    EventStream s{{ins(0, 0), del(0), del(0)}};
    REQUIRE_THROWS_AS(s.validate(2), Error);
  }
  SECTION("location out of range") {
    EventStream s{{ins(0, 5)}};
    REQUIRE_THROWS_AS(s.validate(2), Error);
  }
  SECTION("negative client id") {
    EventStream s{{ins(-1, 0)}};
    REQUIRE_THROWS_AS(s.validate(2), Error);
  }
}

TEST_CASE("final_active reports survivors sorted by id") {
  EventStream s{{ins(5, 1), ins(2, 0), ins(9, 1), del(5), ins(1, 0)}};
  const auto active = s.final_active();
  REQUIRE(active.size() == 3);
  REQUIRE(active[0] == std::make_pair(1, 0));
  REQUIRE(active[1] == std::make_pair(2, 0));
  REQUIRE(active[2] == std::make_pair(9, 1));
  REQUIRE(s.final_count() == 3);
}

TEST_CASE("empty stream") {
  EventStream s;
  REQUIRE_NOTHROW(s.validate(1));
  REQUIRE(s.final_count() == 0);
  REQUIRE(s.length() == 0);
}
