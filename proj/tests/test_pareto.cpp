#include <algorithm>
#include <cmath>

#include "doctest.h"
#include "dse/pareto.hpp"
#include "dse/rng.hpp"
#include "test_util.hpp"

using namespace dse;

namespace {

ParetoFrontier make_frontier(std::initializer_list<Objectives> objs) {
  ParetoFrontier f;
  int i = 0;
  for (const Objectives& o : objs) f.update(o, "p" + std::to_string(i++));
  return f;
}

}  // namespace

TEST_CASE("weighted_resource hand evaluations") {
  ResourceWeights w;  // 0.1/0.1/0.4/0.4
  CHECK(std::abs(weighted_resource({0.5, 0.5, 0.5, 0.5}, w) - 0.5) <= 1e-9);
  CHECK(weighted_resource({0, 0, 0, 0}, w) == 0.0);
  CHECK(std::abs(weighted_resource({1, 1, 1, 1}, w) - 1.0) <= 1e-9);
}

TEST_CASE("dominates is strict in both objectives") {
  CHECK(dominates({10, 0.2}, {20, 0.4}));
  CHECK_FALSE(dominates({10, 0.4}, {20, 0.2}));
  CHECK_FALSE(dominates({10, 0.2}, {10, 0.4}));  // equal latency
  Objectives a{10, 0.2};
  CHECK_FALSE(dominates(a, a));
}

TEST_CASE("update_frontier worked examples") {
  ParetoFrontier f;
  CHECK(f.update({42, 0.7}, "a"));
  CHECK(f.size() == 1);

  f = make_frontier({{10, 0.5}, {20, 0.3}});
  REQUIRE(f.size() == 2);
  CHECK(f.update({15, 0.4}, "mid"));  // dominated by neither
  CHECK(f.size() == 3);

  f = make_frontier({{10, 0.5}, {20, 0.3}});
  CHECK(f.update({5, 0.2}, "best"));  // dominates both
  REQUIRE(f.size() == 1);
  CHECK(f.entries()[0].point_id == "best");
}

TEST_CASE("update_frontier latency ties keep the lower resource") {
  ParetoFrontier f = make_frontier({{10, 0.5}});
  CHECK_FALSE(f.update({10, 0.5}, "dup"));   // exact duplicate
  CHECK_FALSE(f.update({10, 0.6}, "worse"));  // tie, higher resource
  CHECK(f.update({10, 0.4}, "better"));       // tie, lower resource replaces
  REQUIRE(f.size() == 1);
  CHECK(f.entries()[0].obj.resource == 0.4);
}

TEST_CASE("project_resource interpolates latency-wise") {
  ParetoFrontier f = make_frontier({{10, 0.5}, {20, 0.3}});
  CHECK(std::abs(*f.project_resource(15) - 0.4) <= 1e-9);
  CHECK(std::abs(*f.project_resource(10) - 0.5) <= 1e-9);
  CHECK_FALSE(f.project_resource(5).has_value());  // below-min marker
  CHECK(std::abs(*f.project_resource(25) - 0.3) <= 1e-9);  // clamps above max
  CHECK_THROWS_AS(ParetoFrontier{}.project_resource(1), std::logic_error);
}

TEST_CASE("hypervolume sweep") {
  ParetoFrontier f = make_frontier({{10, 0.5}});
  CHECK(std::abs(f.hypervolume({20, 1.0}) - 5.0) <= 1e-9);
  CHECK(ParetoFrontier{}.hypervolume({20, 1.0}) == 0.0);
  f = make_frontier({{10, 0.5}, {15, 0.2}});
  CHECK(std::abs(f.hypervolume({20, 1.0}) - 6.5) <= 1e-9);
  // entries outside the reference box are ignored
  f = make_frontier({{10, 0.5}, {15, 0.2}, {30, 0.1}});
  CHECK(std::abs(f.hypervolume({20, 1.0}) - 6.5) <= 1e-9);
}

TEST_CASE("frontier equals brute-force filtering on random sequences") {
  Rng rng(17);
  for (int trial = 0; trial < 200; ++trial) {
    ParetoFrontier f;
    std::vector<Objectives> inserted;
    for (int i = 0; i < 100; ++i) {
      Objectives o{1 + 99 * rng.uniform01(), rng.uniform01()};
      inserted.push_back(o);
      f.update(o, "x");
    }
    auto expected = test::brute_nondominated(inserted);
    std::sort(expected.begin(), expected.end(),
              [](const Objectives& a, const Objectives& b) {
                return a.latency_us < b.latency_us;
              });
    REQUIRE(f.size() == expected.size());
    for (size_t i = 0; i < expected.size(); ++i) {
      REQUIRE(f.entries()[i].obj.latency_us == expected[i].latency_us);
      REQUIRE(f.entries()[i].obj.resource == expected[i].resource);
    }
  }
}

TEST_CASE("frontier resources strictly decrease along increasing latency") {
  Rng rng(23);
  ParetoFrontier f;
  for (int i = 0; i < 1000; ++i) f.update({rng.uniform01() * 50 + 1, rng.uniform01()}, "x");
  for (size_t i = 1; i < f.size(); ++i) {
    CHECK(f.entries()[i].obj.latency_us > f.entries()[i - 1].obj.latency_us);
    CHECK(f.entries()[i].obj.resource < f.entries()[i - 1].obj.resource);
  }
}

TEST_CASE("pushed insertions never decrease hypervolume") {
  Rng rng(29);
  Objectives ref{120, 2.0};
  ParetoFrontier f;
  double hv = 0;
  for (int i = 0; i < 500; ++i) {
    bool pushed = f.update({rng.uniform01() * 100 + 1, rng.uniform01()}, "x");
    double now = f.hypervolume(ref);
    if (pushed) CHECK(now >= hv - 1e-12);
    hv = now;
  }
}

TEST_CASE("frontier csv export") {
  ParetoFrontier f = make_frontier({{20, 0.25}, {10, 0.5}});
  CHECK(f.to_csv() ==
        "latency_us,weighted_resource,point_id\n10,0.5,p1\n20,0.25,p0\n");
}
