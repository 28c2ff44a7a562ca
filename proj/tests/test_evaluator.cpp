#include <chrono>
#include <cmath>

#include "doctest.h"
#include "dse/evaluator.hpp"
#include "test_util.hpp"

using namespace dse;

namespace {

DesignPoint s1_point(Config l1, int f1, Config l2, int f2, Config a1, int fa) {
  return DesignPoint{{{l1, f1}, {l2, f2}, {a1, fa}}};
}

}  // namespace

TEST_CASE("eval_s1 worked examples") {
  DesignSpace space = test::s1_space();

  SUBCASE("all none") {
    EvaluationRecord r =
        eval_s1(s1_point(Config::none, 1, Config::none, 1, Config::none, 1), space);
    REQUIRE(r.status == EvalStatus::ok);
    CHECK(std::abs(*r.latency_us - 122.88) <= 1e-9);
    CHECK(std::abs(r.ratios->dsp - 2.0 / 220) <= 1e-12);
    CHECK(std::abs(r.ratios->ff - 580.0 / 106400) <= 1e-12);
    CHECK(std::abs(r.ratios->lut - 920.0 / 53200) <= 1e-12);
    CHECK(std::abs(r.ratios->bram - 1.0 / 280) <= 1e-12);
  }
  SUBCASE("pipeline island fast point") {
    EvaluationRecord r =
        eval_s1(s1_point(Config::pipeline, 1, Config::unroll, 64, Config::complete, 1), space);
    REQUIRE(r.status == EvalStatus::ok);
    CHECK(std::abs(*r.latency_us - 0.76) <= 1e-9);
    CHECK(std::abs(r.ratios->dsp - 128.0 / 220) <= 1e-12);
    CHECK(std::abs(r.ratios->ff - 6772.0 / 106400) <= 1e-12);
    CHECK(std::abs(r.ratios->lut - 8480.0 / 53200) <= 1e-12);
    CHECK(r.ratios->bram == 0.0);
  }
  SUBCASE("pipeline without full inner parallelism errors") {
    EvaluationRecord r =
        eval_s1(s1_point(Config::pipeline, 1, Config::unroll, 8, Config::cyclic, 8), space);
    CHECK(r.status == EvalStatus::error);
    CHECK_FALSE(r.latency_us.has_value());
    CHECK_FALSE(r.ratios.has_value());
  }
  SUBCASE("replication above 256 times out") {
    EvaluationRecord r =
        eval_s1(s1_point(Config::unroll, 64, Config::unroll, 64, Config::complete, 1), space);
    CHECK(r.status == EvalStatus::timeout);
  }
}

TEST_CASE("synthetic evaluation is a pure function of the point") {
  DesignSpace space = test::s1_space();
  EvaluatorSpec spec = parse_evaluator_arg("synthetic:S1");
  DesignPoint p = s1_point(Config::unroll, 8, Config::pipeline, 1, Config::block, 4);
  EvaluationRecord a = evaluate(spec, p, space);
  EvaluationRecord b = evaluate(spec, p, space);
  CHECK(a.point_id == b.point_id);
  CHECK(a.status == b.status);
  CHECK(a.latency_us == b.latency_us);
  CHECK(a.wall_time_s == b.wall_time_s);
}

TEST_CASE("brute_force over S1") {
  DesignSpace space = test::s1_space();
  auto all = brute_force("S1", space);
  REQUIRE(all.size() == 896);

  double min_ok_latency = 1e18;
  ResourceWeights w;
  for (const auto& [point, record] : all) {
    if (record.status != EvalStatus::ok) {
      REQUIRE_FALSE(record.latency_us.has_value());
      REQUIRE_FALSE(record.ratios.has_value());
      continue;
    }
    min_ok_latency = std::min(min_ok_latency, *record.latency_us);
  }
  // fastest reachable point per the fixture formulas: 32 cycles
  CHECK(std::abs(min_ok_latency - 0.32) <= 1e-9);
}

TEST_CASE("S1 feasibility island is exactly the stated one") {
  DesignSpace space = test::s1_space();
  for (const auto& [point, record] : brute_force("S1", space)) {
    if (point.assignments[0].config != Config::pipeline) continue;
    if (record.status != EvalStatus::ok) continue;
    const Assignment& a1 = point.assignments[2];
    bool island = a1.config == Config::complete ||
                  (a1.config == Config::cyclic && a1.factor == 64);
    CHECK(island);
    CHECK(point.assignments[1] == Assignment{Config::unroll, 64});
  }
}

TEST_CASE("eval_s2 structural checks") {
  DesignSpace space = test::s2_space();

  DesignPoint slow{{{Config::none, 1},
                    {Config::none, 1},
                    {Config::none, 1},
                    {Config::none, 1},
                    {Config::none, 1}}};
  EvaluationRecord r = eval_s2(slow, space);
  REQUIRE(r.status == EvalStatus::ok);
  CHECK(std::abs(*r.latency_us - 983.04) <= 1e-9);

  // l2 pipeline demands full inner parallelism
  DesignPoint err{{{Config::none, 1},
                   {Config::pipeline, 1},
                   {Config::unroll, 8},
                   {Config::cyclic, 8},
                   {Config::cyclic, 8}}};
  CHECK(eval_s2(err, space).status == EvalStatus::error);

  // replication 2*1024 exceeds the budget
  DesignPoint to{{{Config::unroll, 2},
                  {Config::unroll, 32},
                  {Config::unroll, 32},
                  {Config::cyclic, 32},
                  {Config::cyclic, 32}}};
  CHECK(eval_s2(to, space).status == EvalStatus::timeout);

  // the narrower array bounds e3: cyclic(4) on a2 caps the unroll-32 inner loop
  DesignPoint capped{{{Config::none, 1},
                      {Config::none, 1},
                      {Config::unroll, 32},
                      {Config::cyclic, 32},
                      {Config::cyclic, 4}}};
  EvaluationRecord rc = eval_s2(capped, space);
  REQUIRE(rc.status == EvalStatus::ok);
  // e3 = 4, c3 = 16, c23 = 32*16, C = 32*512 cycles -> 163.84 us
  CHECK(std::abs(*rc.latency_us - 163.84) <= 1e-9);
}

TEST_CASE("fixture space checking") {
  CHECK_THROWS_WITH_AS(check_fixture_space("S1", test::s2_space()),
                       doctest::Contains("does not match"), std::runtime_error);
  CHECK_NOTHROW(check_fixture_space("S1", test::s1_space()));
  CHECK_NOTHROW(check_fixture_space("S2", test::s2_space()));
}

TEST_CASE("parse_evaluator_arg") {
  EvaluatorSpec s = parse_evaluator_arg("synthetic:S2");
  CHECK(s.kind == EvaluatorSpec::Kind::synthetic);
  CHECK(s.fixture_id == "S2");
  CHECK(s.available.dsp == 2520);

  EvaluatorSpec sub = parse_evaluator_arg("subprocess:mytool --point {point_file}");
  CHECK(sub.kind == EvaluatorSpec::Kind::subprocess);

  CHECK_THROWS(parse_evaluator_arg("synthetic:NOPE"));
  CHECK_THROWS(parse_evaluator_arg("subprocess:no-placeholder"));
  CHECK_THROWS(parse_evaluator_arg("garbage"));
}

TEST_CASE("subprocess evaluator happy path") {
  DesignSpace space = test::s1_space();
  EvaluatorSpec spec = parse_evaluator_arg(
      "subprocess:cat {point_file} > /dev/null && "
      "echo '{\"status\":\"ok\",\"latency_us\":5.0,\"lut\":100,\"ff\":200,\"dsp\":2,\"bram\":1}'");
  spec.timeout_s = 10.0;
  EvaluationRecord r =
      evaluate(spec, s1_point(Config::none, 1, Config::none, 1, Config::none, 1), space);
  REQUIRE(r.status == EvalStatus::ok);
  CHECK(*r.latency_us == 5.0);
  CHECK(std::abs(r.ratios->lut - 100.0 / 53200) <= 1e-12);
  CHECK(std::abs(r.ratios->ff - 200.0 / 106400) <= 1e-12);
  CHECK(std::abs(r.ratios->dsp - 2.0 / 220) <= 1e-12);
  CHECK(std::abs(r.ratios->bram - 1.0 / 280) <= 1e-12);
}

TEST_CASE("subprocess evaluator sees the point file schema") {
  DesignSpace space = test::s1_space();
  // child validates the JSON itself: reports ok only if the file has the
  // expected assignment for knob l2
  EvaluatorSpec spec = parse_evaluator_arg(
      "subprocess:grep -q '\"l2\":{\"config\":\"unroll\",\"factor\":8}' {point_file} && "
      "echo '{\"status\":\"ok\",\"latency_us\":1,\"lut\":0,\"ff\":0,\"dsp\":0,\"bram\":0}' || "
      "echo '{\"status\":\"error\"}'");
  spec.timeout_s = 10.0;
  CHECK(evaluate(spec, s1_point(Config::none, 1, Config::unroll, 8, Config::none, 1), space)
            .status == EvalStatus::ok);
  CHECK(evaluate(spec, s1_point(Config::none, 1, Config::unroll, 4, Config::none, 1), space)
            .status == EvalStatus::error);
}

TEST_CASE("subprocess timeout is enforced and bounded") {
  DesignSpace space = test::s1_space();
  EvaluatorSpec spec = parse_evaluator_arg("subprocess:sleep 2; cat {point_file}");
  spec.timeout_s = 0.3;
  auto t0 = std::chrono::steady_clock::now();
  EvaluationRecord r =
      evaluate(spec, s1_point(Config::none, 1, Config::none, 1, Config::none, 1), space);
  double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  CHECK(r.status == EvalStatus::timeout);
  CHECK(r.wall_time_s >= 0.3);
  CHECK(wall < 1.3);  // timeout_s + 1s hard bound
}

TEST_CASE("subprocess malformed output and error statuses") {
  DesignSpace space = test::s1_space();
  DesignPoint p = s1_point(Config::none, 1, Config::none, 1, Config::none, 1);

  EvaluatorSpec bad = parse_evaluator_arg("subprocess:echo not-json # {point_file}");
  bad.timeout_s = 10;
  CHECK(evaluate(bad, p, space).status == EvalStatus::error);

  EvaluatorSpec err = parse_evaluator_arg("subprocess:echo '{\"status\":\"error\"}' # {point_file}");
  err.timeout_s = 10;
  CHECK(evaluate(err, p, space).status == EvalStatus::error);

  // missing fields
  EvaluatorSpec missing =
      parse_evaluator_arg("subprocess:echo '{\"status\":\"ok\",\"latency_us\":5}' # {point_file}");
  missing.timeout_s = 10;
  CHECK(evaluate(missing, p, space).status == EvalStatus::error);

  // nonzero exit with parseable ok output is still ok
  EvaluatorSpec exit1 = parse_evaluator_arg(
      "subprocess:echo '{\"status\":\"ok\",\"latency_us\":5,\"lut\":1,\"ff\":1,\"dsp\":1,\"bram\":1}'; "
      "false # {point_file}");
  exit1.timeout_s = 10;
  CHECK(evaluate(exit1, p, space).status == EvalStatus::ok);
}

TEST_CASE("point json round trip") {
  DesignSpace space = test::s2_space();
  Rng rng(3);
  for (int i = 0; i < 50; ++i) {
    DesignPoint p = random_point(space, rng);
    CHECK(point_from_json(space, point_to_json(space, p)) == p);
  }
}

TEST_CASE("dataset duplicate lookup") {
  Dataset d;
  DesignPoint a{{{Config::unroll, 4}}};
  DesignPoint b{{{Config::unroll, 8}}};
  CHECK_FALSE(d.contains(a));
  EvaluationRecord r;
  r.point_id = point_id(a);
  r.status = EvalStatus::error;
  d.append(a, r);
  CHECK(d.contains(a));
  CHECK_FALSE(d.contains(b));
  CHECK(d.find_by_id(point_id(a)) != nullptr);
  CHECK(d.find_by_id(point_id(b)) == nullptr);
}
