#include <cmath>
#include <filesystem>

#include "doctest.h"
#include "dse/explorer.hpp"
#include "test_util.hpp"

using namespace dse;

namespace {

ExplorerConfig small_config(uint64_t seed, int max_points = 40, int n_init = 10) {
  ExplorerConfig c;
  c.seed = seed;
  c.max_points = max_points;
  c.n_init = n_init;
  c.forest.n_trees = 12;  // keep unit tests quick
  return c;
}

Explorer s1_explorer(const ExplorerConfig& c) {
  return Explorer(c, test::s1_space(), parse_evaluator_arg("synthetic:S1"));
}

ParetoFrontier rebuild_frontier(const Dataset& d, const ResourceWeights& w) {
  ParetoFrontier f;
  for (const auto& e : d.entries()) {
    if (e.record.status != EvalStatus::ok) continue;
    f.update({*e.record.latency_us, weighted_resource(*e.record.ratios, w)},
             e.record.point_id);
  }
  return f;
}

}  // namespace

TEST_CASE("initial sampling spends exactly n_init evaluator calls") {
  Explorer ex = s1_explorer(small_config(1));
  ex.initialize();
  CHECK(ex.dataset().size() == 10);
  CHECK(ex.evaluator_calls() == 10);
  CHECK(ex.iterations() == 0);
  for (const auto& arm : ex.arms()) {
    CHECK(arm.alpha() == 1.0);
    CHECK(arm.beta_param() == 1.0);
  }
}

TEST_CASE("initial sampling is deterministic per seed and distinct points") {
  Explorer a = s1_explorer(small_config(7));
  Explorer b = s1_explorer(small_config(7));
  a.initialize();
  b.initialize();
  for (size_t i = 0; i < a.dataset().size(); ++i)
    REQUIRE(a.dataset()[i].point == b.dataset()[i].point);
  // distinct draws (896-point space, 10 samples, retries allowed)
  for (size_t i = 0; i < a.dataset().size(); ++i)
    for (size_t j = i + 1; j < a.dataset().size(); ++j)
      CHECK_FALSE(a.dataset()[i].point == a.dataset()[j].point);
}

TEST_CASE("all-failing evaluator leaves no frontier but exploration proceeds") {
  ExplorerConfig c = small_config(3, 14, 6);
  EvaluatorSpec failing = parse_evaluator_arg("subprocess:echo not-json # {point_file}");
  failing.timeout_s = 5;
  Explorer ex(c, test::s1_space(), failing);
  ex.initialize();
  CHECK(ex.frontier().empty());
  CHECK(ex.dataset().size() == 6);
  // passthrough gate: proposals all evaluate (and fail), consuming budget
  int steps = 0;
  while (ex.step()) ++steps;
  CHECK(ex.evaluator_calls() == 14);
  CHECK(ex.frontier().empty());
  for (const auto& line : ex.history()) {
    nlohmann::json j = nlohmann::json::parse(line);
    if (j["phase"] == "explore") CHECK(j["gate"]["passthrough"] == true);
  }
}

TEST_CASE("duplicate proposals consume no budget; iteration cap stops the run") {
  // one-point space: every post-init proposal is a duplicate
  DesignSpace space =
      parse_knob_file("id,kind,group,configs,factors\nl1,loop,,pipeline,\n");
  // the only point errors under S1 rules? build a subprocess echo that succeeds
  EvaluatorSpec ok_eval = parse_evaluator_arg(
      "subprocess:echo '{\"status\":\"ok\",\"latency_us\":5,\"lut\":1,\"ff\":1,\"dsp\":1,\"bram\":1}' "
      "# {point_file}");
  ok_eval.timeout_s = 5;
  ExplorerConfig c;
  c.seed = 5;
  c.n_init = 1;
  c.max_points = 3;
  c.forest.n_trees = 4;
  Explorer ex(c, space, ok_eval);
  ex.run();
  CHECK(ex.evaluator_calls() == 1);   // only the init sample
  CHECK(ex.iterations() == 30);       // 10 * max_points safety cap
  long attempts = 0;
  for (const auto& arm : ex.arms()) attempts += static_cast<long>(arm.window.size());
  nlohmann::json s = ex.summary();
  CHECK(s["stopped"] == "iteration_cap");
  long total_attempts = 0;
  for (const auto& a : s["arms"]) total_attempts += a["attempts"].get<long>();
  CHECK(total_attempts == 30);
  for (const auto& a : s["arms"]) CHECK(a["successes"] == 0);
}

TEST_CASE("run stops exactly at the evaluator budget") {
  Explorer ex = s1_explorer(small_config(11));
  ex.run();
  CHECK(ex.evaluator_calls() == 40);
  CHECK(ex.finished());
  CHECK_FALSE(ex.frontier().empty());
  CHECK(ex.summary()["stopped"] == "budget_exhausted");
}

TEST_CASE("max_points == n_init degenerates to pure random sampling") {
  ExplorerConfig c = small_config(13, 10, 10);
  Explorer ex = s1_explorer(c);
  ex.run();
  CHECK(ex.evaluator_calls() == 10);
  CHECK(ex.iterations() == 0);
  nlohmann::json s = ex.summary();
  for (const auto& a : s["arms"]) CHECK(a["attempts"] == 0);
}

TEST_CASE("frontier matches the dataset's non-dominated subset after every step") {
  ExplorerConfig c = small_config(17, 30, 8);
  Explorer ex = s1_explorer(c);
  ex.initialize();
  Objectives ref{1000, 10};
  double hv = ex.frontier().hypervolume(ref);
  while (ex.step()) {
    ParetoFrontier expected = rebuild_frontier(ex.dataset(), c.weights);
    REQUIRE(ex.frontier().size() == expected.size());
    for (size_t i = 0; i < expected.size(); ++i) {
      REQUIRE(ex.frontier().entries()[i].obj.latency_us ==
              expected.entries()[i].obj.latency_us);
      REQUIRE(ex.frontier().entries()[i].obj.resource == expected.entries()[i].obj.resource);
    }
    double now = ex.frontier().hypervolume(ref);
    REQUIRE(now >= hv - 1e-12);
    hv = now;
    REQUIRE(ex.evaluator_calls() <= c.max_points);
  }
}

TEST_CASE("arm attempt totals equal post-init iterations") {
  Explorer ex = s1_explorer(small_config(19, 35, 10));
  ex.run();
  long attempts = 0;
  nlohmann::json s = ex.summary();
  for (const auto& a : s["arms"]) attempts += a["attempts"].get<long>();
  CHECK(attempts == ex.iterations());
}

TEST_CASE("same seed gives byte-identical history") {
  Explorer a = s1_explorer(small_config(23));
  Explorer b = s1_explorer(small_config(23));
  a.run();
  b.run();
  REQUIRE(a.history().size() == b.history().size());
  for (size_t i = 0; i < a.history().size(); ++i) REQUIRE(a.history()[i] == b.history()[i]);
}

TEST_CASE("history lines carry the per-stage fields") {
  Explorer ex = s1_explorer(small_config(29, 20, 6));
  ex.run();
  REQUIRE(ex.history().size() >= 6);
  bool saw_explore = false;
  for (const auto& line : ex.history()) {
    nlohmann::json j = nlohmann::json::parse(line);
    if (j["phase"] == "init") {
      CHECK(j.contains("point"));
      CHECK(j.contains("result"));
    } else {
      saw_explore = true;
      CHECK(j.contains("method"));
      CHECK(j["gate"].contains("p_eval"));
      CHECK(j.contains("accepted"));
      CHECK(j.contains("pushed"));
      CHECK(j["arms"].size() == 3);
    }
  }
  CHECK(saw_explore);
}

TEST_CASE("checkpoint round-trips bit-identically through resume") {
  ExplorerConfig c = small_config(31, 36, 9);
  Explorer full = s1_explorer(c);
  full.run();

  Explorer split = s1_explorer(c);
  split.initialize();
  for (int i = 0; i < 12; ++i) split.step();
  nlohmann::json ckpt = split.checkpoint();

  Explorer resumed = Explorer::resume(ckpt);
  while (resumed.step()) {
  }
  REQUIRE(resumed.history().size() == full.history().size());
  for (size_t i = 0; i < full.history().size(); ++i)
    REQUIRE(resumed.history()[i] == full.history()[i]);
  CHECK(resumed.frontier().to_csv() == full.frontier().to_csv());
  CHECK(resumed.summary()["evaluator_calls"] == full.summary()["evaluator_calls"]);
}

TEST_CASE("zero-step checkpoint/resume is an identity") {
  Explorer ex = s1_explorer(small_config(37, 20, 8));
  ex.initialize();
  for (int i = 0; i < 3; ++i) ex.step();
  nlohmann::json a = ex.checkpoint();
  nlohmann::json b = Explorer::resume(a).checkpoint();
  a.erase("elapsed_s");
  b.erase("elapsed_s");
  CHECK(a == b);
}

TEST_CASE("corrupt or mismatched checkpoints are rejected") {
  std::string dir = std::filesystem::temp_directory_path() / "dse_test_ckpt";
  std::filesystem::create_directories(dir);
  write_text_file(dir + "/truncated.json", "{\"version\": 1, \"config\": {");
  CHECK_THROWS_WITH_AS(Explorer::resume_file(dir + "/truncated.json"),
                       doctest::Contains("corrupt"), std::runtime_error);
  CHECK_THROWS_WITH_AS(Explorer::resume(nlohmann::json{{"version", 99}}),
                       doctest::Contains("version"), std::runtime_error);
}

TEST_CASE("config validation and overrides") {
  ExplorerConfig c;
  CHECK_NOTHROW(validate_config(c));
  c.n_init = 0;
  CHECK_THROWS(validate_config(c));
  c = ExplorerConfig{};
  c.n_init = c.max_points + 1;
  CHECK_THROWS(validate_config(c));

  c = ExplorerConfig{};
  apply_config_overrides(c, nlohmann::json::parse(R"({
    "seed": 9, "max_points": 60,
    "weights": {"dsp": 0.7},
    "evolution": {"n_offspring": 4},
    "forest": {"n_trees": 10, "features_per_split": "all"},
    "engines": ["random"]
  })"));
  CHECK(c.seed == 9);
  CHECK(c.max_points == 60);
  CHECK(c.weights.dsp == 0.7);
  CHECK(c.weights.lut == 0.1);  // untouched
  CHECK(c.evolution.n_offspring == 4);
  CHECK(c.evolution.n_families == 5);  // untouched
  CHECK(c.forest.features_per_split == kFeaturesAll);
  REQUIRE(c.engines.size() == 1);
  CHECK(c.engines[0] == Engine::random_engine);

  CHECK_THROWS_WITH_AS(apply_config_overrides(c, nlohmann::json{{"bogus", 1}}),
                       doctest::Contains("unknown config key"), std::runtime_error);
  // round trip
  ExplorerConfig d;
  apply_config_overrides(d, config_to_json(c));
  CHECK(config_to_json(d) == config_to_json(c));
}

TEST_CASE("write_outputs produces the three report files") {
  std::string dir = (std::filesystem::temp_directory_path() / "dse_test_out").string();
  std::filesystem::remove_all(dir);
  Explorer ex = s1_explorer(small_config(41, 16, 6));
  ex.run();
  ex.write_outputs(dir);
  CHECK(std::filesystem::exists(dir + "/pareto.csv"));
  CHECK(std::filesystem::exists(dir + "/history.jsonl"));
  CHECK(std::filesystem::exists(dir + "/summary.json"));
  std::string csv = read_text_file(dir + "/pareto.csv");
  CHECK(csv.rfind("latency_us,weighted_resource,point_id\n", 0) == 0);
  nlohmann::json summary = nlohmann::json::parse(read_text_file(dir + "/summary.json"));
  CHECK(summary["evaluator_calls"] == 16);
  long n = summary["status_counts"]["ok"].get<long>() +
           summary["status_counts"]["error"].get<long>() +
           summary["status_counts"]["timeout"].get<long>();
  CHECK(n == 16);
}

TEST_CASE("random-only engine configuration runs") {
  ExplorerConfig c = small_config(43, 25, 8);
  c.engines = {Engine::random_engine};
  Explorer ex = s1_explorer(c);
  ex.run();
  CHECK(ex.evaluator_calls() == 25);
  nlohmann::json s = ex.summary();
  REQUIRE(s["arms"].size() == 1);
  CHECK(s["arms"][0]["method"] == "random");
  for (const auto& line : ex.history()) {
    nlohmann::json j = nlohmann::json::parse(line);
    if (j["phase"] == "explore") REQUIRE(j["method"] == "random");
  }
}
