#include "dse/explorer.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <stdexcept>

namespace dse {

namespace {

using nlohmann::json;

constexpr int kCheckpointVersion = 1;

json weights_to_json(const ResourceWeights& w) {
  return json{{"lut", w.lut}, {"ff", w.ff}, {"dsp", w.dsp}, {"bram", w.bram}};
}

json ratios_to_json(const ResourceRatios& r) {
  return json{{"lut", r.lut}, {"ff", r.ff}, {"dsp", r.dsp}, {"bram", r.bram}};
}

ResourceRatios ratios_from_json(const json& j) {
  return ResourceRatios{j.at("lut"), j.at("ff"), j.at("dsp"), j.at("bram")};
}

json forest_to_json(const ForestParams& p) {
  json j{{"n_trees", p.n_trees},
         {"max_depth", p.max_depth},
         {"min_samples_leaf", p.min_samples_leaf},
         {"bootstrap_fraction", p.bootstrap_fraction},
         {"seed", p.seed}};
  if (p.features_per_split == kFeaturesAll) j["features_per_split"] = "all";
  else if (p.features_per_split == kFeaturesSqrt) j["features_per_split"] = "sqrt";
  else j["features_per_split"] = p.features_per_split;
  return j;
}

json engines_to_json(const std::vector<Engine>& engines) {
  json j = json::array();
  for (Engine e : engines) j.push_back(std::string(engine_name(e)));
  return j;
}

Engine engine_from_name(const std::string& name) {
  for (Engine e : {Engine::random_engine, Engine::evolutionary, Engine::mutational})
    if (engine_name(e) == name) return e;
  throw std::runtime_error("unknown engine name: " + name);
}

template <typename T>
void take(const json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

void check_keys(const json& j, std::initializer_list<const char*> allowed) {
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool ok = false;
    for (const char* k : allowed) ok |= it.key() == k;
    if (!ok) throw std::runtime_error("unknown config key: " + it.key());
  }
}

}  // namespace

json config_to_json(const ExplorerConfig& c) {
  json j{{"n_init", c.n_init},
         {"max_points", c.max_points},
         {"weights", weights_to_json(c.weights)},
         {"delta_evolutionary", c.delta_evolutionary},
         {"delta_mutational", c.delta_mutational},
         {"delta_random", c.delta_random},
         {"evolution",
          {{"n_families", c.evolution.n_families},
           {"n_offspring", c.evolution.n_offspring},
           {"mutation_rate", c.evolution.mutation_rate},
           {"population_threshold", c.evolution.population_threshold}}},
         {"n_mutants", c.n_mutants},
         {"bandit_window", c.bandit_window},
         {"forest", forest_to_json(c.forest)},
         {"seed", c.seed},
         {"max_proposal_retries", c.max_proposal_retries},
         {"engines", engines_to_json(c.engines)}};
  if (c.time_budget_s) j["time_budget_s"] = *c.time_budget_s;
  return j;
}

void apply_config_overrides(ExplorerConfig& c, const json& j) {
  check_keys(j, {"n_init", "max_points", "time_budget_s", "weights", "delta_evolutionary",
                 "delta_mutational", "delta_random", "evolution", "n_mutants",
                 "bandit_window", "forest", "seed", "max_proposal_retries", "engines"});
  take(j, "n_init", c.n_init);
  take(j, "max_points", c.max_points);
  if (j.contains("time_budget_s")) c.time_budget_s = j.at("time_budget_s").get<double>();
  if (j.contains("weights")) {
    const json& w = j.at("weights");
    check_keys(w, {"lut", "ff", "dsp", "bram"});
    take(w, "lut", c.weights.lut);
    take(w, "ff", c.weights.ff);
    take(w, "dsp", c.weights.dsp);
    take(w, "bram", c.weights.bram);
  }
  take(j, "delta_evolutionary", c.delta_evolutionary);
  take(j, "delta_mutational", c.delta_mutational);
  take(j, "delta_random", c.delta_random);
  if (j.contains("evolution")) {
    const json& e = j.at("evolution");
    check_keys(e, {"n_families", "n_offspring", "mutation_rate", "population_threshold"});
    take(e, "n_families", c.evolution.n_families);
    take(e, "n_offspring", c.evolution.n_offspring);
    take(e, "mutation_rate", c.evolution.mutation_rate);
    take(e, "population_threshold", c.evolution.population_threshold);
  }
  take(j, "n_mutants", c.n_mutants);
  take(j, "bandit_window", c.bandit_window);
  if (j.contains("forest")) {
    const json& f = j.at("forest");
    check_keys(f, {"n_trees", "max_depth", "min_samples_leaf", "bootstrap_fraction",
                   "features_per_split", "seed"});
    take(f, "n_trees", c.forest.n_trees);
    take(f, "max_depth", c.forest.max_depth);
    take(f, "min_samples_leaf", c.forest.min_samples_leaf);
    take(f, "bootstrap_fraction", c.forest.bootstrap_fraction);
    take(f, "seed", c.forest.seed);
    if (f.contains("features_per_split")) {
      const json& v = f.at("features_per_split");
      if (v.is_string() && v == "all") c.forest.features_per_split = kFeaturesAll;
      else if (v.is_string() && v == "sqrt") c.forest.features_per_split = kFeaturesSqrt;
      else if (v.is_number_integer()) c.forest.features_per_split = v.get<int>();
      else throw std::runtime_error("features_per_split: expected integer, \"all\" or \"sqrt\"");
    }
  }
  take(j, "seed", c.seed);
  take(j, "max_proposal_retries", c.max_proposal_retries);
  if (j.contains("engines")) {
    c.engines.clear();
    for (const auto& name : j.at("engines")) c.engines.push_back(engine_from_name(name));
  }
}

void validate_config(const ExplorerConfig& c) {
  auto require = [](bool ok, const char* msg) {
    if (!ok) throw std::runtime_error(std::string("config: ") + msg);
  };
  require(c.n_init >= 1, "n_init must be >= 1");
  require(c.max_points >= c.n_init, "max_points must be >= n_init");
  require(!c.time_budget_s || *c.time_budget_s > 0, "time_budget_s must be > 0");
  require(c.weights.lut >= 0 && c.weights.ff >= 0 && c.weights.dsp >= 0 &&
              c.weights.bram >= 0,
          "weights must be >= 0");
  require(c.weights.lut + c.weights.ff + c.weights.dsp + c.weights.bram > 0,
          "weights must not all be zero");
  require(c.delta_evolutionary > 0 && c.delta_mutational > 0 && c.delta_random > 0,
          "delta values must be > 0");
  require(c.evolution.n_families >= 1, "n_families must be >= 1");
  require(c.evolution.n_offspring >= 1, "n_offspring must be >= 1");
  require(c.evolution.mutation_rate >= 0 && c.evolution.mutation_rate <= 1,
          "mutation_rate must be in [0,1]");
  require(c.evolution.population_threshold >= 1, "population_threshold must be >= 1");
  require(c.n_mutants >= 1, "n_mutants must be >= 1");
  require(c.bandit_window >= 0, "bandit_window must be >= 0");
  require(c.forest.n_trees >= 1 && c.forest.max_depth >= 1 &&
              c.forest.min_samples_leaf >= 1,
          "forest: n_trees, max_depth, min_samples_leaf must be >= 1");
  require(c.forest.bootstrap_fraction > 0 && c.forest.bootstrap_fraction <= 1,
          "forest: bootstrap_fraction must be in (0,1]");
  require(c.max_proposal_retries >= 0, "max_proposal_retries must be >= 0");
  require(!c.engines.empty(), "engines must not be empty");
  for (size_t i = 0; i < c.engines.size(); ++i)
    for (size_t k = i + 1; k < c.engines.size(); ++k)
      require(c.engines[i] != c.engines[k], "engines must be distinct");
}

json record_to_json(const EvaluationRecord& r) {
  json j{{"point_id", r.point_id},
         {"status", std::string(status_name(r.status))},
         {"wall_time_s", r.wall_time_s}};
  j["latency_us"] = r.latency_us ? json(*r.latency_us) : json(nullptr);
  j["ratios"] = r.ratios ? ratios_to_json(*r.ratios) : json(nullptr);
  return j;
}

EvaluationRecord record_from_json(const json& j) {
  EvaluationRecord r;
  r.point_id = j.at("point_id");
  std::string status = j.at("status");
  if (status == "ok") r.status = EvalStatus::ok;
  else if (status == "error") r.status = EvalStatus::error;
  else if (status == "timeout") r.status = EvalStatus::timeout;
  else throw std::runtime_error("record: unknown status " + status);
  r.wall_time_s = j.at("wall_time_s");
  if (!j.at("latency_us").is_null()) r.latency_us = j.at("latency_us").get<double>();
  if (!j.at("ratios").is_null()) r.ratios = ratios_from_json(j.at("ratios"));
  if ((r.status == EvalStatus::ok) != (r.latency_us && r.ratios))
    throw std::runtime_error("record: status and objective fields disagree");
  return r;
}

Explorer::Explorer(ExplorerConfig config, DesignSpace space, EvaluatorSpec evaluator)
    : config_(std::move(config)),
      space_(std::move(space)),
      evaluator_(std::move(evaluator)),
      sampling_rng_(substream_seed(config_.seed, "sampling")),
      bandit_rng_(substream_seed(config_.seed, "bandit")),
      engines_rng_(substream_seed(config_.seed, "engines")),
      gate_rng_(substream_seed(config_.seed, "gate")),
      started_(std::chrono::steady_clock::now()) {
  validate_config(config_);
  forest_ = config_.forest;
  if (forest_.seed == 0) forest_.seed = substream_seed(config_.seed, "forest");
  gate_random_ = GateParams{config_.delta_random, config_.weights};
  gate_evolutionary_ = GateParams{config_.delta_evolutionary, config_.weights};
  gate_mutational_ = GateParams{config_.delta_mutational, config_.weights};
  for (Engine e : config_.engines) {
    arms_.push_back(ArmState{e, static_cast<size_t>(config_.bandit_window), {}});
    arm_totals_.emplace_back(0, 0);
  }
}

double Explorer::elapsed_s() const {
  return prior_elapsed_s_ +
         std::chrono::duration<double>(std::chrono::steady_clock::now() - started_).count();
}

bool Explorer::append_record(const DesignPoint& point, const EvaluationRecord& record) {
  features_.push_back(encode(space_, point));
  records_.push_back(record);
  dataset_.append(point, record);
  if (record.status != EvalStatus::ok) return false;
  Objectives obj{*record.latency_us, weighted_resource(*record.ratios, config_.weights)};
  return frontier_.update(obj, record.point_id);
}

void Explorer::initialize() {
  if (initialized_) throw std::logic_error("Explorer::initialize called twice");
  for (int k = 0; k < config_.n_init; ++k) {
    DesignPoint point = random_point(space_, sampling_rng_);
    for (int retry = 0; retry < config_.max_proposal_retries && dataset_.contains(point);
         ++retry)
      point = random_point(space_, sampling_rng_);
    EvaluationRecord record = evaluate(evaluator_, point, space_);
    ++evaluator_calls_;
    bool pushed = append_record(point, record);
    json line{{"phase", "init"},
              {"iter", k},
              {"point", point_to_json(space_, point)},
              {"result", record_to_json(record)},
              {"pushed", pushed},
              {"evaluator_calls", evaluator_calls_}};
    history_.push_back(line.dump());
  }
  initialized_ = true;
}

bool Explorer::finished() const {
  if (!initialized_) return false;
  if (evaluator_calls_ >= config_.max_points) return true;
  if (iterations_ >= 100 * config_.max_points) return true;  // livelock guard
  if (config_.time_budget_s && elapsed_s() >= *config_.time_budget_s) return true;
  return false;
}

const GateParams& Explorer::gate_for(Engine method) const {
  switch (method) {
    case Engine::random_engine: return gate_random_;
    case Engine::evolutionary: return gate_evolutionary_;
    case Engine::mutational: return gate_mutational_;
  }
  throw std::logic_error("gate_for: bad engine");
}

Proposal Explorer::propose(Engine method) {
  // with no successful record yet there is no frontier to breed against;
  // every engine degrades to a gated random draw
  if (frontier_.empty() || method == Engine::random_engine) {
    Proposal p = propose_random(space_, bundle_, frontier_, gate_for(method), engines_rng_);
    p.engine = method;
    return p;
  }
  if (method == Engine::evolutionary)
    return propose_evolutionary(dataset_, frontier_, bundle_, space_, config_.evolution,
                                gate_evolutionary_, engines_rng_);
  return propose_mutational(frontier_, dataset_, bundle_, space_, config_.n_mutants,
                            config_.evolution.mutation_rate, gate_mutational_, engines_rng_);
}

bool Explorer::step() {
  if (!initialized_) throw std::logic_error("Explorer::step before initialize");
  if (finished()) return false;

  // a rejected iteration adds no data, and retraining is deterministic in
  // (dataset, seed), so rebuilding would reproduce the same bundle; skip it
  if (bundle_trained_on_ != records_.size()) {
    bundle_ = retrain_bundle(features_, records_, forest_);
    bundle_trained_on_ = records_.size();
  }
  size_t arm_index = select_method(arms_, bandit_rng_);
  Engine method = arms_[arm_index].method;
  Proposal proposal = propose(method);

  bool duplicate = proposal.duplicate || dataset_.contains(proposal.point);
  bool accepted = duplicate ? false : accept(proposal.gate.p_eval, gate_rng_);
  bool success = false;
  json result = nullptr;
  bool pushed = false;
  if (accepted) {
    EvaluationRecord record = evaluate(evaluator_, proposal.point, space_);
    ++evaluator_calls_;
    pushed = append_record(proposal.point, record);
    success = record.status == EvalStatus::ok && pushed;
    result = record_to_json(record);
  }
  record_outcome(arms_[arm_index], success);
  ++arm_totals_[arm_index].first;
  if (success) ++arm_totals_[arm_index].second;
  ++iterations_;

  json arms = json::array();
  for (const ArmState& arm : arms_)
    arms.push_back(json{{"method", std::string(engine_name(arm.method))},
                        {"alpha", arm.alpha()},
                        {"beta", arm.beta_param()}});
  json line{{"phase", "explore"},
            {"iter", iterations_ - 1},
            {"method", std::string(engine_name(method))},
            {"point", point_to_json(space_, proposal.point)},
            {"gate",
             {{"p_budget", proposal.gate.p_budget},
              {"p_pareto", proposal.gate.p_pareto},
              {"p_timeout", proposal.gate.p_timeout},
              {"p_eval", proposal.gate.p_eval},
              {"r_pred", proposal.gate.r_pred},
              {"pred_latency_us", proposal.gate.pred_latency_us},
              {"passthrough", proposal.gate.passthrough}}},
            {"duplicate", duplicate},
            {"accepted", accepted},
            {"result", result},
            {"pushed", pushed},
            {"evaluator_calls", evaluator_calls_},
            {"arms", arms}};
  history_.push_back(line.dump());
  return true;
}

void Explorer::run() {
  if (!initialized_) initialize();
  while (step()) {
  }
}

json Explorer::summary() const {
  long n_ok = 0, n_error = 0, n_timeout = 0;
  double max_latency = 0, max_resource = 0;
  for (const auto& e : dataset_.entries()) {
    switch (e.record.status) {
      case EvalStatus::ok: ++n_ok; break;
      case EvalStatus::error: ++n_error; break;
      case EvalStatus::timeout: ++n_timeout; break;
    }
    if (e.record.status == EvalStatus::ok) {
      max_latency = std::max(max_latency, *e.record.latency_us);
      max_resource =
          std::max(max_resource, weighted_resource(*e.record.ratios, config_.weights));
    }
  }

  json arms = json::array();
  for (size_t i = 0; i < arms_.size(); ++i) {
    auto [attempts, successes] = arm_totals_[i];
    arms.push_back(json{{"method", std::string(engine_name(arms_[i].method))},
                        {"attempts", attempts},
                        {"successes", successes},
                        {"success_rate",
                         attempts > 0 ? static_cast<double>(successes) / attempts : 0.0}});
  }

  json hv = nullptr;
  if (n_ok > 0) {
    Objectives ref{1.1 * max_latency, 1.1 * max_resource};
    hv = json{{"ref_latency_us", ref.latency_us},
              {"ref_resource", ref.resource},
              {"value", frontier_.hypervolume(ref)}};
  }

  std::string stop = "running";
  if (evaluator_calls_ >= config_.max_points) stop = "budget_exhausted";
  else if (iterations_ >= 100 * config_.max_points) stop = "iteration_cap";
  else if (config_.time_budget_s && elapsed_s() >= *config_.time_budget_s) stop = "time_budget";

  return json{{"seed", config_.seed},
              {"evaluator_calls", evaluator_calls_},
              {"iterations", iterations_},
              {"status_counts", {{"ok", n_ok}, {"error", n_error}, {"timeout", n_timeout}}},
              {"frontier_size", frontier_.size()},
              {"hypervolume", hv},
              {"arms", arms},
              {"stopped", stop}};
}

void Explorer::write_outputs(const std::string& dir) const {
  std::filesystem::create_directories(dir);
  write_text_file(dir + "/pareto.csv", frontier_.to_csv());
  std::string lines;
  for (const std::string& line : history_) {
    lines += line;
    lines += '\n';
  }
  write_text_file(dir + "/history.jsonl", lines);
  write_text_file(dir + "/summary.json", summary().dump(2) + "\n");
}

json Explorer::checkpoint() const {
  json knobs = json::array();
  for (const KnobSpec& k : space_.knobs()) {
    json configs = json::array();
    for (Config c : k.allowed_configs) configs.push_back(std::string(config_name(c)));
    knobs.push_back(json{{"id", k.id},
                         {"kind", std::string(kind_name(k.kind))},
                         {"group", k.array_group},
                         {"configs", configs},
                         {"factors", k.allowed_factors}});
  }
  json evaluator{{"kind", evaluator_.kind == EvaluatorSpec::Kind::synthetic ? "synthetic"
                                                                            : "subprocess"},
                 {"command_template", evaluator_.command_template},
                 {"timeout_s", evaluator_.timeout_s},
                 {"fixture_id", evaluator_.fixture_id},
                 {"available",
                  {{"lut", evaluator_.available.lut},
                   {"ff", evaluator_.available.ff},
                   {"dsp", evaluator_.available.dsp},
                   {"bram", evaluator_.available.bram}}}};
  json dataset = json::array();
  for (const auto& e : dataset_.entries())
    dataset.push_back(json{{"point", point_to_json(space_, e.point)},
                           {"record", record_to_json(e.record)}});
  json arms = json::array();
  for (size_t i = 0; i < arms_.size(); ++i) {
    json window = json::array();
    for (bool b : arms_[i].window) window.push_back(b ? 1 : 0);
    arms.push_back(json{{"method", std::string(engine_name(arms_[i].method))},
                        {"window", window},
                        {"attempts", arm_totals_[i].first},
                        {"successes", arm_totals_[i].second}});
  }
  return json{{"version", kCheckpointVersion},
              {"config", config_to_json(config_)},
              {"space", knobs},
              {"evaluator", evaluator},
              {"initialized", initialized_},
              {"evaluator_calls", evaluator_calls_},
              {"iterations", iterations_},
              {"elapsed_s", elapsed_s()},
              {"dataset", dataset},
              {"arms", arms},
              {"rng",
               {{"sampling", sampling_rng_.save()},
                {"bandit", bandit_rng_.save()},
                {"engines", engines_rng_.save()},
                {"gate", gate_rng_.save()}}},
              {"history", history_}};
}

void Explorer::save_checkpoint(const std::string& path) const {
  write_text_file(path, checkpoint().dump() + "\n");
}

Explorer Explorer::resume(const json& ckpt) {
  if (!ckpt.is_object() || !ckpt.contains("version"))
    throw std::runtime_error("checkpoint: not a checkpoint file");
  if (ckpt.at("version").get<int>() != kCheckpointVersion)
    throw std::runtime_error("checkpoint: unsupported version");

  ExplorerConfig config;
  apply_config_overrides(config, ckpt.at("config"));

  std::vector<KnobSpec> knobs;
  for (const json& k : ckpt.at("space")) {
    KnobSpec spec;
    spec.id = k.at("id");
    spec.kind = k.at("kind") == "loop" ? KnobKind::loop : KnobKind::array;
    spec.array_group = k.at("group");
    for (const json& c : k.at("configs")) {
      auto cfg = config_from_name(c.get<std::string>());
      if (!cfg) throw std::runtime_error("checkpoint: unknown config name");
      spec.allowed_configs.push_back(*cfg);
    }
    spec.allowed_factors = k.at("factors").get<std::vector<int>>();
    knobs.push_back(std::move(spec));
  }

  const json& ev = ckpt.at("evaluator");
  EvaluatorSpec evaluator;
  evaluator.kind = ev.at("kind") == "synthetic" ? EvaluatorSpec::Kind::synthetic
                                                : EvaluatorSpec::Kind::subprocess;
  evaluator.command_template = ev.at("command_template");
  evaluator.timeout_s = ev.at("timeout_s");
  evaluator.fixture_id = ev.at("fixture_id");
  evaluator.available = ResourceCaps{ev.at("available").at("lut"), ev.at("available").at("ff"),
                                     ev.at("available").at("dsp"),
                                     ev.at("available").at("bram")};

  Explorer ex(std::move(config), DesignSpace(std::move(knobs)), std::move(evaluator));
  for (const json& row : ckpt.at("dataset"))
    ex.append_record(point_from_json(ex.space_, row.at("point")),
                     record_from_json(row.at("record")));
  const json& arms = ckpt.at("arms");
  if (arms.size() != ex.arms_.size())
    throw std::runtime_error("checkpoint: arm count does not match config");
  for (size_t i = 0; i < ex.arms_.size(); ++i) {
    for (const json& b : arms[i].at("window"))
      ex.arms_[i].window.push_back(b.get<int>() != 0);
    ex.arm_totals_[i] = {arms[i].at("attempts").get<long>(),
                         arms[i].at("successes").get<long>()};
  }
  ex.initialized_ = ckpt.at("initialized");
  ex.evaluator_calls_ = ckpt.at("evaluator_calls");
  ex.iterations_ = ckpt.at("iterations");
  ex.prior_elapsed_s_ = ckpt.at("elapsed_s");
  ex.sampling_rng_.restore(ckpt.at("rng").at("sampling"));
  ex.bandit_rng_.restore(ckpt.at("rng").at("bandit"));
  ex.engines_rng_.restore(ckpt.at("rng").at("engines"));
  ex.gate_rng_.restore(ckpt.at("rng").at("gate"));
  ex.history_ = ckpt.at("history").get<std::vector<std::string>>();
  return ex;
}

Explorer Explorer::resume_file(const std::string& path) {
  json ckpt = json::parse(read_text_file(path), nullptr, false);
  if (ckpt.is_discarded()) throw std::runtime_error("checkpoint: corrupt file " + path);
  return resume(ckpt);
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path);
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return text;
}

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << text;
  if (!out) throw std::runtime_error("write failed: " + path);
}

}  // namespace dse
