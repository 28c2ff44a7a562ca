#pragma once

#include <chrono>
#include <optional>
#include <string>
#include <vector>

#include "dse/bandit.hpp"
#include "dse/design_space.hpp"
#include "dse/evaluator.hpp"
#include "dse/pareto.hpp"
#include "dse/proposal.hpp"
#include "dse/rng.hpp"
#include "dse/surrogate.hpp"

#include "json.hpp"

namespace dse {

/// All run hyper-parameters. Defaults follow the reference setup: 170-call
/// budget with 20 initial samples, mutation rate 0.1, population threshold
/// 1.2, delta 1.0 for the greedy engines and 1.5 for random, resource
/// weights 0.1/0.1/0.4/0.4.
struct ExplorerConfig {
  int n_init = 20;
  int max_points = 170;  // every evaluator call counts, including failures
  std::optional<double> time_budget_s;
  ResourceWeights weights;
  double delta_evolutionary = 1.0;
  double delta_mutational = 1.0;
  double delta_random = 1.5;
  EvolutionParams evolution;
  int n_mutants = 30;
  int bandit_window = 50;  // 0 = unbounded
  ForestParams forest;     // forest.seed 0 derives from the master seed
  uint64_t seed = 0;
  int max_proposal_retries = 20;
  std::vector<Engine> engines = {Engine::random_engine, Engine::evolutionary,
                                 Engine::mutational};
};

nlohmann::json config_to_json(const ExplorerConfig& config);
/// Applies the keys present in `j` on top of `config`; unknown keys throw.
void apply_config_overrides(ExplorerConfig& config, const nlohmann::json& j);
/// Throws std::runtime_error on any invalid field combination.
void validate_config(const ExplorerConfig& config);

nlohmann::json record_to_json(const EvaluationRecord& record);
EvaluationRecord record_from_json(const nlohmann::json& j);

/// Drives the full exploration loop: initial sampling, per-iteration
/// retraining, Thompson-sampled engine choice, soft-boundary gating,
/// evaluation and bookkeeping. Deterministic for synthetic evaluators given
/// the config seed.
class Explorer {
 public:
  Explorer(ExplorerConfig config, DesignSpace space, EvaluatorSpec evaluator);

  /// Spends n_init evaluator calls on random samples (duplicates resampled
  /// up to max_proposal_retries, then accepted).
  void initialize();

  /// One exploration iteration. Gate-rejected and duplicate proposals count
  /// an arm failure without spending evaluator budget. Returns false when
  /// the stopping condition has been reached instead.
  bool step();

  bool initialized() const { return initialized_; }
  bool finished() const;
  /// initialize() + step() until finished.
  void run();

  const DesignSpace& space() const { return space_; }
  const ExplorerConfig& config() const { return config_; }
  const Dataset& dataset() const { return dataset_; }
  const ParetoFrontier& frontier() const { return frontier_; }
  const std::vector<ArmState>& arms() const { return arms_; }
  int evaluator_calls() const { return evaluator_calls_; }
  int iterations() const { return iterations_; }  // post-init iterations

  /// JSON-lines history, one raw line per init sample / iteration.
  const std::vector<std::string>& history() const { return history_; }
  nlohmann::json summary() const;
  /// Writes pareto.csv, history.jsonl and summary.json into `dir`.
  void write_outputs(const std::string& dir) const;

  nlohmann::json checkpoint() const;
  void save_checkpoint(const std::string& path) const;
  /// Restores a run mid-flight; stepping continues bit-identically to the
  /// uninterrupted run.
  static Explorer resume(const nlohmann::json& ckpt);
  static Explorer resume_file(const std::string& path);

 private:
  bool append_record(const DesignPoint& point, const EvaluationRecord& record);
  Proposal propose(Engine method);
  const GateParams& gate_for(Engine method) const;
  double elapsed_s() const;

  ExplorerConfig config_;
  DesignSpace space_;
  EvaluatorSpec evaluator_;
  ForestParams forest_;  // config_.forest with the seed resolved
  GateParams gate_random_, gate_evolutionary_, gate_mutational_;

  Dataset dataset_;
  std::vector<FeatureVector> features_;
  std::vector<EvaluationRecord> records_;
  ParetoFrontier frontier_;
  SurrogateBundle bundle_;
  std::vector<ArmState> arms_;
  std::vector<std::pair<long, long>> arm_totals_;  // attempts, successes (whole run)

  Rng sampling_rng_, bandit_rng_, engines_rng_, gate_rng_;
  bool initialized_ = false;
  int evaluator_calls_ = 0;
  int iterations_ = 0;
  double prior_elapsed_s_ = 0;  // accumulated across resumes
  std::chrono::steady_clock::time_point started_;
  std::vector<std::string> history_;
};

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& text);

}  // namespace dse
