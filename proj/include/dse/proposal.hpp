#pragma once

#include <string_view>
#include <vector>

#include "dse/design_space.hpp"
#include "dse/evaluator.hpp"
#include "dse/pareto.hpp"
#include "dse/probability.hpp"
#include "dse/rng.hpp"
#include "dse/surrogate.hpp"

namespace dse {

/// Arm order is fixed: random, evolutionary, mutational.
enum class Engine { random_engine = 0, evolutionary = 1, mutational = 2 };

std::string_view engine_name(Engine e);

struct EvolutionParams {
  int n_families = 5;
  int n_offspring = 10;
  double mutation_rate = 0.1;
  /// Resource multiplier vs. the latency-wise projected frontier point under
  /// which an evaluated point joins the breeding population.
  double population_threshold = 1.2;
};

struct Proposal {
  DesignPoint point;
  GateResult gate;
  Engine engine = Engine::random_engine;
  /// Every generated candidate was already in the evaluated dataset; the
  /// orchestrator counts the attempt as a failure without evaluating.
  bool duplicate = false;
};

struct PopulationMember {
  DesignPoint point;
  double latency_us = 0;
  double resource = 0;
};

/// Successful points whose actual weighted resource is within
/// threshold x the frontier projection at their latency.
std::vector<PopulationMember> select_population(const Dataset& dataset,
                                                const ParetoFrontier& frontier,
                                                const ResourceWeights& weights,
                                                double threshold);

/// Uniform per-knob crossover. Array groups inherit the partitioning type
/// jointly from one parent; when the parents agree on the type, member
/// factors still mix per knob.
DesignPoint crossover(const DesignPoint& father, const DesignPoint& mother,
                      const DesignSpace& space, Rng& rng);

/// Independently reassigns each knob with probability `rate`, drawing
/// uniformly from its options excluding the current value. Type changes on a
/// grouped knob carry the whole group along.
DesignPoint mutate(const DesignPoint& point, const DesignSpace& space, double rate, Rng& rng);

Proposal propose_random(const DesignSpace& space, const SurrogateBundle& bundle,
                        const ParetoFrontier& frontier, const GateParams& gate, Rng& rng);

/// Breeds population fathers with frontier-neighbor mothers, scores offspring
/// and mutants with the gate, and returns the highest-probability candidate
/// not yet evaluated (generation order breaks ties).
Proposal propose_evolutionary(const Dataset& dataset, const ParetoFrontier& frontier,
                              const SurrogateBundle& bundle, const DesignSpace& space,
                              const EvolutionParams& params, const GateParams& gate, Rng& rng);

/// Mutates one uniformly chosen frontier point n_mutants times and returns
/// the best-scoring unseen mutant.
Proposal propose_mutational(const ParetoFrontier& frontier, const Dataset& dataset,
                            const SurrogateBundle& bundle, const DesignSpace& space,
                            int n_mutants, double mutation_rate, const GateParams& gate,
                            Rng& rng);

}  // namespace dse
