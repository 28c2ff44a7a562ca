#include "dse/proposal.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace dse {

std::string_view engine_name(Engine e) {
  switch (e) {
    case Engine::random_engine: return "random";
    case Engine::evolutionary: return "evolutionary";
    case Engine::mutational: return "mutational";
  }
  return "?";
}

std::vector<PopulationMember> select_population(const Dataset& dataset,
                                                const ParetoFrontier& frontier,
                                                const ResourceWeights& weights,
                                                double threshold) {
  std::vector<PopulationMember> out;
  for (const Dataset::Entry& e : dataset.entries()) {
    if (e.record.status != EvalStatus::ok) continue;
    double latency = *e.record.latency_us;
    double resource = weighted_resource(*e.record.ratios, weights);
    auto projected = frontier.project_resource(latency);
    if (!projected || resource <= threshold * *projected)
      out.push_back(PopulationMember{e.point, latency, resource});
  }
  return out;
}

DesignPoint crossover(const DesignPoint& father, const DesignPoint& mother,
                      const DesignSpace& space, Rng& rng) {
  DesignPoint child;
  child.assignments.resize(space.size());
  std::vector<int> group_parent(space.groups().size(), -1);  // -1 undecided

  for (size_t i = 0; i < space.size(); ++i) {
    int gi = space.group_of(i);
    if (gi >= 0) {
      const auto& g = space.groups()[gi];
      Config f_type = father.assignments[g.members.front()].config;
      Config m_type = mother.assignments[g.members.front()].config;
      if (f_type != m_type) {
        // differing partitioning types cannot mix per member; the whole
        // group follows one parent
        if (group_parent[gi] < 0) group_parent[gi] = rng.bernoulli(0.5) ? 0 : 1;
        child.assignments[i] =
            group_parent[gi] == 0 ? father.assignments[i] : mother.assignments[i];
        continue;
      }
    }
    child.assignments[i] = rng.bernoulli(0.5) ? father.assignments[i] : mother.assignments[i];
  }
  return child;
}

namespace {

// options of one knob restricted to a config, excluding a value
std::vector<Option> options_of_type(const DesignSpace& space, size_t knob, Config type,
                                    const Assignment& exclude) {
  std::vector<Option> out;
  for (const Option& o : space.options(knob))
    if (o.config == type && !(o == exclude)) out.push_back(o);
  return out;
}

Assignment draw_replacement(const DesignSpace& space, size_t knob, const Assignment& current,
                            Rng& rng) {
  const auto& all = space.options(knob);
  // uniform over options excluding the current value
  size_t n = all.size() - 1;
  size_t pick = rng.uniform_int(n);
  for (const Option& o : all) {
    if (o == current) continue;
    if (pick == 0) return o;
    --pick;
  }
  throw std::logic_error("draw_replacement: current value not an option");
}

}  // namespace

DesignPoint mutate(const DesignPoint& point, const DesignSpace& space, double rate, Rng& rng) {
  DesignPoint out = point;
  std::vector<char> flagged(space.size());
  for (size_t i = 0; i < space.size(); ++i) flagged[i] = rng.bernoulli(rate) ? 1 : 0;

  std::vector<char> group_done(space.groups().size(), 0);
  for (size_t i = 0; i < space.size(); ++i) {
    if (!flagged[i]) continue;
    int gi = space.group_of(i);
    if (gi < 0) {
      if (space.options(i).size() > 1)
        out.assignments[i] = draw_replacement(space, i, out.assignments[i], rng);
      continue;
    }
    if (group_done[gi]) continue;
    group_done[gi] = 1;

    // first flagged member picks freely; its config becomes the group type
    const auto& g = space.groups()[gi];
    if (space.options(i).size() > 1)
      out.assignments[i] = draw_replacement(space, i, out.assignments[i], rng);
    Config type = out.assignments[i].config;

    for (size_t m : g.members) {
      if (m == i) continue;
      const Assignment& cur = out.assignments[m];
      if (flagged[m]) {
        auto pool = options_of_type(space, m, type, cur);
        if (!pool.empty()) out.assignments[m] = pool[rng.uniform_int(pool.size())];
        else if (cur.config != type)
          throw std::logic_error("mutate: empty option pool for group type");
      } else if (cur.config != type) {
        // unflagged member dragged along by the type change; keep its factor
        // when still legal
        if (!config_has_factor(type)) {
          out.assignments[m] = {type, 1};
        } else {
          const auto& factors = space.knobs()[m].allowed_factors;
          bool keep = std::find(factors.begin(), factors.end(), cur.factor) != factors.end();
          out.assignments[m] = {type, keep ? cur.factor
                                           : factors[rng.uniform_int(factors.size())]};
        }
      }
    }
  }
  return out;
}

Proposal propose_random(const DesignSpace& space, const SurrogateBundle& bundle,
                        const ParetoFrontier& frontier, const GateParams& gate, Rng& rng) {
  Proposal p;
  p.engine = Engine::random_engine;
  p.point = random_point(space, rng);
  p.gate = get_prob_eval(bundle, frontier, p.point, space, gate);
  return p;
}

namespace {

const DesignPoint& frontier_point(const Dataset& dataset, const ParetoFrontier::Entry& entry) {
  const Dataset::Entry* e = dataset.find_by_id(entry.point_id);
  if (!e) throw std::logic_error("frontier point missing from dataset");
  return e->point;
}

// argmax p_eval over candidates, skipping already-evaluated points; ties keep
// the earliest candidate
Proposal pick_best(std::vector<std::pair<DesignPoint, GateResult>>&& candidates,
                   const Dataset& dataset, Engine engine) {
  int best = -1, best_unseen = -1;
  for (size_t i = 0; i < candidates.size(); ++i) {
    double p = candidates[i].second.p_eval;
    if (best < 0 || p > candidates[best].second.p_eval) best = static_cast<int>(i);
    if (dataset.contains(candidates[i].first)) continue;
    if (best_unseen < 0 || p > candidates[best_unseen].second.p_eval)
      best_unseen = static_cast<int>(i);
  }
  Proposal out;
  out.engine = engine;
  out.duplicate = best_unseen < 0;
  int chosen = out.duplicate ? best : best_unseen;
  out.point = std::move(candidates[chosen].first);
  out.gate = candidates[chosen].second;
  return out;
}

}  // namespace

Proposal propose_evolutionary(const Dataset& dataset, const ParetoFrontier& frontier,
                              const SurrogateBundle& bundle, const DesignSpace& space,
                              const EvolutionParams& params, const GateParams& gate,
                              Rng& rng) {
  if (frontier.empty()) throw std::logic_error("propose_evolutionary: empty frontier");
  std::vector<PopulationMember> population =
      select_population(dataset, frontier, gate.weights, params.population_threshold);
  if (population.empty()) {
    // frontier points always qualify; reconstruct them directly
    for (const auto& entry : frontier.entries())
      population.push_back(PopulationMember{frontier_point(dataset, entry),
                                            entry.obj.latency_us, entry.obj.resource});
  }

  const auto& entries = frontier.entries();
  std::vector<std::pair<DesignPoint, GateResult>> candidates;
  candidates.reserve(2 * params.n_families * params.n_offspring);

  for (int fam = 0; fam < params.n_families; ++fam) {
    const PopulationMember& father = population[rng.uniform_int(population.size())];

    // mother: uniform among the two frontier entries nearest the father's
    // actual latency
    size_t a = 0;
    for (size_t i = 1; i < entries.size(); ++i) {
      if (std::abs(entries[i].obj.latency_us - father.latency_us) <
          std::abs(entries[a].obj.latency_us - father.latency_us))
        a = i;
    }
    size_t b = a;
    for (size_t i = 0; i < entries.size(); ++i) {
      if (i == a) continue;
      if (b == a || std::abs(entries[i].obj.latency_us - father.latency_us) <
                        std::abs(entries[b].obj.latency_us - father.latency_us))
        b = i;
    }
    size_t mother_index = (b != a && rng.bernoulli(0.5)) ? b : a;
    const DesignPoint& mother = frontier_point(dataset, entries[mother_index]);

    for (int j = 0; j < params.n_offspring; ++j) {
      DesignPoint offspring = crossover(father.point, mother, space, rng);
      GateResult offspring_gate = get_prob_eval(bundle, frontier, offspring, space, gate);
      DesignPoint mutant = mutate(offspring, space, params.mutation_rate, rng);
      GateResult mutant_gate = get_prob_eval(bundle, frontier, mutant, space, gate);
      candidates.emplace_back(std::move(offspring), offspring_gate);
      candidates.emplace_back(std::move(mutant), mutant_gate);
    }
  }
  return pick_best(std::move(candidates), dataset, Engine::evolutionary);
}

Proposal propose_mutational(const ParetoFrontier& frontier, const Dataset& dataset,
                            const SurrogateBundle& bundle, const DesignSpace& space,
                            int n_mutants, double mutation_rate, const GateParams& gate,
                            Rng& rng) {
  if (frontier.empty()) throw std::logic_error("propose_mutational: empty frontier");
  const auto& entry = frontier.entries()[rng.uniform_int(frontier.size())];
  const DesignPoint& base = frontier_point(dataset, entry);

  std::vector<std::pair<DesignPoint, GateResult>> candidates;
  candidates.reserve(n_mutants);
  for (int i = 0; i < n_mutants; ++i) {
    DesignPoint mutant = mutate(base, space, mutation_rate, rng);
    GateResult g = get_prob_eval(bundle, frontier, mutant, space, gate);
    candidates.emplace_back(std::move(mutant), g);
  }
  return pick_best(std::move(candidates), dataset, Engine::mutational);
}

}  // namespace dse
