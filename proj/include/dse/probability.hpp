#pragma once

#include <optional>

#include "dse/design_space.hpp"
#include "dse/pareto.hpp"
#include "dse/rng.hpp"
#include "dse/surrogate.hpp"

namespace dse {

struct GateParams {
  double delta = 1.0;  // slack multiplier on the projected frontier resource
  ResourceWeights weights;
};

/// Components of the soft-boundary evaluation probability.
struct GateResult {
  double p_budget = 1;
  double p_pareto = 1;
  double p_timeout = 0;
  double p_eval = 1;
  double r_pred = 0;          // predicted weighted resource
  double pred_latency_us = 0;
  /// Set when the regressors were unavailable and the gate passed the point
  /// unconditionally.
  bool passthrough = false;
};

/// 1 - min(1, sum of per-type overuse); 1 exactly when all ratios fit.
double p_budget(const ResourceRatios& r);

/// 1 - min(1, max(0, (r_pred - delta*r_pareto) / r_pareto)). A below-minimum
/// projection (nullopt) or a degenerate zero frontier resource maps to 1.
double p_pareto(double r_pred, std::optional<double> r_pareto, double delta);

/// p_budget * p_pareto * (1 - p_timeout).
double p_eval(double p_b, double p_p, double p_timeout);

/// Scores a candidate point with the surrogate bundle against the current
/// frontier. With no usable regressors the result is a passthrough (p_eval 1)
/// so early exploration is never starved.
GateResult get_prob_eval(const SurrogateBundle& bundle, const ParetoFrontier& frontier,
                         const DesignPoint& point, const DesignSpace& space,
                         const GateParams& gate);

/// Single Bernoulli draw; the accept/reject decision for a proposal.
bool accept(double p, Rng& rng);

}  // namespace dse
