#include "dse/probability.hpp"

#include <algorithm>
#include <cstdio>
#include <stdexcept>

namespace dse {

double p_budget(const ResourceRatios& r) {
  double overuse = std::max(0.0, r.lut - 1.0) + std::max(0.0, r.ff - 1.0) +
                   std::max(0.0, r.dsp - 1.0) + std::max(0.0, r.bram - 1.0);
  return 1.0 - std::min(1.0, overuse);
}

double p_pareto(double r_pred, std::optional<double> r_pareto, double delta) {
  if (!r_pareto) return 1.0;  // below the frontier minimum: would extend it
  if (*r_pareto <= 0.0) {
    std::fprintf(stderr, "warning: degenerate frontier projection (resource 0), p_pareto = 1\n");
    return 1.0;
  }
  double excess = (r_pred - delta * *r_pareto) / *r_pareto;
  return 1.0 - std::min(1.0, std::max(0.0, excess));
}

double p_eval(double p_b, double p_p, double p_timeout) {
  return p_b * p_p * (1.0 - p_timeout);
}

GateResult get_prob_eval(const SurrogateBundle& bundle, const ParetoFrontier& frontier,
                         const DesignPoint& point, const DesignSpace& space,
                         const GateParams& gate) {
  GateResult result;
  if (!bundle.regressors_available) {
    result.passthrough = true;
    return result;
  }
  if (frontier.empty()) throw std::logic_error("get_prob_eval: empty frontier");

  FeatureVector x = encode(space, point);
  ResourceRatios ratios = bundle.predict_ratios(x);
  result.pred_latency_us = bundle.predict_latency(x);
  result.r_pred = weighted_resource(ratios, gate.weights);
  result.p_budget = p_budget(ratios);
  result.p_pareto = p_pareto(result.r_pred, frontier.project_resource(result.pred_latency_us),
                             gate.delta);
  result.p_timeout = bundle.predict_timeout_proba(x);
  result.p_eval = p_eval(result.p_budget, result.p_pareto, result.p_timeout);
  return result;
}

bool accept(double p, Rng& rng) { return rng.bernoulli(p); }

}  // namespace dse
