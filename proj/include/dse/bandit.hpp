#pragma once

#include <deque>
#include <vector>

#include "dse/proposal.hpp"
#include "dse/rng.hpp"

namespace dse {

/// Beta-Bernoulli arm over a sliding window of outcomes. alpha/beta are the
/// standard posterior counts, 1 + windowed successes / failures, so a fresh
/// arm is Beta(1,1).
struct ArmState {
  Engine method = Engine::random_engine;
  size_t window_capacity = 50;  // 0 = unbounded
  std::deque<bool> window;

  double alpha() const;
  double beta_param() const;
  size_t successes() const;
};

/// Appends an outcome, evicting the oldest once the window is full.
void record_outcome(ArmState& arm, bool success);

/// One Beta(alpha, beta) draw via two gamma deviates; strictly inside (0,1).
double beta_sample(double alpha, double beta_param, Rng& rng);

/// Thompson sampling: samples each arm's posterior and returns the index of
/// the largest draw (ties keep the earliest arm).
size_t select_method(const std::vector<ArmState>& arms, Rng& rng);

}  // namespace dse
