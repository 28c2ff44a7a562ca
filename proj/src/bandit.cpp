#include "dse/bandit.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace dse {

size_t ArmState::successes() const {
  return static_cast<size_t>(std::count(window.begin(), window.end(), true));
}

double ArmState::alpha() const { return 1.0 + static_cast<double>(successes()); }

double ArmState::beta_param() const {
  return 1.0 + static_cast<double>(window.size() - successes());
}

void record_outcome(ArmState& arm, bool success) {
  arm.window.push_back(success);
  if (arm.window_capacity > 0 && arm.window.size() > arm.window_capacity)
    arm.window.pop_front();
}

double beta_sample(double alpha, double beta_param, Rng& rng) {
  if (alpha < 1.0 || beta_param < 1.0)
    throw std::invalid_argument("beta_sample: parameters must be >= 1");
  double x = rng.gamma(alpha);
  double y = rng.gamma(beta_param);
  double v = x / (x + y);
  // keep the draw strictly inside (0,1) against floating rounding
  return std::clamp(v, std::numeric_limits<double>::min(),
                    1.0 - std::numeric_limits<double>::epsilon());
}

size_t select_method(const std::vector<ArmState>& arms, Rng& rng) {
  if (arms.empty()) throw std::invalid_argument("select_method: no arms");
  size_t best = 0;
  double best_draw = -1;
  for (size_t i = 0; i < arms.size(); ++i) {
    double draw = beta_sample(arms[i].alpha(), arms[i].beta_param(), rng);
    if (draw > best_draw) {
      best_draw = draw;
      best = i;
    }
  }
  return best;
}

}  // namespace dse
