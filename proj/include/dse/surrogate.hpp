#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "dse/design_space.hpp"
#include "dse/pareto.hpp"

#include "json.hpp"

namespace dse {

struct ForestParams {
  int n_trees = 50;
  int max_depth = 12;
  int min_samples_leaf = 1;
  double bootstrap_fraction = 1.0;
  /// Features examined per split: kFeaturesAll, or kFeaturesSqrt for
  /// ceil(sqrt(#features)), or an explicit count.
  int features_per_split = -2;
  uint64_t seed = 0;
};

inline constexpr int kFeaturesAll = -1;
inline constexpr int kFeaturesSqrt = -2;

/// Axis-aligned binary decision tree stored as a flat node array (root at
/// index 0). Leaves hold the mean target (regression) or the positive-class
/// fraction (classification) of their training subset.
struct DecisionTree {
  struct Node {
    int feature = -1;  // -1 marks a leaf
    double threshold = 0;
    int left = -1;
    int right = -1;
    double value = 0;
  };
  std::vector<Node> nodes;

  double predict(const FeatureVector& x) const;
};

/// Bagged ensemble: each tree fits a bootstrap resample, splits greedily on
/// variance reduction (regression) or Gini impurity reduction
/// (classification). Thresholds are midpoints between consecutive sorted
/// unique values; tie-breaking is by lowest feature index then lowest
/// threshold so training is fully deterministic.
class RandomForest {
 public:
  enum class Task { regression, classification };

  static RandomForest fit(const std::vector<FeatureVector>& X, const std::vector<double>& y,
                          const ForestParams& params, Task task);

  /// Mean over per-tree leaf values. Classification output is clamped to [0,1].
  double predict(const FeatureVector& x) const;

  const std::vector<DecisionTree>& trees() const { return trees_; }
  size_t feature_count() const { return n_features_; }

  /// Hand-assembled forest (tests, stubs).
  RandomForest(std::vector<DecisionTree> trees, size_t n_features, Task task)
      : trees_(std::move(trees)), n_features_(n_features), task_(task) {}
  RandomForest() = default;

  /// Nested-object dump: {"feature", "threshold", "left", "right"} per
  /// internal node, {"value"} per leaf.
  nlohmann::json to_json() const;

 private:
  std::vector<DecisionTree> trees_;
  size_t n_features_ = 0;
  Task task_ = Task::regression;
};

struct EvaluationRecord;  // evaluator.hpp

/// The six models driving proposal scoring: latency and per-type resource
/// ratio regressors plus the timeout/error classifier. All are trained on
/// identically encoded feature vectors.
struct SurrogateBundle {
  RandomForest latency_model;                  // microseconds
  std::array<RandomForest, 4> resource_models;  // lut, ff, dsp, bram ratios
  RandomForest timeout_model;                  // P(status != ok)
  /// False until the dataset holds at least one successful record; callers
  /// must not consult the regressors while unset.
  bool regressors_available = false;

  double predict_latency(const FeatureVector& x) const { return latency_model.predict(x); }
  ResourceRatios predict_ratios(const FeatureVector& x) const;
  double predict_timeout_proba(const FeatureVector& x) const { return timeout_model.predict(x); }
};

/// Rebuilds all models from scratch. Regressors use only successful records;
/// the classifier uses every record with label 1 for timeout/error.
/// Deterministic given params.seed and dataset order.
SurrogateBundle retrain_bundle(const std::vector<FeatureVector>& X,
                               const std::vector<EvaluationRecord>& records,
                               const ForestParams& params);

}  // namespace dse
