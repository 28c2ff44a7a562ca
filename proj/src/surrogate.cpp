#include "dse/surrogate.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "dse/evaluator.hpp"
#include "dse/rng.hpp"

namespace dse {

double DecisionTree::predict(const FeatureVector& x) const {
  int i = 0;
  while (nodes[i].feature >= 0)
    i = x[nodes[i].feature] < nodes[i].threshold ? nodes[i].left : nodes[i].right;
  return nodes[i].value;
}

namespace {

struct TreeBuilder {
  const std::vector<FeatureVector>& X;
  const std::vector<double>& y;
  const ForestParams& params;
  RandomForest::Task task;
  int features_per_split;
  Rng rng;
  DecisionTree tree;

  // sample indices are partitioned in place across recursive calls
  std::vector<size_t> samples;
  std::vector<size_t> scratch;

  double leaf_value(size_t begin, size_t end) const {
    double sum = 0;
    for (size_t i = begin; i < end; ++i) sum += y[samples[i]];
    return sum / static_cast<double>(end - begin);
  }

  // impurity * n: sum of squared deviations (regression) or n*gini
  // (classification). Both reduce to the same prefix-sum arithmetic on
  // (sum, sum of squares) because labels are 0/1.
  static double impurity_n(double sum, double sum_sq, double n, RandomForest::Task task) {
    if (task == RandomForest::Task::regression) return sum_sq - sum * sum / n;
    double p = sum / n;
    return n * 2.0 * p * (1.0 - p);  // n * (1 - p^2 - (1-p)^2)
  }

  int build(size_t begin, size_t end, int depth) {
    size_t n = end - begin;
    double y_min = y[samples[begin]], y_max = y_min;
    for (size_t i = begin + 1; i < end; ++i) {
      y_min = std::min(y_min, y[samples[i]]);
      y_max = std::max(y_max, y[samples[i]]);
    }
    bool stop = depth >= params.max_depth || y_min == y_max ||
                n < 2 * static_cast<size_t>(params.min_samples_leaf);

    int best_feature = -1;
    double best_threshold = 0, best_gain = 0;
    if (!stop) {
      size_t n_features = X[0].size();
      std::vector<int> candidates(n_features);
      std::iota(candidates.begin(), candidates.end(), 0);
      if (static_cast<size_t>(features_per_split) < n_features) {
        // partial Fisher-Yates: first k entries become the random subset
        for (int k = 0; k < features_per_split; ++k) {
          size_t j = k + rng.uniform_int(n_features - k);
          std::swap(candidates[k], candidates[j]);
        }
        candidates.resize(features_per_split);
        std::sort(candidates.begin(), candidates.end());
      }

      double total_sum = 0, total_sq = 0;
      for (size_t i = begin; i < end; ++i) {
        total_sum += y[samples[i]];
        total_sq += y[samples[i]] * y[samples[i]];
      }
      double parent = impurity_n(total_sum, total_sq, static_cast<double>(n), task);

      std::vector<size_t> order(samples.begin() + begin, samples.begin() + end);
      for (int f : candidates) {
        std::sort(order.begin(), order.end(), [&](size_t a, size_t b) {
          if (X[a][f] != X[b][f]) return X[a][f] < X[b][f];
          return a < b;
        });
        double left_sum = 0, left_sq = 0;
        for (size_t i = 0; i + 1 < n; ++i) {
          double v = y[order[i]];
          left_sum += v;
          left_sq += v * v;
          if (X[order[i]][f] == X[order[i + 1]][f]) continue;  // not a boundary
          size_t n_left = i + 1, n_right = n - n_left;
          if (n_left < static_cast<size_t>(params.min_samples_leaf) ||
              n_right < static_cast<size_t>(params.min_samples_leaf))
            continue;
          double gain = parent -
                        impurity_n(left_sum, left_sq, static_cast<double>(n_left), task) -
                        impurity_n(total_sum - left_sum, total_sq - left_sq,
                                   static_cast<double>(n_right), task);
          // strict > keeps the lowest feature index / lowest threshold on ties
          if (gain > best_gain && gain > 0) {
            best_gain = gain;
            best_feature = f;
            best_threshold = std::midpoint(X[order[i]][f], X[order[i + 1]][f]);
          }
        }
      }
    }

    int node_index = static_cast<int>(tree.nodes.size());
    tree.nodes.emplace_back();
    if (best_feature < 0) {
      tree.nodes[node_index].value = leaf_value(begin, end);
      return node_index;
    }

    // stable partition by threshold, keeping sample order within each side
    scratch.clear();
    size_t mid = begin;
    for (size_t i = begin; i < end; ++i) {
      if (X[samples[i]][best_feature] < best_threshold)
        samples[mid++] = samples[i];
      else
        scratch.push_back(samples[i]);
    }
    std::copy(scratch.begin(), scratch.end(), samples.begin() + mid);

    tree.nodes[node_index].feature = best_feature;
    tree.nodes[node_index].threshold = best_threshold;
    int left = build(begin, mid, depth + 1);
    int right = build(mid, end, depth + 1);
    tree.nodes[node_index].left = left;
    tree.nodes[node_index].right = right;
    return node_index;
  }
};

}  // namespace

RandomForest RandomForest::fit(const std::vector<FeatureVector>& X,
                               const std::vector<double>& y, const ForestParams& params,
                               Task task) {
  if (X.empty()) throw std::invalid_argument("RandomForest::fit: empty dataset");
  if (X.size() != y.size())
    throw std::invalid_argument("RandomForest::fit: |X| != |y|");
  size_t n_features = X[0].size();
  for (const auto& row : X)
    if (row.size() != n_features)
      throw std::invalid_argument("RandomForest::fit: ragged feature matrix");
  if (params.n_trees < 1 || params.max_depth < 1 || params.min_samples_leaf < 1 ||
      params.bootstrap_fraction <= 0.0 || params.bootstrap_fraction > 1.0)
    throw std::invalid_argument("RandomForest::fit: bad params");

  int per_split = params.features_per_split;
  if (per_split == kFeaturesSqrt)
    per_split = static_cast<int>(std::ceil(std::sqrt(static_cast<double>(n_features))));
  if (per_split == kFeaturesAll || per_split > static_cast<int>(n_features))
    per_split = static_cast<int>(n_features);
  if (per_split < 1) throw std::invalid_argument("RandomForest::fit: bad features_per_split");

  size_t sample_size = std::max<size_t>(
      1, static_cast<size_t>(std::llround(params.bootstrap_fraction * X.size())));

  RandomForest forest;
  forest.n_features_ = n_features;
  forest.task_ = task;
  forest.trees_.reserve(params.n_trees);
  for (int t = 0; t < params.n_trees; ++t) {
    TreeBuilder builder{X, y, params, task, per_split,
                        Rng(mix64(params.seed ^ mix64(static_cast<uint64_t>(t) + 1))),
                        {}, {}, {}};
    if (params.bootstrap_fraction == 1.0) {
      // full sample: every training point reaches every tree, so training
      // points are reproduced exactly (fraction < 1 resamples with
      // replacement as usual)
      builder.samples.resize(X.size());
      std::iota(builder.samples.begin(), builder.samples.end(), 0);
    } else {
      builder.samples.resize(sample_size);
      for (size_t i = 0; i < sample_size; ++i)
        builder.samples[i] = builder.rng.uniform_int(X.size());
    }
    builder.build(0, builder.samples.size(), 0);
    forest.trees_.push_back(std::move(builder.tree));
  }
  return forest;
}

double RandomForest::predict(const FeatureVector& x) const {
  if (trees_.empty()) throw std::logic_error("RandomForest::predict: empty forest");
  if (x.size() != n_features_)
    throw std::invalid_argument("RandomForest::predict: feature length mismatch");
  double sum = 0;
  for (const DecisionTree& t : trees_) sum += t.predict(x);
  double mean = sum / static_cast<double>(trees_.size());
  if (task_ == Task::classification) mean = std::clamp(mean, 0.0, 1.0);
  return mean;
}

namespace {

nlohmann::json node_to_json(const DecisionTree& tree, int index) {
  const auto& n = tree.nodes[index];
  if (n.feature < 0) return nlohmann::json{{"value", n.value}};
  return nlohmann::json{{"feature", n.feature},
                        {"threshold", n.threshold},
                        {"left", node_to_json(tree, n.left)},
                        {"right", node_to_json(tree, n.right)}};
}

}  // namespace

nlohmann::json RandomForest::to_json() const {
  nlohmann::json trees = nlohmann::json::array();
  for (const DecisionTree& t : trees_) trees.push_back(node_to_json(t, 0));
  return nlohmann::json{{"n_features", n_features_},
                        {"task", task_ == Task::regression ? "regression" : "classification"},
                        {"trees", trees}};
}

ResourceRatios SurrogateBundle::predict_ratios(const FeatureVector& x) const {
  return ResourceRatios{resource_models[0].predict(x), resource_models[1].predict(x),
                        resource_models[2].predict(x), resource_models[3].predict(x)};
}

SurrogateBundle retrain_bundle(const std::vector<FeatureVector>& X,
                               const std::vector<EvaluationRecord>& records,
                               const ForestParams& params) {
  if (X.size() != records.size())
    throw std::invalid_argument("retrain_bundle: |X| != |records|");
  if (X.empty()) throw std::invalid_argument("retrain_bundle: empty dataset");

  std::vector<FeatureVector> ok_X;
  std::vector<double> latency, lut, ff, dsp, bram, labels;
  for (size_t i = 0; i < X.size(); ++i) {
    const EvaluationRecord& r = records[i];
    labels.push_back(r.status == EvalStatus::ok ? 0.0 : 1.0);
    if (r.status != EvalStatus::ok) continue;
    ok_X.push_back(X[i]);
    latency.push_back(*r.latency_us);
    lut.push_back(r.ratios->lut);
    ff.push_back(r.ratios->ff);
    dsp.push_back(r.ratios->dsp);
    bram.push_back(r.ratios->bram);
  }

  auto with_seed = [&](uint64_t tag) {
    ForestParams p = params;
    p.seed = mix64(params.seed ^ mix64(tag));
    return p;
  };

  SurrogateBundle bundle;
  bundle.timeout_model = RandomForest::fit(X, labels, with_seed(6),
                                           RandomForest::Task::classification);
  if (ok_X.empty()) return bundle;  // classifier-only bundle

  bundle.latency_model =
      RandomForest::fit(ok_X, latency, with_seed(1), RandomForest::Task::regression);
  const std::vector<double>* targets[4] = {&lut, &ff, &dsp, &bram};
  for (int m = 0; m < 4; ++m)
    bundle.resource_models[m] = RandomForest::fit(ok_X, *targets[m], with_seed(2 + m),
                                                  RandomForest::Task::regression);
  bundle.regressors_available = true;
  return bundle;
}

}  // namespace dse
