// Real-vs-simulated classification: stratified split, SMOTE balancing,
// CART decision trees, bagged forest with probability output, recall.
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "noisebench/features.hpp"

namespace noisebench {

struct SplitPolicy {
  double real_train_frac = 0.9;
  double real_test_frac = 0.1;
  double sim_train_frac = 0.3;
  double sim_test_frac = 0.35;  // remainder of simulated rows stays unused
  double balance_ratio = 1.0;   // target |real| / |simulated| in training
  std::uint64_t seed = 0;
};

struct SplitResult {
  std::vector<FeatureVector> train;
  std::vector<FeatureVector> test;
};

SplitResult split_dataset(const FeatureTable& table, const SplitPolicy& policy);

// Grows `minority` to target_count with convex combinations of k-NN
// pairs; returns original rows followed by synthetics (flagged).
std::vector<FeatureVector> smote(const std::vector<FeatureVector>& minority,
                                 std::size_t target_count, int k, std::uint64_t seed);

// Applies balance_ratio to the real side of a training partition:
// SMOTE up or seeded subsample down to round(ratio * n_simulated).
std::vector<FeatureVector> balance_training(const std::vector<FeatureVector>& train,
                                            double ratio, int k, std::uint64_t seed);

struct ForestHyper {
  int n_trees = 100;
  int max_depth = 12;
  int min_samples_leaf = 2;
  int mtry = 0;  // features tried per split; 0 = floor(sqrt(K)) for forests
};

struct TreeNode {
  int feature = -1;  // -1 marks a leaf
  double threshold = 0.0;
  int left = -1;
  int right = -1;
  double real_fraction = 0.0;
  int n_samples = 0;
};

struct DecisionTree {
  std::vector<TreeNode> nodes;

  double predict(const std::vector<double>& values) const;
};

struct ForestModel {
  std::vector<DecisionTree> trees;
  std::vector<std::string> feature_order;
  ForestHyper hyper;
  SplitPolicy policy;
  std::uint64_t seed = 0;
  std::size_t n_train_real = 0;
  std::size_t n_train_sim = 0;
  std::string fingerprint;  // fnv1a-64 of the serialized trees
};

// Single CART tree on all features (no bootstrap, mtry = all).
DecisionTree fit_tree(const std::vector<FeatureVector>& rows, std::size_t n_features,
                      const ForestHyper& hyper, std::uint64_t seed, int mtry_override = 0);

ForestModel fit_forest(const std::vector<FeatureVector>& rows,
                       const std::vector<std::string>& feature_names,
                       const ForestHyper& hyper, std::uint64_t seed);

double predict_proba(const ForestModel& model, const std::vector<double>& values);
double predict_proba(const ForestModel& model, const FeatureVector& row);

// TP/(TP+FN) on Real rows at probability threshold 0.5.
double recall(const ForestModel& model, const std::vector<FeatureVector>& test);

struct TrainResult {
  ForestModel model;
  std::vector<FeatureVector> test;       // held out, never synthetic
  std::vector<std::string> selected;     // feature order used by the model
  std::vector<RankedFeature> ranking;    // full ranking on the train partition
  double held_out_recall = 0.0;
  std::size_t n_train_real = 0;
  std::size_t n_train_sim = 0;
};

// Split, rank on the training partition, reduce to top_k, balance,
// fit, evaluate. top_k = 0 keeps every feature (pre-reduced input).
TrainResult train(const FeatureTable& table, const SplitPolicy& policy,
                  const ForestHyper& hyper, std::size_t top_k);

std::string model_fingerprint(const ForestModel& model);
std::string model_to_json(const ForestModel& model);
ForestModel model_from_json(const std::string& json_text);
void save_model(const ForestModel& model, const std::string& path);
ForestModel load_model(const std::string& path);

struct GridSearchResult {
  ForestHyper best;
  double best_recall = 0.0;
  std::vector<std::pair<ForestHyper, double>> tried;
};

// Validation split inside the training partition; maximizes recall.
GridSearchResult grid_search(const FeatureTable& table, const SplitPolicy& policy,
                             const std::vector<ForestHyper>& grid, std::size_t top_k);

}  // namespace noisebench
