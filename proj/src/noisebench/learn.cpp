#include "noisebench/learn.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <numeric>

#include "json.hpp"
#include "noisebench/errors.hpp"
#include "noisebench/rng.hpp"

namespace noisebench {

namespace {

std::string group_key(const FeatureVector& row) {
  return std::string(label_name(row.label)) + ":" + row.source_tag;
}

double gini(std::size_t n_real, std::size_t n_total) {
  if (n_total == 0) return 0.0;
  double p = static_cast<double>(n_real) / static_cast<double>(n_total);
  return 2.0 * p * (1.0 - p);
}

}  // namespace

SplitResult split_dataset(const FeatureTable& table, const SplitPolicy& policy) {
  if (table.rows.empty()) raise(ErrorCode::Input, "split_dataset on empty table");
  for (double f : {policy.real_train_frac, policy.real_test_frac, policy.sim_train_frac,
                   policy.sim_test_frac})
    if (!(f > 0.0) || f > 1.0) raise(ErrorCode::Config, "split fractions must lie in (0, 1]");
  if (policy.real_train_frac + policy.real_test_frac > 1.0 + 1e-12 ||
      policy.sim_train_frac + policy.sim_test_frac > 1.0 + 1e-12)
    raise(ErrorCode::Config, "train and test fractions exceed the dataset");

  std::map<std::string, std::vector<std::size_t>> groups;
  for (std::size_t i = 0; i < table.rows.size(); ++i)
    groups[group_key(table.rows[i])].push_back(i);

  SplitResult out;
  for (auto& [key, idx] : groups) {
    bool is_real = table.rows[idx.front()].label == Label::Real;
    double train_frac = is_real ? policy.real_train_frac : policy.sim_train_frac;
    double test_frac = is_real ? policy.real_test_frac : policy.sim_test_frac;

    Rng rng(derive_seed(policy.seed, "split:" + key));
    rng.shuffle(idx);

    std::size_t n = idx.size();
    std::size_t n_train = static_cast<std::size_t>(std::llround(train_frac * static_cast<double>(n)));
    n_train = std::min(n_train, n);
    std::size_t n_test = static_cast<std::size_t>(std::llround(test_frac * static_cast<double>(n)));
    n_test = std::min(n_test, n - n_train);

    for (std::size_t i = 0; i < n_train; ++i) out.train.push_back(table.rows[idx[i]]);
    for (std::size_t i = n_train; i < n_train + n_test; ++i) out.test.push_back(table.rows[idx[i]]);
  }
  return out;
}

std::vector<FeatureVector> smote(const std::vector<FeatureVector>& minority,
                                 std::size_t target_count, int k, std::uint64_t seed) {
  if (k < 1) raise(ErrorCode::Config, "smote needs k >= 1");
  if (minority.size() <= static_cast<std::size_t>(k))
    raise(ErrorCode::Input, "smote needs more than k minority samples");
  if (target_count < minority.size())
    raise(ErrorCode::Input, "smote cannot shrink the minority class");

  std::vector<FeatureVector> out = minority;
  if (target_count == minority.size()) return out;

  std::size_t n = minority.size();
  std::size_t dim = minority.front().values.size();
  // k nearest neighbours per point, Euclidean, ties by index
  std::vector<std::vector<std::size_t>> nn(n);
  std::vector<std::pair<double, std::size_t>> dist(n - 1);
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t m = 0;
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i) continue;
      double d = 0.0;
      for (std::size_t f = 0; f < dim; ++f) {
        double diff = minority[i].values[f] - minority[j].values[f];
        d += diff * diff;
      }
      dist[m++] = {d, j};
    }
    std::sort(dist.begin(), dist.end());
    nn[i].reserve(k);
    for (int t = 0; t < k; ++t) nn[i].push_back(dist[t].second);
  }

  Rng rng(seed);
  while (out.size() < target_count) {
    std::size_t base = rng.index(n);
    std::size_t neighbour = nn[base][rng.index(nn[base].size())];
    double u = rng.open01();
    FeatureVector synth = minority[base];
    for (std::size_t f = 0; f < dim; ++f)
      synth.values[f] = minority[base].values[f] +
                        u * (minority[neighbour].values[f] - minority[base].values[f]);
    synth.synthetic = true;
    out.push_back(std::move(synth));
  }
  return out;
}

std::vector<FeatureVector> balance_training(const std::vector<FeatureVector>& train,
                                            double ratio, int k, std::uint64_t seed) {
  if (!(ratio > 0.0)) raise(ErrorCode::Config, "balance_ratio must be > 0");
  std::vector<FeatureVector> real_rows, sim_rows;
  for (const auto& r : train)
    (r.label == Label::Real ? real_rows : sim_rows).push_back(r);
  if (real_rows.empty() || sim_rows.empty())
    raise(ErrorCode::Input, "training partition lost a class");

  std::size_t target =
      static_cast<std::size_t>(std::llround(ratio * static_cast<double>(sim_rows.size())));
  if (target < 1) target = 1;

  std::vector<FeatureVector> balanced;
  if (target > real_rows.size()) {
    int k_eff = std::min<int>(k, static_cast<int>(real_rows.size()) - 1);
    if (k_eff < 1) raise(ErrorCode::Input, "not enough real rows to oversample");
    balanced = smote(real_rows, target, k_eff, derive_seed(seed, "smote"));
  } else if (target < real_rows.size()) {
    std::vector<std::size_t> idx(real_rows.size());
    std::iota(idx.begin(), idx.end(), 0);
    Rng rng(derive_seed(seed, "subsample"));
    rng.shuffle(idx);
    idx.resize(target);
    std::sort(idx.begin(), idx.end());
    for (std::size_t i : idx) balanced.push_back(real_rows[i]);
  } else {
    balanced = real_rows;
  }
  balanced.insert(balanced.end(), sim_rows.begin(), sim_rows.end());
  return balanced;
}

double DecisionTree::predict(const std::vector<double>& values) const {
  if (nodes.empty()) raise(ErrorCode::Internal, "empty decision tree");
  int at = 0;
  while (nodes[at].feature >= 0) {
    const TreeNode& node = nodes[at];
    if (static_cast<std::size_t>(node.feature) >= values.size())
      raise(ErrorCode::Input, "feature vector narrower than the model expects");
    at = values[node.feature] <= node.threshold ? node.left : node.right;
  }
  return nodes[at].real_fraction;
}

namespace {

struct TreeBuilder {
  const std::vector<FeatureVector>& rows;
  std::size_t n_features;
  const ForestHyper& hyper;
  int mtry;
  Rng& rng;
  std::vector<TreeNode> nodes;

  int build(std::vector<std::size_t>& idx, int depth) {
    std::size_t n_real = 0;
    for (std::size_t i : idx)
      if (rows[i].label == Label::Real) ++n_real;

    TreeNode node;
    node.n_samples = static_cast<int>(idx.size());
    node.real_fraction = static_cast<double>(n_real) / static_cast<double>(idx.size());
    int my_index = static_cast<int>(nodes.size());
    nodes.push_back(node);

    bool pure = n_real == 0 || n_real == idx.size();
    if (depth >= hyper.max_depth || pure ||
        idx.size() < 2 * static_cast<std::size_t>(hyper.min_samples_leaf))
      return my_index;

    // candidate features, ascending order for a deterministic scan
    std::vector<std::size_t> feats(n_features);
    std::iota(feats.begin(), feats.end(), 0);
    if (static_cast<std::size_t>(mtry) < n_features) {
      rng.shuffle(feats);
      feats.resize(static_cast<std::size_t>(mtry));
      std::sort(feats.begin(), feats.end());
    }

    double parent_impurity = gini(n_real, idx.size());
    double best_gain = 0.0;
    int best_feature = -1;
    double best_threshold = 0.0;

    std::vector<std::pair<double, bool>> vals(idx.size());  // value, is_real
    for (std::size_t f : feats) {
      for (std::size_t i = 0; i < idx.size(); ++i)
        vals[i] = {rows[idx[i]].values[f], rows[idx[i]].label == Label::Real};
      std::sort(vals.begin(), vals.end(),
                [](const auto& a, const auto& b) { return a.first < b.first; });

      std::size_t left_n = 0, left_real = 0;
      for (std::size_t i = 0; i + 1 < vals.size(); ++i) {
        ++left_n;
        if (vals[i].second) ++left_real;
        if (vals[i].first == vals[i + 1].first) continue;
        std::size_t right_n = vals.size() - left_n;
        if (left_n < static_cast<std::size_t>(hyper.min_samples_leaf) ||
            right_n < static_cast<std::size_t>(hyper.min_samples_leaf))
          continue;
        std::size_t right_real = n_real - left_real;
        double weighted = (static_cast<double>(left_n) * gini(left_real, left_n) +
                           static_cast<double>(right_n) * gini(right_real, right_n)) /
                          static_cast<double>(vals.size());
        double gain = parent_impurity - weighted;
        if (gain > best_gain + 1e-15) {
          best_gain = gain;
          best_feature = static_cast<int>(f);
          best_threshold = vals[i].first + (vals[i + 1].first - vals[i].first) / 2.0;
        }
      }
    }

    if (best_feature < 0) return my_index;

    std::vector<std::size_t> left_idx, right_idx;
    for (std::size_t i : idx)
      (rows[i].values[best_feature] <= best_threshold ? left_idx : right_idx).push_back(i);
    if (left_idx.empty() || right_idx.empty()) return my_index;

    nodes[my_index].feature = best_feature;
    nodes[my_index].threshold = best_threshold;
    int left = build(left_idx, depth + 1);
    int right = build(right_idx, depth + 1);
    nodes[my_index].left = left;
    nodes[my_index].right = right;
    return my_index;
  }
};

}  // namespace

DecisionTree fit_tree(const std::vector<FeatureVector>& rows, std::size_t n_features,
                      const ForestHyper& hyper, std::uint64_t seed, int mtry_override) {
  if (rows.empty()) raise(ErrorCode::Input, "fit_tree on empty data");
  for (const auto& r : rows)
    if (r.values.size() != n_features)
      raise(ErrorCode::Invariant, "row width differs from feature count");

  int mtry = mtry_override > 0 ? mtry_override : static_cast<int>(n_features);
  Rng rng(seed);
  TreeBuilder builder{rows, n_features, hyper, mtry, rng, {}};
  std::vector<std::size_t> idx(rows.size());
  std::iota(idx.begin(), idx.end(), 0);
  builder.build(idx, 0);
  DecisionTree tree;
  tree.nodes = std::move(builder.nodes);
  return tree;
}

ForestModel fit_forest(const std::vector<FeatureVector>& rows,
                       const std::vector<std::string>& feature_names,
                       const ForestHyper& hyper, std::uint64_t seed) {
  if (rows.empty()) raise(ErrorCode::Input, "fit_forest on empty data");
  if (hyper.n_trees < 1) raise(ErrorCode::Config, "forest needs at least one tree");
  std::size_t n_features = feature_names.size();
  for (const auto& r : rows)
    if (r.values.size() != n_features)
      raise(ErrorCode::Invariant, "row width differs from feature count");

  int mtry = hyper.mtry > 0
                 ? hyper.mtry
                 : std::max(1, static_cast<int>(std::floor(std::sqrt(static_cast<double>(n_features)))));

  ForestModel model;
  model.feature_order = feature_names;
  model.hyper = hyper;
  model.hyper.mtry = mtry;
  model.seed = seed;
  for (const auto& r : rows)
    (r.label == Label::Real ? model.n_train_real : model.n_train_sim) += 1;

  for (int t = 0; t < hyper.n_trees; ++t) {
    Rng rng(derive_seed(seed, "tree:" + std::to_string(t)));
    std::vector<FeatureVector> sample;
    sample.reserve(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) sample.push_back(rows[rng.index(rows.size())]);

    TreeBuilder builder{sample, n_features, model.hyper, mtry, rng, {}};
    std::vector<std::size_t> idx(sample.size());
    std::iota(idx.begin(), idx.end(), 0);
    builder.build(idx, 0);
    DecisionTree tree;
    tree.nodes = std::move(builder.nodes);
    model.trees.push_back(std::move(tree));
  }
  model.fingerprint = model_fingerprint(model);
  return model;
}

double predict_proba(const ForestModel& model, const std::vector<double>& values) {
  if (model.trees.empty()) raise(ErrorCode::Input, "model has no trees");
  if (values.size() != model.feature_order.size())
    raise(ErrorCode::Input, "feature vector width differs from the model");
  double acc = 0.0;
  for (const auto& t : model.trees) acc += t.predict(values);
  return acc / static_cast<double>(model.trees.size());
}

double predict_proba(const ForestModel& model, const FeatureVector& row) {
  return predict_proba(model, row.values);
}

double recall(const ForestModel& model, const std::vector<FeatureVector>& test) {
  std::size_t tp = 0, fn = 0;
  for (const auto& r : test) {
    if (r.label != Label::Real) continue;
    if (predict_proba(model, r) >= 0.5)
      ++tp;
    else
      ++fn;
  }
  if (tp + fn == 0) raise(ErrorCode::Input, "recall needs at least one real test row");
  return static_cast<double>(tp) / static_cast<double>(tp + fn);
}

TrainResult train(const FeatureTable& table, const SplitPolicy& policy,
                  const ForestHyper& hyper, std::size_t top_k) {
  SplitResult split = split_dataset(table, policy);

  bool train_real = false, train_sim = false;
  for (const auto& r : split.train) {
    if (r.label == Label::Real) train_real = true;
    else train_sim = true;
  }
  bool test_real = false;
  for (const auto& r : split.test)
    if (r.label == Label::Real) test_real = true;
  if (!train_real || !train_sim || !test_real)
    raise(ErrorCode::Input, "a class is empty after the split");

  TrainResult result;
  FeatureTable train_table{table.names, split.train};
  result.ranking = rank_features(train_table);

  if (top_k == 0 || top_k >= table.names.size()) {
    result.selected = table.names;
  } else {
    for (std::size_t i = 0; i < top_k; ++i) result.selected.push_back(result.ranking[i].name);
  }

  FeatureTable reduced_train = select_features(train_table, result.selected);
  FeatureTable test_table{table.names, split.test};
  FeatureTable reduced_test = select_features(test_table, result.selected);

  std::vector<FeatureVector> balanced = balance_training(
      reduced_train.rows, policy.balance_ratio, 5, derive_seed(policy.seed, "balance"));

  result.model =
      fit_forest(balanced, result.selected, hyper, derive_seed(policy.seed, "forest"));
  result.model.policy = policy;
  result.n_train_real = 0;
  result.n_train_sim = 0;
  for (const auto& r : balanced)
    (r.label == Label::Real ? result.n_train_real : result.n_train_sim) += 1;
  result.model.n_train_real = result.n_train_real;
  result.model.n_train_sim = result.n_train_sim;
  result.test = std::move(reduced_test.rows);
  result.held_out_recall = recall(result.model, result.test);
  return result;
}

namespace {

nlohmann::ordered_json tree_to_json(const DecisionTree& tree) {
  nlohmann::ordered_json nodes = nlohmann::ordered_json::array();
  for (const auto& n : tree.nodes)
    nodes.push_back({n.feature, n.threshold, n.left, n.right, n.real_fraction, n.n_samples});
  return nodes;
}

DecisionTree tree_from_json(const nlohmann::json& doc) {
  DecisionTree tree;
  for (const auto& n : doc) {
    TreeNode node;
    node.feature = n.at(0).get<int>();
    node.threshold = n.at(1).get<double>();
    node.left = n.at(2).get<int>();
    node.right = n.at(3).get<int>();
    node.real_fraction = n.at(4).get<double>();
    node.n_samples = n.at(5).get<int>();
    tree.nodes.push_back(node);
  }
  if (tree.nodes.empty()) raise(ErrorCode::Format, "model tree has no nodes");
  return tree;
}

}  // namespace

std::string model_fingerprint(const ForestModel& model) {
  nlohmann::ordered_json doc;
  doc["feature_order"] = model.feature_order;
  doc["trees"] = nlohmann::ordered_json::array();
  for (const auto& t : model.trees) doc["trees"].push_back(tree_to_json(t));
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(fnv1a64(doc.dump())));
  return std::string(buf);
}

std::string model_to_json(const ForestModel& model) {
  nlohmann::ordered_json doc;
  doc["format"] = "noisebench-model";
  doc["version"] = 1;
  doc["feature_order"] = model.feature_order;
  doc["hyper"] = {{"n_trees", model.hyper.n_trees},
                  {"max_depth", model.hyper.max_depth},
                  {"min_samples_leaf", model.hyper.min_samples_leaf},
                  {"mtry", model.hyper.mtry}};
  doc["policy"] = {{"real_train_frac", model.policy.real_train_frac},
                   {"real_test_frac", model.policy.real_test_frac},
                   {"sim_train_frac", model.policy.sim_train_frac},
                   {"sim_test_frac", model.policy.sim_test_frac},
                   {"balance_ratio", model.policy.balance_ratio}};
  doc["seed"] = model.seed;
  doc["n_train_real"] = model.n_train_real;
  doc["n_train_sim"] = model.n_train_sim;
  doc["trees"] = nlohmann::ordered_json::array();
  for (const auto& t : model.trees) doc["trees"].push_back(tree_to_json(t));
  doc["fingerprint"] = model.fingerprint;
  return doc.dump(2);
}

ForestModel model_from_json(const std::string& json_text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::exception& e) {
    raise(ErrorCode::Format, std::string("model parse failure: ") + e.what());
  }
  ForestModel model;
  try {
    if (doc.at("format").get<std::string>() != "noisebench-model")
      raise(ErrorCode::Format, "not a model document");
    if (doc.at("version").get<int>() != 1)
      raise(ErrorCode::Format, "unsupported model version");
    model.feature_order = doc.at("feature_order").get<std::vector<std::string>>();
    model.hyper.n_trees = doc.at("hyper").at("n_trees").get<int>();
    model.hyper.max_depth = doc.at("hyper").at("max_depth").get<int>();
    model.hyper.min_samples_leaf = doc.at("hyper").at("min_samples_leaf").get<int>();
    model.hyper.mtry = doc.at("hyper").at("mtry").get<int>();
    model.policy.real_train_frac = doc.at("policy").at("real_train_frac").get<double>();
    model.policy.real_test_frac = doc.at("policy").at("real_test_frac").get<double>();
    model.policy.sim_train_frac = doc.at("policy").at("sim_train_frac").get<double>();
    model.policy.sim_test_frac = doc.at("policy").at("sim_test_frac").get<double>();
    model.policy.balance_ratio = doc.at("policy").at("balance_ratio").get<double>();
    model.seed = doc.at("seed").get<std::uint64_t>();
    model.n_train_real = doc.at("n_train_real").get<std::size_t>();
    model.n_train_sim = doc.at("n_train_sim").get<std::size_t>();
    for (const auto& t : doc.at("trees")) model.trees.push_back(tree_from_json(t));
    model.fingerprint = doc.at("fingerprint").get<std::string>();
  } catch (const nlohmann::json::exception& e) {
    raise(ErrorCode::Format, std::string("model field error: ") + e.what());
  }
  if (model.trees.empty()) raise(ErrorCode::Format, "model has no trees");
  if (model_fingerprint(model) != model.fingerprint)
    raise(ErrorCode::Format, "model fingerprint mismatch, document was altered");
  return model;
}

void save_model(const ForestModel& model, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) raise(ErrorCode::Io, "cannot write '" + path + "'");
  out << model_to_json(model) << '\n';
  if (!out) raise(ErrorCode::Io, "write failed for '" + path + "'");
}

ForestModel load_model(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) raise(ErrorCode::Io, "cannot open '" + path + "'");
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return model_from_json(text);
}

GridSearchResult grid_search(const FeatureTable& table, const SplitPolicy& policy,
                             const std::vector<ForestHyper>& grid, std::size_t top_k) {
  if (grid.empty()) raise(ErrorCode::Config, "grid_search needs at least one candidate");

  SplitResult split = split_dataset(table, policy);
  // carve a validation slice out of the training partition
  std::vector<std::size_t> idx(split.train.size());
  std::iota(idx.begin(), idx.end(), 0);
  Rng rng(derive_seed(policy.seed, "gridval"));
  rng.shuffle(idx);
  std::size_t n_val = std::max<std::size_t>(1, idx.size() / 5);

  std::vector<FeatureVector> fit_rows, val_rows;
  for (std::size_t i = 0; i < idx.size(); ++i)
    (i < n_val ? val_rows : fit_rows).push_back(split.train[idx[i]]);

  FeatureTable fit_table{table.names, fit_rows};
  std::vector<std::string> selected = table.names;
  if (top_k > 0 && top_k < table.names.size()) selected = top_features(fit_table, top_k);

  FeatureTable reduced_fit = select_features(fit_table, selected);
  FeatureTable val_table{table.names, val_rows};
  FeatureTable reduced_val = select_features(val_table, selected);

  bool has_real = false;
  for (const auto& r : reduced_val.rows) has_real |= r.label == Label::Real;
  if (!has_real) raise(ErrorCode::Input, "validation slice has no real rows");

  GridSearchResult out;
  for (const auto& hyper : grid) {
    std::vector<FeatureVector> balanced = balance_training(
        reduced_fit.rows, policy.balance_ratio, 5, derive_seed(policy.seed, "balance"));
    ForestModel model =
        fit_forest(balanced, selected, hyper, derive_seed(policy.seed, "forest"));
    double r = recall(model, reduced_val.rows);
    out.tried.push_back({hyper, r});
    if (out.tried.size() == 1 || r > out.best_recall) {
      out.best = hyper;
      out.best_recall = r;
    }
  }
  return out;
}

}  // namespace noisebench
