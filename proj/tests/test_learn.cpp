#include <algorithm>
#include <cmath>
#include <functional>
#include <set>
#include <string>
#include <vector>

#include "doctest.h"
#include "json.hpp"

#include "helpers.hpp"
#include "noisebench/errors.hpp"
#include "noisebench/learn.hpp"
#include "noisebench/rng.hpp"

using namespace noisebench;

namespace {

ErrorCode code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an Error");
  return ErrorCode::Internal;
}

FeatureVector row(std::vector<double> values, Label label, const std::string& tag) {
  FeatureVector fv;
  fv.values = std::move(values);
  fv.label = label;
  fv.source_tag = tag;
  return fv;
}

// real rows cluster around 10 on "sep", simulated around 0; "noise" is shared
FeatureTable separable_table(std::size_t n_real,
                             const std::vector<std::pair<std::string, std::size_t>>& sims,
                             std::uint64_t seed) {
  FeatureTable table;
  table.names = {"sep", "noise"};
  Rng rng(seed);
  for (std::size_t i = 0; i < n_real; ++i)
    table.rows.push_back(row({10.0 + rng.normal(), rng.uniform01()}, Label::Real, "ref"));
  for (const auto& [tag, count] : sims)
    for (std::size_t i = 0; i < count; ++i)
      table.rows.push_back(row({rng.normal(), rng.uniform01()}, Label::Simulated, tag));
  return table;
}

std::size_t count_rows(const std::vector<FeatureVector>& rows_in, Label label,
                       const std::string& tag) {
  std::size_t n = 0;
  for (const auto& r : rows_in)
    if (r.label == label && r.source_tag == tag) ++n;
  return n;
}

int tree_depth(const DecisionTree& tree, int at = 0) {
  const TreeNode& node = tree.nodes[static_cast<std::size_t>(at)];
  if (node.feature < 0) return 0;
  return 1 + std::max(tree_depth(tree, node.left), tree_depth(tree, node.right));
}

}  // namespace

TEST_SUITE_BEGIN("learn");

TEST_CASE("split keeps the documented fractions per group") {
  FeatureTable table;
  table.names = {"id"};
  std::size_t next = 0;
  for (std::size_t i = 0; i < 100; ++i)
    table.rows.push_back(row({static_cast<double>(next++)}, Label::Real, "ref"));
  for (std::size_t i = 0; i < 100; ++i)
    table.rows.push_back(row({static_cast<double>(next++)}, Label::Simulated, "s1"));
  for (std::size_t i = 0; i < 60; ++i)
    table.rows.push_back(row({static_cast<double>(next++)}, Label::Simulated, "s2"));

  SplitPolicy policy;
  policy.seed = 17;
  auto split = split_dataset(table, policy);

  CHECK(count_rows(split.train, Label::Real, "ref") == 90);
  CHECK(count_rows(split.test, Label::Real, "ref") == 10);
  CHECK(count_rows(split.train, Label::Simulated, "s1") == 30);
  CHECK(count_rows(split.test, Label::Simulated, "s1") == 35);
  CHECK(count_rows(split.train, Label::Simulated, "s2") == 18);
  CHECK(count_rows(split.test, Label::Simulated, "s2") == 21);

  // partitions never share a row and never invent one
  std::set<double> seen;
  for (const auto& r : split.train) CHECK(seen.insert(r.values[0]).second);
  for (const auto& r : split.test) CHECK(seen.insert(r.values[0]).second);
  for (double id : seen) CHECK(id < static_cast<double>(next));

  // same seed, same assignment; a different seed moves rows around
  auto again = split_dataset(table, policy);
  REQUIRE(again.train.size() == split.train.size());
  bool same = true;
  for (std::size_t i = 0; i < again.train.size(); ++i)
    same = same && again.train[i].values[0] == split.train[i].values[0];
  CHECK(same);

  SplitPolicy other = policy;
  other.seed = 18;
  auto moved = split_dataset(table, other);
  bool identical = moved.train.size() == split.train.size();
  for (std::size_t i = 0; identical && i < moved.train.size(); ++i)
    identical = moved.train[i].values[0] == split.train[i].values[0];
  CHECK_FALSE(identical);
}

TEST_CASE("split rejects bad policies") {
  FeatureTable table;
  table.names = {"x"};
  CHECK(code_of([&] { split_dataset(table, SplitPolicy{}); }) == ErrorCode::Input);

  table.rows.push_back(row({1.0}, Label::Real, "r"));
  SplitPolicy zero;
  zero.real_train_frac = 0.0;
  CHECK(code_of([&] { split_dataset(table, zero); }) == ErrorCode::Config);

  SplitPolicy big;
  big.sim_test_frac = 1.5;
  CHECK(code_of([&] { split_dataset(table, big); }) == ErrorCode::Config);

  SplitPolicy sum;
  sum.real_train_frac = 0.9;
  sum.real_test_frac = 0.2;
  CHECK(code_of([&] { split_dataset(table, sum); }) == ErrorCode::Config);
}

TEST_CASE("smote keeps originals and interpolates inside the hull") {
  std::vector<FeatureVector> minority;
  Rng rng(23);
  for (int i = 0; i < 10; ++i)
    minority.push_back(row({rng.uniform(0.0, 4.0), rng.uniform(-1.0, 1.0)}, Label::Real, "ref"));

  auto grown = smote(minority, 25, 3, 99);
  REQUIRE(grown.size() == 25);
  for (std::size_t i = 0; i < 10; ++i) {
    CHECK_FALSE(grown[i].synthetic);
    CHECK(grown[i].values == minority[i].values);
  }
  double lo0 = 1e30, hi0 = -1e30, lo1 = 1e30, hi1 = -1e30;
  for (const auto& r : minority) {
    lo0 = std::min(lo0, r.values[0]);
    hi0 = std::max(hi0, r.values[0]);
    lo1 = std::min(lo1, r.values[1]);
    hi1 = std::max(hi1, r.values[1]);
  }
  for (std::size_t i = 10; i < 25; ++i) {
    CHECK(grown[i].synthetic);
    CHECK(grown[i].label == Label::Real);
    CHECK(grown[i].source_tag == "ref");
    CHECK(grown[i].values[0] >= lo0);
    CHECK(grown[i].values[0] <= hi0);
    CHECK(grown[i].values[1] >= lo1);
    CHECK(grown[i].values[1] <= hi1);
  }

  auto same = smote(minority, 25, 3, 99);
  for (std::size_t i = 0; i < 25; ++i) CHECK(same[i].values == grown[i].values);

  auto copy = smote(minority, 10, 3, 99);
  CHECK(copy.size() == 10);
  for (const auto& r : copy) CHECK_FALSE(r.synthetic);

  CHECK(code_of([&] { smote(minority, 25, 0, 1); }) == ErrorCode::Config);
  CHECK(code_of([&] { smote(minority, 25, 10, 1); }) == ErrorCode::Input);
  CHECK(code_of([&] { smote(minority, 5, 3, 1); }) == ErrorCode::Input);
}

TEST_CASE("balance_training matches the ratio in both directions") {
  std::vector<FeatureVector> train;
  Rng rng(31);
  auto add = [&](std::size_t n, Label label) {
    for (std::size_t i = 0; i < n; ++i)
      train.push_back(row({rng.normal(), rng.uniform01()}, label,
                          label == Label::Real ? "ref" : "cand"));
  };

  add(5, Label::Real);
  add(20, Label::Simulated);
  auto up = balance_training(train, 1.0, 5, 7);
  CHECK(count_rows(up, Label::Real, "ref") == 20);
  CHECK(count_rows(up, Label::Simulated, "cand") == 20);
  std::size_t synthetic = 0;
  for (const auto& r : up)
    if (r.synthetic) ++synthetic;
  CHECK(synthetic == 15);

  train.clear();
  add(30, Label::Real);
  add(10, Label::Simulated);
  auto down = balance_training(train, 1.0, 5, 7);
  CHECK(count_rows(down, Label::Real, "ref") == 10);
  CHECK(count_rows(down, Label::Simulated, "cand") == 10);
  for (const auto& r : down) CHECK_FALSE(r.synthetic);

  auto half = balance_training(train, 0.5, 5, 7);
  CHECK(count_rows(half, Label::Real, "ref") == 5);

  train.clear();
  add(10, Label::Real);
  add(10, Label::Simulated);
  auto even = balance_training(train, 1.0, 5, 7);
  CHECK(even.size() == 20);
  for (const auto& r : even) CHECK_FALSE(r.synthetic);

  CHECK(code_of([&] { balance_training(train, 0.0, 5, 7); }) == ErrorCode::Config);
  std::vector<FeatureVector> lonely = {row({1.0}, Label::Real, "ref")};
  CHECK(code_of([&] { balance_training(lonely, 1.0, 5, 7); }) == ErrorCode::Input);
  lonely.push_back(row({2.0}, Label::Simulated, "cand"));
  lonely.push_back(row({3.0}, Label::Simulated, "cand"));
  // one real row cannot be oversampled, there is no neighbour
  CHECK(code_of([&] { balance_training(lonely, 1.0, 5, 7); }) == ErrorCode::Input);
}

TEST_CASE("single tree separates clean classes and honours limits") {
  auto table = separable_table(40, {{"cand", 40}}, 3);

  ForestHyper hyper;
  hyper.max_depth = 4;
  hyper.min_samples_leaf = 2;
  auto tree = fit_tree(table.rows, 2, hyper, 11);
  REQUIRE(!tree.nodes.empty());
  CHECK(tree.nodes[0].feature >= 0);

  CHECK(tree.predict({10.0, 0.5}) == 1.0);
  CHECK(tree.predict({0.0, 0.5}) == 0.0);

  CHECK(tree_depth(tree) <= hyper.max_depth);
  if (tree.nodes.size() > 1)
    for (const auto& node : tree.nodes)
      if (node.feature < 0) CHECK(node.n_samples >= hyper.min_samples_leaf);

  ForestHyper stump;
  stump.max_depth = 1;
  auto one = fit_tree(table.rows, 2, stump, 11);
  CHECK(tree_depth(one) <= 1);

  CHECK(code_of([&] { fit_tree({}, 2, hyper, 1); }) == ErrorCode::Input);
  std::vector<FeatureVector> ragged = {row({1.0}, Label::Real, "r"),
                                       row({1.0, 2.0}, Label::Simulated, "s")};
  CHECK(code_of([&] { fit_tree(ragged, 1, hyper, 1); }) == ErrorCode::Invariant);
}

TEST_CASE("forest probabilities, recall and determinism") {
  auto table = separable_table(60, {{"cand", 60}}, 5);

  ForestHyper hyper;
  hyper.n_trees = 30;
  hyper.max_depth = 6;
  auto model = fit_forest(table.rows, table.names, hyper, 77);
  REQUIRE(model.trees.size() == 30);
  CHECK(model.n_train_real == 60);
  CHECK(model.n_train_sim == 60);
  CHECK(model.fingerprint.size() == 16);

  double p_real = predict_proba(model, std::vector<double>{10.0, 0.5});
  double p_sim = predict_proba(model, std::vector<double>{0.0, 0.5});
  CHECK(p_real > 0.9);
  CHECK(p_sim < 0.1);
  for (const auto& r : table.rows) {
    double p = predict_proba(model, r);
    CHECK(p >= 0.0);
    CHECK(p <= 1.0);
  }

  // threshold sits at 0.5: one centred real row hits, one stray misses
  std::vector<FeatureVector> probes = {row({10.0, 0.5}, Label::Real, "ref"),
                                       row({0.0, 0.5}, Label::Real, "ref"),
                                       row({0.0, 0.2}, Label::Simulated, "cand")};
  CHECK(recall(model, probes) == doctest::Approx(0.5));

  auto again = fit_forest(table.rows, table.names, hyper, 77);
  CHECK(again.fingerprint == model.fingerprint);
  auto other = fit_forest(table.rows, table.names, hyper, 78);
  CHECK(other.fingerprint != model.fingerprint);

  // mtry defaults to floor(sqrt(K))
  FeatureTable wide;
  for (int f = 0; f < 9; ++f) wide.names.push_back("f" + std::to_string(f));
  Rng rng(9);
  for (int i = 0; i < 40; ++i) {
    std::vector<double> v(9);
    for (auto& x : v) x = rng.normal();
    if (i < 20) v[0] += 8.0;
    wide.rows.push_back(row(v, i < 20 ? Label::Real : Label::Simulated, i < 20 ? "r" : "s"));
  }
  ForestHyper auto_mtry;
  auto_mtry.n_trees = 5;
  auto wide_model = fit_forest(wide.rows, wide.names, auto_mtry, 4);
  CHECK(wide_model.hyper.mtry == 3);

  CHECK(code_of([&] { fit_forest({}, table.names, hyper, 1); }) == ErrorCode::Input);
  ForestHyper none;
  none.n_trees = 0;
  CHECK(code_of([&] { fit_forest(table.rows, table.names, none, 1); }) == ErrorCode::Config);
  CHECK(code_of([&] { predict_proba(model, std::vector<double>{1.0}); }) == ErrorCode::Input);
  CHECK(code_of([&] { recall(model, {probes[2]}); }) == ErrorCode::Input);
}

TEST_CASE("model JSON round trip preserves predictions") {
  testutil::TempDir dir;
  auto table = separable_table(30, {{"cand", 30}}, 8);
  ForestHyper hyper;
  hyper.n_trees = 10;
  hyper.max_depth = 5;
  auto model = fit_forest(table.rows, table.names, hyper, 13);

  auto text = model_to_json(model);
  auto back = model_from_json(text);
  CHECK(back.fingerprint == model.fingerprint);
  CHECK(back.feature_order == model.feature_order);
  CHECK(back.hyper.n_trees == model.hyper.n_trees);
  CHECK(back.hyper.mtry == model.hyper.mtry);
  CHECK(back.seed == model.seed);

  Rng rng(40);
  for (int i = 0; i < 25; ++i) {
    std::vector<double> probe = {rng.uniform(-3.0, 13.0), rng.uniform01()};
    CHECK(predict_proba(back, probe) == predict_proba(model, probe));
  }

  auto path = dir.file("model.json");
  save_model(model, path);
  auto loaded = load_model(path);
  CHECK(loaded.fingerprint == model.fingerprint);

  CHECK(code_of([&] { load_model(dir.file("missing.json")); }) == ErrorCode::Io);
}

TEST_CASE("model JSON rejects tampering and foreign documents") {
  auto table = separable_table(30, {{"cand", 30}}, 8);
  ForestHyper hyper;
  hyper.n_trees = 4;
  auto model = fit_forest(table.rows, table.names, hyper, 13);
  auto text = model_to_json(model);

  auto doc = nlohmann::json::parse(text);
  doc["trees"][0][0][5] = doc["trees"][0][0][5].get<int>() + 1;
  try {
    model_from_json(doc.dump());
    FAIL("tampered model accepted");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::Format);
    CHECK(std::string(e.what()).find("fingerprint mismatch") != std::string::npos);
  }

  auto wrong = nlohmann::json::parse(text);
  wrong["format"] = "something-else";
  CHECK(code_of([&] { model_from_json(wrong.dump()); }) == ErrorCode::Format);

  auto v2 = nlohmann::json::parse(text);
  v2["version"] = 2;
  CHECK(code_of([&] { model_from_json(v2.dump()); }) == ErrorCode::Format);

  CHECK(code_of([&] { model_from_json("not json at all"); }) == ErrorCode::Format);
  CHECK(code_of([&] { model_from_json("{\"format\":\"noisebench-model\"}"); }) ==
        ErrorCode::Format);
}

TEST_CASE("train wires split, ranking, balancing and evaluation together") {
  FeatureTable table = separable_table(60, {{"g1", 60}, {"g2", 60}}, 21);
  table.names.push_back("flat");
  for (auto& r : table.rows) r.values.push_back(1.0);

  SplitPolicy policy;
  policy.seed = 5;
  ForestHyper hyper;
  hyper.n_trees = 20;
  hyper.max_depth = 6;

  auto result = train(table, policy, hyper, 2);
  REQUIRE(result.selected.size() == 2);
  CHECK(result.selected[0] == "sep");
  CHECK(result.model.feature_order == result.selected);
  REQUIRE(!result.ranking.empty());
  CHECK(result.ranking[0].name == "sep");
  CHECK(result.ranking[0].p_value < 1e-6);
  CHECK(result.ranking.size() == 3);

  // real:ref 60 -> 54 train / 6 test; each sim tag 60 -> 18 train / 21 test.
  // ratio 1.0 against 36 simulated rows subsamples the real side to 36.
  CHECK(result.n_train_real == 36);
  CHECK(result.n_train_sim == 36);
  CHECK(result.model.n_train_real == 36);
  CHECK(result.test.size() == 48);
  for (const auto& r : result.test) CHECK_FALSE(r.synthetic);
  CHECK(count_rows(result.test, Label::Real, "ref") == 6);

  CHECK(result.held_out_recall == doctest::Approx(recall(result.model, result.test)));
  CHECK(result.held_out_recall > 0.5);

  auto again = train(table, policy, hyper, 2);
  CHECK(again.model.fingerprint == result.model.fingerprint);
  CHECK(again.held_out_recall == result.held_out_recall);

  auto full = train(table, policy, hyper, 0);
  CHECK(full.selected == table.names);
  auto capped = train(table, policy, hyper, 99);
  CHECK(capped.selected == table.names);

  // too few real rows leave the test slice without the real class
  FeatureTable thin = separable_table(3, {{"g1", 40}}, 2);
  CHECK(code_of([&] { train(thin, policy, hyper, 0); }) == ErrorCode::Input);
}

TEST_CASE("grid search picks the best validated candidate") {
  FeatureTable table = separable_table(40, {{"cand", 60}}, 12);
  SplitPolicy policy;
  policy.seed = 31;

  ForestHyper shallow;
  shallow.n_trees = 5;
  shallow.max_depth = 1;
  ForestHyper deep;
  deep.n_trees = 20;
  deep.max_depth = 8;

  auto result = grid_search(table, policy, {shallow, deep}, 0);
  REQUIRE(result.tried.size() == 2);
  double best = std::max(result.tried[0].second, result.tried[1].second);
  CHECK(result.best_recall == best);
  const ForestHyper& winner =
      result.tried[0].second >= result.tried[1].second ? shallow : deep;
  CHECK(result.best.n_trees == winner.n_trees);
  CHECK(result.best.max_depth == winner.max_depth);
  for (const auto& [hyper, r] : result.tried) {
    (void)hyper;
    CHECK(r >= 0.0);
    CHECK(r <= 1.0);
  }

  CHECK(code_of([&] { grid_search(table, policy, {}, 0); }) == ErrorCode::Config);
}

TEST_SUITE_END();
