#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <vector>

#include "doctest.h"

#include "helpers.hpp"
#include "noisebench/errors.hpp"
#include "noisebench/features.hpp"
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

std::vector<double> alternating(std::size_t n) {
  std::vector<double> x(n);
  for (std::size_t i = 0; i < n; ++i) x[i] = static_cast<double>(i % 2);
  return x;
}

WindowPair make_window(std::vector<double> raw, std::vector<double> noise) {
  WindowPair p;
  p.raw = std::move(raw);
  p.noise = std::move(noise);
  p.label = Label::Simulated;
  p.source_tag = "unit";
  p.channel = "V1";
  return p;
}

}  // namespace

TEST_SUITE_BEGIN("features");

TEST_CASE("approximate entropy kernel") {
  CHECK(approximate_entropy(alternating(20), 2, 0.5) ==
        doctest::Approx(0.0013856817075275085).epsilon(1e-12));

  // a constant run has no surprise at any template length
  std::vector<double> flat(30, 4.0);
  CHECK(approximate_entropy(flat, 2, 0.1) == doctest::Approx(0.0));

  // iid noise keeps a healthy gap between template lengths
  Rng rng(7);
  std::vector<double> iid(200);
  for (auto& v : iid) v = rng.normal();
  double sd = sample_std(iid);
  CHECK(approximate_entropy(iid, 2, 0.2 * sd) > 0.3);

  CHECK(code_of([&] { approximate_entropy(flat, 2, 0.0); }) == ErrorCode::Input);
  CHECK(code_of([&] { approximate_entropy(flat, 0, 0.1); }) == ErrorCode::Input);
  CHECK(code_of([&] { approximate_entropy({1.0, 2.0, 3.0}, 2, 0.1); }) == ErrorCode::Input);
}

TEST_CASE("permutation entropy kernel") {
  std::vector<double> saw = {1, 3, 2, 4, 3, 5, 4, 6, 5, 7};
  CHECK(permutation_entropy(saw, 1, 3) == doctest::Approx(std::log(2.0)).epsilon(1e-12));

  std::vector<double> ramp = {1, 2, 3, 4, 5, 6, 7, 8};
  CHECK(permutation_entropy(ramp, 1, 3) == 0.0);

  CHECK(code_of([&] { permutation_entropy(saw, 0, 3); }) == ErrorCode::Input);
  CHECK(code_of([&] { permutation_entropy(saw, 1, 1); }) == ErrorCode::Input);
  CHECK(code_of([&] { permutation_entropy({1.0, 2.0, 3.0}, 1, 3); }) == ErrorCode::Input);
}

TEST_CASE("lempel-ziv complexity kernel") {
  std::vector<double> flat(20, 7.0);
  CHECK(lempel_ziv_complexity(flat, 10) == doctest::Approx(0.1));
  CHECK(lempel_ziv_complexity(alternating(8), 10) == doctest::Approx(0.375));
  CHECK(lempel_ziv_complexity(alternating(100), 10) == doctest::Approx(0.03));

  // random data produces far more phrases than a periodic signal
  Rng rng(11);
  std::vector<double> noise(100);
  for (auto& v : noise) v = rng.uniform01();
  double lz = lempel_ziv_complexity(noise, 10);
  CHECK(lz > 0.2);
  CHECK(lz <= 1.0);

  CHECK(code_of([&] { lempel_ziv_complexity({1.0}, 10); }) == ErrorCode::Input);
  CHECK(code_of([&] { lempel_ziv_complexity(flat, 1); }) == ErrorCode::Input);
}

TEST_CASE("skewness and kurtosis match the adjusted conventions") {
  std::vector<double> a = {2, 8, 0, 4, 1, 9, 9, 0};
  CHECK(skewness_g1(a) == doctest::Approx(0.33058218040797466).epsilon(1e-12));
  CHECK(kurtosis_g2(a) == doctest::Approx(-2.098602258096087).epsilon(1e-12));

  std::vector<double> b = {1, 2, 3, 4, 10};
  CHECK(skewness_g1(b) == doctest::Approx(1.6970562748477143).epsilon(1e-12));
  CHECK(kurtosis_g2(b) == doctest::Approx(3.152).epsilon(1e-12));

  // degenerate inputs surface as NaN, the imputation layer handles them
  CHECK(std::isnan(skewness_g1({1.0, 2.0})));
  CHECK(std::isnan(kurtosis_g2({1.0, 2.0, 3.0})));
  CHECK(std::isnan(skewness_g1({5.0, 5.0, 5.0, 5.0})));
}

TEST_CASE("autocorrelation kernel") {
  std::vector<double> ramp = {1, 2, 3, 4, 5};
  CHECK(autocorrelation(ramp, 1) == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(autocorrelation(ramp, 0) == doctest::Approx(1.0).epsilon(1e-15));

  std::vector<double> a = {2, 8, 0, 4, 1, 9, 9, 0};
  CHECK(autocorrelation(a, 1) == doctest::Approx(-0.3596392333709132).epsilon(1e-12));

  CHECK(std::isnan(autocorrelation({3.0, 3.0, 3.0}, 1)));
  CHECK(code_of([&] { autocorrelation(ramp, -1); }) == ErrorCode::Input);
  CHECK(code_of([&] { autocorrelation(ramp, 5); }) == ErrorCode::Input);
}

TEST_CASE("strikes and peaks") {
  // mean = 3.5; strict comparisons on both sides
  std::vector<double> x = {1, 2, 5, 6, 5, 2};  // above: {5,6,5} below: {1,2},{2}
  CHECK(longest_strike_above_mean(x) == 3.0);
  CHECK(longest_strike_below_mean(x) == 2.0);

  std::vector<double> flat(5, 2.0);
  CHECK(longest_strike_above_mean(flat) == 0.0);
  CHECK(longest_strike_below_mean(flat) == 0.0);

  std::vector<double> hill = {0, 1, 2, 5, 2, 1, 0};
  CHECK(number_peaks(hill, 1) == 1.0);
  CHECK(number_peaks(hill, 3) == 1.0);
  std::vector<double> twin = {0, 3, 0, 4, 0};
  CHECK(number_peaks(twin, 1) == 2.0);
  CHECK(number_peaks(twin, 2) == 0.0);  // support window leaves no interior point
  CHECK(number_peaks(flat, 1) == 0.0);
  CHECK(number_peaks({1.0, 2.0}, 3) == 0.0);  // too short for any candidate
  CHECK(code_of([&] { number_peaks(hill, 0); }) == ErrorCode::Input);
}

TEST_CASE("catalog names and order") {
  auto names = catalog_feature_names();
  REQUIRE(names.size() == 28);
  CHECK(raw_feature_names().size() == 11);
  CHECK(noise_feature_names().size() == 17);

  CHECK(names[0] == "approximate_entropy");
  CHECK(names[1] == "kurtosis");
  CHECK(names[2] == "lempel_ziv_complexity");
  CHECK(names[3] == "longest_strike_above_mean");
  CHECK(names[4] == "longest_strike_below_mean");
  CHECK(names[5] == "number_peaks");
  CHECK(names[6] == "permutation_entropy");
  CHECK(names[7] == "skewness");
  CHECK(names[8] == "autocorrelation");
  CHECK(names[9] == "std_mean_ratio");
  CHECK(names[10] == "var_mean_ratio");
  CHECK(names[11] == "noise_approximate_entropy");
  CHECK(names[21] == "noise_var_mean_ratio");
  CHECK(names[22] == "noise_mean");
  CHECK(names[23] == "noise_std");
  CHECK(names[24] == "noise_variance");
  CHECK(names[25] == "noise_abs_energy");
  CHECK(names[26] == "noise_min");
  CHECK(names[27] == "noise_max");
}

TEST_CASE("extract_features fills the catalog and imputes degeneracies") {
  FeatureParams params;

  Rng rng(3);
  std::vector<double> raw(20), noise(20);
  for (auto& v : raw) v = 10.0 + rng.normal();
  for (auto& v : noise) v = 0.1 * rng.normal();
  auto fv = extract_features(make_window(raw, noise), params);
  REQUIRE(fv.values.size() == 28);
  CHECK(fv.imputed.empty());
  CHECK(fv.label == Label::Simulated);
  CHECK(fv.source_tag == "unit");

  auto names = catalog_feature_names();
  auto at = [&](const std::string& name) {
    auto it = std::find(names.begin(), names.end(), name);
    REQUIRE(it != names.end());
    return fv.values[static_cast<std::size_t>(it - names.begin())];
  };
  CHECK(at("noise_std") == doctest::Approx(sample_std(noise)));
  CHECK(at("noise_abs_energy") == doctest::Approx(abs_energy(noise)));
  CHECK(at("noise_min") == *std::min_element(noise.begin(), noise.end()));
  CHECK(at("noise_max") == *std::max_element(noise.begin(), noise.end()));
  CHECK(at("std_mean_ratio") ==
        doctest::Approx(sample_std(raw) / (std::accumulate(raw.begin(), raw.end(), 0.0) / 20.0)));

  // constant raw window with silent noise: variance-based statistics impute
  auto flat = extract_features(make_window(std::vector<double>(20, 5.0),
                                         std::vector<double>(20, 0.0)),
                               params);
  auto imputed_has = [&](const std::string& name) {
    return std::find(flat.imputed.begin(), flat.imputed.end(), name) != flat.imputed.end();
  };
  CHECK(imputed_has("approximate_entropy"));
  CHECK(imputed_has("kurtosis"));
  CHECK(imputed_has("skewness"));
  CHECK(imputed_has("autocorrelation"));
  CHECK(imputed_has("noise_std_mean_ratio"));  // 0/0
  CHECK_FALSE(imputed_has("std_mean_ratio"));  // 0/5 is finite
  CHECK_FALSE(imputed_has("lempel_ziv_complexity"));
  for (std::size_t i = 0; i < flat.values.size(); ++i) CHECK(std::isfinite(flat.values[i]));

  CHECK(code_of([&] {
          extract_features(make_window({1.0, 2.0, 3.0}, {0.0, 0.0, 0.0}), params);
        }) == ErrorCode::Input);
  CHECK(code_of([&] {
          extract_features(make_window({1.0, 2.0, 3.0, 4.0}, {0.0, 0.0}), params);
        }) == ErrorCode::Invariant);
}

TEST_CASE("feature CSV round trip") {
  testutil::TempDir dir;
  FeatureTable table;
  table.names = {"alpha", "beta"};
  FeatureVector r1;
  r1.values = {1.5, -2.25e-7};
  r1.label = Label::Real;
  r1.source_tag = "epic";
  FeatureVector r2;
  r2.values = {0.1 + 0.2, 3.0};  // not exactly representable, exercises round trip
  r2.label = Label::Simulated;
  r2.source_tag = "gaussian1";
  table.rows = {r1, r2};

  auto path = dir.file("feat.csv");
  write_feature_csv(table, path);
  auto back = load_feature_csv(path);
  REQUIRE(back.names == table.names);
  REQUIRE(back.rows.size() == 2);
  CHECK(back.rows[0].values[0] == 1.5);
  CHECK(back.rows[0].values[1] == -2.25e-7);
  CHECK(back.rows[1].values[0] == 0.1 + 0.2);
  CHECK(back.rows[0].label == Label::Real);
  CHECK(back.rows[1].label == Label::Simulated);
  CHECK(back.rows[1].source_tag == "gaussian1");
}

TEST_CASE("feature CSV failure modes") {
  testutil::TempDir dir;
  FeatureTable empty;
  empty.names = {"a"};
  CHECK(code_of([&] { write_feature_csv(empty, dir.file("x.csv")); }) == ErrorCode::EmptyData);

  FeatureTable bad_name;
  bad_name.names = {"a,b"};
  bad_name.rows.push_back({{1.0}, Label::Real, "t", "", 0, {}, false});
  CHECK(code_of([&] { write_feature_csv(bad_name, dir.file("x.csv")); }) == ErrorCode::Format);

  FeatureTable bad_tag;
  bad_tag.names = {"a"};
  bad_tag.rows.push_back({{1.0}, Label::Real, "t,t", "", 0, {}, false});
  CHECK(code_of([&] { write_feature_csv(bad_tag, dir.file("x.csv")); }) == ErrorCode::Format);

  FeatureTable ragged;
  ragged.names = {"a", "b"};
  ragged.rows.push_back({{1.0}, Label::Real, "t", "", 0, {}, false});
  CHECK(code_of([&] { write_feature_csv(ragged, dir.file("x.csv")); }) == ErrorCode::Invariant);

  CHECK(code_of([&] { load_feature_csv(dir.file("absent.csv")); }) == ErrorCode::Io);

  auto write = [&](const char* name, const std::string& text) {
    auto p = dir.file(name);
    testutil::write_file(p, text);
    return p;
  };
  CHECK(code_of([&] { load_feature_csv(write("e.csv", "")); }) == ErrorCode::EmptyData);
  CHECK(code_of([&] { load_feature_csv(write("h.csv", "a,label,source_tag\n")); }) ==
        ErrorCode::EmptyData);
  CHECK(code_of([&] { load_feature_csv(write("m.csv", "a,b\n1,2\n")); }) == ErrorCode::Format);
  CHECK(code_of([&] { load_feature_csv(write("d.csv", "a,a,label,source_tag\n1,2,real,t\n")); }) ==
        ErrorCode::Format);
  CHECK(code_of([&] {
          load_feature_csv(write("w.csv", "a,label,source_tag\n1,2,real,t\n"));
        }) == ErrorCode::Format);
  CHECK(code_of([&] {
          load_feature_csv(write("n.csv", "a,label,source_tag\nfoo,real,t\n"));
        }) == ErrorCode::Parse);
  CHECK(code_of([&] {
          load_feature_csv(write("i.csv", "a,label,source_tag\ninf,real,t\n"));
        }) == ErrorCode::Parse);
}

TEST_CASE("mann-whitney p-values") {
  CHECK(mann_whitney_p({1, 2, 3, 4}, {2.5, 3.5, 4.5, 5.5}) ==
        doctest::Approx(0.1939308522824107).epsilon(1e-12));
  CHECK(mann_whitney_p({1, 1, 2, 2, 3}, {2, 3, 3, 4, 4}) ==
        doctest::Approx(0.05241162867102868).epsilon(1e-12));
  CHECK(mann_whitney_p({0.1, 0.2, 0.3, 0.4, 0.5, 0.6}, {10, 11, 12, 13, 14, 15}) ==
        doctest::Approx(0.005074868097940257).epsilon(1e-12));

  // identical samples cannot be told apart
  CHECK(mann_whitney_p({1, 2, 3}, {1, 2, 3}) == 1.0);
  CHECK(mann_whitney_p({5, 5}, {5, 5}) == 1.0);  // zero variance short-circuits

  // symmetry in the group order
  double p_ab = mann_whitney_p({1, 2, 3, 4}, {10, 11, 12});
  double p_ba = mann_whitney_p({10, 11, 12}, {1, 2, 3, 4});
  CHECK(p_ab == doctest::Approx(p_ba).epsilon(1e-15));

  CHECK(code_of([&] { mann_whitney_p({}, {1.0}); }) == ErrorCode::Input);
  CHECK(code_of([&] { mann_whitney_p({1.0}, {}); }) == ErrorCode::Input);
}

TEST_CASE("feature ranking and selection") {
  // "sep" splits the classes cleanly, "mix" interleaves, "same" is shared noise
  FeatureTable table;
  table.names = {"mix", "sep", "same"};
  for (int i = 0; i < 8; ++i) {
    FeatureVector fv;
    bool real = i < 4;
    double t = static_cast<double>(i % 4);
    fv.label = real ? Label::Real : Label::Simulated;
    fv.source_tag = real ? "ref" : "cand";
    fv.values = {real ? t : t + 0.5, real ? t : t + 100.0, 1.0};
    table.rows.push_back(fv);
  }

  auto ranked = rank_features(table);
  REQUIRE(ranked.size() == 3);
  CHECK(ranked[0].name == "sep");
  CHECK(ranked[0].p_value < ranked[1].p_value);
  CHECK(ranked[2].name == "same");
  CHECK(ranked[2].p_value == 1.0);
  for (std::size_t i = 1; i < ranked.size(); ++i)
    CHECK(ranked[i - 1].p_value <= ranked[i].p_value);

  auto top = top_features(table, 2);
  REQUIRE(top.size() == 2);
  CHECK(top[0] == "sep");
  CHECK(top_features(table, 99).size() == 3);

  auto reduced = select_features(table, {"same", "sep"});
  REQUIRE(reduced.names == std::vector<std::string>{"same", "sep"});
  REQUIRE(reduced.rows.size() == 8);
  CHECK(reduced.rows[0].values[0] == 1.0);
  CHECK(reduced.rows[4].values[1] == 100.0);
  CHECK(reduced.rows[0].label == Label::Real);
  CHECK(code_of([&] { select_features(table, {"ghost"}); }) == ErrorCode::Input);

  FeatureTable one_class;
  one_class.names = {"a"};
  one_class.rows.push_back({{1.0}, Label::Real, "t", "", 0, {}, false});
  CHECK(code_of([&] { rank_features(one_class); }) == ErrorCode::Input);
}

TEST_CASE("ties in p-value fall back to name order") {
  // two identical columns must rank adjacent, alphabetically
  FeatureTable table;
  table.names = {"zeta", "echo"};
  for (int i = 0; i < 6; ++i) {
    FeatureVector fv;
    fv.label = i < 3 ? Label::Real : Label::Simulated;
    fv.source_tag = fv.label == Label::Real ? "ref" : "cand";
    double v = static_cast<double>(i);
    fv.values = {v, v};
    table.rows.push_back(fv);
  }
  auto ranked = rank_features(table);
  REQUIRE(ranked.size() == 2);
  CHECK(ranked[0].p_value == ranked[1].p_value);
  CHECK(ranked[0].name == "echo");
  CHECK(ranked[1].name == "zeta");
}

TEST_SUITE_END();
