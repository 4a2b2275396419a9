#include <cmath>
#include <set>
#include <vector>

#include "doctest.h"

#include "noisebench/errors.hpp"
#include "noisebench/rng.hpp"
#include "noisebench/windowing.hpp"

using namespace noisebench;

namespace {

TimeSeries series(const std::string& channel, std::vector<double> values) {
  TimeSeries s;
  s.channel = channel;
  s.start_epoch = 0;
  s.values = std::move(values);
  return s;
}

// Direct evaluation of the mean-band rule, written independently of the
// library implementation.
bool band_ok(const std::vector<double>& w, double eps) {
  double mu = 0.0;
  for (double v : w) mu += v;
  mu /= static_cast<double>(w.size());
  if (std::abs(mu) < 1e-9) {
    for (double v : w)
      if (std::abs(v - mu) >= 1e-9) return false;
    return true;
  }
  for (double v : w)
    if (std::abs(v - mu) > eps * std::abs(mu)) return false;
  return true;
}

}  // namespace

TEST_SUITE_BEGIN("windowing");

TEST_CASE("stride and candidate grid") {
  PruneConfig cfg;  // N=20, overlap 0.8
  CHECK(window_stride(cfg) == 4);

  auto origins = candidate_origins(100, cfg);
  CHECK(origins.size() == 21);
  CHECK(origins.front() == 0);
  CHECK(origins.back() == 80);

  PruneConfig tiny;
  tiny.window_len = 5;
  tiny.overlap_frac = 0.8;
  CHECK(window_stride(tiny) == 1);

  CHECK_THROWS_AS(candidate_origins(10, cfg), Error);
}

TEST_CASE("constant series keeps every candidate") {
  PruneConfig cfg;
  auto raw = series("V1", std::vector<double>(100, 10.0));
  auto noise = series("V1", std::vector<double>(100, 0.001));
  auto pairs = extract_windows(raw, noise, cfg);
  CHECK(pairs.size() == 21);
  for (const auto& p : pairs) {
    CHECK(p.raw.size() == 20);
    CHECK(p.noise.size() == 20);
    CHECK(p.channel == "V1");
  }
}

TEST_CASE("single outlier beyond the band prunes the window") {
  PruneConfig cfg;
  // one window only: 19 tens and one 12 -> mu = 10.1, 12 > 1.1 * 10.1
  std::vector<double> v(20, 10.0);
  v[3] = 12.0;
  CHECK_FALSE(window_within_band(v, 0, 20, 0.1));
  // …while a value inside the band passes: mu = 10.05, 11 > 11.055 is false
  std::vector<double> w(20, 10.0);
  w[3] = 11.0;
  CHECK(window_within_band(w, 0, 20, 0.1));
}

TEST_CASE("near-zero mean only admits near-constant windows") {
  std::vector<double> balanced{-1.0, 1.0, -1.0, 1.0};
  CHECK_FALSE(window_within_band(balanced, 0, 4, 0.1));
  std::vector<double> zeros(4, 0.0);
  CHECK(window_within_band(zeros, 0, 4, 0.1));
  std::vector<double> tiny(4, 1e-12);
  CHECK(window_within_band(tiny, 0, 4, 0.1));
}

TEST_CASE("negative-mean windows use the absolute band") {
  std::vector<double> v(20, -4156.9);
  v[7] = -4100.0;  // well within 10% of |mu|
  CHECK(window_within_band(v, 0, 20, 0.1));
  v[7] = -3000.0;  // 28% off
  CHECK_FALSE(window_within_band(v, 0, 20, 0.1));
}

TEST_CASE("pruning decision matches the independent rule on random windows") {
  PruneConfig cfg;
  Rng rng(404);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> v(20);
    for (auto& x : v) x = 10.0 + rng.uniform(-2.0, 2.0);
    if (trial % 3 == 0) v[rng.index(20)] = 25.0;  // force some rejections
    CHECK(window_within_band(v, 0, 20, 0.1) == band_ok(v, 0.1));
  }
}

TEST_CASE("noise windows follow their raw partner unconditionally") {
  PruneConfig cfg;
  std::vector<double> raw_values(40, 5.0);
  std::vector<double> noise_values(40);
  for (std::size_t i = 0; i < 40; ++i) noise_values[i] = (i % 2 == 0) ? 100.0 : -100.0;
  auto pairs = extract_windows(series("I1", raw_values), series("I1", noise_values),
                               PruneConfig{});
  CHECK(pairs.size() == 6);  // (40-20)/4 + 1, none pruned despite wild noise
  CHECK(pairs[0].noise[0] == 100.0);
}

TEST_CASE("consecutive survivors overlap by N minus stride") {
  PruneConfig cfg;
  std::vector<double> v(60, 3.0);
  auto pairs = extract_windows(series("V1", v), series("V1", std::vector<double>(60, 0.0)),
                               cfg);
  REQUIRE(pairs.size() >= 2);
  for (std::size_t i = 1; i < pairs.size(); ++i) {
    CHECK(pairs[i].origin - pairs[i - 1].origin == 4);
    // shared samples: indices [origin_i, origin_{i-1}+20)
    CHECK(pairs[i - 1].origin + 20 - pairs[i].origin == 16);
  }
}

TEST_CASE("a step larger than twice the band removes spanning windows") {
  PruneConfig cfg;
  std::vector<double> v(100, 20.0);
  for (std::size_t i = 50; i < 100; ++i) v[i] = 28.0;  // +40%, 2*eps*mu is 20%
  auto pairs = extract_windows(series("I1", v), series("I1", std::vector<double>(100, 0.0)),
                               cfg);
  for (const auto& p : pairs) {
    bool spans = p.origin < 50 && p.origin + 20 > 50;
    CHECK_FALSE(spans);
  }
  CHECK(!pairs.empty());
}

TEST_CASE("joint mode equals the per-channel intersection") {
  PruneConfig cfg;
  cfg.window_len = 6;
  cfg.overlap_frac = 0.5;

  Rng rng(11);
  std::vector<double> a(60), b(60);
  for (std::size_t i = 0; i < 60; ++i) {
    a[i] = 10.0 + rng.uniform(-2.0, 2.0);
    b[i] = 50.0 + rng.uniform(-25.0, 25.0);
  }

  ChannelFrame frame("x", Label::Simulated);
  frame.add_series(series("V1", a));
  frame.add_series(series("I1", b));
  ChannelFrame noise_frame("x", Label::Simulated);
  noise_frame.add_series(series("V1", std::vector<double>(60, 0.0)));
  noise_frame.add_series(series("I1", std::vector<double>(60, 0.0)));

  JointWindows jw = extract_joint(frame, noise_frame, cfg);

  std::set<std::size_t> expected;
  for (std::size_t origin : candidate_origins(60, cfg)) {
    bool keep = window_within_band(a, origin, 6, cfg.epsilon_joint) &&
                window_within_band(b, origin, 6, cfg.epsilon_joint);
    if (keep) expected.insert(origin);
  }
  std::set<std::size_t> got(jw.origins.begin(), jw.origins.end());
  CHECK(got == expected);

  REQUIRE(jw.per_channel.count("V1") == 1);
  REQUIRE(jw.per_channel.count("I1") == 1);
  CHECK(jw.per_channel.at("V1").size() == jw.origins.size());
  CHECK(jw.per_channel.at("I1").size() == jw.origins.size());
  for (std::size_t i = 0; i < jw.origins.size(); ++i) {
    CHECK(jw.per_channel.at("V1")[i].origin == jw.origins[i]);
    CHECK(jw.per_channel.at("V1")[i].label == Label::Simulated);
    CHECK(jw.per_channel.at("V1")[i].source_tag == "x");
  }
}

TEST_CASE("a spike in one channel drops the origin everywhere") {
  PruneConfig cfg;
  std::vector<double> quiet(100, 10.0);
  std::vector<double> spiky(100, 10.0);
  spiky[50] = 1000.0;

  ChannelFrame frame("x", Label::Simulated);
  frame.add_series(series("V1", quiet));
  frame.add_series(series("I1", spiky));
  ChannelFrame noise_frame("x", Label::Simulated);
  noise_frame.add_series(series("V1", std::vector<double>(100, 0.0)));
  noise_frame.add_series(series("I1", std::vector<double>(100, 0.0)));

  JointWindows jw = extract_joint(frame, noise_frame, cfg);
  CHECK_FALSE(jw.empty_warning);
  for (std::size_t origin : jw.origins) {
    bool covers = origin <= 50 && origin + 20 > 50;
    CHECK_FALSE(covers);
  }

  // all channels spiky everywhere -> nothing survives, flagged not thrown
  std::vector<double> wild(100);
  for (std::size_t i = 0; i < 100; ++i) wild[i] = (i % 2 == 0) ? 1.0 : 100.0;
  ChannelFrame frame2("y", Label::Simulated);
  frame2.add_series(series("V1", wild));
  ChannelFrame noise2("y", Label::Simulated);
  noise2.add_series(series("V1", std::vector<double>(100, 0.0)));
  JointWindows empty = extract_joint(frame2, noise2, cfg);
  CHECK(empty.origins.empty());
  CHECK(empty.empty_warning);
}

TEST_CASE("input validation") {
  PruneConfig cfg;
  auto short_raw = series("V1", std::vector<double>(10, 1.0));
  auto short_noise = series("V1", std::vector<double>(10, 0.0));
  CHECK_THROWS_AS(extract_windows(short_raw, short_noise, cfg), Error);

  auto raw = series("V1", std::vector<double>(30, 1.0));
  auto mismatched = series("V1", std::vector<double>(29, 0.0));
  CHECK_THROWS_AS(extract_windows(raw, mismatched, cfg), Error);

  PruneConfig bad;
  bad.epsilon_single = 0.0;
  CHECK_THROWS_AS(extract_windows(raw, series("V1", std::vector<double>(30, 0.0)), bad),
                  Error);
}

TEST_SUITE_END();
