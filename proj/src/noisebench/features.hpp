// Window features: entropy/complexity/shape statistics on the raw side,
// the same plus location statistics on the noise side (prefixed noise_).
// Ranking is a two-sample Mann-Whitney U test per feature.
#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "noisebench/frame.hpp"
#include "noisebench/windowing.hpp"

namespace noisebench {

struct FeatureParams {
  int apen_m = 2;
  double apen_r_frac = 0.2;  // radius = frac * sample std
  int lz_bins = 10;
  int peaks_support = 3;
  int pe_tau = 1;
  int pe_order = 3;
  int ac_lag = 1;
};

// Kernels. Pre-conditions raise InputError; degenerate statistics
// (zero variance, zero mean) surface as NaN and are imputed by
// extract_features, never returned to callers of the catalog API.
double approximate_entropy(const std::vector<double>& x, int m, double r);
double permutation_entropy(const std::vector<double>& x, int tau, int d);
double lempel_ziv_complexity(const std::vector<double>& x, int bins);
double skewness_g1(const std::vector<double>& x);
double kurtosis_g2(const std::vector<double>& x);
double autocorrelation(const std::vector<double>& x, int lag);
double longest_strike_above_mean(const std::vector<double>& x);
double longest_strike_below_mean(const std::vector<double>& x);
double number_peaks(const std::vector<double>& x, int support);
double sample_std(const std::vector<double>& x);
double sample_variance(const std::vector<double>& x);
double abs_energy(const std::vector<double>& x);

// Catalog names in column order: 11 raw features, then the same plus
// {mean,std,variance,abs_energy,min,max} with the noise_ prefix.
const std::vector<std::string>& raw_feature_names();
const std::vector<std::string>& noise_feature_names();
std::vector<std::string> catalog_feature_names();

struct FeatureVector {
  std::vector<double> values;  // catalog order
  Label label = Label::Simulated;
  std::string source_tag;
  std::string channel;
  std::size_t origin = 0;
  std::vector<std::string> imputed;  // feature names replaced by 0
  bool synthetic = false;            // produced by augmentation, never test data
};

FeatureVector extract_features(const WindowPair& pair, const FeatureParams& params);

struct FeatureTable {
  std::vector<std::string> names;
  std::vector<FeatureVector> rows;
};

void write_feature_csv(const FeatureTable& table, const std::string& path);
FeatureTable load_feature_csv(const std::string& path);

// Two-sided asymptotic Mann-Whitney U p-value with tie correction and
// continuity correction.
double mann_whitney_p(const std::vector<double>& a, const std::vector<double>& b);

struct RankedFeature {
  std::string name;
  double p_value = 1.0;
};

// All features ordered by ascending p-value (ties by name).
std::vector<RankedFeature> rank_features(const FeatureTable& table);
std::vector<std::string> top_features(const FeatureTable& table, std::size_t top_k);

FeatureTable select_features(const FeatureTable& table, const std::vector<std::string>& names);

}  // namespace noisebench
