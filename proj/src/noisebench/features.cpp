#include "noisebench/features.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <numeric>
#include <sstream>

#include "noisebench/errors.hpp"

namespace noisebench {

namespace {

double mean_of(const std::vector<double>& x) {
  return std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
}

double central_moment(const std::vector<double>& x, double mu, int order) {
  double acc = 0.0;
  for (double v : x) acc += std::pow(v - mu, order);
  return acc / static_cast<double>(x.size());
}

}  // namespace

double sample_variance(const std::vector<double>& x) {
  std::size_t n = x.size();
  if (n < 2) return std::numeric_limits<double>::quiet_NaN();
  double mu = mean_of(x);
  double ss = 0.0;
  for (double v : x) ss += (v - mu) * (v - mu);
  return ss / static_cast<double>(n - 1);
}

double sample_std(const std::vector<double>& x) {
  return std::sqrt(sample_variance(x));
}

double abs_energy(const std::vector<double>& x) {
  double acc = 0.0;
  for (double v : x) acc += v * v;
  return acc;
}

double approximate_entropy(const std::vector<double>& x, int m, double r) {
  if (!(r > 0.0)) raise(ErrorCode::Input, "approximate_entropy needs r > 0");
  std::size_t n = x.size();
  if (m < 1) raise(ErrorCode::Input, "approximate_entropy needs m >= 1");
  if (n <= static_cast<std::size_t>(m) + 1)
    raise(ErrorCode::Input, "approximate_entropy needs more samples than m+1");

  auto phi = [&](int mm) {
    std::size_t cnt = n - static_cast<std::size_t>(mm) + 1;
    double acc = 0.0;
    for (std::size_t i = 0; i < cnt; ++i) {
      std::size_t matches = 0;
      for (std::size_t j = 0; j < cnt; ++j) {
        double dist = 0.0;
        for (int t = 0; t < mm; ++t)
          dist = std::max(dist, std::abs(x[i + t] - x[j + t]));
        if (dist <= r) ++matches;
      }
      acc += std::log(static_cast<double>(matches) / static_cast<double>(cnt));
    }
    return acc / static_cast<double>(cnt);
  };
  return phi(m) - phi(m + 1);
}

double permutation_entropy(const std::vector<double>& x, int tau, int d) {
  if (tau < 1 || d < 2) raise(ErrorCode::Input, "permutation_entropy needs tau >= 1, d >= 2");
  std::size_t span = static_cast<std::size_t>(d) * static_cast<std::size_t>(tau);
  if (x.size() < span + 1)
    raise(ErrorCode::Input, "permutation_entropy input shorter than d*tau + 1");

  std::size_t cnt = x.size() - (static_cast<std::size_t>(d) - 1) * static_cast<std::size_t>(tau);
  std::map<std::vector<int>, std::size_t> patterns;
  std::vector<int> order(d);
  for (std::size_t i = 0; i < cnt; ++i) {
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
      return x[i + static_cast<std::size_t>(a) * tau] < x[i + static_cast<std::size_t>(b) * tau];
    });
    ++patterns[order];
  }
  double h = 0.0;
  for (const auto& [pattern, count] : patterns) {
    (void)pattern;
    double p = static_cast<double>(count) / static_cast<double>(cnt);
    h -= p * std::log(p);
  }
  return h == 0.0 ? 0.0 : h;
}

double lempel_ziv_complexity(const std::vector<double>& x, int bins) {
  std::size_t n = x.size();
  if (n < 2) raise(ErrorCode::Input, "lempel_ziv_complexity needs >= 2 samples");
  if (bins < 2) raise(ErrorCode::Input, "lempel_ziv_complexity needs >= 2 bins");

  auto [lo_it, hi_it] = std::minmax_element(x.begin(), x.end());
  double lo = *lo_it, hi = *hi_it;
  std::vector<int> s(n, 0);
  if (hi > lo) {
    for (std::size_t i = 0; i < n; ++i) {
      int b = static_cast<int>(std::floor((x[i] - lo) / (hi - lo) * bins));
      s[i] = std::min(b, bins - 1);
    }
  }

  // LZ76 phrase counting over an exhaustive history
  std::size_t c = 1, l = 1, i = 0, k = 1, kmax = 1;
  while (true) {
    if (s[i + k - 1] == s[l + k - 1]) {
      ++k;
      if (l + k > n) {
        ++c;
        break;
      }
    } else {
      if (k > kmax) kmax = k;
      ++i;
      if (i == l) {
        ++c;
        l += kmax;
        if (l + 1 > n) break;
        i = 0;
        k = 1;
        kmax = 1;
      } else {
        k = 1;
      }
    }
  }
  return static_cast<double>(c) / static_cast<double>(n);
}

double skewness_g1(const std::vector<double>& x) {
  double n = static_cast<double>(x.size());
  if (x.size() < 3) return std::numeric_limits<double>::quiet_NaN();
  double mu = mean_of(x);
  double m2 = central_moment(x, mu, 2);
  if (m2 <= 0.0) return std::numeric_limits<double>::quiet_NaN();
  double m3 = central_moment(x, mu, 3);
  double g1 = m3 / std::pow(m2, 1.5);
  return g1 * std::sqrt(n * (n - 1.0)) / (n - 2.0);
}

double kurtosis_g2(const std::vector<double>& x) {
  double n = static_cast<double>(x.size());
  if (x.size() < 4) return std::numeric_limits<double>::quiet_NaN();
  double mu = mean_of(x);
  double m2 = central_moment(x, mu, 2);
  if (m2 <= 0.0) return std::numeric_limits<double>::quiet_NaN();
  double m4 = central_moment(x, mu, 4);
  double g2 = m4 / (m2 * m2) - 3.0;
  return ((n + 1.0) * g2 + 6.0) * (n - 1.0) / ((n - 2.0) * (n - 3.0));
}

double autocorrelation(const std::vector<double>& x, int lag) {
  if (lag < 0) raise(ErrorCode::Input, "autocorrelation needs lag >= 0");
  std::size_t n = x.size();
  if (n <= static_cast<std::size_t>(lag))
    raise(ErrorCode::Input, "autocorrelation lag exceeds series length");

  double mu = mean_of(x);
  double den = 0.0;
  for (double v : x) den += (v - mu) * (v - mu);
  den /= static_cast<double>(n);
  if (den == 0.0) return std::numeric_limits<double>::quiet_NaN();

  std::size_t terms = n - static_cast<std::size_t>(lag);
  double num = 0.0;
  for (std::size_t t = 0; t < terms; ++t) num += (x[t] - mu) * (x[t + lag] - mu);
  num /= static_cast<double>(terms);
  return num / den;
}

namespace {

double longest_strike(const std::vector<double>& x, bool above) {
  double mu = mean_of(x);
  std::size_t best = 0, run = 0;
  for (double v : x) {
    bool hit = above ? v > mu : v < mu;
    run = hit ? run + 1 : 0;
    best = std::max(best, run);
  }
  return static_cast<double>(best);
}

}  // namespace

double longest_strike_above_mean(const std::vector<double>& x) {
  return longest_strike(x, true);
}

double longest_strike_below_mean(const std::vector<double>& x) {
  return longest_strike(x, false);
}

double number_peaks(const std::vector<double>& x, int support) {
  if (support < 1) raise(ErrorCode::Input, "number_peaks needs support >= 1");
  std::size_t n = x.size();
  std::size_t s = static_cast<std::size_t>(support);
  if (n < 2 * s + 1) return 0.0;
  std::size_t count = 0;
  for (std::size_t i = s; i + s < n; ++i) {
    bool peak = true;
    for (std::size_t k = 1; k <= s && peak; ++k)
      peak = x[i] > x[i - k] && x[i] > x[i + k];
    if (peak) ++count;
  }
  return static_cast<double>(count);
}

const std::vector<std::string>& raw_feature_names() {
  static const std::vector<std::string> names = {
      "approximate_entropy", "kurtosis", "lempel_ziv_complexity",
      "longest_strike_above_mean", "longest_strike_below_mean", "number_peaks",
      "permutation_entropy", "skewness", "autocorrelation",
      "std_mean_ratio", "var_mean_ratio"};
  return names;
}

const std::vector<std::string>& noise_feature_names() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> out;
    for (const auto& n : raw_feature_names()) out.push_back("noise_" + n);
    for (const char* extra : {"mean", "std", "variance", "abs_energy", "min", "max"})
      out.push_back(std::string("noise_") + extra);
    return out;
  }();
  return names;
}

std::vector<std::string> catalog_feature_names() {
  std::vector<std::string> out = raw_feature_names();
  const auto& noise = noise_feature_names();
  out.insert(out.end(), noise.begin(), noise.end());
  return out;
}

namespace {

struct SideValues {
  std::vector<double> stats;  // raw_feature_names order
  double mean = 0.0, std = 0.0, variance = 0.0, energy = 0.0, vmin = 0.0, vmax = 0.0;
};

SideValues side_features(const std::vector<double>& x, const FeatureParams& p) {
  SideValues out;
  double sd = sample_std(x);
  double nan = std::numeric_limits<double>::quiet_NaN();

  double apen = sd > 0.0 ? approximate_entropy(x, p.apen_m, p.apen_r_frac * sd) : nan;
  double mu = mean_of(x);
  out.stats = {
      apen,
      kurtosis_g2(x),
      lempel_ziv_complexity(x, p.lz_bins),
      longest_strike_above_mean(x),
      longest_strike_below_mean(x),
      number_peaks(x, p.peaks_support),
      permutation_entropy(x, p.pe_tau, p.pe_order),
      skewness_g1(x),
      sd > 0.0 ? autocorrelation(x, p.ac_lag) : nan,
      sd / mu,
      sample_variance(x) / mu,
  };
  out.mean = mu;
  out.std = sd;
  out.variance = sample_variance(x);
  out.energy = abs_energy(x);
  auto [lo, hi] = std::minmax_element(x.begin(), x.end());
  out.vmin = *lo;
  out.vmax = *hi;
  return out;
}

}  // namespace

FeatureVector extract_features(const WindowPair& pair, const FeatureParams& params) {
  if (pair.raw.size() < 4) raise(ErrorCode::Input, "window shorter than 4 samples");
  if (pair.raw.size() != pair.noise.size())
    raise(ErrorCode::Invariant, "raw/noise window lengths differ");

  SideValues raw = side_features(pair.raw, params);
  SideValues noise = side_features(pair.noise, params);

  FeatureVector fv;
  fv.label = pair.label;
  fv.source_tag = pair.source_tag;
  fv.channel = pair.channel;
  fv.origin = pair.origin;

  std::vector<std::string> names = catalog_feature_names();
  fv.values = raw.stats;
  fv.values.insert(fv.values.end(), noise.stats.begin(), noise.stats.end());
  for (double v : {noise.mean, noise.std, noise.variance, noise.energy, noise.vmin, noise.vmax})
    fv.values.push_back(v);

  for (std::size_t i = 0; i < fv.values.size(); ++i) {
    if (!std::isfinite(fv.values[i])) {
      fv.values[i] = 0.0;
      fv.imputed.push_back(names[i]);
    }
  }
  return fv;
}

void write_feature_csv(const FeatureTable& table, const std::string& path) {
  if (table.rows.empty()) raise(ErrorCode::EmptyData, "feature table has no rows");
  std::ofstream out(path, std::ios::binary);
  if (!out) raise(ErrorCode::Io, "cannot write '" + path + "'");

  for (const auto& name : table.names) {
    if (name.find(',') != std::string::npos || name.find('\n') != std::string::npos)
      raise(ErrorCode::Format, "feature name '" + name + "' not CSV-safe");
    out << name << ',';
  }
  out << "label,source_tag\n";

  char buf[40];
  for (const auto& row : table.rows) {
    if (row.values.size() != table.names.size())
      raise(ErrorCode::Invariant, "feature row width mismatch");
    if (row.source_tag.find(',') != std::string::npos)
      raise(ErrorCode::Format, "source tag '" + row.source_tag + "' not CSV-safe");
    for (double v : row.values) {
      auto res = std::to_chars(buf, buf + sizeof(buf), v);
      out.write(buf, res.ptr - buf);
      out << ',';
    }
    out << label_name(row.label) << ',' << row.source_tag << '\n';
  }
  if (!out) raise(ErrorCode::Io, "write failed for '" + path + "'");
}

FeatureTable load_feature_csv(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) raise(ErrorCode::Io, "cannot open '" + path + "'");

  std::string header;
  if (!std::getline(in, header)) raise(ErrorCode::EmptyData, "'" + path + "' is empty");
  if (!header.empty() && header.back() == '\r') header.pop_back();

  std::vector<std::string> columns;
  std::stringstream ss(header);
  std::string cell;
  while (std::getline(ss, cell, ',')) columns.push_back(cell);
  if (columns.size() < 3 || columns[columns.size() - 2] != "label" ||
      columns.back() != "source_tag")
    raise(ErrorCode::Format, "feature CSV must end with label,source_tag columns");

  FeatureTable table;
  table.names.assign(columns.begin(), columns.end() - 2);
  for (std::size_t i = 0; i < table.names.size(); ++i)
    for (std::size_t j = 0; j < i; ++j)
      if (table.names[i] == table.names[j])
        raise(ErrorCode::Format, "duplicate feature column '" + table.names[i] + "'");

  std::string line;
  std::size_t row_idx = 0;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    ++row_idx;
    std::vector<std::string> cells;
    std::size_t start = 0;
    while (true) {
      std::size_t pos = line.find(',', start);
      if (pos == std::string::npos) {
        cells.push_back(line.substr(start));
        break;
      }
      cells.push_back(line.substr(start, pos - start));
      start = pos + 1;
    }
    if (cells.size() != columns.size()) {
      std::ostringstream msg;
      msg << "row " << row_idx << " has " << cells.size() << " cells, expected "
          << columns.size();
      raise(ErrorCode::Format, msg.str());
    }
    FeatureVector fv;
    for (std::size_t i = 0; i < table.names.size(); ++i) {
      double v = 0.0;
      const char* first = cells[i].data();
      const char* last = first + cells[i].size();
      auto res = std::from_chars(first, last, v);
      if (res.ec != std::errc() || res.ptr != last || !std::isfinite(v)) {
        std::ostringstream msg;
        msg << "non-numeric cell '" << cells[i] << "' at row " << row_idx << ", column "
            << table.names[i];
        raise(ErrorCode::Parse, msg.str());
      }
      fv.values.push_back(v);
    }
    fv.label = label_from_string(cells[columns.size() - 2]);
    fv.source_tag = cells.back();
    table.rows.push_back(std::move(fv));
  }
  if (table.rows.empty()) raise(ErrorCode::EmptyData, "'" + path + "' has a header but no rows");
  return table;
}

double mann_whitney_p(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.empty() || b.empty()) raise(ErrorCode::Input, "mann_whitney_p needs two non-empty groups");
  std::size_t n1 = a.size(), n2 = b.size(), n = n1 + n2;

  std::vector<std::pair<double, std::size_t>> combined;
  combined.reserve(n);
  for (std::size_t i = 0; i < n1; ++i) combined.push_back({a[i], i});
  for (std::size_t i = 0; i < n2; ++i) combined.push_back({b[i], n1 + i});
  std::sort(combined.begin(), combined.end(),
            [](const auto& x, const auto& y) { return x.first < y.first; });

  std::vector<double> ranks(n);
  double tie_term = 0.0;
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j < n && combined[j].first == combined[i].first) ++j;
    double avg_rank = (static_cast<double>(i + 1) + static_cast<double>(j)) / 2.0;
    for (std::size_t t = i; t < j; ++t) ranks[combined[t].second] = avg_rank;
    double ties = static_cast<double>(j - i);
    tie_term += ties * ties * ties - ties;
    i = j;
  }

  double r1 = 0.0;
  for (std::size_t t = 0; t < n1; ++t) r1 += ranks[t];
  double u1 = r1 - static_cast<double>(n1) * (static_cast<double>(n1) + 1.0) / 2.0;

  double mu = static_cast<double>(n1) * static_cast<double>(n2) / 2.0;
  double nf = static_cast<double>(n);
  double var = static_cast<double>(n1) * static_cast<double>(n2) / 12.0 *
               ((nf + 1.0) - tie_term / (nf * (nf - 1.0)));
  if (var <= 0.0) return 1.0;

  double num = u1 - mu;
  if (num > 0.0)
    num -= 0.5;
  else if (num < 0.0)
    num += 0.5;
  double z = num / std::sqrt(var);
  double p = std::erfc(std::abs(z) / std::sqrt(2.0));
  return std::min(1.0, p);
}

std::vector<RankedFeature> rank_features(const FeatureTable& table) {
  bool has_real = false, has_sim = false;
  for (const auto& r : table.rows) {
    if (r.label == Label::Real) has_real = true;
    else has_sim = true;
  }
  if (!has_real || !has_sim)
    raise(ErrorCode::Input, "rank_features needs both real and simulated rows");

  std::vector<RankedFeature> ranked;
  for (std::size_t f = 0; f < table.names.size(); ++f) {
    std::vector<double> real_vals, sim_vals;
    for (const auto& r : table.rows)
      (r.label == Label::Real ? real_vals : sim_vals).push_back(r.values[f]);
    ranked.push_back({table.names[f], mann_whitney_p(real_vals, sim_vals)});
  }
  std::sort(ranked.begin(), ranked.end(), [](const RankedFeature& x, const RankedFeature& y) {
    if (x.p_value != y.p_value) return x.p_value < y.p_value;
    return x.name < y.name;
  });
  return ranked;
}

std::vector<std::string> top_features(const FeatureTable& table, std::size_t top_k) {
  auto ranked = rank_features(table);
  std::vector<std::string> names;
  for (std::size_t i = 0; i < ranked.size() && i < top_k; ++i) names.push_back(ranked[i].name);
  return names;
}

FeatureTable select_features(const FeatureTable& table, const std::vector<std::string>& names) {
  std::vector<std::size_t> idx;
  for (const auto& name : names) {
    auto it = std::find(table.names.begin(), table.names.end(), name);
    if (it == table.names.end())
      raise(ErrorCode::Input, "feature '" + name + "' not present in table");
    idx.push_back(static_cast<std::size_t>(it - table.names.begin()));
  }
  FeatureTable out;
  out.names = names;
  out.rows.reserve(table.rows.size());
  for (const auto& r : table.rows) {
    FeatureVector fv = r;
    fv.values.clear();
    for (std::size_t f : idx) fv.values.push_back(r.values[f]);
    out.rows.push_back(std::move(fv));
  }
  return out;
}

}  // namespace noisebench
