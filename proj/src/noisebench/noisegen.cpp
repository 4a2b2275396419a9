#include "noisebench/noisegen.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <numeric>

#include "json.hpp"
#include "noisebench/errors.hpp"
#include "noisebench/rng.hpp"

namespace noisebench {

namespace {

constexpr int kPinkRows = 16;
constexpr double kVarianceFloor = 1e-10;

double mixture_mean(const std::vector<GmmComponent>& comps) {
  double m = 0.0;
  for (const auto& c : comps) m += c.weight * c.mean;
  return m;
}

double mixture_std(const std::vector<GmmComponent>& comps) {
  double m = mixture_mean(comps);
  double second = 0.0;
  for (const auto& c : comps) second += c.weight * (c.mean * c.mean + c.std * c.std);
  return std::sqrt(std::max(0.0, second - m * m));
}

std::vector<double> sample_pink(std::size_t n, double target_std, Rng& rng) {
  std::vector<double> out(n);
  if (n == 0) return out;
  if (n == 1) {
    out[0] = 0.0;
    return out;
  }
  double rows[kPinkRows];
  for (int i = 0; i < kPinkRows; ++i) rows[i] = rng.uniform(-1.0, 1.0);
  for (std::size_t i = 0; i < n; ++i) {
    std::uint64_t counter = i + 1;
    int k = std::countr_zero(counter);
    if (k >= kPinkRows) k = kPinkRows - 1;
    rows[k] = rng.uniform(-1.0, 1.0);
    double sum = 0.0;
    for (int r = 0; r < kPinkRows; ++r) sum += rows[r];
    out[i] = sum + rng.uniform(-1.0, 1.0);
  }
  // exact empirical calibration: mean 0, sample std = target
  double mean = std::accumulate(out.begin(), out.end(), 0.0) / static_cast<double>(n);
  double ss = 0.0;
  for (double v : out) ss += (v - mean) * (v - mean);
  double sd = std::sqrt(ss / static_cast<double>(n - 1));
  if (sd == 0.0) {
    std::fill(out.begin(), out.end(), 0.0);
    return out;
  }
  double g = target_std / sd;
  for (double& v : out) v = (v - mean) * g;
  return out;
}

void sample_into(const NoiseSpec& spec, double scale, std::uint64_t seed,
                 std::vector<double>& out) {
  std::size_t n = out.size();
  Rng rng(seed);
  switch (spec.kind) {
    case NoiseKind::Uniform: {
      double half = std::sqrt(3.0) * spec.sigma * scale;
      for (auto& v : out) v = rng.uniform(-half, half);
      return;
    }
    case NoiseKind::Gaussian: {
      double sd = spec.sigma * scale;
      for (auto& v : out) v = sd * rng.normal();
      return;
    }
    case NoiseKind::Poisson: {
      double sd = spec.sigma * scale;
      double root = std::sqrt(spec.lambda);
      for (auto& v : out)
        v = sd * (static_cast<double>(rng.poisson(spec.lambda)) - spec.lambda) / root;
      return;
    }
    case NoiseKind::Laplace: {
      double b = spec.sigma * scale / std::sqrt(2.0);
      for (auto& v : out) v = rng.laplace(b);
      return;
    }
    case NoiseKind::Pink: {
      out = sample_pink(n, spec.sigma * scale, rng);
      return;
    }
    case NoiseKind::Gmm: {
      double shift = mixture_mean(spec.components);
      double g = spec.absolute_units ? 1.0 : scale;
      for (auto& v : out) {
        double u = rng.uniform01();
        double acc = 0.0;
        const GmmComponent* pick = &spec.components.back();
        for (const auto& c : spec.components) {
          acc += c.weight;
          if (u < acc) {
            pick = &c;
            break;
          }
        }
        v = (pick->mean + pick->std * rng.normal() - shift) * g;
      }
      return;
    }
    case NoiseKind::Sum: {
      std::fill(out.begin(), out.end(), 0.0);
      std::vector<double> part(n);
      for (std::size_t i = 0; i < spec.parts.size(); ++i) {
        sample_into(spec.parts[i], scale, derive_seed(seed, "part:" + std::to_string(i)), part);
        for (std::size_t j = 0; j < n; ++j) out[j] += part[j];
      }
      return;
    }
  }
  raise(ErrorCode::Internal, "unhandled noise kind");
}

}  // namespace

const char* noise_kind_name(NoiseKind k) {
  switch (k) {
    case NoiseKind::Uniform: return "uniform";
    case NoiseKind::Gaussian: return "gaussian";
    case NoiseKind::Poisson: return "poisson";
    case NoiseKind::Laplace: return "laplace";
    case NoiseKind::Pink: return "pink";
    case NoiseKind::Gmm: return "gmm";
    case NoiseKind::Sum: return "sum";
  }
  return "unknown";
}

void validate_spec(const NoiseSpec& spec) {
  switch (spec.kind) {
    case NoiseKind::Uniform:
    case NoiseKind::Gaussian:
    case NoiseKind::Laplace:
    case NoiseKind::Pink:
      if (!(spec.sigma > 0.0)) raise(ErrorCode::Config, "sigma must be > 0");
      return;
    case NoiseKind::Poisson:
      if (!(spec.sigma > 0.0)) raise(ErrorCode::Config, "sigma must be > 0");
      if (!(spec.lambda > 0.0)) raise(ErrorCode::Config, "lambda must be > 0");
      return;
    case NoiseKind::Gmm: {
      if (spec.components.empty()) raise(ErrorCode::Config, "gmm needs components");
      double wsum = 0.0;
      for (const auto& c : spec.components) {
        if (!(c.weight > 0.0)) raise(ErrorCode::Config, "gmm weights must be > 0");
        if (!(c.std >= 0.0)) raise(ErrorCode::Config, "gmm stds must be >= 0");
        wsum += c.weight;
      }
      if (std::abs(wsum - 1.0) > 1e-9) raise(ErrorCode::Config, "gmm weights must sum to 1");
      return;
    }
    case NoiseKind::Sum:
      if (spec.parts.size() < 2) raise(ErrorCode::Config, "sum needs at least 2 parts");
      for (const auto& p : spec.parts) validate_spec(p);
      return;
  }
  raise(ErrorCode::Config, "unknown noise kind");
}

std::vector<double> sample_noise(const NoiseSpec& spec, std::size_t n, double scale,
                                 std::uint64_t seed) {
  validate_spec(spec);
  if (n < 1) raise(ErrorCode::Input, "sample_noise needs n >= 1");
  if (!(scale > 0.0)) raise(ErrorCode::Input, "scale must be > 0");
  std::vector<double> out(n);
  sample_into(spec, scale, seed, out);
  return out;
}

std::vector<double> sample_noise(const NoiseSpec& spec, std::size_t n, double scale) {
  return sample_noise(spec, n, scale, spec.seed);
}

const std::vector<std::string>& noise_preset_names() {
  static const std::vector<std::string> names = {
      "uniform", "gaussian1", "gaussian2", "poisson", "laplace",
      "pink", "gmm", "gaussian+uniform", "laplace+uniform", "laplace+poisson"};
  return names;
}

NoiseSpec noise_preset(const std::string& name) {
  auto prim = [](NoiseKind kind, double sigma, double lambda = 0.0) {
    NoiseSpec s;
    s.kind = kind;
    s.sigma = sigma;
    s.lambda = lambda;
    return s;
  };
  auto sum2 = [&](const std::string& tag, NoiseSpec a, NoiseSpec b) {
    NoiseSpec s;
    s.kind = NoiseKind::Sum;
    s.name = tag;
    s.sigma = std::sqrt(a.sigma * a.sigma + b.sigma * b.sigma);
    s.parts = {std::move(a), std::move(b)};
    return s;
  };

  NoiseSpec s;
  if (name == "uniform") {
    s = prim(NoiseKind::Uniform, 0.01);
  } else if (name == "gaussian1") {
    s = prim(NoiseKind::Gaussian, 0.01);
  } else if (name == "gaussian2") {
    s = prim(NoiseKind::Gaussian, 0.05);
  } else if (name == "poisson") {
    s = prim(NoiseKind::Poisson, 0.01, 1.5);
  } else if (name == "laplace") {
    s = prim(NoiseKind::Laplace, 0.01);
  } else if (name == "pink") {
    s = prim(NoiseKind::Pink, 0.01);
  } else if (name == "gmm") {
    // zero-mean 3-component mixture with total std 0.02
    double sigma = 0.02;
    double comp_std = sigma * std::sqrt(7.0 / 8.0);
    s.kind = NoiseKind::Gmm;
    s.sigma = sigma;
    s.components = {{0.25, -sigma / 2.0, comp_std},
                    {0.50, 0.0, comp_std},
                    {0.25, sigma / 2.0, comp_std}};
  } else if (name == "gaussian+uniform") {
    return sum2(name, prim(NoiseKind::Gaussian, 0.01), prim(NoiseKind::Uniform, 0.01));
  } else if (name == "laplace+uniform") {
    return sum2(name, prim(NoiseKind::Laplace, 0.01), prim(NoiseKind::Uniform, 0.01));
  } else if (name == "laplace+poisson") {
    return sum2(name, prim(NoiseKind::Laplace, 0.01), prim(NoiseKind::Poisson, 0.01, 1.5));
  } else {
    raise(ErrorCode::Config, "unknown noise preset '" + name + "'");
  }
  s.name = name;
  return s;
}

GmmFitResult fit_gmm(const std::vector<double>& residuals, int k) {
  if (k < 1) raise(ErrorCode::Config, "fit_gmm needs k >= 1");
  if (residuals.size() < static_cast<std::size_t>(10 * k))
    raise(ErrorCode::Input, "fit_gmm needs at least 10*k samples");

  std::vector<double> x = residuals;
  std::sort(x.begin(), x.end());
  std::size_t n = x.size();

  GmmFitResult result;
  // quantile init: k contiguous groups of the sorted data
  std::vector<double> w(k), mu(k), var(k);
  for (int c = 0; c < k; ++c) {
    std::size_t lo = n * c / k;
    std::size_t hi = n * (c + 1) / k;
    std::size_t m = hi - lo;
    double s = 0.0;
    for (std::size_t i = lo; i < hi; ++i) s += x[i];
    mu[c] = s / static_cast<double>(m);
    double ss = 0.0;
    for (std::size_t i = lo; i < hi; ++i) ss += (x[i] - mu[c]) * (x[i] - mu[c]);
    var[c] = ss / static_cast<double>(m);
    if (var[c] < kVarianceFloor) {
      var[c] = kVarianceFloor;
      result.variance_floored = true;
    }
    w[c] = static_cast<double>(m) / static_cast<double>(n);
  }

  constexpr double kLogTwoPi = 1.8378770664093454835606594728112353;
  std::vector<double> resp(n * k);
  for (int iter = 0; iter < 200; ++iter) {
    // E step in log space for stability
    double ll = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      double best = -std::numeric_limits<double>::infinity();
      for (int c = 0; c < k; ++c) {
        double d = x[i] - mu[c];
        double lp = std::log(w[c]) - 0.5 * (kLogTwoPi + std::log(var[c]) + d * d / var[c]);
        resp[i * k + c] = lp;
        if (lp > best) best = lp;
      }
      double sum = 0.0;
      for (int c = 0; c < k; ++c) sum += std::exp(resp[i * k + c] - best);
      double lse = best + std::log(sum);
      ll += lse;
      for (int c = 0; c < k; ++c) resp[i * k + c] = std::exp(resp[i * k + c] - lse);
    }
    result.log_likelihood.push_back(ll);
    result.iterations = iter + 1;
    if (iter > 0) {
      double gain = ll - result.log_likelihood[iter - 1];
      if (gain < 1e-6) break;
    }

    // M step
    for (int c = 0; c < k; ++c) {
      double nk = 0.0, mean_acc = 0.0;
      for (std::size_t i = 0; i < n; ++i) nk += resp[i * k + c];
      if (nk <= 0.0) nk = std::numeric_limits<double>::min();
      for (std::size_t i = 0; i < n; ++i) mean_acc += resp[i * k + c] * x[i];
      double m = mean_acc / nk;
      double var_acc = 0.0;
      for (std::size_t i = 0; i < n; ++i) var_acc += resp[i * k + c] * (x[i] - m) * (x[i] - m);
      double v = var_acc / nk;
      if (v < kVarianceFloor) {
        v = kVarianceFloor;
        result.variance_floored = true;
      }
      w[c] = nk / static_cast<double>(n);
      mu[c] = m;
      var[c] = v;
    }
  }

  std::vector<int> order(k);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int a, int b) { return mu[a] < mu[b]; });

  NoiseSpec spec;
  spec.kind = NoiseKind::Gmm;
  spec.absolute_units = true;
  for (int c : order) spec.components.push_back({w[c], mu[c], std::sqrt(var[c])});
  // renormalize away floating residue so the invariant holds exactly
  double wsum = 0.0;
  for (auto& c : spec.components) wsum += c.weight;
  for (auto& c : spec.components) c.weight /= wsum;
  spec.sigma = mixture_std(spec.components);
  spec.name = "gmm_fit";
  result.spec = std::move(spec);
  return result;
}

ChannelFrame perturb(const ChannelFrame& frame,
                     const std::map<std::string, NoiseSpec>& spec_per_channel,
                     std::uint64_t seed) {
  frame.validate();
  if (frame.label() != Label::Simulated)
    raise(ErrorCode::Input, "perturb expects a simulated frame");
  for (const auto& [channel, spec] : spec_per_channel) {
    if (!frame.has_channel(channel))
      raise(ErrorCode::Config, "perturb spec references unknown channel '" + channel + "'");
    validate_spec(spec);
  }

  std::string tag = frame.source_tag();
  for (const auto& [channel, spec] : spec_per_channel) {
    (void)channel;
    if (!spec.name.empty()) {
      tag = spec.name;
      break;
    }
  }

  ChannelFrame out(tag, Label::Simulated);
  for (const auto& s : frame.series()) {
    auto it = spec_per_channel.find(s.channel);
    if (it == spec_per_channel.end()) {
      out.add_series(s);
      continue;
    }
    double scale = 1.0;
    if (!it->second.absolute_units) {
      double acc = 0.0;
      for (double v : s.values) acc += std::abs(v);
      double mean_abs = acc / static_cast<double>(s.values.size());
      scale = mean_abs > 0.0 ? mean_abs : 1.0;
    }
    std::vector<double> noise =
        sample_noise(it->second, s.values.size(), scale, derive_seed(seed, s.channel));
    TimeSeries t = s;
    for (std::size_t i = 0; i < t.values.size(); ++i) t.values[i] += noise[i];
    out.add_series(std::move(t));
  }
  return out;
}

ChannelFrame perturb(const ChannelFrame& frame, const NoiseSpec& spec, std::uint64_t seed) {
  std::map<std::string, NoiseSpec> specs;
  for (const auto& s : frame.series()) specs[s.channel] = spec;
  return perturb(frame, specs, seed);
}

namespace {

NoiseKind kind_from_string(const std::string& s) {
  for (NoiseKind k : {NoiseKind::Uniform, NoiseKind::Gaussian, NoiseKind::Poisson,
                      NoiseKind::Laplace, NoiseKind::Pink, NoiseKind::Gmm, NoiseKind::Sum})
    if (s == noise_kind_name(k)) return k;
  raise(ErrorCode::Config, "unknown noise kind '" + s + "'");
}

NoiseSpec spec_from_json_obj(const nlohmann::json& doc) {
  if (!doc.is_object()) raise(ErrorCode::Config, "noise spec must be a JSON object");
  NoiseSpec s;
  try {
    s.kind = kind_from_string(doc.at("kind").get<std::string>());
    s.name = doc.value("name", std::string());
    s.sigma = doc.value("sigma", 0.0);
    s.lambda = doc.value("lambda", 0.0);
    s.absolute_units = doc.value("absolute_units", false);
    s.seed = doc.value("seed", std::uint64_t{0});
    if (doc.contains("components"))
      for (const auto& c : doc.at("components"))
        s.components.push_back({c.at("weight").get<double>(), c.at("mean").get<double>(),
                                c.at("std").get<double>()});
    if (doc.contains("parts"))
      for (const auto& p : doc.at("parts")) s.parts.push_back(spec_from_json_obj(p));
  } catch (const nlohmann::json::exception& e) {
    raise(ErrorCode::Config, std::string("noise spec field error: ") + e.what());
  }
  validate_spec(s);
  return s;
}

nlohmann::ordered_json spec_to_json_obj(const NoiseSpec& spec) {
  nlohmann::ordered_json doc;
  doc["kind"] = noise_kind_name(spec.kind);
  if (!spec.name.empty()) doc["name"] = spec.name;
  if (spec.sigma != 0.0) doc["sigma"] = spec.sigma;
  if (spec.kind == NoiseKind::Poisson) doc["lambda"] = spec.lambda;
  if (spec.kind == NoiseKind::Gmm) {
    doc["absolute_units"] = spec.absolute_units;
    doc["components"] = nlohmann::ordered_json::array();
    for (const auto& c : spec.components)
      doc["components"].push_back({{"weight", c.weight}, {"mean", c.mean}, {"std", c.std}});
  }
  if (spec.kind == NoiseKind::Sum) {
    doc["parts"] = nlohmann::ordered_json::array();
    for (const auto& p : spec.parts) doc["parts"].push_back(spec_to_json_obj(p));
  }
  if (spec.seed != 0) doc["seed"] = spec.seed;
  return doc;
}

}  // namespace

NoiseSpec noise_spec_from_json(const std::string& json_text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::exception& e) {
    raise(ErrorCode::Config, std::string("noise spec parse failure: ") + e.what());
  }
  return spec_from_json_obj(doc);
}

std::string noise_spec_to_json(const NoiseSpec& spec) {
  return spec_to_json_obj(spec).dump(2);
}

}  // namespace noisebench
