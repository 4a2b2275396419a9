#include "noisebench/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>
#include <utility>

#include "json.hpp"

#include "noisebench/csv.hpp"
#include "noisebench/errors.hpp"
#include "noisebench/rng.hpp"

namespace noisebench {

namespace fs = std::filesystem;
using ordered_json = nlohmann::ordered_json;

namespace {

ordered_json parse_object(const std::string& text, const char* what) {
  ordered_json j = ordered_json::parse(text, nullptr, false);
  if (j.is_discarded() || !j.is_object())
    raise(ErrorCode::Parse, std::string(what) + ": not a JSON object");
  return j;
}

void check_keys(const ordered_json& j, std::initializer_list<const char*> allowed,
                const char* what) {
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool known = false;
    for (const char* k : allowed)
      if (it.key() == k) known = true;
    if (!known)
      raise(ErrorCode::Config, std::string(what) + ": unknown key \"" + it.key() + "\"");
  }
}

double num_or(const ordered_json& j, const char* key, double fallback) {
  if (!j.contains(key)) return fallback;
  if (!j.at(key).is_number())
    raise(ErrorCode::Config, std::string(key) + " must be a number");
  return j.at(key).get<double>();
}

int int_or(const ordered_json& j, const char* key, int fallback) {
  if (!j.contains(key)) return fallback;
  if (!j.at(key).is_number_integer())
    raise(ErrorCode::Config, std::string(key) + " must be an integer");
  return j.at(key).get<int>();
}

std::string safe_name(const std::string& tag) {
  std::string out;
  for (char c : tag) {
    bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') ||
              c == '.' || c == '_' || c == '-' || c == '+';
    out.push_back(ok ? c : '_');
  }
  return out.empty() ? "_" : out;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) raise(ErrorCode::Io, "cannot open " + path.string() + " for writing");
  out << text;
  if (!out) raise(ErrorCode::Io, "write failed: " + path.string());
}

struct FramePair {
  ChannelFrame frame;
  ChannelFrame resid;
};

ChannelFrame subframe(const ChannelFrame& frame, const std::vector<std::string>& channels) {
  ChannelFrame out(frame.source_tag(), frame.label());
  for (const auto& ch : channels) out.add_series(frame.series(ch));
  return out;
}

FeatureTable channel_table(const std::vector<FramePair>& frames, const std::string& channel,
                           const PruneConfig& prune, const FeatureParams& params) {
  FeatureTable table;
  table.names = catalog_feature_names();
  for (const auto& fp : frames) {
    auto pairs = extract_windows(fp.frame.series(channel), fp.resid.series(channel), prune);
    for (auto& p : pairs) {
      p.source_tag = fp.frame.source_tag();
      p.label = fp.frame.label();
      table.rows.push_back(extract_features(p, params));
    }
  }
  return table;
}

std::vector<std::string> joint_feature_names(const std::vector<std::string>& channels) {
  std::vector<std::string> names;
  for (const auto& ch : channels)
    for (const auto& f : catalog_feature_names()) names.push_back(ch + "." + f);
  return names;
}

FeatureTable joint_table(const std::vector<FramePair>& frames,
                         const std::vector<std::string>& channels, const PruneConfig& prune,
                         const FeatureParams& params) {
  FeatureTable table;
  table.names = joint_feature_names(channels);
  for (const auto& fp : frames) {
    ChannelFrame sub = subframe(fp.frame, channels);
    ChannelFrame sub_res = subframe(fp.resid, channels);
    JointWindows jw = extract_joint(sub, sub_res, prune);
    for (std::size_t i = 0; i < jw.origins.size(); ++i) {
      FeatureVector fv;
      fv.label = fp.frame.label();
      fv.source_tag = fp.frame.source_tag();
      fv.channel = "allvalues";
      fv.origin = jw.origins[i];
      fv.values.reserve(table.names.size());
      for (const auto& ch : channels) {
        FeatureVector part = extract_features(jw.per_channel.at(ch)[i], params);
        fv.values.insert(fv.values.end(), part.values.begin(), part.values.end());
        for (const auto& name : part.imputed) fv.imputed.push_back(ch + "." + name);
      }
      table.rows.push_back(std::move(fv));
    }
  }
  return table;
}

// Candidate frames in entry order; gmm_specs must already be resolved
// for any GmmFit entry.
std::vector<ChannelFrame> candidate_frames(const std::vector<NoiseEntry>& entries,
                                           const ChannelFrame& plain, std::uint64_t seed,
                                           const std::map<std::string, NoiseSpec>& gmm_specs) {
  std::vector<ChannelFrame> out;
  for (const auto& entry : entries) {
    std::uint64_t entry_seed = derive_seed(seed, "noise:" + entry.name);
    switch (entry.kind) {
      case NoiseEntry::Kind::Plain: {
        ChannelFrame copy = plain;
        copy.set_source_tag(entry.name);
        out.push_back(std::move(copy));
        break;
      }
      case NoiseEntry::Kind::Preset:
      case NoiseEntry::Kind::Custom: {
        NoiseSpec spec = entry.spec;
        spec.name = entry.name;
        out.push_back(perturb(plain, spec, entry_seed));
        break;
      }
      case NoiseEntry::Kind::GmmFit: {
        if (gmm_specs.empty())
          raise(ErrorCode::Input, "gmm_fit requested but no fitted specs available");
        out.push_back(perturb(plain, gmm_specs, entry_seed));
        break;
      }
    }
  }
  return out;
}

SourceScore pooled_score(const ForestModel& model, const std::vector<FeatureVector>& rows) {
  SourceScore s;
  s.n_windows = rows.size();
  if (rows.empty()) return s;
  double sum = 0.0;
  std::vector<double> ps;
  ps.reserve(rows.size());
  for (const auto& r : rows) {
    double p = predict_proba(model, r);
    ps.push_back(p);
    sum += p;
  }
  s.mean_p_real = sum / static_cast<double>(ps.size());
  if (ps.size() < 2) {
    s.single_window = true;
    return s;
  }
  double ss = 0.0;
  for (double p : ps) ss += (p - s.mean_p_real) * (p - s.mean_p_real);
  double sd = std::sqrt(ss / static_cast<double>(ps.size() - 1));
  s.std_error = sd / std::sqrt(static_cast<double>(ps.size()));
  return s;
}

template <typename Fn>
auto stage(const char* name, Fn&& fn) -> decltype(fn()) {
  try {
    return fn();
  } catch (const Error& e) {
    throw Error(e.code(), std::string("stage ") + name + ": " + e.what());
  }
}

PruneConfig prune_config_from_json_obj(const ordered_json& p) {
  check_keys(p, {"window_len", "overlap_frac", "epsilon_single", "epsilon_joint"}, "prune");
  PruneConfig c;
  c.window_len = int_or(p, "window_len", c.window_len);
  c.overlap_frac = num_or(p, "overlap_frac", c.overlap_frac);
  c.epsilon_single = num_or(p, "epsilon_single", c.epsilon_single);
  c.epsilon_joint = num_or(p, "epsilon_joint", c.epsilon_joint);
  return c;
}

KalmanParams kalman_params_from_json_obj(const ordered_json& p) {
  check_keys(p, {"process_var_q", "measurement_var_r", "initial_var"}, "kalman");
  KalmanParams c;
  c.process_var_q = num_or(p, "process_var_q", c.process_var_q);
  c.measurement_var_r = num_or(p, "measurement_var_r", c.measurement_var_r);
  c.initial_var = num_or(p, "initial_var", c.initial_var);
  return c;
}

SplitPolicy split_policy_from_json_obj(const ordered_json& p) {
  check_keys(p,
             {"real_train_frac", "real_test_frac", "sim_train_frac", "sim_test_frac",
              "balance_ratio", "seed"},
             "split");
  SplitPolicy c;
  c.real_train_frac = num_or(p, "real_train_frac", c.real_train_frac);
  c.real_test_frac = num_or(p, "real_test_frac", c.real_test_frac);
  c.sim_train_frac = num_or(p, "sim_train_frac", c.sim_train_frac);
  c.sim_test_frac = num_or(p, "sim_test_frac", c.sim_test_frac);
  c.balance_ratio = num_or(p, "balance_ratio", c.balance_ratio);
  if (p.contains("seed")) {
    if (!p.at("seed").is_number_unsigned() && !p.at("seed").is_number_integer())
      raise(ErrorCode::Config, "seed must be an integer");
    c.seed = p.at("seed").get<std::uint64_t>();
  }
  return c;
}

FeatureParams feature_params_from_json_obj(const ordered_json& p) {
  check_keys(
      p, {"apen_m", "apen_r_frac", "lz_bins", "peaks_support", "pe_tau", "pe_order", "ac_lag"},
      "features");
  FeatureParams c;
  c.apen_m = int_or(p, "apen_m", c.apen_m);
  c.apen_r_frac = num_or(p, "apen_r_frac", c.apen_r_frac);
  c.lz_bins = int_or(p, "lz_bins", c.lz_bins);
  c.peaks_support = int_or(p, "peaks_support", c.peaks_support);
  c.pe_tau = int_or(p, "pe_tau", c.pe_tau);
  c.pe_order = int_or(p, "pe_order", c.pe_order);
  c.ac_lag = int_or(p, "ac_lag", c.ac_lag);
  return c;
}

ForestHyper forest_hyper_from_json_obj(const ordered_json& p) {
  check_keys(p, {"n_trees", "max_depth", "min_samples_leaf", "mtry"}, "forest");
  ForestHyper c;
  c.n_trees = int_or(p, "n_trees", c.n_trees);
  c.max_depth = int_or(p, "max_depth", c.max_depth);
  c.min_samples_leaf = int_or(p, "min_samples_leaf", c.min_samples_leaf);
  c.mtry = int_or(p, "mtry", c.mtry);
  return c;
}

}  // namespace

PruneConfig prune_config_from_json(const std::string& json_text) {
  return prune_config_from_json_obj(parse_object(json_text, "prune"));
}

KalmanParams kalman_params_from_json(const std::string& json_text) {
  return kalman_params_from_json_obj(parse_object(json_text, "kalman"));
}

SplitPolicy split_policy_from_json(const std::string& json_text) {
  return split_policy_from_json_obj(parse_object(json_text, "split"));
}

FeatureParams feature_params_from_json(const std::string& json_text) {
  return feature_params_from_json_obj(parse_object(json_text, "features"));
}

ForestHyper forest_hyper_from_json(const std::string& json_text) {
  return forest_hyper_from_json_obj(parse_object(json_text, "forest"));
}

PipelineConfig pipeline_config_from_json(const std::string& json_text) {
  ordered_json j = parse_object(json_text, "pipeline config");
  check_keys(j,
             {"grid", "noises", "prune", "kalman", "split", "features", "forest", "top_k",
              "gmm_k", "real_manifest", "channels", "allvalues"},
             "pipeline config");
  PipelineConfig c;
  if (j.contains("grid")) c.grid = grid_config_from_json(j.at("grid").dump());
  if (j.contains("noises")) {
    if (!j.at("noises").is_array()) raise(ErrorCode::Config, "noises must be an array");
    for (const auto& item : j.at("noises")) {
      NoiseEntry entry;
      if (item.is_string()) {
        std::string name = item.get<std::string>();
        if (name == "plain") {
          entry.kind = NoiseEntry::Kind::Plain;
          entry.name = name;
        } else if (name == "gmm_fit") {
          entry.kind = NoiseEntry::Kind::GmmFit;
          entry.name = name;
        } else {
          entry.kind = NoiseEntry::Kind::Preset;
          entry.name = name;
          entry.spec = noise_preset(name);
        }
      } else if (item.is_object()) {
        entry.kind = NoiseEntry::Kind::Custom;
        entry.spec = noise_spec_from_json(item.dump());
        if (entry.spec.name.empty())
          raise(ErrorCode::Config, "custom noise entry needs a non-empty name");
        entry.name = entry.spec.name;
      } else {
        raise(ErrorCode::Config, "noises entries must be names or spec objects");
      }
      c.noises.push_back(std::move(entry));
    }
  }
  if (c.noises.empty()) {
    NoiseEntry plain;
    plain.kind = NoiseEntry::Kind::Plain;
    plain.name = "plain";
    c.noises.push_back(std::move(plain));
  }
  std::set<std::string> seen;
  for (const auto& entry : c.noises)
    if (!seen.insert(entry.name).second)
      raise(ErrorCode::Config, "duplicate noise source name: " + entry.name);

  if (j.contains("prune")) c.prune = prune_config_from_json_obj(j.at("prune"));
  if (j.contains("kalman")) c.kalman = kalman_params_from_json_obj(j.at("kalman"));
  if (j.contains("split")) c.split = split_policy_from_json_obj(j.at("split"));
  if (j.contains("features")) c.features = feature_params_from_json_obj(j.at("features"));
  if (j.contains("forest")) c.forest = forest_hyper_from_json_obj(j.at("forest"));
  if (j.contains("top_k")) {
    int k = int_or(j, "top_k", static_cast<int>(c.top_k));
    if (k < 0) raise(ErrorCode::Config, "top_k must be >= 0");
    c.top_k = static_cast<std::size_t>(k);
  }
  if (j.contains("gmm_k")) {
    c.gmm_k = int_or(j, "gmm_k", c.gmm_k);
    if (c.gmm_k < 1) raise(ErrorCode::Config, "gmm_k must be >= 1");
  }
  if (j.contains("real_manifest")) {
    if (!j.at("real_manifest").is_string())
      raise(ErrorCode::Config, "real_manifest must be a string");
    c.real_manifest = j.at("real_manifest").get<std::string>();
  }
  if (j.contains("channels")) {
    if (!j.at("channels").is_array()) raise(ErrorCode::Config, "channels must be an array");
    for (const auto& ch : j.at("channels")) {
      if (!ch.is_string()) raise(ErrorCode::Config, "channels entries must be strings");
      c.channels.push_back(ch.get<std::string>());
    }
  }
  if (j.contains("allvalues")) {
    if (!j.at("allvalues").is_boolean()) raise(ErrorCode::Config, "allvalues must be a bool");
    c.allvalues = j.at("allvalues").get<bool>();
  }
  return c;
}

std::string pipeline_config_to_json(const PipelineConfig& c) {
  ordered_json j;
  j["grid"] = ordered_json::parse(grid_config_to_json(c.grid));
  ordered_json noises = ordered_json::array();
  for (const auto& entry : c.noises) {
    switch (entry.kind) {
      case NoiseEntry::Kind::Plain:
      case NoiseEntry::Kind::GmmFit:
      case NoiseEntry::Kind::Preset:
        noises.push_back(entry.name);
        break;
      case NoiseEntry::Kind::Custom:
        noises.push_back(ordered_json::parse(noise_spec_to_json(entry.spec)));
        break;
    }
  }
  j["noises"] = noises;
  j["prune"] = {{"window_len", c.prune.window_len},
                {"overlap_frac", c.prune.overlap_frac},
                {"epsilon_single", c.prune.epsilon_single},
                {"epsilon_joint", c.prune.epsilon_joint}};
  j["kalman"] = {{"process_var_q", c.kalman.process_var_q},
                 {"measurement_var_r", c.kalman.measurement_var_r},
                 {"initial_var", c.kalman.initial_var}};
  j["split"] = {{"real_train_frac", c.split.real_train_frac},
                {"real_test_frac", c.split.real_test_frac},
                {"sim_train_frac", c.split.sim_train_frac},
                {"sim_test_frac", c.split.sim_test_frac},
                {"balance_ratio", c.split.balance_ratio}};
  j["features"] = {{"apen_m", c.features.apen_m},
                   {"apen_r_frac", c.features.apen_r_frac},
                   {"lz_bins", c.features.lz_bins},
                   {"peaks_support", c.features.peaks_support},
                   {"pe_tau", c.features.pe_tau},
                   {"pe_order", c.features.pe_order},
                   {"ac_lag", c.features.ac_lag}};
  j["forest"] = {{"n_trees", c.forest.n_trees},
                 {"max_depth", c.forest.max_depth},
                 {"min_samples_leaf", c.forest.min_samples_leaf},
                 {"mtry", c.forest.mtry}};
  j["top_k"] = c.top_k;
  j["gmm_k"] = c.gmm_k;
  j["real_manifest"] = c.real_manifest;
  j["channels"] = c.channels;
  j["allvalues"] = c.allvalues;
  return j.dump(2);
}

FeatureTable features_for_channel(const ChannelFrame& raw, const ChannelFrame& noise,
                                  const std::string& channel, const PruneConfig& prune,
                                  const FeatureParams& params) {
  std::vector<FramePair> one(1);
  one[0].frame = raw;
  one[0].resid = noise;
  if (channel == "allvalues") return joint_table(one, raw.channel_names(), prune, params);
  return channel_table(one, channel, prune, params);
}

namespace {

void write_window_rows(const fs::path& path, const std::vector<WindowPair>& pairs, bool raw,
                       int len) {
  std::string text;
  for (int i = 0; i < len; ++i) {
    if (i) text += ',';
    text += "w" + std::to_string(i);
  }
  text += '\n';
  for (const auto& p : pairs) {
    const auto& v = raw ? p.raw : p.noise;
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (i) text += ',';
      text += format_double(v[i]);
    }
    text += '\n';
  }
  write_text(path, text);
}

}  // namespace

void dump_windows(const ChannelFrame& raw, const ChannelFrame& noise,
                  const std::string& channel, const PruneConfig& prune,
                  const std::string& dir) {
  fs::path root(dir);
  fs::create_directories(root);
  auto dump_one = [&](const std::string& ch, const std::vector<WindowPair>& pairs) {
    write_window_rows(root / (safe_name(ch) + "_raw.csv"), pairs, true, prune.window_len);
    write_window_rows(root / (safe_name(ch) + "_noise.csv"), pairs, false, prune.window_len);
  };
  if (channel == "allvalues") {
    JointWindows jw = extract_joint(raw, noise, prune);
    for (const auto& ch : raw.channel_names()) dump_one(ch, jw.per_channel.at(ch));
    return;
  }
  dump_one(channel, extract_windows(raw.series(channel), noise.series(channel), prune));
}

PipelineResult run_pipeline(const PipelineConfig& config_in, std::uint64_t seed,
                            const std::string& run_dir) {
  PipelineConfig config = config_in;
  if (config.noises.empty()) {
    NoiseEntry plain;
    plain.kind = NoiseEntry::Kind::Plain;
    plain.name = "plain";
    config.noises.push_back(std::move(plain));
  }
  if (config.real_manifest.empty())
    raise(ErrorCode::Manifest, "pipeline config needs real_manifest");

  std::vector<FramePair> real_frames;
  std::vector<FramePair> manifest_sims;
  stage("manifest", [&] {
    auto entries = load_manifest(config.real_manifest);
    for (const auto& e : entries) {
      ChannelFrame frame = load_csv(e.path);
      frame.set_source_tag(e.source_tag);
      frame.set_label(e.label);
      FramePair fp;
      fp.frame = std::move(frame);
      if (e.label == Label::Real)
        real_frames.push_back(std::move(fp));
      else
        manifest_sims.push_back(std::move(fp));
    }
    if (real_frames.empty())
      raise(ErrorCode::Manifest, "manifest lists no real traces");
  });

  ChannelFrame plain = stage("simulate", [&] { return simulate_grid(config.grid); });
  plain.set_source_tag("plain");

  // Processed channels: explicit list, or every channel present everywhere.
  std::vector<std::string> channels = stage("channels", [&] {
    std::vector<const ChannelFrame*> all;
    for (const auto& fp : real_frames) all.push_back(&fp.frame);
    for (const auto& fp : manifest_sims) all.push_back(&fp.frame);
    all.push_back(&plain);
    std::vector<std::string> out;
    if (!config.channels.empty()) {
      for (const auto& ch : config.channels) {
        for (const ChannelFrame* f : all)
          if (!f->has_channel(ch))
            raise(ErrorCode::Config,
                  "channel " + ch + " missing from trace " + f->source_tag());
        out.push_back(ch);
      }
      return out;
    }
    for (const auto& ch : channel_vocabulary()) {
      bool everywhere = true;
      for (const ChannelFrame* f : all)
        if (!f->has_channel(ch)) everywhere = false;
      if (everywhere) out.push_back(ch);
    }
    if (out.empty()) raise(ErrorCode::Config, "traces share no channels");
    return out;
  });

  stage("estimate", [&] {
    for (auto& fp : real_frames) fp.resid = estimate_noise(fp.frame, config.kalman);
    for (auto& fp : manifest_sims) fp.resid = estimate_noise(fp.frame, config.kalman);
  });

  // Fitted noise, when requested: one GMM per channel on the pooled
  // residuals of every real trace.
  std::map<std::string, NoiseSpec> gmm_specs;
  bool wants_gmm_fit = false;
  std::string gmm_entry_name;
  for (const auto& entry : config.noises)
    if (entry.kind == NoiseEntry::Kind::GmmFit) {
      wants_gmm_fit = true;
      gmm_entry_name = entry.name;
    }
  if (wants_gmm_fit) {
    stage("gmm_fit", [&] {
      for (const auto& ch : channels) {
        std::vector<double> pooled;
        for (const auto& fp : real_frames) {
          const auto& v = fp.resid.values(ch);
          pooled.insert(pooled.end(), v.begin(), v.end());
        }
        GmmFitResult fit = fit_gmm(pooled, config.gmm_k);
        fit.spec.name = gmm_entry_name;
        gmm_specs[ch] = std::move(fit.spec);
      }
    });
  }

  std::vector<FramePair> candidates;
  stage("perturb", [&] {
    auto frames = candidate_frames(config.noises, plain, seed, gmm_specs);
    std::set<std::string> tags;
    for (const auto& entry : config.noises) tags.insert(entry.name);
    for (auto& f : frames) {
      FramePair fp;
      fp.frame = std::move(f);
      candidates.push_back(std::move(fp));
    }
    for (auto& fp : manifest_sims) {
      if (!tags.insert(fp.frame.source_tag()).second)
        raise(ErrorCode::Config,
              "manifest simulated tag collides with a noise source: " + fp.frame.source_tag());
      candidates.push_back(std::move(fp));
    }
    manifest_sims.clear();
    for (auto& fp : candidates)
      if (fp.resid.n_channels() == 0) fp.resid = estimate_noise(fp.frame, config.kalman);
  });

  std::vector<FramePair> all_frames;
  all_frames.reserve(real_frames.size() + candidates.size());
  for (auto& fp : real_frames) all_frames.push_back(std::move(fp));
  for (auto& fp : candidates) all_frames.push_back(std::move(fp));
  std::size_t n_real_frames = real_frames.size();
  real_frames.clear();
  candidates.clear();

  PipelineResult result;
  result.seed = seed;
  result.channels = channels;
  result.gmm_fit_specs = gmm_specs;
  for (std::size_t i = n_real_frames; i < all_frames.size(); ++i)
    result.candidate_sources.push_back(all_frames[i].frame.source_tag());

  fs::path root;
  bool writing = !run_dir.empty();
  if (writing) {
    root = fs::path(run_dir);
    stage("artifacts", [&] {
      fs::create_directories(root / "candidates");
      fs::create_directories(root / "features");
      fs::create_directories(root / "models");
      fs::create_directories(root / "reports");
      fs::create_directories(root / "residuals");
      write_text(root / "config.json", pipeline_config_to_json(config) + "\n");
      for (std::size_t i = 0; i < all_frames.size(); ++i) {
        const auto& fp = all_frames[i];
        std::string tag = safe_name(fp.frame.source_tag());
        if (i < n_real_frames) {
          write_csv(fp.resid, (root / "residuals" / ("real_" + tag + ".csv")).string());
        } else {
          write_csv(fp.frame, (root / "candidates" / (tag + ".csv")).string());
          write_csv(fp.resid, (root / "residuals" / ("sim_" + tag + ".csv")).string());
        }
      }
      if (!gmm_specs.empty()) {
        ordered_json specs;
        for (const auto& [ch, spec] : gmm_specs)
          specs[ch] = ordered_json::parse(noise_spec_to_json(spec));
        write_text(root / "models" / "gmm_specs.json", specs.dump(2) + "\n");
      }
    });
  }

  auto run_flow = [&](const std::string& key, FeatureTable&& table) {
    ChannelResult cr;
    cr.channel = key;
    cr.n_rows_total = table.rows.size();
    for (const auto& r : table.rows)
      if (r.label == Label::Real) ++cr.n_rows_real;

    if (writing) write_feature_csv(table, (root / "features" / (key + ".csv")).string());

    SplitPolicy policy = config.split;
    policy.seed = derive_seed(seed, "learn:" + key);
    TrainResult tr = train(table, policy, config.forest, config.top_k);

    std::vector<FeatureVector> sim_test;
    std::vector<FeatureVector> real_test;
    for (auto& row : tr.test) {
      if (row.label == Label::Real)
        real_test.push_back(std::move(row));
      else
        sim_test.push_back(std::move(row));
    }
    cr.report = score(tr.model, sim_test, key);
    cr.real_test = pooled_score(tr.model, real_test);
    cr.held_out_recall = tr.held_out_recall;
    cr.selected = tr.selected;
    cr.top_source = cr.report.ranking.empty() ? std::string() : cr.report.ranking.front();
    cr.model = std::move(tr.model);

    if (writing) {
      save_model(cr.model, (root / "models" / (key + ".json")).string());
      save_report(cr.report, (root / "reports" / (key + ".json")).string());
      write_text(root / "reports" / (key + ".txt"), report_to_text(cr.report));
    }
    result.per_channel[key] = std::move(cr);
  };

  for (const auto& ch : channels) {
    FeatureTable table = stage("features", [&] {
      return channel_table(all_frames, ch, config.prune, config.features);
    });
    stage("train", [&] { run_flow(ch, std::move(table)); });
  }
  if (config.allvalues) {
    FeatureTable table = stage("features", [&] {
      return joint_table(all_frames, channels, config.prune, config.features);
    });
    stage("train", [&] { run_flow("allvalues", std::move(table)); });
  }

  ordered_json summary;
  summary["format"] = "noisebench-summary";
  summary["version"] = 1;
  summary["seed"] = seed;
  summary["channels"] = channels;
  {
    std::vector<std::string> real_tags;
    for (std::size_t i = 0; i < n_real_frames; ++i) {
      const std::string& t = all_frames[i].frame.source_tag();
      if (std::find(real_tags.begin(), real_tags.end(), t) == real_tags.end())
        real_tags.push_back(t);
    }
    summary["real_sources"] = real_tags;
  }
  summary["candidate_sources"] = result.candidate_sources;
  ordered_json per_channel;
  std::vector<std::string> keys = channels;
  if (result.per_channel.count("allvalues")) keys.push_back("allvalues");
  for (const auto& key : keys) {
    const ChannelResult& cr = result.per_channel.at(key);
    ordered_json c;
    c["top_source"] = cr.top_source;
    c["held_out_recall"] = cr.held_out_recall;
    c["real_test"] = {{"mean_p_real", cr.real_test.mean_p_real},
                      {"std_error", cr.real_test.std_error},
                      {"n_windows", cr.real_test.n_windows}};
    c["n_rows"] = cr.n_rows_total;
    c["n_real_rows"] = cr.n_rows_real;
    c["model_fingerprint"] = cr.model.fingerprint;
    c["selected_features"] = cr.selected;
    ordered_json ranking = ordered_json::array();
    for (const auto& name : cr.report.ranking) {
      const SourceScore& s = cr.report.per_source.at(name);
      ranking.push_back({{"source", name},
                         {"mean_p_real", s.mean_p_real},
                         {"std_error", s.std_error},
                         {"n_windows", s.n_windows}});
    }
    c["ranking"] = ranking;
    per_channel[key] = std::move(c);
  }
  summary["per_channel"] = std::move(per_channel);
  result.summary_json = summary.dump(2);
  if (writing) write_text(root / "summary.json", result.summary_json + "\n");
  return result;
}

std::map<std::string, FidelityReport> rescore_candidates(const PipelineResult& baseline,
                                                         const PipelineConfig& config,
                                                         const GridConfig& grid,
                                                         std::uint64_t seed) {
  ChannelFrame plain = simulate_grid(grid);
  plain.set_source_tag("plain");
  bool wants_gmm_fit = false;
  for (const auto& entry : config.noises)
    if (entry.kind == NoiseEntry::Kind::GmmFit) wants_gmm_fit = true;
  if (wants_gmm_fit && baseline.gmm_fit_specs.empty())
    raise(ErrorCode::Input, "baseline run has no fitted noise specs");

  std::vector<FramePair> frames;
  for (auto& f : candidate_frames(config.noises, plain, seed, baseline.gmm_fit_specs)) {
    FramePair fp;
    fp.frame = std::move(f);
    fp.resid = estimate_noise(fp.frame, config.kalman);
    frames.push_back(std::move(fp));
  }

  std::map<std::string, FidelityReport> out;
  for (const auto& ch : baseline.channels) {
    const ChannelResult& base = baseline.per_channel.at(ch);
    FeatureTable table = channel_table(frames, ch, config.prune, config.features);
    FeatureTable reduced = select_features(table, base.model.feature_order);
    out[ch] = score(base.model, reduced.rows, ch);
  }
  if (baseline.per_channel.count("allvalues")) {
    const ChannelResult& base = baseline.per_channel.at("allvalues");
    FeatureTable table = joint_table(frames, baseline.channels, config.prune, config.features);
    FeatureTable reduced = select_features(table, base.model.feature_order);
    out["allvalues"] = score(base.model, reduced.rows, "allvalues");
  }
  return out;
}

}  // namespace noisebench
