// End-to-end orchestration: simulate, perturb, estimate, window,
// featurize, train, score; one report per channel plus a joint
// "allvalues" report over synchronized windows.
#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "noisebench/estimation.hpp"
#include "noisebench/features.hpp"
#include "noisebench/gridsim.hpp"
#include "noisebench/learn.hpp"
#include "noisebench/noisegen.hpp"
#include "noisebench/scoring.hpp"
#include "noisebench/windowing.hpp"

namespace noisebench {

struct NoiseEntry {
  enum class Kind { Plain, Preset, Custom, GmmFit };
  Kind kind = Kind::Preset;
  std::string name;
  NoiseSpec spec;  // Preset/Custom only
};

struct PipelineConfig {
  GridConfig grid;
  std::vector<NoiseEntry> noises;  // empty config input defaults to plain only
  PruneConfig prune;
  KalmanParams kalman;
  SplitPolicy split;
  FeatureParams features;
  ForestHyper forest;
  std::size_t top_k = 11;
  int gmm_k = 3;
  std::string real_manifest;
  std::vector<std::string> channels;  // empty = every channel shared by all frames
  bool allvalues = true;
};

PipelineConfig pipeline_config_from_json(const std::string& json_text);
std::string pipeline_config_to_json(const PipelineConfig& config);

// Sub-config parsers; each takes a JSON object, rejects unknown keys,
// and leaves absent fields at their defaults.
PruneConfig prune_config_from_json(const std::string& json_text);
KalmanParams kalman_params_from_json(const std::string& json_text);
SplitPolicy split_policy_from_json(const std::string& json_text);
FeatureParams feature_params_from_json(const std::string& json_text);
ForestHyper forest_hyper_from_json(const std::string& json_text);

struct ChannelResult {
  std::string channel;
  FidelityReport report;   // candidate sources, held-out windows
  SourceScore real_test;   // pooled held-out real windows
  double held_out_recall = 0.0;
  ForestModel model;
  std::vector<std::string> selected;
  std::size_t n_rows_total = 0;
  std::size_t n_rows_real = 0;
  std::string top_source;
};

struct PipelineResult {
  std::uint64_t seed = 0;
  std::vector<std::string> channels;           // processed measurement channels
  std::map<std::string, ChannelResult> per_channel;  // keyed by channel, plus "allvalues"
  std::map<std::string, NoiseSpec> gmm_fit_specs;    // per channel, when gmm_fit is used
  std::vector<std::string> candidate_sources;
  std::string summary_json;
};

// One feature row per kept window of the named channel; "allvalues"
// concatenates every channel of the frame over joint windows.
FeatureTable features_for_channel(const ChannelFrame& raw, const ChannelFrame& noise,
                                  const std::string& channel, const PruneConfig& prune,
                                  const FeatureParams& params);

// Kept windows as CSV, one per row with columns w0..wN-1; raw and noise
// sides land in <dir>/<channel>_raw.csv and <dir>/<channel>_noise.csv.
void dump_windows(const ChannelFrame& raw, const ChannelFrame& noise,
                  const std::string& channel, const PruneConfig& prune, const std::string& dir);

// run_dir may be empty: results stay in memory, nothing is written.
PipelineResult run_pipeline(const PipelineConfig& config, std::uint64_t seed,
                            const std::string& run_dir);

// Regenerates the candidate set on a different grid (e.g. with load
// events) and scores every kept window with the frozen baseline models.
// gmm_fit entries reuse the baseline's fitted specs.
std::map<std::string, FidelityReport> rescore_candidates(const PipelineResult& baseline,
                                                         const PipelineConfig& config,
                                                         const GridConfig& grid,
                                                         std::uint64_t seed);

}  // namespace noisebench
