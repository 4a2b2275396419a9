#include "noisebench.h"

#include <cstdlib>
#include <cstring>
#include <string>
#include <vector>

#include "json.hpp"

#include "noisebench/csv.hpp"
#include "noisebench/errors.hpp"
#include "noisebench/estimation.hpp"
#include "noisebench/features.hpp"
#include "noisebench/frame.hpp"
#include "noisebench/gridsim.hpp"
#include "noisebench/learn.hpp"
#include "noisebench/noisegen.hpp"
#include "noisebench/pipeline.hpp"
#include "noisebench/scoring.hpp"

struct nb_frame {
  noisebench::ChannelFrame frame;
};

namespace {

using noisebench::Error;
using noisebench::ErrorCode;
using ordered_json = nlohmann::ordered_json;

constexpr const char* kVersion = "0.1.0";

thread_local std::string g_last_error;

template <typename Fn>
int guarded(Fn&& fn) {
  try {
    fn();
    return NB_OK;
  } catch (const Error& e) {
    g_last_error = std::string(noisebench::error_code_name(e.code())) + ": " + e.what();
    return static_cast<int>(e.code());
  } catch (const std::exception& e) {
    g_last_error = std::string("InternalError: ") + e.what();
    return NB_E_INTERNAL;
  } catch (...) {
    g_last_error = "InternalError: unknown exception";
    return NB_E_INTERNAL;
  }
}

void need(bool cond, const char* what) {
  if (!cond) noisebench::raise(ErrorCode::Input, std::string(what) + " must not be null");
}

void put_string(const std::string& s, char** out) {
  char* mem = static_cast<char*>(std::malloc(s.size() + 1));
  if (!mem) noisebench::raise(ErrorCode::Internal, "out of memory");
  std::memcpy(mem, s.c_str(), s.size() + 1);
  *out = mem;
}

ordered_json parse_options(const char* options_json, const char* what) {
  if (!options_json || !*options_json) return ordered_json::object();
  ordered_json j = ordered_json::parse(std::string(options_json), nullptr, false);
  if (j.is_discarded() || !j.is_object())
    noisebench::raise(ErrorCode::Config, std::string(what) + ": options must be a JSON object");
  return j;
}

}  // namespace

extern "C" {

const char* nb_version(void) { return kVersion; }

const char* nb_last_error(void) { return g_last_error.c_str(); }

void nb_string_free(char* s) { std::free(s); }

int nb_frame_load_csv(const char* path, nb_frame** out) {
  return guarded([&] {
    need(path, "path");
    need(out, "out");
    auto* f = new nb_frame{noisebench::load_csv(path)};
    *out = f;
  });
}

int nb_frame_write_csv(const nb_frame* frame, const char* path) {
  return guarded([&] {
    need(frame, "frame");
    need(path, "path");
    noisebench::write_csv(frame->frame, path);
  });
}

void nb_frame_free(nb_frame* frame) { delete frame; }

int nb_frame_info(const nb_frame* frame, char** json_out) {
  return guarded([&] {
    need(frame, "frame");
    need(json_out, "json_out");
    ordered_json j;
    j["source_tag"] = frame->frame.source_tag();
    j["label"] = noisebench::label_name(frame->frame.label());
    j["n_rows"] = frame->frame.n_rows();
    j["start_epoch"] = frame->frame.start_epoch();
    j["channels"] = frame->frame.channel_names();
    put_string(j.dump(2), json_out);
  });
}

int nb_frame_set_meta(nb_frame* frame, const char* source_tag, const char* label) {
  return guarded([&] {
    need(frame, "frame");
    if (source_tag) frame->frame.set_source_tag(source_tag);
    if (label) frame->frame.set_label(noisebench::label_from_string(label));
  });
}

int nb_simulate_grid(const char* config_json, nb_frame** out) {
  return guarded([&] {
    need(out, "out");
    noisebench::GridConfig config;
    if (config_json && *config_json) config = noisebench::grid_config_from_json(config_json);
    *out = new nb_frame{noisebench::simulate_grid(config)};
  });
}

int nb_noise_presets(char** json_out) {
  return guarded([&] {
    need(json_out, "json_out");
    ordered_json j = noisebench::noise_preset_names();
    put_string(j.dump(2), json_out);
  });
}

int nb_noise_spec(const char* name_or_json, char** spec_json_out) {
  return guarded([&] {
    need(name_or_json, "name_or_json");
    need(spec_json_out, "spec_json_out");
    std::string text(name_or_json);
    noisebench::NoiseSpec spec;
    ordered_json probe = ordered_json::parse(text, nullptr, false);
    if (!probe.is_discarded() && probe.is_object())
      spec = noisebench::noise_spec_from_json(text);
    else
      spec = noisebench::noise_preset(text);
    put_string(noisebench::noise_spec_to_json(spec), spec_json_out);
  });
}

int nb_sample_noise(const char* spec_json, size_t n, double scale, uint64_t seed, double* buf) {
  return guarded([&] {
    need(spec_json, "spec_json");
    need(buf, "buf");
    auto spec = noisebench::noise_spec_from_json(spec_json);
    auto values = noisebench::sample_noise(spec, n, scale, seed);
    std::memcpy(buf, values.data(), values.size() * sizeof(double));
  });
}

int nb_perturb(const nb_frame* frame, const char* spec_json, uint64_t seed, nb_frame** out) {
  return guarded([&] {
    need(frame, "frame");
    need(spec_json, "spec_json");
    need(out, "out");
    auto spec = noisebench::noise_spec_from_json(spec_json);
    *out = new nb_frame{noisebench::perturb(frame->frame, spec, seed)};
  });
}

int nb_fit_gmm(const double* values, size_t n, int k, char** spec_json_out) {
  return guarded([&] {
    need(values, "values");
    need(spec_json_out, "spec_json_out");
    std::vector<double> data(values, values + n);
    auto fit = noisebench::fit_gmm(data, k);
    ordered_json j = ordered_json::parse(noisebench::noise_spec_to_json(fit.spec));
    j["fit"] = {{"iterations", fit.iterations},
                {"variance_floored", fit.variance_floored},
                {"log_likelihood", fit.log_likelihood}};
    put_string(j.dump(2), spec_json_out);
  });
}

int nb_kalman_smooth(const double* values, size_t n, double process_var_q,
                     double measurement_var_r, double initial_var, double* out) {
  return guarded([&] {
    need(values, "values");
    need(out, "out");
    noisebench::KalmanParams params{process_var_q, measurement_var_r, initial_var};
    std::vector<double> data(values, values + n);
    auto smooth = noisebench::kalman_smooth(data, params);
    std::memcpy(out, smooth.data(), smooth.size() * sizeof(double));
  });
}

int nb_estimate_noise(const nb_frame* frame, double process_var_q, double measurement_var_r,
                      double initial_var, nb_frame** out) {
  return guarded([&] {
    need(frame, "frame");
    need(out, "out");
    noisebench::KalmanParams params{process_var_q, measurement_var_r, initial_var};
    *out = new nb_frame{noisebench::estimate_noise(frame->frame, params)};
  });
}

int nb_extract_features(const nb_frame* raw, const nb_frame* noise, const char* options_json,
                        const char* out_csv, char** stats_json_out) {
  return guarded([&] {
    need(raw, "raw");
    need(noise, "noise");
    need(out_csv, "out_csv");
    ordered_json options = parse_options(options_json, "extract");
    noisebench::PruneConfig prune;
    noisebench::FeatureParams params;
    if (options.contains("prune"))
      prune = noisebench::prune_config_from_json(options.at("prune").dump());
    if (options.contains("features"))
      params = noisebench::feature_params_from_json(options.at("features").dump());
    std::string channel;
    if (options.contains("channel")) {
      channel = options.at("channel").get<std::string>();
    } else if (raw->frame.n_channels() == 1) {
      channel = raw->frame.channel_names().front();
    } else {
      noisebench::raise(ErrorCode::Config,
                        "multi-channel frame: options need \"channel\" (or \"allvalues\")");
    }
    auto table = noisebench::features_for_channel(raw->frame, noise->frame, channel, prune,
                                                  params);
    noisebench::write_feature_csv(table, out_csv);
    if (options.contains("dump_dir"))
      noisebench::dump_windows(raw->frame, noise->frame, channel, prune,
                               options.at("dump_dir").get<std::string>());
    if (stats_json_out) {
      std::size_t candidates =
          noisebench::candidate_origins(raw->frame.n_rows(), prune).size();
      ordered_json stats;
      stats["channel"] = channel;
      stats["n_rows"] = table.rows.size();
      stats["n_candidates"] = candidates;
      put_string(stats.dump(2), stats_json_out);
    }
  });
}

int nb_train(const char* features_csv, const char* options_json, const char* model_out_path,
             char** stats_json_out) {
  return guarded([&] {
    need(features_csv, "features_csv");
    need(model_out_path, "model_out_path");
    ordered_json options = parse_options(options_json, "train");
    noisebench::SplitPolicy policy;
    noisebench::ForestHyper hyper;
    std::size_t top_k = 11;
    if (options.contains("split"))
      policy = noisebench::split_policy_from_json(options.at("split").dump());
    if (options.contains("forest"))
      hyper = noisebench::forest_hyper_from_json(options.at("forest").dump());
    if (options.contains("top_k")) top_k = options.at("top_k").get<std::size_t>();
    if (options.contains("seed")) policy.seed = options.at("seed").get<std::uint64_t>();
    auto table = noisebench::load_feature_csv(features_csv);
    auto result = noisebench::train(table, policy, hyper, top_k);
    noisebench::save_model(result.model, model_out_path);
    if (stats_json_out) {
      ordered_json stats;
      stats["held_out_recall"] = result.held_out_recall;
      stats["n_train_real"] = result.n_train_real;
      stats["n_train_sim"] = result.n_train_sim;
      stats["n_test"] = result.test.size();
      stats["selected_features"] = result.selected;
      ordered_json ranking = ordered_json::array();
      for (const auto& r : result.ranking)
        ranking.push_back({{"name", r.name}, {"p_value", r.p_value}});
      stats["ranking"] = ranking;
      stats["fingerprint"] = result.model.fingerprint;
      put_string(stats.dump(2), stats_json_out);
    }
  });
}

int nb_rank(const char* model_path, const char* features_csv, const char* channel,
            char** report_json_out) {
  return guarded([&] {
    need(model_path, "model_path");
    need(features_csv, "features_csv");
    need(report_json_out, "report_json_out");
    auto model = noisebench::load_model(model_path);
    auto table = noisebench::load_feature_csv(features_csv);
    auto reduced = noisebench::select_features(table, model.feature_order);
    auto report =
        noisebench::score(model, reduced.rows, channel ? std::string(channel) : std::string());
    put_string(noisebench::report_to_json(report), report_json_out);
  });
}

int nb_report_delta(const char* baseline_json, const char* dynamic_json,
                    char** delta_json_out) {
  return guarded([&] {
    need(baseline_json, "baseline_json");
    need(dynamic_json, "dynamic_json");
    need(delta_json_out, "delta_json_out");
    auto baseline = noisebench::report_from_json(baseline_json);
    auto dynamic = noisebench::report_from_json(dynamic_json);
    put_string(noisebench::delta_to_json(noisebench::delta(baseline, dynamic)),
               delta_json_out);
  });
}

int nb_report_text(const char* report_json, char** text_out) {
  return guarded([&] {
    need(report_json, "report_json");
    need(text_out, "text_out");
    ordered_json j = ordered_json::parse(std::string(report_json), nullptr, false);
    if (j.is_discarded() || !j.is_object() || !j.contains("format"))
      noisebench::raise(ErrorCode::Parse, "document has no format field");
    std::string format = j.at("format").get<std::string>();
    if (format == "noisebench-report") {
      put_string(noisebench::report_to_text(noisebench::report_from_json(report_json)),
                 text_out);
    } else if (format == "noisebench-delta") {
      auto d = noisebench::delta_from_json(report_json);
      put_string(noisebench::delta_to_text(d), text_out);
    } else {
      noisebench::raise(ErrorCode::Format, "unsupported document format: " + format);
    }
  });
}

int nb_run_pipeline(const char* config_json, const char* run_dir, uint64_t seed,
                    char** summary_json_out) {
  return guarded([&] {
    need(config_json, "config_json");
    auto config = noisebench::pipeline_config_from_json(config_json);
    auto result = noisebench::run_pipeline(config, seed,
                                           run_dir ? std::string(run_dir) : std::string());
    if (summary_json_out) put_string(result.summary_json, summary_json_out);
  });
}

}  // extern "C"
