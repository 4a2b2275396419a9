/* noisebench C API.
 *
 * Every fallible call returns an int status: 0 on success, otherwise a
 * code from nb_status. On failure a message is retrievable with
 * nb_last_error() (thread-local, overwritten by the next failure).
 * Strings returned through char** out parameters are heap-allocated and
 * must be released with nb_string_free().
 */
#ifndef NOISEBENCH_H
#define NOISEBENCH_H

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

enum nb_status {
  NB_OK = 0,
  NB_E_IO = 1,
  NB_E_FORMAT = 2,
  NB_E_PARSE = 3,
  NB_E_EMPTY_DATA = 4,
  NB_E_INVARIANT = 5,
  NB_E_CONFIG = 6,
  NB_E_INPUT = 7,
  NB_E_MANIFEST = 8,
  NB_E_INTERNAL = 9
};

const char* nb_version(void);
const char* nb_last_error(void);
void nb_string_free(char* s);

/* A frame is a set of aligned 1 Hz channels plus a source tag and a
 * real/simulated label. */
typedef struct nb_frame nb_frame;

int nb_frame_load_csv(const char* path, nb_frame** out);
int nb_frame_write_csv(const nb_frame* frame, const char* path);
void nb_frame_free(nb_frame* frame);

/* {"source_tag":..,"label":..,"n_rows":..,"start_epoch":..,"channels":[..]} */
int nb_frame_info(const nb_frame* frame, char** json_out);
/* label: "real" or "simulated"; NULL leaves a field unchanged. */
int nb_frame_set_meta(nb_frame* frame, const char* source_tag, const char* label);

/* config_json mirrors the simulator config (base_voltage, base_current,
 * base_frequency, phase_phi, duration_s, start_epoch, events). */
int nb_simulate_grid(const char* config_json, nb_frame** out);

/* JSON array of built-in noise preset names. */
int nb_noise_presets(char** json_out);
/* Resolves a preset name or validates inline spec JSON; returns the
 * canonical spec JSON either way. */
int nb_noise_spec(const char* name_or_json, char** spec_json_out);
/* Fills buf[0..n) with a deterministic noise sequence: mean 0, std
 * approximately sigma*scale. */
int nb_sample_noise(const char* spec_json, size_t n, double scale, uint64_t seed, double* buf);
/* Adds noise drawn from the spec to every channel; the output frame is
 * labelled simulated and tagged with the spec name. */
int nb_perturb(const nb_frame* frame, const char* spec_json, uint64_t seed, nb_frame** out);
/* Expectation-maximization fit of a k-component Gaussian mixture;
 * returns a spec JSON in absolute units plus fit diagnostics under
 * "fit": {iterations, log_likelihood, variance_floored}. */
int nb_fit_gmm(const double* values, size_t n, int k, char** spec_json_out);

/* Causal scalar Kalman filter, out[i] = f(x^(i)). */
int nb_kalman_smooth(const double* values, size_t n, double process_var_q,
                     double measurement_var_r, double initial_var, double* out);
/* Residual frame: same channels, values are input minus the filter. */
int nb_estimate_noise(const nb_frame* frame, double process_var_q, double measurement_var_r,
                      double initial_var, nb_frame** out);

/* Windows the raw/noise frame pair and writes one feature row per kept
 * window to out_csv.
 * options_json: {"channel": name or "allvalues", "prune": {...},
 *                "features": {...}, "dump_dir": path}
 * stats_json_out (optional): {"channel":..,"n_rows":..,"n_candidates":..} */
int nb_extract_features(const nb_frame* raw, const nb_frame* noise, const char* options_json,
                        const char* out_csv, char** stats_json_out);

/* Trains the real-vs-simulated forest on a feature CSV.
 * options_json: {"split": {...}, "forest": {...}, "top_k": n, "seed": u64}
 * stats_json_out (optional): selected features, ranking, recall. */
int nb_train(const char* features_csv, const char* options_json, const char* model_out_path,
             char** stats_json_out);

/* Scores every simulated row of a feature CSV with a stored model and
 * returns the fidelity report JSON (per-source mean probability). */
int nb_rank(const char* model_path, const char* features_csv, const char* channel,
            char** report_json_out);

/* Baseline/dynamic deltas between two fidelity report JSON documents. */
int nb_report_delta(const char* baseline_json, const char* dynamic_json, char** delta_json_out);

/* Renders a report or delta JSON document as an aligned text table. */
int nb_report_text(const char* report_json, char** text_out);

/* Full pipeline: simulate, perturb per noise entry, estimate, window,
 * featurize, train and score per channel (plus "allvalues"). run_dir
 * may be NULL to skip artifact writing. Returns the summary JSON. */
int nb_run_pipeline(const char* config_json, const char* run_dir, uint64_t seed,
                    char** summary_json_out);

#ifdef __cplusplus
}
#endif

#endif /* NOISEBENCH_H */
