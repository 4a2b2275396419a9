// Fidelity scores: per-source mean probability of being classified
// real, with standard errors, rankings and baseline/dynamic deltas.
#pragma once

#include <map>
#include <string>
#include <vector>

#include "noisebench/learn.hpp"

namespace noisebench {

struct SourceScore {
  double mean_p_real = 0.0;
  double std_error = 0.0;
  std::size_t n_windows = 0;
  bool single_window = false;  // std_error undefined, reported as 0
};

struct FidelityReport {
  std::string channel;
  std::string model_fingerprint;
  std::map<std::string, SourceScore> per_source;
  std::vector<std::string> ranking;  // mean_p_real descending, ties by name
};

// Groups rows by source_tag and averages predict_proba per group.
FidelityReport score(const ForestModel& model, const std::vector<FeatureVector>& rows,
                     const std::string& channel);

struct DeltaReport {
  std::map<std::string, double> delta;  // dynamic mean - baseline mean
  std::string baseline_top;
  std::string dynamic_top;
  bool argmax_preserved = false;
  double mean_abs_delta = 0.0;
};

DeltaReport delta(const FidelityReport& baseline, const FidelityReport& dynamic);

std::string report_to_json(const FidelityReport& report);
FidelityReport report_from_json(const std::string& json_text);
void save_report(const FidelityReport& report, const std::string& path);
FidelityReport load_report(const std::string& path);

std::string report_to_text(const FidelityReport& report);
std::string delta_to_json(const DeltaReport& report);
DeltaReport delta_from_json(const std::string& json_text);
std::string delta_to_text(const DeltaReport& report);

}  // namespace noisebench
