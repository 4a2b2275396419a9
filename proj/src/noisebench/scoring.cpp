#include "noisebench/scoring.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "noisebench/errors.hpp"

namespace noisebench {

FidelityReport score(const ForestModel& model, const std::vector<FeatureVector>& rows,
                     const std::string& channel) {
  if (rows.empty()) raise(ErrorCode::Input, "score needs at least one row");

  std::map<std::string, std::vector<double>> probs;
  for (const auto& r : rows) probs[r.source_tag].push_back(predict_proba(model, r));

  FidelityReport report;
  report.channel = channel;
  report.model_fingerprint = model.fingerprint;
  for (const auto& [tag, p] : probs) {
    SourceScore s;
    s.n_windows = p.size();
    double mean = 0.0;
    for (double v : p) mean += v;
    mean /= static_cast<double>(p.size());
    s.mean_p_real = mean;
    if (p.size() < 2) {
      s.std_error = 0.0;
      s.single_window = true;
    } else {
      double ss = 0.0;
      for (double v : p) ss += (v - mean) * (v - mean);
      double sd = std::sqrt(ss / static_cast<double>(p.size() - 1));
      s.std_error = sd / std::sqrt(static_cast<double>(p.size()));
    }
    report.per_source[tag] = s;
  }

  for (const auto& [tag, s] : report.per_source) {
    (void)s;
    report.ranking.push_back(tag);
  }
  std::sort(report.ranking.begin(), report.ranking.end(),
            [&](const std::string& a, const std::string& b) {
              double ma = report.per_source.at(a).mean_p_real;
              double mb = report.per_source.at(b).mean_p_real;
              if (ma != mb) return ma > mb;
              return a < b;
            });
  return report;
}

DeltaReport delta(const FidelityReport& baseline, const FidelityReport& dynamic) {
  if (baseline.per_source.size() != dynamic.per_source.size())
    raise(ErrorCode::Input, "delta needs matching source sets");
  for (const auto& [tag, s] : baseline.per_source) {
    (void)s;
    if (dynamic.per_source.find(tag) == dynamic.per_source.end())
      raise(ErrorCode::Input, "source '" + tag + "' missing from the dynamic report");
  }

  DeltaReport out;
  for (const auto& [tag, s] : baseline.per_source)
    out.delta[tag] = dynamic.per_source.at(tag).mean_p_real - s.mean_p_real;

  out.baseline_top = baseline.ranking.empty() ? "" : baseline.ranking.front();
  out.dynamic_top = dynamic.ranking.empty() ? "" : dynamic.ranking.front();
  out.argmax_preserved = out.baseline_top == out.dynamic_top;

  double acc = 0.0;
  for (const auto& [tag, d] : out.delta) {
    (void)tag;
    acc += std::abs(d);
  }
  out.mean_abs_delta = out.delta.empty() ? 0.0 : acc / static_cast<double>(out.delta.size());
  return out;
}

std::string report_to_json(const FidelityReport& report) {
  nlohmann::ordered_json doc;
  doc["format"] = "noisebench-report";
  doc["version"] = 1;
  doc["channel"] = report.channel;
  doc["model_fingerprint"] = report.model_fingerprint;
  nlohmann::ordered_json sources;
  for (const auto& [tag, s] : report.per_source) {
    sources[tag] = {{"mean_p_real", s.mean_p_real},
                    {"std_error", s.std_error},
                    {"n_windows", s.n_windows},
                    {"single_window", s.single_window}};
  }
  doc["per_source"] = sources;
  doc["ranking"] = report.ranking;
  return doc.dump(2);
}

FidelityReport report_from_json(const std::string& json_text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::exception& e) {
    raise(ErrorCode::Format, std::string("report parse failure: ") + e.what());
  }
  FidelityReport report;
  try {
    if (doc.at("format").get<std::string>() != "noisebench-report")
      raise(ErrorCode::Format, "not a report document");
    if (doc.at("version").get<int>() != 1)
      raise(ErrorCode::Format, "unsupported report version");
    report.channel = doc.at("channel").get<std::string>();
    report.model_fingerprint = doc.at("model_fingerprint").get<std::string>();
    for (auto it = doc.at("per_source").begin(); it != doc.at("per_source").end(); ++it) {
      SourceScore s;
      s.mean_p_real = it.value().at("mean_p_real").get<double>();
      s.std_error = it.value().at("std_error").get<double>();
      s.n_windows = it.value().at("n_windows").get<std::size_t>();
      s.single_window = it.value().at("single_window").get<bool>();
      report.per_source[it.key()] = s;
    }
    report.ranking = doc.at("ranking").get<std::vector<std::string>>();
  } catch (const nlohmann::json::exception& e) {
    raise(ErrorCode::Format, std::string("report field error: ") + e.what());
  }
  if (report.ranking.size() != report.per_source.size())
    raise(ErrorCode::Format, "report ranking does not match its sources");
  return report;
}

void save_report(const FidelityReport& report, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) raise(ErrorCode::Io, "cannot write '" + path + "'");
  out << report_to_json(report) << '\n';
  if (!out) raise(ErrorCode::Io, "write failed for '" + path + "'");
}

FidelityReport load_report(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) raise(ErrorCode::Io, "cannot open '" + path + "'");
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return report_from_json(text);
}

std::string report_to_text(const FidelityReport& report) {
  std::size_t width = 6;
  for (const auto& tag : report.ranking) width = std::max(width, tag.size());

  std::ostringstream out;
  out << "channel: " << report.channel << "\n";
  out << "model:   " << report.model_fingerprint << "\n";
  char line[160];
  std::snprintf(line, sizeof(line), "%4s  %-*s  %10s  %10s  %8s\n", "rank",
                static_cast<int>(width), "source", "mean_p", "std_err", "windows");
  out << line;
  int rank = 1;
  for (const auto& tag : report.ranking) {
    const SourceScore& s = report.per_source.at(tag);
    std::snprintf(line, sizeof(line), "%4d  %-*s  %10.6f  %10.6f  %8zu%s\n", rank,
                  static_cast<int>(width), tag.c_str(), s.mean_p_real, s.std_error,
                  s.n_windows, s.single_window ? "  (single window)" : "");
    out << line;
    ++rank;
  }
  return out.str();
}

std::string delta_to_json(const DeltaReport& report) {
  nlohmann::ordered_json doc;
  doc["format"] = "noisebench-delta";
  doc["version"] = 1;
  nlohmann::ordered_json deltas;
  for (const auto& [tag, d] : report.delta) deltas[tag] = d;
  doc["delta"] = deltas;
  doc["baseline_top"] = report.baseline_top;
  doc["dynamic_top"] = report.dynamic_top;
  doc["argmax_preserved"] = report.argmax_preserved;
  doc["mean_abs_delta"] = report.mean_abs_delta;
  return doc.dump(2);
}

DeltaReport delta_from_json(const std::string& json_text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::exception& e) {
    raise(ErrorCode::Format, std::string("delta parse failure: ") + e.what());
  }
  DeltaReport report;
  try {
    if (doc.at("format").get<std::string>() != "noisebench-delta")
      raise(ErrorCode::Format, "not a delta document");
    if (doc.at("version").get<int>() != 1)
      raise(ErrorCode::Format, "unsupported delta version");
    for (auto it = doc.at("delta").begin(); it != doc.at("delta").end(); ++it)
      report.delta[it.key()] = it.value().get<double>();
    report.baseline_top = doc.at("baseline_top").get<std::string>();
    report.dynamic_top = doc.at("dynamic_top").get<std::string>();
    report.argmax_preserved = doc.at("argmax_preserved").get<bool>();
    report.mean_abs_delta = doc.at("mean_abs_delta").get<double>();
  } catch (const nlohmann::json::exception& e) {
    raise(ErrorCode::Format, std::string("delta field error: ") + e.what());
  }
  return report;
}

std::string delta_to_text(const DeltaReport& report) {
  std::size_t width = 6;
  for (const auto& [tag, d] : report.delta) {
    (void)d;
    width = std::max(width, tag.size());
  }
  std::ostringstream out;
  char line[160];
  std::snprintf(line, sizeof(line), "%-*s  %10s\n", static_cast<int>(width), "source", "delta");
  out << line;
  for (const auto& [tag, d] : report.delta) {
    std::snprintf(line, sizeof(line), "%-*s  %+10.6f\n", static_cast<int>(width), tag.c_str(), d);
    out << line;
  }
  out << "top source: " << report.baseline_top << " -> " << report.dynamic_top
      << (report.argmax_preserved ? " (preserved)" : " (changed)") << "\n";
  std::snprintf(line, sizeof(line), "mean |delta|: %.6f\n", report.mean_abs_delta);
  out << line;
  return out.str();
}

}  // namespace noisebench
