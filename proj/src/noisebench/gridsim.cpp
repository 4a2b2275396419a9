#include "noisebench/gridsim.hpp"

#include <algorithm>
#include <cmath>

#include "json.hpp"
#include "noisebench/errors.hpp"

namespace noisebench {

namespace {

constexpr double kPi = 3.141592653589793238462643383279502884;

void validate(const GridConfig& c) {
  if (!(c.base_voltage > 0.0) || !(c.base_current > 0.0) || !(c.base_frequency > 0.0))
    raise(ErrorCode::Config, "base voltage/current/frequency must be > 0");
  if (!(c.phase_phi_deg > 0.0) || !(c.phase_phi_deg < 180.0))
    raise(ErrorCode::Config, "phase_phi must lie in (0, 180) degrees");
  if (c.duration_s < 1) raise(ErrorCode::Config, "duration_s must be >= 1");
  for (const auto& e : c.events)
    if (e.at_s < 0 || e.at_s >= c.duration_s)
      raise(ErrorCode::Config, "event offset outside [0, duration)");
}

}  // namespace

ChannelFrame simulate_grid(const GridConfig& config) {
  validate(config);

  std::size_t n = static_cast<std::size_t>(config.duration_s);
  std::vector<double> current(n, config.base_current);
  std::vector<LoadEvent> events = config.events;
  std::sort(events.begin(), events.end(),
            [](const LoadEvent& a, const LoadEvent& b) { return a.at_s < b.at_s; });
  for (const auto& e : events)
    for (std::size_t t = static_cast<std::size_t>(e.at_s); t < n; ++t)
      current[t] += e.delta_current;
  for (double i : current)
    if (!(i > 0.0)) raise(ErrorCode::Config, "events drive total current <= 0");

  double phi = config.phase_phi_deg * kPi / 180.0;
  double cos_phi = std::cos(phi);
  double sin_phi = std::sin(phi);

  std::vector<double> apparent(n), real_p(n), reactive(n);
  for (std::size_t t = 0; t < n; ++t) {
    double s = std::sqrt(3.0) * config.base_voltage * current[t];
    apparent[t] = s;
    real_p[t] = s * cos_phi;
    reactive[t] = s * sin_phi;
  }

  ChannelFrame frame("gridsim", Label::Simulated);
  auto add = [&](const std::string& name, std::vector<double> values) {
    TimeSeries s;
    s.channel = name;
    s.start_epoch = config.start_epoch;
    s.values = std::move(values);
    frame.add_series(std::move(s));
  };
  add("V1", std::vector<double>(n, config.base_voltage));
  add("V2", std::vector<double>(n, config.base_voltage));
  add("V3", std::vector<double>(n, config.base_voltage));
  add("I1", current);
  add("I2", current);
  add("I3", current);
  add("frequency", std::vector<double>(n, config.base_frequency));
  add("power_real", std::move(real_p));
  add("power_reactive", std::move(reactive));
  add("power_apparent", std::move(apparent));
  return frame;
}

GridConfig grid_config_from_json(const std::string& json_text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::exception& e) {
    raise(ErrorCode::Config, std::string("grid config parse failure: ") + e.what());
  }
  if (!doc.is_object()) raise(ErrorCode::Config, "grid config must be a JSON object");
  static const char* known[] = {"base_voltage", "base_current", "base_frequency",
                                "phase_phi",    "duration_s",   "start_epoch",
                                "events"};
  for (auto it = doc.begin(); it != doc.end(); ++it) {
    bool ok = false;
    for (const char* k : known) ok = ok || it.key() == k;
    if (!ok) raise(ErrorCode::Config, "grid config: unknown key \"" + it.key() + "\"");
  }

  GridConfig c;
  try {
    c.base_voltage = doc.value("base_voltage", c.base_voltage);
    c.base_current = doc.value("base_current", c.base_current);
    c.base_frequency = doc.value("base_frequency", c.base_frequency);
    c.phase_phi_deg = doc.value("phase_phi", c.phase_phi_deg);
    c.duration_s = doc.value("duration_s", c.duration_s);
    c.start_epoch = doc.value("start_epoch", c.start_epoch);
    if (doc.contains("events")) {
      for (const auto& ev : doc.at("events")) {
        LoadEvent e;
        e.at_s = ev.at("at_s").get<std::int64_t>();
        e.delta_current = ev.at("delta_current").get<double>();
        c.events.push_back(e);
      }
    }
  } catch (const nlohmann::json::exception& e) {
    raise(ErrorCode::Config, std::string("grid config field error: ") + e.what());
  }
  validate(c);
  return c;
}

std::string grid_config_to_json(const GridConfig& config) {
  nlohmann::ordered_json doc;
  doc["base_voltage"] = config.base_voltage;
  doc["base_current"] = config.base_current;
  doc["base_frequency"] = config.base_frequency;
  doc["phase_phi"] = config.phase_phi_deg;
  doc["duration_s"] = config.duration_s;
  doc["start_epoch"] = config.start_epoch;
  doc["events"] = nlohmann::ordered_json::array();
  for (const auto& e : config.events)
    doc["events"].push_back({{"at_s", e.at_s}, {"delta_current", e.delta_current}});
  return doc.dump(2);
}

}  // namespace noisebench
