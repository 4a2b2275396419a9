// Steady-state three-phase signal generator with step load events.
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "noisebench/frame.hpp"

namespace noisebench {

struct LoadEvent {
  std::int64_t at_s = 0;
  double delta_current = 0.0;
};

struct GridConfig {
  double base_voltage = 240.0;
  double base_current = 20.0;
  double base_frequency = 50.0;
  double phase_phi_deg = 120.0;
  std::int64_t duration_s = 3600;
  std::int64_t start_epoch = 0;
  std::vector<LoadEvent> events;
};

// All ten channels; piecewise constant, no process noise. The power
// identities S = sqrt(3)*V*I, P = S*cos(phi), Q = S*sin(phi) hold at
// every sample (phi = 120 deg makes P negative; kept as specified).
ChannelFrame simulate_grid(const GridConfig& config);

GridConfig grid_config_from_json(const std::string& json_text);
std::string grid_config_to_json(const GridConfig& config);

}  // namespace noisebench
