// Sliding windows with 80% overlap and mean-band pruning: a raw window
// survives only if every sample stays within epsilon of the window mean.
// The paired noise window always follows its raw partner.
#pragma once

#include <cstddef>
#include <map>
#include <string>
#include <vector>

#include "noisebench/frame.hpp"

namespace noisebench {

struct PruneConfig {
  int window_len = 20;
  double overlap_frac = 0.8;
  double epsilon_single = 0.1;
  double epsilon_joint = 0.3;
};

struct WindowPair {
  std::vector<double> raw;
  std::vector<double> noise;
  std::string channel;
  std::size_t origin = 0;
  std::string source_tag;
  Label label = Label::Simulated;
};

int window_stride(const PruneConfig& cfg);

// Candidate origins 0, stride, 2*stride, ... with origin + len <= n.
std::vector<std::size_t> candidate_origins(std::size_t n, const PruneConfig& cfg);

// Mean-band test, |w - mu| <= eps*|mu|; a near-zero mean only admits
// near-constant windows (bands built from mu*(1 +- eps) invert there).
bool window_within_band(const std::vector<double>& values, std::size_t origin,
                        std::size_t len, double epsilon);

std::vector<WindowPair> extract_windows(const TimeSeries& raw, const TimeSeries& noise,
                                        const PruneConfig& cfg);

struct JointWindows {
  std::vector<std::size_t> origins;  // survivors, shared by all channels
  std::map<std::string, std::vector<WindowPair>> per_channel;
  bool empty_warning = false;
};

// Joint mode at epsilon_joint: an origin survives only if the band test
// passes in every channel.
JointWindows extract_joint(const ChannelFrame& frame, const ChannelFrame& noise_frame,
                           const PruneConfig& cfg);

}  // namespace noisebench
