#include "noisebench/windowing.hpp"

#include <algorithm>
#include <cmath>

#include "noisebench/errors.hpp"

namespace noisebench {

namespace {

constexpr double kZeroMeanEps = 1e-9;

void validate(const PruneConfig& cfg) {
  if (cfg.window_len < 2) raise(ErrorCode::Config, "window_len must be >= 2");
  if (!(cfg.overlap_frac >= 0.0) || !(cfg.overlap_frac < 1.0))
    raise(ErrorCode::Config, "overlap_frac must lie in [0, 1)");
  if (!(cfg.epsilon_single > 0.0) || !(cfg.epsilon_single < 1.0))
    raise(ErrorCode::Config, "epsilon_single must lie in (0, 1)");
  if (!(cfg.epsilon_joint > 0.0) || !(cfg.epsilon_joint < 1.0))
    raise(ErrorCode::Config, "epsilon_joint must lie in (0, 1)");
}

}  // namespace

int window_stride(const PruneConfig& cfg) {
  validate(cfg);
  int stride = static_cast<int>(std::llround(cfg.window_len * (1.0 - cfg.overlap_frac)));
  return std::max(1, stride);
}

std::vector<std::size_t> candidate_origins(std::size_t n, const PruneConfig& cfg) {
  validate(cfg);
  std::size_t len = static_cast<std::size_t>(cfg.window_len);
  if (n < len) raise(ErrorCode::Input, "series shorter than window length");
  std::size_t stride = static_cast<std::size_t>(window_stride(cfg));
  std::vector<std::size_t> origins;
  for (std::size_t o = 0; o + len <= n; o += stride) origins.push_back(o);
  return origins;
}

bool window_within_band(const std::vector<double>& values, std::size_t origin,
                        std::size_t len, double epsilon) {
  double mean = 0.0;
  for (std::size_t i = origin; i < origin + len; ++i) mean += values[i];
  mean /= static_cast<double>(len);

  double max_dev = 0.0;
  for (std::size_t i = origin; i < origin + len; ++i)
    max_dev = std::max(max_dev, std::abs(values[i] - mean));

  if (std::abs(mean) < kZeroMeanEps) return max_dev < kZeroMeanEps;
  return max_dev <= epsilon * std::abs(mean);
}

std::vector<WindowPair> extract_windows(const TimeSeries& raw, const TimeSeries& noise,
                                        const PruneConfig& cfg) {
  if (raw.values.size() != noise.values.size())
    raise(ErrorCode::Input, "raw and noise series lengths differ");
  auto origins = candidate_origins(raw.values.size(), cfg);
  std::size_t len = static_cast<std::size_t>(cfg.window_len);

  std::vector<WindowPair> out;
  for (std::size_t o : origins) {
    if (!window_within_band(raw.values, o, len, cfg.epsilon_single)) continue;
    WindowPair p;
    p.raw.assign(raw.values.begin() + o, raw.values.begin() + o + len);
    p.noise.assign(noise.values.begin() + o, noise.values.begin() + o + len);
    p.channel = raw.channel;
    p.origin = o;
    out.push_back(std::move(p));
  }
  return out;
}

JointWindows extract_joint(const ChannelFrame& frame, const ChannelFrame& noise_frame,
                           const PruneConfig& cfg) {
  frame.validate();
  noise_frame.validate();
  if (frame.n_rows() != noise_frame.n_rows())
    raise(ErrorCode::Input, "frame and noise frame lengths differ");
  for (const auto& s : frame.series())
    if (!noise_frame.has_channel(s.channel))
      raise(ErrorCode::Input, "noise frame misses channel '" + s.channel + "'");

  auto origins = candidate_origins(frame.n_rows(), cfg);
  std::size_t len = static_cast<std::size_t>(cfg.window_len);

  JointWindows out;
  for (std::size_t o : origins) {
    bool keep = true;
    for (const auto& s : frame.series()) {
      if (!window_within_band(s.values, o, len, cfg.epsilon_joint)) {
        keep = false;
        break;
      }
    }
    if (keep) out.origins.push_back(o);
  }
  out.empty_warning = out.origins.empty();

  for (const auto& s : frame.series()) {
    const auto& noise_values = noise_frame.values(s.channel);
    std::vector<WindowPair> pairs;
    pairs.reserve(out.origins.size());
    for (std::size_t o : out.origins) {
      WindowPair p;
      p.raw.assign(s.values.begin() + o, s.values.begin() + o + len);
      p.noise.assign(noise_values.begin() + o, noise_values.begin() + o + len);
      p.channel = s.channel;
      p.origin = o;
      p.source_tag = frame.source_tag();
      p.label = frame.label();
      pairs.push_back(std::move(p));
    }
    out.per_channel[s.channel] = std::move(pairs);
  }
  return out;
}

}  // namespace noisebench
