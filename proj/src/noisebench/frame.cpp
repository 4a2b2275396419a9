#include "noisebench/frame.hpp"

#include <algorithm>
#include <cmath>

#include "noisebench/errors.hpp"

namespace noisebench {

const char* label_name(Label l) {
  return l == Label::Real ? "real" : "simulated";
}

Label label_from_string(const std::string& s) {
  if (s == "real") return Label::Real;
  if (s == "simulated") return Label::Simulated;
  raise(ErrorCode::Format, "unknown label '" + s + "' (expected real|simulated)");
}

const std::vector<std::string>& channel_vocabulary() {
  static const std::vector<std::string> vocab = {
      "V1", "V2", "V3", "I1", "I2", "I3",
      "frequency", "power_real", "power_reactive", "power_apparent"};
  return vocab;
}

bool is_known_channel(const std::string& name) {
  const auto& vocab = channel_vocabulary();
  return std::find(vocab.begin(), vocab.end(), name) != vocab.end();
}

void TimeSeries::validate() const {
  if (!is_known_channel(channel))
    raise(ErrorCode::Invariant, "channel '" + channel + "' not in vocabulary");
  if (rate_hz != 1.0)
    raise(ErrorCode::Invariant, "rate_hz must be 1.0");
  if (values.empty())
    raise(ErrorCode::Invariant, "series '" + channel + "' has no values");
  for (double v : values)
    if (!std::isfinite(v))
      raise(ErrorCode::Invariant, "series '" + channel + "' contains a non-finite value");
}

void ChannelFrame::add_series(TimeSeries series) {
  series.validate();
  if (has_channel(series.channel))
    raise(ErrorCode::Invariant, "duplicate channel '" + series.channel + "'");
  if (!series_.empty()) {
    if (series.values.size() != n_rows())
      raise(ErrorCode::Invariant, "channel '" + series.channel + "' length mismatch");
    if (series.start_epoch != start_epoch())
      raise(ErrorCode::Invariant, "channel '" + series.channel + "' start mismatch");
  }
  series_.push_back(std::move(series));
}

const TimeSeries& ChannelFrame::series(const std::string& channel) const {
  for (const auto& s : series_)
    if (s.channel == channel) return s;
  raise(ErrorCode::Input, "frame has no channel '" + channel + "'");
}

const std::vector<double>& ChannelFrame::values(const std::string& channel) const {
  return series(channel).values;
}

bool ChannelFrame::has_channel(const std::string& channel) const {
  for (const auto& s : series_)
    if (s.channel == channel) return true;
  return false;
}

std::vector<std::string> ChannelFrame::channel_names() const {
  std::vector<std::string> names;
  names.reserve(series_.size());
  for (const auto& s : series_) names.push_back(s.channel);
  return names;
}

void ChannelFrame::validate() const {
  if (series_.empty()) raise(ErrorCode::EmptyData, "frame has no channels");
  for (const auto& s : series_) {
    s.validate();
    if (s.values.size() != n_rows())
      raise(ErrorCode::Invariant, "channel lengths differ");
    if (s.start_epoch != start_epoch())
      raise(ErrorCode::Invariant, "channel start epochs differ");
  }
}

}  // namespace noisebench
