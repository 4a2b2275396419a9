// Measurement trace model: aligned 1 Hz channels with a source label.
#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace noisebench {

enum class Label { Real, Simulated };

const char* label_name(Label l);
Label label_from_string(const std::string& s);

// Channel vocabulary accepted in CSV headers, in canonical column order.
const std::vector<std::string>& channel_vocabulary();
bool is_known_channel(const std::string& name);

struct TimeSeries {
  std::string channel;
  std::int64_t start_epoch = 0;
  double rate_hz = 1.0;
  std::vector<double> values;

  void validate() const;
};

class ChannelFrame {
 public:
  ChannelFrame() = default;
  ChannelFrame(std::string source_tag, Label label)
      : source_tag_(std::move(source_tag)), label_(label) {}

  void add_series(TimeSeries series);

  const std::vector<TimeSeries>& series() const { return series_; }
  const TimeSeries& series(const std::string& channel) const;
  const std::vector<double>& values(const std::string& channel) const;
  bool has_channel(const std::string& channel) const;
  std::vector<std::string> channel_names() const;

  std::size_t n_rows() const { return series_.empty() ? 0 : series_.front().values.size(); }
  std::size_t n_channels() const { return series_.size(); }
  std::int64_t start_epoch() const { return series_.empty() ? 0 : series_.front().start_epoch; }

  const std::string& source_tag() const { return source_tag_; }
  Label label() const { return label_; }
  void set_source_tag(std::string tag) { source_tag_ = std::move(tag); }
  void set_label(Label label) { label_ = label; }

  void validate() const;

 private:
  std::vector<TimeSeries> series_;
  std::string source_tag_;
  Label label_ = Label::Simulated;
};

}  // namespace noisebench
