#include "noisebench/estimation.hpp"

#include "noisebench/errors.hpp"

namespace noisebench {

namespace {

void validate(const KalmanParams& p) {
  if (!(p.process_var_q > 0.0)) raise(ErrorCode::Config, "process_var_q must be > 0");
  if (!(p.measurement_var_r > 0.0)) raise(ErrorCode::Config, "measurement_var_r must be > 0");
  if (!(p.initial_var > 0.0)) raise(ErrorCode::Config, "initial_var must be > 0");
}

}  // namespace

std::vector<double> kalman_smooth(const std::vector<double>& values, const KalmanParams& params) {
  validate(params);
  if (values.size() < 2) raise(ErrorCode::Input, "kalman_smooth needs at least 2 samples");

  std::vector<double> out(values.size());
  double x = values[0];
  double p = params.initial_var;
  out[0] = x;
  for (std::size_t k = 1; k < values.size(); ++k) {
    double p_prior = p + params.process_var_q;
    double gain = p_prior / (p_prior + params.measurement_var_r);
    x = x + gain * (values[k] - x);
    p = (1.0 - gain) * p_prior;
    out[k] = x;
  }
  return out;
}

std::vector<double> estimate_noise(const std::vector<double>& values, const KalmanParams& params) {
  std::vector<double> smooth = kalman_smooth(values, params);
  for (std::size_t i = 0; i < values.size(); ++i) smooth[i] = values[i] - smooth[i];
  return smooth;
}

TimeSeries kalman_smooth(const TimeSeries& series, const KalmanParams& params) {
  TimeSeries out = series;
  out.values = kalman_smooth(series.values, params);
  return out;
}

TimeSeries estimate_noise(const TimeSeries& series, const KalmanParams& params) {
  TimeSeries out = series;
  out.values = estimate_noise(series.values, params);
  return out;
}

ChannelFrame estimate_noise(const ChannelFrame& frame, const KalmanParams& params) {
  ChannelFrame out(frame.source_tag(), frame.label());
  for (const auto& s : frame.series()) out.add_series(estimate_noise(s, params));
  return out;
}

}  // namespace noisebench
