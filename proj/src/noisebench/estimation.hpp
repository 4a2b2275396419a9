// Noise estimation: residual of a causal scalar Kalman filter,
// random-walk state model, so n~(t) = x^(t) - f(x^(t)).
#pragma once

#include <vector>

#include "noisebench/frame.hpp"

namespace noisebench {

struct KalmanParams {
  double process_var_q = 1e-5;
  double measurement_var_r = 1e-2;
  double initial_var = 1.0;
};

std::vector<double> kalman_smooth(const std::vector<double>& values, const KalmanParams& params);
std::vector<double> estimate_noise(const std::vector<double>& values, const KalmanParams& params);

TimeSeries kalman_smooth(const TimeSeries& series, const KalmanParams& params);
TimeSeries estimate_noise(const TimeSeries& series, const KalmanParams& params);

// Residual frame: same channels and timestamps, values are n~.
ChannelFrame estimate_noise(const ChannelFrame& frame, const KalmanParams& params);

}  // namespace noisebench
