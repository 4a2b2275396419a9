// Zero-mean noise family: parametric kinds, GMM fitting, composition.
// `sigma` is the target standard deviation in per-unit; sampling
// multiplies it by the channel scale. Fitted GMM specs are in channel
// units already and ignore the scale (absolute_units).
#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "noisebench/frame.hpp"

namespace noisebench {

enum class NoiseKind { Uniform, Gaussian, Poisson, Laplace, Pink, Gmm, Sum };

const char* noise_kind_name(NoiseKind k);

struct GmmComponent {
  double weight = 0.0;
  double mean = 0.0;
  double std = 0.0;
};

struct NoiseSpec {
  NoiseKind kind = NoiseKind::Gaussian;
  std::string name;  // source tag used for perturbed frames
  double sigma = 0.0;
  double lambda = 0.0;                 // Poisson only
  std::vector<GmmComponent> components;  // Gmm only
  std::vector<NoiseSpec> parts;          // Sum only
  bool absolute_units = false;           // Gmm fitted in channel units
  std::uint64_t seed = 0;
};

void validate_spec(const NoiseSpec& spec);

// Deterministic length-n sequence; mean -> 0 and std -> sigma*scale.
std::vector<double> sample_noise(const NoiseSpec& spec, std::size_t n, double scale,
                                 std::uint64_t seed);
// Convenience: uses spec.seed.
std::vector<double> sample_noise(const NoiseSpec& spec, std::size_t n, double scale);

// Table rows by name: uniform, gaussian1, gaussian2, poisson, laplace,
// pink, gmm, gaussian+uniform, laplace+uniform, laplace+poisson.
const std::vector<std::string>& noise_preset_names();
NoiseSpec noise_preset(const std::string& name);

struct GmmFitResult {
  NoiseSpec spec;                       // kind Gmm, absolute_units
  std::vector<double> log_likelihood;   // one entry per EM iteration
  int iterations = 0;
  bool variance_floored = false;
};

GmmFitResult fit_gmm(const std::vector<double>& residuals, int k);

// Additive noise per channel; channels missing from the map pass
// through. Scale is mean |value| of the clean channel (1.0 fallback).
ChannelFrame perturb(const ChannelFrame& frame,
                     const std::map<std::string, NoiseSpec>& spec_per_channel,
                     std::uint64_t seed);
// Same spec applied to every channel.
ChannelFrame perturb(const ChannelFrame& frame, const NoiseSpec& spec, std::uint64_t seed);

NoiseSpec noise_spec_from_json(const std::string& json_text);
std::string noise_spec_to_json(const NoiseSpec& spec);

}  // namespace noisebench
