// Synthetic propagating radio fields: power-law path loss plus spatially
// correlated log-normal shadowing, energy-detector measurements, and the
// resulting p-values.
#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <utility>
#include <vector>

#include "spatmht/grid.hpp"
#include "spatmht/rng.hpp"

namespace spatmht {

struct ScenarioSpec {
  int n_sources = 0;
  double tx_power = 1.0;                // linear, per source
  double pathloss_exponent = 4.0;       // gamma
  double shadowing_sigma_db = 4.0;      // std of the dB-domain field
  double shadowing_corr_length = 10.0;  // propagation units
  double noise_power = 1.0;             // linear, per sensor
  std::uint64_t seed = 0;
  // Propagation units per grid unit.  Presets fix the propagation frame to a
  // 100-unit box so coverage fractions carry over to other grid sizes.
  double distance_scale = 1.0;
};

void validate_spec(const ScenarioSpec& spec);

// Presets 'A' (5 sources, ~55% covered), 'B' (8, ~34%), 'C' (2, ~10%).
ScenarioSpec scenario_preset(char name, const SpatialGrid& grid, std::uint64_t seed);

struct FieldTruth {
  Eigen::VectorXd signal_power;  // per grid point, linear
  GroundTruth truth;             // signal power above the noise floor
  std::vector<std::pair<double, double>> source_xy;
};

// Received power at point n: sum over sources of
//   tx_power * max(dist, 1)^-gamma * 10^(shadow_dB/10),
// dist in propagation units; shadow_dB is a zero-mean Gaussian field with
// exponential correlation exp(-d/corr_length), synthesized by circulant
// embedding (FFT).  One independent shadow field per source.
FieldTruth synthesize_field(const SpatialGrid& grid, const ScenarioSpec& spec);
FieldTruth synthesize_field(const SpatialGrid& grid, const ScenarioSpec& spec, Rng rng);

struct Measurements {
  SensorLayout layout;
  std::vector<Eigen::VectorXd> samples;  // one vector of length T_s per sensor
  std::vector<double> noise_power;       // per sensor
};

// y_s(t) = sqrt(signal power at the sensor) + Gaussian noise; each sensor
// draws from its own substream keyed by grid index.
Measurements sample_measurements(const Eigen::VectorXd& signal_power,
                                 const SensorLayout& layout,
                                 const ScenarioSpec& spec, Rng rng);

struct PValueSet {
  std::vector<int> sensor_index;
  std::vector<int> n_samples;
  std::vector<double> pvals;
  std::vector<double> zvals;  // empty unless requested
  int n_z_clamped = 0;
};

// Energy detector: tau = sum y^2 / noise_power is chi-square with T degrees
// of freedom under the null; p is the right tail (large energy -> small p).
PValueSet energy_pvalues(const Measurements& m, bool with_z = false);

// Standard normal quantile; p = 0 or 1 clamps to -/+ 8.
double p_to_z(double p);

}  // namespace spatmht
