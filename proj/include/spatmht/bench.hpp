// Monte-Carlo benchmarking of the full pipeline on synthetic fields, plus the
// exact-posterior oracle lfdr that knows the generating mixture.
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "spatmht/decide.hpp"
#include "spatmht/fieldsim.hpp"
#include "spatmht/grid.hpp"
#include "spatmht/lfdr.hpp"

namespace spatmht {

enum class Method { smom, bum, bh, oracle };

std::string method_name(Method m);
Method method_from_name(const std::string& name);

struct NetworkConfig {
  // (count, n_samples) groups; count = -1 places a sensor at every grid point.
  std::vector<std::pair<int, int>> groups;
  bool stratified = false;
  // Decide at every grid point by interpolating sensor lfdr's (needs sensors
  // that do not already cover the grid).
  bool interpolate = false;
};

// 1: sensor everywhere, T = 256.  2: 300 sensors, T = 256, interpolated
// decisions.  3: heterogeneous 170/80/50 sensors at T = 256/512/1024,
// interpolated decisions.
NetworkConfig network_preset(int cnfg);

SensorLayout build_network_layout(const SpatialGrid& grid, const NetworkConfig& nc,
                                  Rng rng);

struct BenchmarkConfig {
  SpatialGrid grid;
  ScenarioSpec scenario;
  NetworkConfig network;
  std::vector<double> alpha_grid = {0.05, 0.1, 0.2};
  std::vector<Method> methods = {Method::smom, Method::bum, Method::bh};
  int n_runs = 50;
  std::uint64_t seed = 1;
  int jobs = 1;
  FitConfig fit;  // seed is re-derived per run
  BfdrRule rule = BfdrRule::mean;
};

struct ResultRow {
  std::string method;
  double alpha = 0.0;
  double mean_fdr = 0.0, se_fdr = 0.0;
  double mean_power = 0.0, se_power = 0.0;
  int n_runs = 0;
};

struct ResultsTable {
  std::vector<ResultRow> rows;
  std::vector<std::string> warnings;
};

// Per-run pipeline: synthesize field, place sensors, sample, p-values, then
// per method either decide at the sensors or interpolate lfdr's to the whole
// grid first.  BH always decides at the sensors (it has no lfdr field to
// interpolate).  Runs use independent derived seeds, so results do not depend
// on the number of worker threads.
ResultsTable monte_carlo_harness(const BenchmarkConfig& cfg);

// Exact posterior null probability of each sensor's p-value given the true
// per-sensor energy-detector mixture (noncentral chi-square components at the
// alternative sensors).  Benchmark-only: uses the unobservable ground truth.
std::vector<double> oracle_lfdrs(const PValueSet& ps,
                                 const Eigen::VectorXd& signal_power,
                                 const GroundTruth& truth, double noise_power);

// pdf ratio f_ncchi2(tau; T, lambda) / f_chi2(tau; T), computed by a scaled
// 0F1 series; equals exp(-lambda/2) at tau = 0.
double ncchi2_pdf_ratio(double tau, double T, double lambda);

}  // namespace spatmht
