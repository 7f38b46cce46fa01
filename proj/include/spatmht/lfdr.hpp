// Local false discovery rate estimation: nested (d, K) search over spectral
// mixture fits, two-groups decomposition of the fitted density, lfdr
// computation, and the classic beta-uniform-mixture MLE baseline.
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "spatmht/grid.hpp"
#include "spatmht/smom.hpp"
#include "spatmht/stats.hpp"

namespace spatmht {

struct FitConfig {
  std::vector<int> d_schedule = {2, 3, 4, 5, 6, 7, 8, 9, 10};
  int permutations = 5;  // vector re-orderings tried per dimension
  int n_eta = 10;        // candidate models per (d, permutation, K)
  EdfDistanceKind distance = EdfDistanceKind::wasserstein1;
  bool use_histogram_distance = false;  // replace the EDF distance entirely
  int max_d = 10;
  int hist_bins = 0;  // 0 -> sqrt rule
  std::uint64_t seed = 0;
  PartitionMode partition = PartitionMode::random_chunks;
  SecondMomentBasis m2_basis = SecondMomentBasis::raw_minus_noise;
  double improvement_tol = 1e-6;  // K-loop keeps growing only on a clear win
};

struct FitResult {
  BetaMixtureModel model;
  int chosen_d = 0;
  int chosen_K = 0;
  double fit_distance = 0.0;
  int n_valid_candidates = 0;  // across the whole search
  std::vector<std::string> warnings;
};

// Nested search: for each d (ascending), partition once, then for each of P
// within-vector reorderings run K = 1..d-1 with U candidates each; keep the
// candidate whose scalar density is closest to the data.  The K loop stops
// when growing K stops improving, the d loop stops when the incumbent best
// dimension is not the current one.  Spatial partitioning needs grid/layout.
FitResult fit_pvalue_density(const std::vector<double>& pvals, const FitConfig& cfg,
                             const SpatialGrid* grid = nullptr,
                             const std::vector<int>* sensor_index = nullptr);

struct TwoGroups {
  double pi0 = 1.0;
  bool f1_defined = false;  // false when the whole fit is absorbed by the null
};

// pi0 = min density over a 1e4-point grid on [1e-6, 1] plus the p = 1
// endpoint, clamped to <= 1.
TwoGroups two_groups_split(const BetaMixtureModel& m);

// (f(p) - pi0) / (1 - pi0); only valid when tg.f1_defined
double f1_pdf(const BetaMixtureModel& m, const TwoGroups& tg, double p);

// lfdr_n = min(1, pi0 / f(p_n)); a vanishing density yields the conservative
// lfdr = 1 and bumps *n_zero_density if given.
std::vector<double> compute_lfdrs(const std::vector<double>& pvals, double pi0,
                                  const BetaMixtureModel& m,
                                  int* n_zero_density = nullptr);

struct BumFit {
  double w = 1.0;        // uniform-component weight
  double a = 1.0;        // beta shape, in (0,1)
  double loglik = 0.0;
  bool converged = false;
};

// Beta-uniform mixture MLE: maximize sum log(w + (1-w) a p^(a-1)) over
// w in [0,1], a in (0,1), Nelder-Mead from 16 deterministic starts.
BumFit fit_bum_mle(const std::vector<double>& pvals);

struct LfdrResult {
  double pi0 = 1.0;
  BetaMixtureModel model;
  std::vector<double> lfdrs;
  double fit_distance = 0.0;
  int chosen_d = 0;
  int chosen_K = 0;
  int zero_density_count = 0;
  std::vector<std::string> warnings;
};

LfdrResult lfdr_smom(const std::vector<double>& pvals, const FitConfig& cfg,
                     const SpatialGrid* grid = nullptr,
                     const std::vector<int>* sensor_index = nullptr);

// Same pipeline with the BUM baseline as the density model.
LfdrResult lfdr_bum(const std::vector<double>& pvals);

}  // namespace spatmht
