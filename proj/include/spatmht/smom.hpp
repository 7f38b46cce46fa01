// Spectral method-of-moments estimation of multivariate Beta mixtures:
// whitened third-moment eigendecomposition over a random half-split, one
// candidate model per random projection direction.
#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "spatmht/grid.hpp"
#include "spatmht/rng.hpp"
#include "spatmht/stats.hpp"

namespace spatmht {

// L p-value vectors of dimension d, one per row.
struct PVectorSet {
  Eigen::MatrixXd vectors;

  int L() const { return static_cast<int>(vectors.rows()); }
  int dim() const { return static_cast<int>(vectors.cols()); }
};

enum class PartitionMode { random_chunks, spatial_tiles };

// Scalars -> vectors by seeded shuffle + chunking; leftover values dropped.
PVectorSet partition_random(const std::vector<double>& pvals, int d, Rng& rng);

// Scalars -> vectors by sqrt(d) x sqrt(d) grid tiles (requires square d and a
// sensor at every grid point); partial tiles at the borders are dropped.
PVectorSet partition_spatial(const std::vector<double>& pvals, int d,
                             const SpatialGrid& grid,
                             const std::vector<int>& sensor_index);

// Dense d x d x d tensor with (i,j,h) indexing.
class Tensor3 {
 public:
  Tensor3() = default;
  explicit Tensor3(int d) : d_(d), v_(static_cast<std::size_t>(d) * d * d, 0.0) {}

  int dim() const { return d_; }
  double& operator()(int i, int j, int h) { return v_[idx(i, j, h)]; }
  double operator()(int i, int j, int h) const { return v_[idx(i, j, h)]; }
  const std::vector<double>& data() const { return v_; }
  std::vector<double>& data() { return v_; }

 private:
  std::size_t idx(int i, int j, int h) const {
    return (static_cast<std::size_t>(i) * d_ + j) * d_ + h;
  }
  int d_ = 0;
  std::vector<double> v_;
};

// [out]_{i,j} = sum_h T_{i,j,h} * eta_h
Eigen::MatrixXd contract_m3(const Tensor3& t, const Eigen::VectorXd& eta);

Eigen::VectorXd sample_unit_sphere(int d, Rng& rng);

// Basic sample moments of one half-split, plus the noise-floor eigenpair
// (smallest covariance eigenvalue and its unit eigenvector).
struct MomentStats {
  Eigen::VectorXd mean;
  Eigen::MatrixXd second_raw;  // E[p p^T]
  Eigen::MatrixXd covariance;  // biased, divide by |S|
  double noise_var = 0.0;
  Eigen::VectorXd noise_dir;
};
MomentStats compute_moment_stats(const Eigen::MatrixXd& rows);

// m1 = |S|^-1 sum_l p_l * (v_bar^T (p_l - mean))^2
Eigen::VectorXd weighted_mean_m1(const Eigen::MatrixXd& rows, const MomentStats& s);

// Raw third moment minus the noise cross terms built from m1.
Tensor3 third_moment_estimate(const Eigen::MatrixXd& rows, const Eigen::VectorXd& m1);

// Matrix whose rank-K truncation feeds the whitening step.  raw_minus_noise
// (E[pp^T] - noise_var*I, the moment-identity-consistent choice and default)
// recovers component means exactly in the population limit; covariance
// truncates the plain covariance instead, which loses the grand-mean
// direction and is kept only for comparison experiments.
enum class SecondMomentBasis { raw_minus_noise, covariance };

struct SmomOptions {
  int n_eta = 10;  // candidate models per call, one per projection direction
  SecondMomentBasis basis = SecondMomentBasis::raw_minus_noise;
};

struct MixtureCandidate {
  bool valid = false;
  Eigen::VectorXd eta;
  Eigen::VectorXd weights;  // K, sanitized
  Eigen::MatrixXd means;    // K x d, clamped to (1e-6, 1-1e-6)
  Eigen::MatrixXd shapes;   // K x d, a = mu/(1-mu)
  double min_eigengap = 0.0;  // min pairwise |lambda_i - lambda_j|
  std::string reject_reason;  // empty when valid
};

// Everything deterministic the estimator computed before the eta draws;
// exposed for diagnostics and tests.
struct SpectralIntermediates {
  MomentStats s1, s2;
  Eigen::VectorXd m1;          // from s2
  Eigen::MatrixXd M2;          // rank-K, d x d
  Tensor3 M3;                  // from s2
  Eigen::MatrixXd B, W;        // d x K
  Eigen::VectorXd m2_eigvals;  // the K retained eigenvalues
};

// One estimator run: random half-split, moment statistics, whitening, then
// opts.n_eta random directions -> that many candidate models (ordered by
// draw index; invalid candidates carry a reject_reason).
std::vector<MixtureCandidate> estimate_mixture_candidates(
    const PVectorSet& vs, int K, Rng& rng, const SmomOptions& opts = {},
    SpectralIntermediates* intermediates = nullptr);

// Finite-sample error tensor of the plug-in third-moment estimator:
// psi_i = sum_k w_k * kappa3(a_{k,i}); diagonal entries (-3 vbar_i^2 + 1) psi_i,
// entries with exactly two equal indices -vbar_o^2 psi_o for the odd index o,
// zero otherwise.  Equals E[M3_est] - M3_theo only when component variances
// are equal within each component and v_bar is the noise-floor eigenvector
// (orthogonal to every mu_k - mean); for other v_bar the cancellation of the
// variance terms in the m1 correction is incomplete.
Tensor3 m3_error_terms(const BetaMixtureModel& m, const Eigen::VectorXd& v_bar);

}  // namespace spatmht
