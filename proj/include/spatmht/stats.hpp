// Single-parameter Beta(a) building blocks: densities with pdf a*p^(a-1),
// moment formulas, mixtures with independent per-coordinate Beta marginals,
// histograms and distribution-fit distances.
#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <vector>

#include "spatmht/rng.hpp"

namespace spatmht {

// Density is capped at 1e12 so a < 1 components stay finite at p = 0.
double beta_pdf(double p, double a);
double beta_cdf(double p, double a);  // p^a

struct ComponentMoments {
  double mean;            // a/(a+1)
  double variance;        // a/(a+2) - mean^2
  double third_cumulant;  // E[(p-mean)^3]
};
ComponentMoments beta_moments(double a);

// K-component mixture over d-variate vectors: vector density is a weighted
// product of Beta(a_{k,i}) marginals, and the induced scalar p-value density
// averages the d marginal mixtures.
struct BetaMixtureModel {
  Eigen::VectorXd weights;  // K
  Eigen::MatrixXd shapes;   // K x d

  int n_components() const { return static_cast<int>(weights.size()); }
  int dim() const { return static_cast<int>(shapes.cols()); }
};

void validate_model(const BetaMixtureModel& m);

double mixture_pdf(const BetaMixtureModel& m, double p);
double mixture_cdf(const BetaMixtureModel& m, double p);

struct Histogram {
  std::vector<double> edges;    // n_bins + 1, equal width on [0,1]
  std::vector<double> density;  // integrates to 1
};

int default_bin_count(std::size_t n);  // ceil(sqrt(n)) clamped to [10, 200]
Histogram build_histogram(const std::vector<double>& pvals, int n_bins = 0);

enum class EdfDistanceKind { kolmogorov, wasserstein1 };

// Distance between the empirical distribution of pvals and the model's scalar
// CDF: Kolmogorov sup-distance at the sample points, or the L1 distance
// between the CDFs on a fixed 2048-point grid.
double edf_distance(std::vector<double> pvals, const BetaMixtureModel& m,
                    EdfDistanceKind kind);

// L1 distance between a histogram density and the model's bin-averaged density.
double histogram_distance(const Histogram& h, const BetaMixtureModel& m);

// Sampling from the vector-level mixture: one component per vector, then
// independent Beta(a_{k,i}) entries via inverse CDF u^(1/a).
Eigen::MatrixXd sample_mixture_vectors(const BetaMixtureModel& m, int L, Rng& rng);
std::vector<double> sample_mixture_scalars(const BetaMixtureModel& m,
                                           std::size_t n, Rng& rng);

}  // namespace spatmht
